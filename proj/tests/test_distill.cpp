#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "forgemorph/distill.hpp"
#include "forgemorph/morph.hpp"
#include "testutil.hpp"

using namespace forgemorph;
using namespace forgemorph::distill;

namespace {

/// Direct-summation reference: plain exp softmax and a double loop KL,
/// deliberately independent of the library implementation.
double kl_reference(const std::vector<double>& teacher,
                    const std::vector<double>& student, double tau) {
  std::vector<double> p(teacher.size());
  std::vector<double> q(student.size());
  double zp = 0;
  double zq = 0;
  for (size_t i = 0; i < teacher.size(); ++i) {
    p[i] = std::exp(teacher[i] / tau);
    q[i] = std::exp(student[i] / tau);
    zp += p[i];
    zq += q[i];
  }
  double divergence = 0;
  for (size_t i = 0; i < teacher.size(); ++i) {
    divergence += (p[i] / zp) * std::log((p[i] / zp) / (q[i] / zq));
  }
  return tau * tau * divergence;
}

double ce_reference(const std::vector<double>& one_hot,
                    const std::vector<double>& logits) {
  double z = 0;
  for (double v : logits) z += std::exp(v);
  double loss = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    loss -= one_hot[i] * std::log(std::exp(logits[i]) / z);
  }
  return loss;
}

}  // namespace

TEST_CASE("cross_entropy") {
  SUBCASE("confident correct prediction drives the loss to zero") {
    const std::vector<double> y = {1, 0, 0};
    const std::vector<double> logits = {500, 0, 0};
    CHECK(cross_entropy(y, logits) < 1e-12);
  }
  SUBCASE("uniform logits give ln C") {
    for (int c : {2, 5, 7, 10}) {
      const std::vector<double> y = [&] {
        std::vector<double> v(c, 0.0);
        v[1 % c] = 1.0;
        return v;
      }();
      const std::vector<double> logits(c, 0.37);
      CHECK(cross_entropy(y, logits) == doctest::Approx(std::log(c)).epsilon(1e-12));
    }
  }
  SUBCASE("random five-class cases match the direct formula") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_int_distribution<int> pick(0, 4);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> logits(5);
      for (double& v : logits) v = normal(rng);
      std::vector<double> y(5, 0.0);
      y[pick(rng)] = 1.0;
      CHECK(cross_entropy(y, logits) ==
            doctest::Approx(ce_reference(y, logits)).epsilon(1e-12));
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{1, 0},
                                  std::vector<double>{1, 2, 3}),
                    Error);
  }
}

TEST_CASE("kd_loss") {
  SUBCASE("identical logits have zero loss") {
    const std::vector<double> logits = {1.5, -0.3, 0.8};
    CHECK(kd_loss(logits, logits, 4.0) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("three-class case matches the direct summation oracle") {
    const std::vector<double> teacher = {1, 0, 0};
    const std::vector<double> student = {0, 0, 1};
    CHECK(kd_loss(teacher, student, 2.0) ==
          doctest::Approx(0.35558828563281841).epsilon(1e-12));
  }
  SUBCASE("softened distributions approach uniform at extreme temperature") {
    // The unscaled divergence of the softened distributions vanishes; the
    // tau^2 scaling exists precisely to keep the scaled loss finite.
    const std::vector<double> teacher = {1, 0, 0};
    const std::vector<double> student = {0, 0, 1};
    CHECK(kl_softened(teacher, student, 1e6) < 1e-6);
    const auto p = softened(teacher, 1e6);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-5));
  }
  SUBCASE("random pairs match the reference within 1e-9 relative") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.5);
    std::uniform_real_distribution<double> temp(0.5, 8.0);
    for (int i = 0; i < 1000; ++i) {
      const int classes = 2 + static_cast<int>(i % 9);
      std::vector<double> teacher(classes);
      std::vector<double> student(classes);
      for (double& v : teacher) v = normal(rng);
      for (double& v : student) v = normal(rng);
      const double tau = temp(rng);
      const double got = kd_loss(teacher, student, tau);
      const double want = kl_reference(teacher, student, tau);
      CHECK(std::abs(got - want) <= 1e-9 * std::max({std::abs(want), 1e-12}));
    }
  }
  SUBCASE("softened distributions are normalized") {
    const std::vector<double> logits = {3.0, -2.0, 0.5, 1.1};
    for (double tau : {0.5, 1.0, 4.0, 100.0}) {
      const auto p = softened(logits, tau);
      double sum = 0;
      for (double v : p) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("kd gradient matches central finite differences") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 3 + trial % 5;
    std::vector<double> teacher(classes);
    std::vector<double> student(classes);
    for (double& v : teacher) v = normal(rng);
    for (double& v : student) v = normal(rng);
    const double tau = 1.0 + (trial % 4);

    const auto analytic = kd_loss_grad_student(teacher, student, tau);
    double num_norm = 0;
    double diff_norm = 0;
    for (int j = 0; j < classes; ++j) {
      std::vector<double> plus = student;
      std::vector<double> minus = student;
      plus[j] += h;
      minus[j] -= h;
      const double numeric =
          (kd_loss(teacher, plus, tau) - kd_loss(teacher, minus, tau)) / (2 * h);
      num_norm += numeric * numeric;
      diff_norm += (numeric - analytic[j]) * (numeric - analytic[j]);
    }
    CHECK(std::sqrt(diff_norm) <= 1e-5 * std::max(std::sqrt(num_norm), 1e-8));
  }
}

TEST_CASE("total_loss blends the two terms") {
  CHECK(total_loss(2.0, 4.0, 1.0) == 2.0);
  CHECK(total_loss(2.0, 4.0, 0.0) == 4.0);
  CHECK(total_loss(2.0, 4.0, 0.5) == 3.0);
}

TEST_CASE("lr_decay") {
  CHECK(lr_decay(0.1, 0.5, 0) == doctest::Approx(0.1));
  CHECK(lr_decay(0.1, 0.5, 3) == doctest::Approx(0.0125));
  double previous = lr_decay(0.3, 0.8, 0);
  for (int t = 1; t < 12; ++t) {
    const double current = lr_decay(0.3, 0.8, t);
    CHECK(current < previous);
    previous = current;
  }
}

TEST_CASE("build_schedule") {
  const auto graph = testutil::mnist_graph();
  const auto blocks =
      morph::partition_blocks(graph, morph::default_boundaries(graph), 10);
  DistillParams params;
  params.alpha0 = 0.1;
  params.gamma = 0.9;
  params.epochs = 3;

  SUBCASE("depth schedule grows block prefixes") {
    const MorphingSchedule schedule =
        build_schedule(graph, blocks, ScheduleKind::Depth, params);
    REQUIRE(schedule.stages.size() == 3);
    CHECK(schedule.stages[0].active_blocks == std::vector<std::string>{"block0"});
    CHECK(schedule.stages[1].active_blocks ==
          std::vector<std::string>{"block0", "block1"});
    CHECK(schedule.stages[2].active_blocks ==
          std::vector<std::string>{"block0", "block1", "block2"});
    // Monotone: every stage's blocks contain the previous stage's.
    for (size_t s = 1; s < schedule.stages.size(); ++s) {
      const auto& prev = schedule.stages[s - 1].active_blocks;
      const auto& next = schedule.stages[s].active_blocks;
      CHECK(std::equal(prev.begin(), prev.end(), next.begin()));
    }
  }
  SUBCASE("single block degenerates to one supervised stage") {
    const auto one = morph::partition_blocks(graph, {"pool3"}, 10);
    const MorphingSchedule schedule =
        build_schedule(graph, one, ScheduleKind::Depth, params);
    CHECK(schedule.stages.size() == 1);
  }
  SUBCASE("width ladder climbs 4-8-16 then 8-16-32") {
    const MorphingSchedule schedule =
        build_schedule(graph, blocks, ScheduleKind::Width, params, {0.5, 1.0});
    REQUIRE(schedule.stages.size() == 2);
    CHECK(schedule.stages[0].active_widths == std::vector<int>{4, 8, 16});
    CHECK(schedule.stages[1].active_widths == std::vector<int>{8, 16, 32});
    for (size_t s = 1; s < schedule.stages.size(); ++s) {
      for (size_t i = 0; i < schedule.stages[s].active_widths.size(); ++i) {
        CHECK(schedule.stages[s - 1].active_widths[i] <=
              schedule.stages[s].active_widths[i]);
      }
    }
  }
  SUBCASE("lr plan divides by ten per cycle and decays earlier layers") {
    const MorphingSchedule schedule =
        build_schedule(graph, blocks, ScheduleKind::Depth, params);
    const auto& plan = schedule.stages[0].lr_plan;
    REQUIRE(plan.size() == 3);
    CHECK(plan[0].alpha == doctest::Approx(0.1));
    CHECK(plan[1].alpha == doctest::Approx(0.01));
    CHECK(plan[2].alpha == doctest::Approx(0.001));
    CHECK(plan[0].old_layer_scale == doctest::Approx(0.9));
    CHECK(plan[2].old_layer_scale == doctest::Approx(std::pow(0.9, 3)));
  }
  SUBCASE("schedule exports as json") {
    const MorphingSchedule schedule =
        build_schedule(graph, blocks, ScheduleKind::Depth, params);
    const std::string text = schedule_to_json(schedule);
    CHECK(text.find("\"stages\"") != std::string::npos);
    CHECK(text.find("\"lr_plan\"") != std::string::npos);
    CHECK(text.find("\"teacher_epochs\"") != std::string::npos);
  }
  SUBCASE("empty block list is rejected") {
    CHECK_THROWS_AS(build_schedule(graph, {}, ScheduleKind::Depth, params), Error);
  }
}
