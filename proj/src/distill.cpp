#include "forgemorph/distill.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace forgemorph::distill {

using nlohmann::json;

void DistillParams::validate() const {
  if (lambda < 0 || lambda > 1) raise(Errc::invalid_argument, "lambda must lie in [0, 1]");
  if (!(tau > 0)) raise(Errc::invalid_argument, "tau must be positive");
  if (!(alpha0 > 0)) raise(Errc::invalid_argument, "alpha0 must be positive");
  if (!(gamma > 0) || gamma >= 1) raise(Errc::invalid_argument, "gamma must lie in (0, 1)");
  if (epochs < 1) raise(Errc::invalid_argument, "epochs must be >= 1");
}

std::vector<double> softened(std::span<const double> logits, double tau) {
  if (logits.empty()) raise(Errc::dim_mismatch, "empty logit vector");
  if (!(tau > 0)) raise(Errc::invalid_argument, "tau must be positive");
  double peak = logits[0] / tau;
  for (double v : logits) peak = std::max(peak, v / tau);
  double denom = 0;
  std::vector<double> result(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    result[i] = std::exp(logits[i] / tau - peak);
    denom += result[i];
  }
  for (double& v : result) v /= denom;
  return result;
}

double cross_entropy(std::span<const double> one_hot,
                     std::span<const double> logits) {
  if (one_hot.size() != logits.size() || logits.empty()) {
    raise(Errc::dim_mismatch, "label and logit dimensions differ");
  }
  double peak = logits[0];
  for (double v : logits) peak = std::max(peak, v);
  double lse = 0;
  for (double v : logits) lse += std::exp(v - peak);
  lse = peak + std::log(lse);
  double loss = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    loss -= one_hot[i] * (logits[i] - lse);
  }
  return loss;
}

double kl_softened(std::span<const double> teacher,
                   std::span<const double> student, double tau) {
  if (teacher.size() != student.size() || teacher.empty()) {
    raise(Errc::dim_mismatch, "teacher and student dimensions differ");
  }
  const std::vector<double> p = softened(teacher, tau);
  const std::vector<double> q = softened(student, tau);
  double divergence = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    divergence += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return divergence;
}

double kd_loss(std::span<const double> teacher, std::span<const double> student,
               double tau) {
  return tau * tau * kl_softened(teacher, student, tau);
}

std::vector<double> kd_loss_grad_student(std::span<const double> teacher,
                                         std::span<const double> student,
                                         double tau) {
  if (teacher.size() != student.size() || teacher.empty()) {
    raise(Errc::dim_mismatch, "teacher and student dimensions differ");
  }
  const std::vector<double> p = softened(teacher, tau);
  const std::vector<double> q = softened(student, tau);
  std::vector<double> grad(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    grad[i] = tau * (q[i] - p[i]);
  }
  return grad;
}

double total_loss(double l_gt, double l_kd, double lambda) {
  if (lambda < 0 || lambda > 1) raise(Errc::invalid_argument, "lambda must lie in [0, 1]");
  return lambda * l_gt + (1 - lambda) * l_kd;
}

double lr_decay(double alpha0, double gamma, int t) {
  if (!(gamma < 1)) raise(Errc::invalid_argument, "gamma must be < 1");
  if (t < 0) raise(Errc::invalid_argument, "step must be >= 0");
  return alpha0 * std::pow(gamma, t);
}

namespace {

std::vector<LrStep> stage_lr_plan(const DistillParams& params) {
  std::vector<LrStep> plan;
  plan.reserve(params.epochs);
  double alpha = params.alpha0;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    LrStep step;
    step.epoch = epoch;
    step.alpha = alpha;
    step.old_layer_scale = std::pow(params.gamma, epoch);
    plan.push_back(step);
    alpha /= 10.0;  // student-phase step shrinks after every cycle
  }
  return plan;
}

std::vector<int> conv_widths(const NetworkGraph& graph, double fraction) {
  std::vector<int> widths;
  for (int idx : graph.conv_indices()) {
    widths.push_back(std::max(
        1, static_cast<int>(std::floor(fraction * graph.layers[idx].filters))));
  }
  return widths;
}

}  // namespace

MorphingSchedule build_schedule(const NetworkGraph& graph,
                                const std::vector<LayerBlock>& blocks,
                                ScheduleKind kind, const DistillParams& params,
                                const std::vector<double>& width_ladder) {
  params.validate();
  if (blocks.empty()) raise(Errc::empty_blocks, "schedule needs >= 1 layer block");

  MorphingSchedule schedule;
  schedule.kind = kind;

  if (kind == ScheduleKind::Depth) {
    for (size_t k = 1; k <= blocks.size(); ++k) {
      ScheduleStage stage;
      for (size_t b = 0; b < k; ++b) stage.active_blocks.push_back(blocks[b].block_id);
      stage.active_widths = conv_widths(graph, 1.0);
      stage.teacher_epochs = params.epochs;
      stage.student_epochs = params.epochs;
      stage.lambda = params.lambda;
      stage.tau = params.tau;
      stage.lr_plan = stage_lr_plan(params);
      schedule.stages.push_back(std::move(stage));
    }
  } else {
    std::vector<double> ladder = width_ladder;
    if (ladder.empty()) raise(Errc::invalid_argument, "width ladder is empty");
    std::sort(ladder.begin(), ladder.end());
    if (!(ladder.front() > 0) || ladder.back() > 1) {
      raise(Errc::invalid_argument, "width fractions must lie in (0, 1]");
    }
    if (ladder.back() != 1.0) ladder.push_back(1.0);  // final stage is full
    for (double fraction : ladder) {
      ScheduleStage stage;
      for (const LayerBlock& block : blocks) stage.active_blocks.push_back(block.block_id);
      stage.active_widths = conv_widths(graph, fraction);
      stage.teacher_epochs = params.epochs;
      stage.student_epochs = params.epochs;
      stage.lambda = params.lambda;
      stage.tau = params.tau;
      stage.lr_plan = stage_lr_plan(params);
      schedule.stages.push_back(std::move(stage));
    }
  }
  return schedule;
}

std::string schedule_to_json(const MorphingSchedule& schedule) {
  json doc;
  doc["kind"] = schedule.kind == ScheduleKind::Depth ? "depth" : "width";
  doc["stages"] = json::array();
  for (const ScheduleStage& stage : schedule.stages) {
    json entry;
    entry["active_blocks"] = stage.active_blocks;
    entry["active_widths"] = stage.active_widths;
    entry["teacher_epochs"] = stage.teacher_epochs;
    entry["student_epochs"] = stage.student_epochs;
    entry["lambda"] = stage.lambda;
    entry["tau"] = stage.tau;
    entry["lr_plan"] = json::array();
    for (const LrStep& step : stage.lr_plan) {
      entry["lr_plan"].push_back({{"epoch", step.epoch},
                                  {"alpha", step.alpha},
                                  {"old_layer_scale", step.old_layer_scale}});
    }
    doc["stages"].push_back(entry);
  }
  // The per-stage objective sums the plain supervised term with the
  // combined loss; the combined loss already contains lambda times the
  // supervised term, so both are recorded separately.
  doc["objective"] = "sum over stages of (l_gt + l_total)";
  return doc.dump(2) + "\n";
}

}  // namespace forgemorph::distill
