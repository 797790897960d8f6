#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <functional>

#include "forgemorph/costmodel.hpp"
#include "testutil.hpp"

using namespace forgemorph;
using namespace forgemorph::costmodel;
using netgraph::LayerKind;
using netgraph::LayerSpec;
using netgraph::NetworkGraph;
using netgraph::Shape;

namespace {

Errc code_of(const std::function<void()>& action) {
  try {
    action();
  } catch (const Error& err) {
    return err.code();
  }
  return Errc::internal;
}

LayerSpec conv_layer(int w, int h, int channels, int filters, int kernel,
                     int stride = 1, int padding = 0) {
  LayerSpec layer;
  layer.id = "c";
  layer.kind = LayerKind::Conv;
  layer.filters = filters;
  layer.kernel = kernel;
  layer.stride = stride;
  layer.padding = padding;
  layer.in = {h, w, channels};
  return layer;
}

LayerSpec fc_layer(int fc_out) {
  LayerSpec layer;
  layer.id = "fc";
  layer.kind = LayerKind::FullyConnected;
  layer.fc_out = fc_out;
  return layer;
}

const netgraph::DeviceProfile kDevice = testutil::zynq7100();

}  // namespace

TEST_CASE("mac_core_counts") {
  const MacCounts k3 = mac_core_counts(3);
  CHECK(k3.multipliers == 9);
  CHECK(k3.adders == 8);
  CHECK(k3.adder_stages == 5);

  const MacCounts k1 = mac_core_counts(1);
  CHECK(k1.multipliers == 1);
  CHECK(k1.adders == 0);
  CHECK(k1.adder_stages == 1);

  const MacCounts k4 = mac_core_counts(4);
  CHECK(k4.multipliers == 16);
  CHECK(k4.adders == 15);
  CHECK(k4.adder_stages == 5);
}

TEST_CASE("conv_pe_latency under decided defaults") {
  SUBCASE("8x8 K3 first layer: 88 cycles at 4 ns") {
    const LayerSpec layer = conv_layer(8, 8, 1, 4, 3);
    const LatencyTerms terms = LatencyTerms::defaults_for_kernel(3, 250e6);
    CHECK(conv_pe_cycles(layer, terms, true) == 88);
    CHECK(conv_pe_latency(layer, terms, true) == doctest::Approx(88 * 4e-9));
  }
  SUBCASE("1x1 K1 with zero overheads keeps the fractional porch term") {
    LatencyTerms terms = LatencyTerms::defaults_for_kernel(1, 1.0);
    terms.d_in = terms.d_out = 0;
    terms.t_pad = terms.t_tap = terms.t_mul = terms.t_add = terms.t_relu = 0;
    const LayerSpec layer = conv_layer(1, 1, 1, 1, 1);
    CHECK(conv_core_cycles_exact(layer, terms, true) == doctest::Approx(1.5));
    // Whole-cycle form rounds the settle term up.
    CHECK(conv_pe_cycles(layer, terms, true) == 2);
  }
  SUBCASE("doubling H doubles the row-streaming term exactly") {
    const LatencyTerms terms = LatencyTerms::defaults_for_kernel(3, 250e6);
    const LayerSpec once = conv_layer(16, 8, 1, 4, 3);
    const LayerSpec twice = conv_layer(16, 16, 1, 4, 3);
    const long long overhead_and_settle =
        conv_pe_cycles(once, terms, false) - 16 * 8;
    CHECK(conv_pe_cycles(twice, terms, false) - 16 * 16 == overhead_and_settle);
  }
  SUBCASE("negative terms are rejected") {
    LatencyTerms terms = LatencyTerms::defaults_for_kernel(3, 250e6);
    terms.t_add = -1;
    const LayerSpec layer = conv_layer(8, 8, 1, 4, 3);
    CHECK(code_of([&] { conv_pe_cycles(layer, terms, true); }) ==
          Errc::incomplete_terms);
  }
}

TEST_CASE("fc_latency") {
  const LatencyTerms terms = LatencyTerms::defaults_for_kernel(1, 1.0);
  const LayerSpec fc = fc_layer(10);

  SUBCASE("fc_pe equal to channel depth gives parallelism one") {
    const double full = fc_latency(fc, terms, 32, Shape{3, 3, 32});
    const double serial = fc_latency(fc, terms, 1, Shape{3, 3, 32});
    CHECK(full == doctest::Approx(((3) * 2 + 3) * 1.0));
    CHECK(serial == doctest::Approx(full * 32));
  }
  SUBCASE("single-row map reduces to one cycle times parallelism") {
    CHECK(fc_latency(fc, terms, 2, Shape{1, 7, 4}) == doctest::Approx(1.0 * 2));
  }
  SUBCASE("halving fc_pe doubles latency when divisible") {
    const double half = fc_latency(fc, terms, 8, Shape{5, 5, 16});
    const double quarter = fc_latency(fc, terms, 4, Shape{5, 5, 16});
    CHECK(quarter == doctest::Approx(2 * half));
  }
}

TEST_CASE("fc_resources") {
  const FcResources a = fc_resources(10, 1, 0);
  CHECK(a.multipliers == 10);
  CHECK(a.adders == 10);
  CHECK(a.registers == 10);

  const FcResources b = fc_resources(1, 1, 1);
  CHECK(b.multipliers == 1);
  CHECK(b.adders == 2);
  CHECK(b.registers == 1);

  const FcResources c = fc_resources(10, 4, 3);
  CHECK(c.multipliers == 40);
  CHECK(c.adders == 70);
  CHECK(c.registers == 40);
}

TEST_CASE("bram_linebuffer") {
  CHECK(bram_linebuffer(28, 3, 16) == 1);
  CHECK(bram_linebuffer(640, 3, 16) == 2);
  // Non-decreasing in every argument; int8 never exceeds int16.
  for (int width : {1, 28, 300, 640, 1919}) {
    for (int kernel : {1, 2, 3, 5}) {
      CHECK(bram_linebuffer(width, kernel, 8) <= bram_linebuffer(width, kernel, 16));
      CHECK(bram_linebuffer(width, kernel, 16) <=
            bram_linebuffer(width + 1, kernel, 16));
      CHECK(bram_linebuffer(width, kernel, 16) <=
            bram_linebuffer(width, kernel + 1, 16));
    }
  }
}

TEST_CASE("lut_lookup table values") {
  CHECK(lut_lookup(PeKind::Conv, 3).lut == 850);
  CHECK(lut_lookup(PeKind::Conv, 3).registers == 2000);
  CHECK(lut_lookup(PeKind::Pool, 3).lut == 420);
  CHECK(lut_lookup(PeKind::Pool, 3).registers == 1000);
  CHECK(lut_lookup(PeKind::Conv, 2).lut == 550);
  CHECK(lut_lookup(PeKind::Pool, 5).registers == 2200);
  CHECK(code_of([] { lut_lookup(PeKind::Conv, 7); }) == Errc::unsupported_kernel);
  CHECK(code_of([] { lut_lookup(PeKind::Pool, 1); }) == Errc::unsupported_kernel);
}

TEST_CASE("layer_pe_demand chains conv allocations") {
  const NetworkGraph graph = netgraph::parse_network(testutil::chain_json(
      "t", 12, 12, 3,
      {{"Conv", 4, 3, 1, 1}, {"Conv", 8, 3, 1, 1}, {"Conv", 8, 3, 1, 1}}, 0));

  PEAllocation alloc{{3, 3, 3}, 1};
  CHECK(layer_pe_demand(graph, alloc, 1) == 9);  // P(1)=3, P(2)=3 -> L(2)=9

  PEAllocation ones{{1, 1, 1}, 1};
  for (int i = 0; i < 3; ++i) {
    CHECK(layer_pe_demand(graph, ones, i) == (i == 0 ? 3 : 1));
  }

  const NetworkGraph mono = netgraph::parse_network(testutil::chain_json(
      "m", 12, 12, 1, {{"Conv", 4, 3, 1, 1}, {"Conv", 4, 3, 1, 1}}, 0));
  PEAllocation two_four{{2, 4}, 1};
  CHECK(layer_pe_demand(mono, two_four, 0) == 2);  // P(0) = 1 input channel
  CHECK(layer_pe_demand(mono, two_four, 1) == 8);
}

TEST_CASE("dsp_total") {
  SUBCASE("mnist anchor: sum L = 164 with fc term 8 gives 1556") {
    const NetworkGraph graph = testutil::mnist_graph();
    const PEAllocation alloc{{4, 8, 16}, 8};
    long long sum_l = 0;
    for (int i = 0; i < 3; ++i) sum_l += layer_pe_demand(graph, alloc, i);
    CHECK(sum_l == 164);
    CHECK(dsp_total(graph, alloc) == 1556);
  }
  SUBCASE("fc-only network costs ten slices per fc pe") {
    const NetworkGraph graph =
        netgraph::parse_network(testutil::chain_json("f", 4, 4, 2, {}, 5));
    CHECK(dsp_total(graph, PEAllocation{{}, 1}) == 10);
  }
  SUBCASE("single K5 conv PE with no fc") {
    const NetworkGraph graph = netgraph::parse_network(
        testutil::chain_json("k5", 8, 8, 1, {{"Conv", 4, 5, 1, 0}}, 0));
    CHECK(dsp_total(graph, PEAllocation{{1}, 1}) == 25);
  }
}

TEST_CASE("pipeline_latency implements the pipelined scheduling form") {
  const std::array<double, 5> stages = {1, 1, 1, 1, 1};
  CHECK(pipeline_latency(stages, 64, 4e-9, 4e-9) == doctest::Approx(272e-9));
  CHECK(pipeline_latency(stages, 1, 4e-9, 4e-9) == doctest::Approx(5 * 4e-9));
  CHECK(pipeline_latency(stages, 64, 4e-9, 4e-9, 0.0) ==
        doctest::Approx(pipeline_latency(stages, 64, 4e-9, 4e-9)));
  CHECK(code_of([&] { pipeline_latency(stages, 0, 4e-9, 4e-9); }) ==
        Errc::invalid_argument);
}

TEST_CASE("estimate on the mnist anchor allocation") {
  const NetworkGraph graph = testutil::mnist_graph();
  const CostEstimate est = estimate(graph, PEAllocation{{4, 8, 16}, 8}, kDevice);
  CHECK(est.dsp == 1556);
  CHECK(est.bram == 356);
  CHECK(est.latency_s > 0);
  CHECK_FALSE(est.power_mw.has_value());

  // The remaining green rows of the same geometric family.
  CHECK(estimate(graph, PEAllocation{{2, 4, 8}, 8}, kDevice).bram == 98);
  CHECK(estimate(graph, PEAllocation{{1, 2, 4}, 8}, kDevice).bram == 29);
  CHECK(estimate(graph, PEAllocation{{1, 1, 1}, 8}, kDevice).bram == 9);
  CHECK(estimate(graph, PEAllocation{{1, 2, 4}, 8}, kDevice).dsp == 179);
}

TEST_CASE("estimate: smallest genome on a one-conv net") {
  const NetworkGraph bare = netgraph::parse_network(
      testutil::chain_json("one", 8, 8, 1, {{"Conv", 4, 3, 1, 0}}, 0));
  CHECK(estimate(bare, PEAllocation{{1}, 1}, kDevice).dsp == 9);  // K^2 alone

  const NetworkGraph headed = netgraph::parse_network(
      testutil::chain_json("one_fc", 8, 8, 1, {{"Conv", 4, 3, 1, 0}}, 10));
  CHECK(estimate(headed, PEAllocation{{1}, 1}, kDevice).dsp == 9 + 10);
}

TEST_CASE("estimate propagates unsupported kernels") {
  const NetworkGraph graph = netgraph::parse_network(
      testutil::chain_json("k7", 16, 16, 1, {{"Conv", 4, 7, 1, 0}}, 0));
  CHECK(code_of([&] { estimate(graph, PEAllocation{{1}, 1}, kDevice); }) ==
        Errc::unsupported_kernel);
}

TEST_CASE("monotonicity: exhaustive sweep over small allocation spaces") {
  // Component-wise larger allocations never slow the design down and
  // never shrink its resources; checked over every pair in the space.
  const NetworkGraph graph = netgraph::parse_network(testutil::chain_json(
      "mono", 12, 12, 2,
      {{"Conv", 3, 3, 1, 1}, {"MaxPool", 0, 2, 2, 0}, {"Conv", 4, 2, 1, 0}}, 4));

  struct Point {
    PEAllocation alloc;
    CostEstimate est;
  };
  std::vector<Point> points;
  for (int p1 = 1; p1 <= 3; ++p1) {
    for (int p2 = 1; p2 <= 4; ++p2) {
      for (int fc = 1; fc <= 4; ++fc) {
        PEAllocation alloc{{p1, p2}, fc};
        points.push_back({alloc, estimate(graph, alloc, kDevice)});
      }
    }
  }
  int compared = 0;
  for (const Point& a : points) {
    for (const Point& b : points) {
      const bool leq = a.alloc.conv_pe[0] <= b.alloc.conv_pe[0] &&
                       a.alloc.conv_pe[1] <= b.alloc.conv_pe[1] &&
                       a.alloc.fc_pe <= b.alloc.fc_pe;
      if (!leq) continue;
      ++compared;
      CHECK(a.est.latency_s >= b.est.latency_s);
      CHECK(a.est.dsp <= b.est.dsp);
      CHECK(a.est.lut <= b.est.lut);
      CHECK(a.est.bram <= b.est.bram);
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("dsp_total is linear in each demand with coefficient k squared") {
  const NetworkGraph graph = netgraph::parse_network(testutil::chain_json(
      "lin", 16, 16, 1, {{"Conv", 6, 3, 1, 1}, {"Conv", 6, 2, 1, 0}}, 0));
  const PEAllocation base{{2, 3}, 1};
  PEAllocation bumped = base;
  bumped.conv_pe[1] += 1;  // L(2) grows by P(1) = 2
  CHECK(dsp_total(graph, bumped) - dsp_total(graph, base) == 2 * 2 * 2);
}

TEST_CASE("pooling contributes zero dsp and fc contributes zero bram") {
  const NetworkGraph with_pool = netgraph::parse_network(testutil::chain_json(
      "p", 8, 8, 1, {{"Conv", 2, 3, 1, 1}, {"MaxPool", 0, 2, 2, 0}}, 0));
  const NetworkGraph without_pool = netgraph::parse_network(
      testutil::chain_json("np", 8, 8, 1, {{"Conv", 2, 3, 1, 1}}, 0));
  const PEAllocation alloc{{2}, 1};
  CHECK(estimate(with_pool, alloc, kDevice).dsp ==
        estimate(without_pool, alloc, kDevice).dsp);

  const NetworkGraph fc_only =
      netgraph::parse_network(testutil::chain_json("fo", 4, 4, 3, {}, 7));
  CHECK(estimate(fc_only, PEAllocation{{}, 3}, kDevice).bram == 0);
}

TEST_CASE("residual graphs are parsed and costed") {
  const NetworkGraph graph = netgraph::parse_network(
      R"({"name":"res","layers":[
        {"id":"in","kind":"Input","in_shape":[8,8,4]},
        {"id":"main","kind":"Conv","filters":4,"kernel":3,"stride":1,"padding":1},
        {"id":"side","kind":"Conv","filters":4,"kernel":3,"stride":1,"padding":1},
        {"id":"add","kind":"ResidualAdd"},
        {"id":"out","kind":"Output"}],
        "connections":[["in","main"],["in","side"],["main","add"],["side","add"],
                       ["add","out"]]})");
  const PEAllocation alloc{{2, 2}, 1};
  const CostEstimate est = estimate(graph, alloc, kDevice);
  // Two convs contribute all DSP; the join adds one adder per channel and
  // a single cycle, never DSP or BRAM.
  CHECK(est.dsp == dsp_total(graph, alloc));
  const CostEstimate convs_only = [&] {
    const NetworkGraph chain = netgraph::parse_network(testutil::chain_json(
        "plain", 8, 8, 4, {{"Conv", 4, 3, 1, 1}, {"Conv", 4, 3, 1, 1}}, 0));
    return estimate(chain, alloc, kDevice);
  }();
  CHECK(est.lut > convs_only.lut);  // join adders on top of the conv logic
  CHECK(est.bram == convs_only.bram);
}

TEST_CASE("word width only affects the line-buffer blocks") {
  const NetworkGraph graph = netgraph::parse_network(testutil::chain_json(
      "wide_fm", 4, 1200, 1, {{"Conv", 2, 3, 1, 0}}, 0));
  netgraph::DeviceProfile narrow = kDevice;
  narrow.fp_rep = 8;
  const PEAllocation alloc{{2}, 1};
  const CostEstimate est8 = estimate(graph, alloc, narrow);
  const CostEstimate est16 = estimate(graph, alloc, kDevice);
  CHECK(est8.bram < est16.bram);
  CHECK(est8.dsp == est16.dsp);
  CHECK(est8.lut == est16.lut);
  CHECK(est8.latency_s == est16.latency_s);
}

TEST_CASE("estimates are bit-identical across repeated evaluation") {
  const NetworkGraph graph = testutil::mnist_graph();
  const PEAllocation alloc{{3, 7, 13}, 5};
  const CostEstimate a = estimate(graph, alloc, kDevice);
  const CostEstimate b = estimate(graph, alloc, kDevice);
  CHECK(a.latency_s == b.latency_s);
  CHECK(a.dsp == b.dsp);
  CHECK(a.lut == b.lut);
  CHECK(a.bram == b.bram);
  CHECK(a.registers == b.registers);
}

TEST_CASE("terms overrides replace individual defaults") {
  TermsOverrides overrides;
  overrides.d_in = 0;
  overrides.p_b = 3;
  const LatencyTerms terms = overrides.resolve(3, 250e6);
  CHECK(terms.d_in == 0);
  CHECK(terms.p_b == 3);
  CHECK(terms.t_tap == 3);  // untouched default
  CHECK(terms.t_add == 6);
}
