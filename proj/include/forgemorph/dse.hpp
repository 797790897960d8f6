#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "forgemorph/costmodel.hpp"

namespace forgemorph::dse {

using costmodel::CostEstimate;
using costmodel::PEAllocation;
using costmodel::TermsOverrides;
using netgraph::DeviceProfile;
using netgraph::NetworkGraph;

using Rng = std::mt19937_64;

struct MogaConfig {
  int population_size = 0;  // 0 = auto: 50 for <= 3 conv layers, 200 otherwise
  int max_generations = 100;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;
  std::uint64_t seed = 1;
  int stagnation_window = 25;  // generations without hypervolume improvement
  double mutation_power = 4.0; // exponent of the power-distribution step
  int jobs = 1;                // parallel fitness evaluation

  void validate() const;
  int resolved_population(const NetworkGraph& graph) const;
};

struct ConstraintSet {
  std::optional<double> max_latency_s;
  std::optional<long long> max_dsp;
  std::optional<long long> max_lut;
  std::optional<long long> max_bram;

  static ConstraintSet from_device(const DeviceProfile& device);
  bool satisfied(const CostEstimate& est) const;
  /// Normalized aggregate excess over the active bounds; 0 when feasible.
  double violation(const CostEstimate& est) const;
};

struct FrontEntry {
  PEAllocation alloc;
  CostEstimate est;
};

struct ParetoFront {
  std::vector<FrontEntry> entries;        // feasible, mutually non-dominated
  std::vector<FrontEntry> near_feasible;  // flagged, never final results
  long long generations_run = 0;
  long long evaluations = 0;
  std::uint64_t seed = 0;
  std::vector<double> hypervolume_history;
};

/// Genome layout: conv genes in topological order, then one fc gene when
/// the graph has a fully connected layer.
struct GenomeBounds {
  std::vector<int> lower;
  std::vector<int> upper;
  bool has_fc_gene = false;

  static GenomeBounds for_graph(const NetworkGraph& graph);
  std::vector<int> encode(const PEAllocation& alloc) const;
  PEAllocation decode(const std::vector<int>& genes) const;
};

std::vector<PEAllocation> initialize_population(const NetworkGraph& graph,
                                                const MogaConfig& cfg);

/// Gene-wise power-distribution mutation: with t the scaled distance of
/// the gene from its lower bound and r uniform, the step s pulls toward
/// the nearer bound; results are rounded and clamped.
std::vector<int> mutate(const std::vector<int>& genes, const GenomeBounds& bounds,
                        Rng& rng, double power_exponent, double rate);

std::pair<std::vector<int>, std::vector<int>> crossover(
    const std::vector<int>& a, const std::vector<int>& b, Rng& rng);

/// Objective view used by the sorting machinery; latency and DSP are
/// minimized with feasibility-first domination.
struct ObjView {
  double latency = 0;
  double dsp = 0;
  bool feasible = true;
  double violation = 0;
};

bool dominates(const ObjView& a, const ObjView& b);
std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjView> pop);
std::vector<double> crowding_distance(std::span<const ObjView> pop,
                                      const std::vector<int>& front);

/// Area dominated by the feasible points relative to a reference corner
/// (both objectives minimized).
double hypervolume_2d(std::span<const ObjView> points, double ref_latency,
                      double ref_dsp);

/// Algorithm: selection, crossover, power mutation, evaluation and
/// constraint filtering until the end criteria fire. Returns the archive
/// of all feasible non-dominated designs encountered. Deterministic for a
/// fixed seed regardless of evaluation parallelism.
ParetoFront explore(const NetworkGraph& graph, const DeviceProfile& device,
                    const ConstraintSet& constraints, const MogaConfig& cfg,
                    const TermsOverrides& overrides = {});

}  // namespace forgemorph::dse
