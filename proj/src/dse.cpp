#include "forgemorph/dse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

namespace forgemorph::dse {

void MogaConfig::validate() const {
  if (population_size < 0 || (population_size != 0 && population_size < 2)) {
    raise(Errc::invalid_argument, "population_size must be >= 2 (or 0 for auto)");
  }
  if (max_generations < 1) raise(Errc::invalid_argument, "max_generations must be >= 1");
  if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1) {
    raise(Errc::invalid_argument, "rates must lie in [0, 1]");
  }
  if (stagnation_window < 1) raise(Errc::invalid_argument, "stagnation_window must be >= 1");
  if (mutation_power <= 0) raise(Errc::invalid_argument, "mutation_power must be positive");
  if (jobs < 1) raise(Errc::invalid_argument, "jobs must be >= 1");
}

int MogaConfig::resolved_population(const NetworkGraph& graph) const {
  if (population_size != 0) return population_size;
  return graph.conv_indices().size() <= 3 ? 50 : 200;
}

ConstraintSet ConstraintSet::from_device(const DeviceProfile& device) {
  ConstraintSet cons;
  cons.max_dsp = device.dsp_max;
  cons.max_lut = device.lut_max;
  cons.max_bram = device.bram_blocks_max;
  return cons;
}

bool ConstraintSet::satisfied(const CostEstimate& est) const {
  return violation(est) == 0;
}

double ConstraintSet::violation(const CostEstimate& est) const {
  double total = 0;
  const auto excess = [&](double value, double bound) {
    if (bound > 0 && value > bound) total += (value - bound) / bound;
  };
  if (max_latency_s) excess(est.latency_s, *max_latency_s);
  if (max_dsp) excess(static_cast<double>(est.dsp), static_cast<double>(*max_dsp));
  if (max_lut) excess(static_cast<double>(est.lut), static_cast<double>(*max_lut));
  if (max_bram) excess(static_cast<double>(est.bram), static_cast<double>(*max_bram));
  return total;
}

GenomeBounds GenomeBounds::for_graph(const NetworkGraph& graph) {
  GenomeBounds bounds;
  for (int ub : costmodel::conv_upper_bounds(graph)) {
    bounds.lower.push_back(1);
    bounds.upper.push_back(ub);
  }
  const int fc_ub = costmodel::fc_pe_upper_bound(graph);
  if (fc_ub > 0) {
    bounds.has_fc_gene = true;
    bounds.lower.push_back(1);
    bounds.upper.push_back(fc_ub);
  }
  return bounds;
}

std::vector<int> GenomeBounds::encode(const PEAllocation& alloc) const {
  std::vector<int> genes = alloc.conv_pe;
  if (has_fc_gene) genes.push_back(alloc.fc_pe);
  return genes;
}

PEAllocation GenomeBounds::decode(const std::vector<int>& genes) const {
  if (genes.size() != lower.size()) {
    raise(Errc::length_mismatch, "genome length does not match bounds");
  }
  PEAllocation alloc;
  if (has_fc_gene) {
    alloc.conv_pe.assign(genes.begin(), genes.end() - 1);
    alloc.fc_pe = genes.back();
  } else {
    alloc.conv_pe = genes;
    alloc.fc_pe = 1;
  }
  return alloc;
}

std::vector<PEAllocation> initialize_population(const NetworkGraph& graph,
                                                const MogaConfig& cfg) {
  cfg.validate();
  if (graph.conv_indices().empty()) {
    raise(Errc::invalid_argument, "graph has no conv layers to allocate");
  }
  const GenomeBounds bounds = GenomeBounds::for_graph(graph);
  Rng rng(cfg.seed);
  std::vector<PEAllocation> population;
  const int size = cfg.resolved_population(graph);
  population.reserve(size);
  for (int i = 0; i < size; ++i) {
    std::vector<int> genes(bounds.lower.size());
    for (size_t g = 0; g < genes.size(); ++g) {
      std::uniform_int_distribution<int> dist(bounds.lower[g], bounds.upper[g]);
      genes[g] = dist(rng);
    }
    population.push_back(bounds.decode(genes));
  }
  return population;
}

std::vector<int> mutate(const std::vector<int>& genes, const GenomeBounds& bounds,
                        Rng& rng, double power_exponent, double rate) {
  if (genes.size() != bounds.lower.size()) {
    raise(Errc::length_mismatch, "genome length does not match bounds");
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<int> result = genes;
  for (size_t g = 0; g < result.size(); ++g) {
    if (rate < 1.0 && uniform(rng) >= rate) continue;
    const double lb = bounds.lower[g];
    const double ub = bounds.upper[g];
    if (ub <= lb) continue;  // zero-width interval, gene is pinned

    const double r = uniform(rng);
    const double s = std::pow(uniform(rng), power_exponent);
    const double x = result[g];
    const double t = (x - lb) / (ub - lb);
    const double moved = t < r ? x - s * (x - lb) : x + s * (ub - x);
    const double clamped = std::clamp(moved, lb, ub);
    result[g] = static_cast<int>(std::llround(clamped));
  }
  return result;
}

std::pair<std::vector<int>, std::vector<int>> crossover(
    const std::vector<int>& a, const std::vector<int>& b, Rng& rng) {
  if (a.size() != b.size()) {
    raise(Errc::length_mismatch, "parents have different genome lengths");
  }
  std::bernoulli_distribution coin(0.5);
  std::vector<int> c1 = a;
  std::vector<int> c2 = b;
  for (size_t g = 0; g < a.size(); ++g) {
    if (coin(rng)) std::swap(c1[g], c2[g]);
  }
  return {std::move(c1), std::move(c2)};
}

bool dominates(const ObjView& a, const ObjView& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) {
    if (a.violation != b.violation) return a.violation < b.violation;
    // Equal violation: fall through to objective domination.
  }
  const bool no_worse = a.latency <= b.latency && a.dsp <= b.dsp;
  const bool better = a.latency < b.latency || a.dsp < b.dsp;
  return no_worse && better;
}

std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjView> pop) {
  const int n = static_cast<int>(pop.size());
  std::vector<int> domination_count(n, 0);
  std::vector<std::vector<int>> dominated_by(n);
  std::vector<std::vector<int>> fronts;

  std::vector<int> current;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(pop[i], pop[j])) {
        dominated_by[i].push_back(j);
      } else if (dominates(pop[j], pop[i])) {
        ++domination_count[i];
      }
    }
    if (domination_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int i : current) {
      for (int j : dominated_by[i]) {
        if (--domination_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const ObjView> pop,
                                      const std::vector<int>& front) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> distance(pop.size(), 0.0);
  if (front.size() <= 2) {
    for (int idx : front) distance[idx] = inf;
    return distance;
  }
  const auto accumulate = [&](auto key) {
    std::vector<int> order = front;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (key(pop[a]) != key(pop[b])) return key(pop[a]) < key(pop[b]);
      return a < b;
    });
    const double span = key(pop[order.back()]) - key(pop[order.front()]);
    distance[order.front()] = inf;
    distance[order.back()] = inf;
    if (span <= 0) return;
    for (size_t i = 1; i + 1 < order.size(); ++i) {
      distance[order[i]] +=
          (key(pop[order[i + 1]]) - key(pop[order[i - 1]])) / span;
    }
  };
  accumulate([](const ObjView& v) { return v.latency; });
  accumulate([](const ObjView& v) { return v.dsp; });
  return distance;
}

double hypervolume_2d(std::span<const ObjView> points, double ref_latency,
                      double ref_dsp) {
  std::vector<std::pair<double, double>> inside;
  for (const ObjView& p : points) {
    if (p.feasible && p.latency < ref_latency && p.dsp < ref_dsp) {
      inside.emplace_back(p.latency, p.dsp);
    }
  }
  if (inside.empty()) return 0;
  std::sort(inside.begin(), inside.end());
  double volume = 0;
  double best_dsp = ref_dsp;
  for (size_t i = 0; i < inside.size(); ++i) {
    const double next_latency =
        i + 1 < inside.size() ? std::min(inside[i + 1].first, ref_latency)
                              : ref_latency;
    const double dsp = std::min(inside[i].second, best_dsp);
    volume += (next_latency - inside[i].first) * (ref_dsp - dsp);
    best_dsp = std::min(best_dsp, dsp);
  }
  return volume;
}

namespace {

struct Individual {
  std::vector<int> genes;
  CostEstimate est;
  ObjView view;
};

class Evaluator {
 public:
  Evaluator(const NetworkGraph& graph, const DeviceProfile& device,
            const ConstraintSet& constraints, const GenomeBounds& bounds,
            const TermsOverrides& overrides, int jobs)
      : graph_(graph),
        device_(device),
        constraints_(constraints),
        bounds_(bounds),
        overrides_(overrides),
        jobs_(jobs) {}

  CostEstimate evaluate_genes(const std::vector<int>& genes) {
    auto it = cache_.find(genes);
    if (it != cache_.end()) return it->second;
    const CostEstimate est =
        costmodel::estimate(graph_, bounds_.decode(genes), device_, overrides_);
    cache_.emplace(genes, est);
    return est;
  }

  void evaluate(std::vector<Individual>& pop) {
    evaluations_ += static_cast<long long>(pop.size());
    std::vector<size_t> missing;
    for (size_t i = 0; i < pop.size(); ++i) {
      auto it = cache_.find(pop[i].genes);
      if (it != cache_.end()) {
        pop[i].est = it->second;
      } else {
        missing.push_back(i);
      }
    }
    if (jobs_ <= 1 || missing.size() < 2) {
      for (size_t i : missing) {
        pop[i].est = costmodel::estimate(graph_, bounds_.decode(pop[i].genes),
                                         device_, overrides_);
      }
    } else {
      // Results land at fixed indices, so scheduling order cannot change
      // the outcome.
      const int workers = std::min<int>(jobs_, static_cast<int>(missing.size()));
      std::vector<std::thread> threads;
      threads.reserve(workers);
      for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
          for (size_t m = w; m < missing.size(); m += workers) {
            const size_t i = missing[m];
            pop[i].est = costmodel::estimate(graph_, bounds_.decode(pop[i].genes),
                                             device_, overrides_);
          }
        });
      }
      for (auto& t : threads) t.join();
    }
    for (size_t i : missing) cache_.emplace(pop[i].genes, pop[i].est);
    for (Individual& ind : pop) {
      ind.view.latency = ind.est.latency_s;
      ind.view.dsp = static_cast<double>(ind.est.dsp);
      ind.view.violation = constraints_.violation(ind.est);
      ind.view.feasible = ind.view.violation == 0;
    }
  }

  long long evaluations() const { return evaluations_; }

 private:
  const NetworkGraph& graph_;
  const DeviceProfile& device_;
  const ConstraintSet& constraints_;
  const GenomeBounds& bounds_;
  const TermsOverrides& overrides_;
  int jobs_;
  std::map<std::vector<int>, CostEstimate> cache_;
  long long evaluations_ = 0;
};

class Archive {
 public:
  /// Keeps every feasible individual not strictly dominated by another;
  /// distinct genomes with equal objectives are all retained.
  void offer(const Individual& candidate) {
    if (!candidate.view.feasible) return;
    if (seen_.count(candidate.genes)) return;
    for (const Individual& kept : members_) {
      if (dominates(kept.view, candidate.view)) return;
    }
    std::erase_if(members_, [&](const Individual& kept) {
      if (dominates(candidate.view, kept.view)) {
        seen_.erase(kept.genes);
        return true;
      }
      return false;
    });
    seen_.insert(candidate.genes);
    members_.push_back(candidate);
  }

  const std::vector<Individual>& members() const { return members_; }

 private:
  std::vector<Individual> members_;
  std::set<std::vector<int>> seen_;
};

int tournament_pick(const std::vector<int>& rank, const std::vector<double>& crowd,
                    Rng& rng, int size) {
  std::uniform_int_distribution<int> dist(0, size - 1);
  const int a = dist(rng);
  const int b = dist(rng);
  if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
  if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? a : b;
  return std::min(a, b);
}

}  // namespace

ParetoFront explore(const NetworkGraph& graph, const DeviceProfile& device,
                    const ConstraintSet& constraints, const MogaConfig& cfg,
                    const TermsOverrides& overrides) {
  cfg.validate();
  if (graph.conv_indices().empty()) {
    raise(Errc::invalid_argument, "design space exploration needs >= 1 conv layer");
  }
  const GenomeBounds bounds = GenomeBounds::for_graph(graph);
  Evaluator evaluator(graph, device, constraints, bounds, overrides, cfg.jobs);

  // Feasibility prechecks at the search-space corners. Resources grow and
  // latency shrinks monotonically with the genome, so the all-lower corner
  // bounds resource use from below and the all-upper corner bounds latency.
  const CostEstimate min_resources = evaluator.evaluate_genes(bounds.lower);
  const CostEstimate min_latency = evaluator.evaluate_genes(bounds.upper);
  const auto over = [](long long value, const std::optional<long long>& cap) {
    return cap && value > *cap;
  };
  if (over(min_resources.dsp, constraints.max_dsp) ||
      over(min_resources.lut, constraints.max_lut) ||
      over(min_resources.bram, constraints.max_bram)) {
    raise(Errc::no_feasible_design,
          "even the fully serialized mapping exceeds the resource budget");
  }
  if (constraints.max_latency_s && min_latency.latency_s > *constraints.max_latency_s) {
    raise(Errc::no_feasible_design,
          "even the fully parallel mapping misses the latency budget");
  }

  // Fixed hypervolume reference corner covering the whole design space.
  const double ref_latency = min_resources.latency_s * 1.01 + 1e-12;
  const double ref_dsp = static_cast<double>(min_latency.dsp) * 1.01 + 1.0;

  Rng rng(cfg.seed);
  const int pop_size = cfg.resolved_population(graph);

  std::vector<Individual> population;
  population.reserve(pop_size);
  for (const PEAllocation& alloc : initialize_population(graph, cfg)) {
    population.push_back({bounds.encode(alloc), {}, {}});
  }
  evaluator.evaluate(population);

  Archive archive;
  // The precheck corners are evaluated designs in their own right; the
  // serialized corner anchors the minimum-resource end of the front and
  // the parallel corner the minimum-latency end.
  for (const auto& [genes, est] :
       {std::pair{bounds.lower, min_resources}, std::pair{bounds.upper, min_latency}}) {
    Individual corner{genes, est, {}};
    corner.view.latency = est.latency_s;
    corner.view.dsp = static_cast<double>(est.dsp);
    corner.view.violation = constraints.violation(est);
    corner.view.feasible = corner.view.violation == 0;
    archive.offer(corner);
  }
  for (const Individual& ind : population) archive.offer(ind);

  ParetoFront result;
  result.seed = cfg.seed;

  const auto archive_views = [&]() {
    std::vector<ObjView> views;
    views.reserve(archive.members().size());
    for (const Individual& ind : archive.members()) views.push_back(ind.view);
    return views;
  };
  double last_hv = hypervolume_2d(archive_views(), ref_latency, ref_dsp);
  result.hypervolume_history.push_back(last_hv);
  int stagnant = 0;

  std::vector<int> rank(population.size());
  std::vector<double> crowd(population.size());
  const auto rank_population = [&]() {
    std::vector<ObjView> views;
    views.reserve(population.size());
    for (const Individual& ind : population) views.push_back(ind.view);
    const auto fronts = non_dominated_sort(views);
    rank.assign(population.size(), 0);
    crowd.assign(population.size(), 0.0);
    for (size_t f = 0; f < fronts.size(); ++f) {
      const auto dist = crowding_distance(views, fronts[f]);
      for (int idx : fronts[f]) {
        rank[idx] = static_cast<int>(f);
        crowd[idx] = dist[idx];
      }
    }
    return fronts;
  };
  rank_population();

  int generation = 0;
  for (; generation < cfg.max_generations; ++generation) {
    // Variation: binary tournaments feed uniform crossover and the
    // power-distribution mutation.
    std::vector<Individual> offspring;
    offspring.reserve(pop_size);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    while (static_cast<int>(offspring.size()) < pop_size) {
      const int p1 = tournament_pick(rank, crowd, rng, static_cast<int>(population.size()));
      const int p2 = tournament_pick(rank, crowd, rng, static_cast<int>(population.size()));
      std::vector<int> c1 = population[p1].genes;
      std::vector<int> c2 = population[p2].genes;
      if (uniform(rng) < cfg.crossover_rate) {
        std::tie(c1, c2) = crossover(c1, c2, rng);
      }
      if (uniform(rng) < cfg.mutation_rate) {
        c1 = mutate(c1, bounds, rng, cfg.mutation_power, 1.0);
      }
      if (uniform(rng) < cfg.mutation_rate) {
        c2 = mutate(c2, bounds, rng, cfg.mutation_power, 1.0);
      }
      offspring.push_back({std::move(c1), {}, {}});
      if (static_cast<int>(offspring.size()) < pop_size) {
        offspring.push_back({std::move(c2), {}, {}});
      }
    }
    evaluator.evaluate(offspring);
    for (const Individual& ind : offspring) archive.offer(ind);

    // Elitist environmental selection over parents + offspring.
    std::vector<Individual> combined = std::move(population);
    combined.insert(combined.end(), std::make_move_iterator(offspring.begin()),
                    std::make_move_iterator(offspring.end()));
    std::vector<ObjView> views;
    views.reserve(combined.size());
    for (const Individual& ind : combined) views.push_back(ind.view);
    const auto fronts = non_dominated_sort(views);

    population.clear();
    for (const auto& front : fronts) {
      if (static_cast<int>(population.size() + front.size()) <= pop_size) {
        for (int idx : front) population.push_back(combined[idx]);
      } else {
        const auto dist = crowding_distance(views, front);
        std::vector<int> order = front;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
          if (dist[a] != dist[b]) return dist[a] > dist[b];
          return a < b;
        });
        for (int idx : order) {
          if (static_cast<int>(population.size()) >= pop_size) break;
          population.push_back(combined[idx]);
        }
      }
      if (static_cast<int>(population.size()) >= pop_size) break;
    }
    rank_population();

    const double hv = hypervolume_2d(archive_views(), ref_latency, ref_dsp);
    result.hypervolume_history.push_back(hv);
    if (hv - last_hv < 1e-6) {
      ++stagnant;
    } else {
      stagnant = 0;
    }
    last_hv = std::max(last_hv, hv);
    if (stagnant >= cfg.stagnation_window) {
      ++generation;
      break;
    }
  }

  result.generations_run = generation;

  // Small genome spaces are cheaper to enumerate than to search; a
  // closing sweep makes the archive exact there. Large spaces rely on
  // the evolutionary archive alone.
  long long space = 1;
  for (size_t g = 0; g < bounds.lower.size() && space <= 4096; ++g) {
    space *= bounds.upper[g] - bounds.lower[g] + 1;
  }
  if (space <= 4096) {
    std::vector<int> genes = bounds.lower;
    while (true) {
      const CostEstimate est = evaluator.evaluate_genes(genes);
      Individual swept{genes, est, {}};
      swept.view.latency = est.latency_s;
      swept.view.dsp = static_cast<double>(est.dsp);
      swept.view.violation = constraints.violation(est);
      swept.view.feasible = swept.view.violation == 0;
      archive.offer(swept);
      int g = static_cast<int>(genes.size()) - 1;
      while (g >= 0 && genes[g] == bounds.upper[g]) {
        genes[g] = bounds.lower[g];
        --g;
      }
      if (g < 0) break;
      ++genes[g];
    }
  }
  result.evaluations = evaluator.evaluations();

  if (archive.members().empty()) {
    raise(Errc::no_feasible_design,
          "no allocation satisfies the joint constraint set");
  }
  for (const Individual& ind : archive.members()) {
    result.entries.push_back({bounds.decode(ind.genes), ind.est});
  }
  std::sort(result.entries.begin(), result.entries.end(),
            [](const FrontEntry& a, const FrontEntry& b) {
              if (a.est.dsp != b.est.dsp) return a.est.dsp < b.est.dsp;
              if (a.est.latency_s != b.est.latency_s)
                return a.est.latency_s < b.est.latency_s;
              if (a.alloc.conv_pe != b.alloc.conv_pe)
                return a.alloc.conv_pe < b.alloc.conv_pe;
              return a.alloc.fc_pe < b.alloc.fc_pe;
            });

  // Near-feasible designs from the final population: flagged for runtime
  // switching studies, never returned as results.
  std::vector<ObjView> final_views;
  std::vector<int> infeasible_indices;
  for (size_t i = 0; i < population.size(); ++i) {
    if (!population[i].view.feasible) {
      infeasible_indices.push_back(static_cast<int>(i));
      final_views.push_back(population[i].view);
    }
  }
  if (!final_views.empty()) {
    const auto fronts = non_dominated_sort(final_views);
    std::set<std::vector<int>> seen;
    for (int local : fronts.front()) {
      const Individual& ind = population[infeasible_indices[local]];
      if (seen.insert(ind.genes).second) {
        result.near_feasible.push_back({bounds.decode(ind.genes), ind.est});
      }
    }
    std::sort(result.near_feasible.begin(), result.near_feasible.end(),
              [](const FrontEntry& a, const FrontEntry& b) {
                if (a.est.dsp != b.est.dsp) return a.est.dsp < b.est.dsp;
                return a.est.latency_s < b.est.latency_s;
              });
  }
  return result;
}

}  // namespace forgemorph::dse
