#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "perfsampler/mobo/pareto.hpp"
#include "perfsampler/models/regression_tree.hpp"
#include "perfsampler/random.hpp"
#include "perfsampler/sampling/outcome.hpp"

namespace perfsampler {

struct BaselineParams {
  // genetic / NSGA-III
  std::size_t population = 10;
  std::size_t tournament = 2;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // negative: 1 / number of options
  std::size_t elitism = 1;
  // Flash / CoMSA
  std::size_t initial_design = 5;
  int tree_depth = 4;
  std::size_t tree_min_leaf = 1;
  std::size_t bootstrap = 10;

  double effective_mutation_rate(std::size_t n_options) const {
    return mutation_rate >= 0.0 ? mutation_rate : 1.0 / static_cast<double>(std::max<std::size_t>(n_options, 1));
  }

  static BaselineParams from_json(const Json& j) {
    BaselineParams p;
    p.population = j.value("population", p.population);
    p.tournament = j.value("tournament", p.tournament);
    p.crossover_rate = j.value("crossover_rate", p.crossover_rate);
    p.mutation_rate = j.value("mutation_rate", p.mutation_rate);
    p.elitism = j.value("elitism", p.elitism);
    p.initial_design = j.value("initial_design", p.initial_design);
    p.tree_depth = j.value("tree_depth", p.tree_depth);
    p.tree_min_leaf = j.value("tree_min_leaf", p.tree_min_leaf);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    if (p.population < 2 || p.tournament < 1 || p.bootstrap < 1) {
      throw Error(Errc::invalid_argument, "population >= 2, tournament >= 1 and bootstrap >= 1 required");
    }
    return p;
  }
};

namespace detail {

inline void require_single(const ObjectiveSpec& objective) {
  objective.validate();
  if (objective.size() != 1) throw Error(Errc::invalid_argument, "single-objective sampler given several metrics");
}

inline models::FeatureMatrix features_of(const EnumeratedSpace& space, std::span<const std::size_t> rows) {
  models::FeatureMatrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto f = space.features(rows[r]);
    for (std::size_t c = 0; c < f.size(); ++c) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[c];
  }
  return X;
}

inline std::size_t random_unmeasured(const EvaluationLedger& ledger, std::size_t n, Rng& rng) {
  const std::size_t open = n - ledger.count();
  std::size_t target = rng.index(open);
  for (std::size_t i = 0; i < n; ++i) {
    if (ledger.measured(i)) continue;
    if (target-- == 0) return i;
  }
  throw Error(Errc::invalid_argument, "no unmeasured configuration left");
}

}  // namespace detail

inline SamplerOutcome sample_random(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed) {
  require_budget(k, space.size());
  Rng rng(seed);
  SamplerOutcome out{"random", seed, {}, {}};
  for (auto i : rng.sample_indices(space.size(), k)) out.sampled.push_back(space.configuration(i));
  return out;
}

/// Uniform crossover of two genomes (with probability `crossover_rate`,
/// otherwise a copy of `a`) followed by per-option mutation to a uniformly
/// drawn admissible value. Children that violate a constraint are redrawn a
/// few times; if that keeps failing the first parent is returned.
inline std::size_t make_offspring(const EnumeratedSpace& space, std::size_t a, std::size_t b, double crossover_rate,
                                  double mutation_rate, Rng& rng) {
  const auto pa = space.indices(a);
  const auto pb = space.indices(b);
  const auto& options = space.space().options();
  ValueIndices child(pa.begin(), pa.end());
  for (int attempt = 0; attempt < 16; ++attempt) {
    const bool cross = rng.bernoulli(crossover_rate);
    for (std::size_t o = 0; o < child.size(); ++o) {
      child[o] = cross && rng.bernoulli(0.5) ? pb[o] : pa[o];
      if (mutation_rate > 0.0 && rng.bernoulli(mutation_rate)) {
        child[o] = static_cast<std::uint32_t>(rng.index(options[o].values.size()));
      }
    }
    if (auto idx = space.index_of(child)) return *idx;
  }
  return a;
}

inline std::size_t tournament_select(std::span<const std::size_t> population, std::size_t size,
                                     const std::function<bool(std::size_t, std::size_t)>& better, Rng& rng) {
  std::size_t best = population[rng.index(population.size())];
  for (std::size_t t = 1; t < size; ++t) {
    const std::size_t c = population[rng.index(population.size())];
    if (better(c, best)) best = c;
  }
  return best;
}

inline SamplerOutcome sample_genetic(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                     const MeasurementOracle& oracle, const ObjectiveSpec& objective,
                                     const BaselineParams& params = {}) {
  detail::require_single(objective);
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objective);
  const double mutation = params.effective_mutation_rate(space.space().size());
  auto cost = [&](std::size_t i) { return ledger.cost(i)[0]; };
  auto better = [&](std::size_t x, std::size_t y) { return cost(x) < cost(y) || (cost(x) == cost(y) && x < y); };

  std::vector<std::size_t> population = rng.sample_indices(space.size(), std::min(params.population, k));
  for (auto i : population) ledger.evaluate(i);

  SamplerOutcome out{"genetic", seed, {}, {}};
  auto record = [&](std::size_t generation) {
    double mean = 0.0;
    for (auto i : population) mean += cost(i);
    mean /= static_cast<double>(population.size());
    double best = std::numeric_limits<double>::infinity();
    for (auto i : ledger.order()) best = std::min(best, cost(i));
    out.notes.push_back(Json{{"generation", generation}, {"population_mean", mean}, {"best_so_far", best},
                             {"evaluations", ledger.count()}});
  };
  record(0);

  for (std::size_t generation = 1; ledger.count() < k; ++generation) {
    std::vector<std::size_t> ranked = population;
    std::sort(ranked.begin(), ranked.end(), better);
    std::vector<std::size_t> next(ranked.begin(), ranked.begin() + std::min(params.elitism, ranked.size()));
    const std::size_t before = ledger.count();
    while (next.size() < params.population && ledger.count() < k) {
      const std::size_t a = tournament_select(population, params.tournament, better, rng);
      const std::size_t b = tournament_select(population, params.tournament, better, rng);
      const std::size_t child = make_offspring(space, a, b, params.crossover_rate, mutation, rng);
      ledger.evaluate(child);
      next.push_back(child);
    }
    // A converged population can keep producing known genomes; inject an
    // unseen immigrant so the budget is always spent.
    if (ledger.count() == before && ledger.count() < k) {
      const std::size_t immigrant = detail::random_unmeasured(ledger, space.size(), rng);
      ledger.evaluate(immigrant);
      next.back() = immigrant;
    }
    population = std::move(next);
    record(generation);
  }
  out.sampled = ledger.configurations();
  return out;
}

/// Unmeasured configuration with the smallest predicted cost (ties: lowest
/// index).
inline std::size_t flash_acquire(const EnumeratedSpace& space, const std::vector<bool>& measured,
                                 const std::function<double(std::span<const double>)>& predict) {
  std::size_t best = space.size();
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (measured[i]) continue;
    const double v = predict(space.features(i));
    if (best == space.size() || v < best_value) {
      best = i;
      best_value = v;
    }
  }
  if (best == space.size()) throw Error(Errc::invalid_argument, "no unmeasured configuration left");
  return best;
}

/// Population standard deviation of ensemble predictions at x.
inline double bootstrap_uncertainty(const std::vector<std::function<double(std::span<const double>)>>& ensemble,
                                    std::span<const double> x) {
  double mean = 0.0;
  std::vector<double> p;
  p.reserve(ensemble.size());
  for (const auto& f : ensemble) {
    p.push_back(f(x));
    mean += p.back();
  }
  mean /= static_cast<double>(p.size());
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(p.size()));
}

/// Unmeasured configuration where the ensemble disagrees most (ties: lowest
/// index).
inline std::size_t comsa_acquire(const EnumeratedSpace& space, const std::vector<bool>& measured,
                                 const std::vector<std::function<double(std::span<const double>)>>& ensemble) {
  std::size_t best = space.size();
  double best_value = -1.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (measured[i]) continue;
    const double u = bootstrap_uncertainty(ensemble, space.features(i));
    if (u > best_value) {
      best = i;
      best_value = u;
    }
  }
  if (best == space.size()) throw Error(Errc::invalid_argument, "no unmeasured configuration left");
  return best;
}

namespace detail {

inline std::vector<bool> measured_mask(const EvaluationLedger& ledger, std::size_t n) {
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = ledger.measured(i);
  return m;
}

inline std::vector<double> measured_targets(const EvaluationLedger& ledger) {
  std::vector<double> y;
  for (auto i : ledger.order()) y.push_back(ledger.cost(i)[0]);
  return y;
}

}  // namespace detail

inline SamplerOutcome sample_flash(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                   const MeasurementOracle& oracle, const ObjectiveSpec& objective,
                                   const BaselineParams& params = {}) {
  detail::require_single(objective);
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objective);
  for (auto i : rng.sample_indices(space.size(), std::min(params.initial_design, k))) ledger.evaluate(i);
  SamplerOutcome out{"flash", seed, {}, {}};
  const models::TreeParams tp{params.tree_depth, params.tree_min_leaf};
  while (ledger.count() < k) {
    const auto X = detail::features_of(space, ledger.order());
    const auto y = detail::measured_targets(ledger);
    const auto tree = models::RegressionTree::fit(X, y, tp);
    const std::size_t pick = flash_acquire(space, detail::measured_mask(ledger, space.size()),
                                           [&](std::span<const double> x) { return tree.predict(x); });
    out.notes.push_back(Json{{"pick", pick}, {"predicted", tree.predict(space.features(pick))}});
    ledger.evaluate(pick);
  }
  out.sampled = ledger.configurations();
  return out;
}

inline SamplerOutcome sample_comsa(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                   const MeasurementOracle& oracle, const ObjectiveSpec& objective,
                                   const BaselineParams& params = {}) {
  detail::require_single(objective);
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objective);
  for (auto i : rng.sample_indices(space.size(), std::min(params.initial_design, k))) ledger.evaluate(i);
  SamplerOutcome out{"comsa", seed, {}, {}};
  const models::TreeParams tp{params.tree_depth, params.tree_min_leaf};
  while (ledger.count() < k) {
    const auto X = detail::features_of(space, ledger.order());
    const auto y = detail::measured_targets(ledger);
    std::vector<models::RegressionTree> trees;
    for (std::size_t b = 0; b < params.bootstrap; ++b) {
      std::vector<std::size_t> rows(y.size());
      for (auto& r : rows) r = rng.index(y.size());
      trees.push_back(models::RegressionTree::fit(X, y, tp, std::move(rows)));
    }
    std::vector<std::function<double(std::span<const double>)>> ensemble;
    for (const auto& t : trees) ensemble.emplace_back([&t](std::span<const double> x) { return t.predict(x); });
    const std::size_t pick = comsa_acquire(space, detail::measured_mask(ledger, space.size()), ensemble);
    out.notes.push_back(Json{{"pick", pick}, {"uncertainty", bootstrap_uncertainty(ensemble, space.features(pick))}});
    ledger.evaluate(pick);
  }
  out.sampled = ledger.configurations();
  return out;
}

inline double manhattan(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

/// Greedy max-min extension of `selected` by `count` picks; each pick
/// maximizes the Manhattan distance to its nearest selected configuration
/// (ties: lowest index). Returns the new picks and their min-distances.
inline std::vector<std::pair<std::size_t, double>> maxmin_extend(const EnumeratedSpace& space,
                                                                 std::vector<std::size_t> selected,
                                                                 std::size_t count) {
  const std::size_t n = space.size();
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  auto absorb = [&](std::size_t s) {
    taken[s] = true;
    const auto fs = space.features(s);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], manhattan(space.features(i), fs));
  };
  for (auto s : selected) absorb(s);
  std::vector<std::pair<std::size_t, double>> picks;
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && (best == n || nearest[i] > nearest[best])) best = i;
    }
    if (best == n) throw Error(Errc::budget_exceeds_space, "no configuration left to extend the selection");
    picks.emplace_back(best, nearest[best]);
    absorb(best);
  }
  return picks;
}

inline SamplerOutcome sample_nsbs(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed) {
  require_budget(k, space.size());
  Rng rng(seed);
  const std::size_t first = rng.index(space.size());
  SamplerOutcome out{"nsbs", seed, {}, {}};
  out.sampled.push_back(space.configuration(first));
  for (auto [idx, dist] : maxmin_extend(space, {first}, k - 1)) {
    out.sampled.push_back(space.configuration(idx));
    out.notes.push_back(Json{{"pick", idx}, {"min_distance", dist}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// NSGA-III

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

/// Das–Dennis structured reference directions on the unit simplex:
/// C(m + p - 1, p) points with coordinates in multiples of 1/p.
inline std::vector<mobo::Point> das_dennis(std::size_t m, std::size_t p) {
  if (m == 0) throw Error(Errc::invalid_argument, "das_dennis needs at least one objective");
  std::vector<mobo::Point> out;
  mobo::Point cur(m, 0.0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t left) {
    if (j + 1 == m) {
      cur[j] = p == 0 ? 1.0 : static_cast<double>(left) / static_cast<double>(p);
      out.push_back(cur);
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      cur[j] = p == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(p);
      rec(j + 1, left - v);
    }
  };
  rec(0, p);
  return out;
}

/// Largest division count whose reference set fits in the population.
inline std::size_t das_dennis_divisions(std::size_t m, std::size_t population) {
  std::size_t p = 1;
  while (binomial(m + p, p + 1) <= population) ++p;
  return p;
}

struct NichingSelection {
  std::vector<std::size_t> chosen;  // positions in the candidate list
  bool niching_used = false;
};

/// NSGA-III environmental selection of `n` out of `costs`: whole fronts while
/// they fit, then reference-direction niching on the last front.
inline NichingSelection nsga3_select(const std::vector<mobo::Point>& costs, std::size_t n,
                                     const std::vector<mobo::Point>& refs, Rng& rng) {
  NichingSelection sel;
  const auto fronts = mobo::non_dominated_sort(costs);
  std::size_t f = 0;
  for (; f < fronts.size() && sel.chosen.size() + fronts[f].size() <= n; ++f) {
    sel.chosen.insert(sel.chosen.end(), fronts[f].begin(), fronts[f].end());
  }
  if (sel.chosen.size() == n || f == fronts.size()) return sel;
  sel.niching_used = true;
  const auto& last = fronts[f];
  const std::size_t m = costs.front().size();

  // Normalize over the chosen fronts plus the last one: translate by the ideal
  // point and scale by the observed range.
  std::vector<std::size_t> pool = sel.chosen;
  pool.insert(pool.end(), last.begin(), last.end());
  mobo::Point ideal(m, std::numeric_limits<double>::infinity());
  mobo::Point nadir(m, -std::numeric_limits<double>::infinity());
  for (auto i : pool) {
    for (std::size_t j = 0; j < m; ++j) {
      ideal[j] = std::min(ideal[j], costs[i][j]);
      nadir[j] = std::max(nadir[j], costs[i][j]);
    }
  }
  std::vector<std::size_t> assoc(costs.size());
  std::vector<double> dist(costs.size());
  for (auto i : pool) {
    mobo::Point z(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double span = nadir[j] - ideal[j];
      z[j] = span > 0.0 ? (costs[i][j] - ideal[j]) / span : 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < refs.size(); ++r) {
      double wn = 0.0, dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        wn += refs[r][j] * refs[r][j];
        dot += refs[r][j] * z[j];
      }
      double d2 = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double e = z[j] - dot / wn * refs[r][j];
        d2 += e * e;
      }
      if (d2 < best) {
        best = d2;
        assoc[i] = r;
      }
    }
    dist[i] = std::sqrt(best);
  }
  std::vector<std::size_t> niche(refs.size(), 0);
  for (auto i : sel.chosen) ++niche[assoc[i]];
  std::vector<std::size_t> remaining(last.begin(), last.end());
  std::vector<bool> active(refs.size(), true);
  while (sel.chosen.size() < n) {
    std::size_t lowest = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (active[r]) lowest = std::min(lowest, niche[r]);
    }
    std::vector<std::size_t> candidates_refs;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (active[r] && niche[r] == lowest) candidates_refs.push_back(r);
    }
    const std::size_t r = candidates_refs[rng.index(candidates_refs.size())];
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (assoc[remaining[k]] == r) members.push_back(k);
    }
    if (members.empty()) {
      active[r] = false;
      continue;
    }
    std::size_t take = members[rng.index(members.size())];
    if (niche[r] == 0) {
      take = members.front();
      for (auto k : members) {
        if (dist[remaining[k]] < dist[remaining[take]]) take = k;
      }
    }
    sel.chosen.push_back(remaining[take]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(take));
    ++niche[r];
  }
  return sel;
}

inline SamplerOutcome sample_nsga3(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                   const MeasurementOracle& oracle, const ObjectiveSpec& objectives,
                                   const BaselineParams& params = {}) {
  objectives.validate();
  if (objectives.size() < 2) throw Error(Errc::invalid_argument, "NSGA-III needs at least two objectives");
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objectives);
  const double mutation = params.effective_mutation_rate(space.space().size());
  const auto refs = das_dennis(objectives.size(), das_dennis_divisions(objectives.size(), params.population));

  std::vector<std::size_t> population = rng.sample_indices(space.size(), std::min(params.population, k));
  for (auto i : population) ledger.evaluate(i);
  SamplerOutcome out{"nsga3", seed, {}, {}};

  auto costs_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<mobo::Point> c;
    for (auto i : idx) c.push_back(ledger.cost(i));
    return c;
  };

  for (std::size_t generation = 1; ledger.count() < k; ++generation) {
    const auto ranks = mobo::front_ranks(mobo::non_dominated_sort(costs_of(population)), population.size());
    std::vector<std::size_t> positions(population.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    auto better = [&](std::size_t x, std::size_t y) { return ranks[x] < ranks[y]; };
    const std::size_t before = ledger.count();
    std::vector<std::size_t> offspring;
    while (offspring.size() < params.population && ledger.count() < k) {
      const std::size_t a = population[tournament_select(positions, params.tournament, better, rng)];
      const std::size_t b = population[tournament_select(positions, params.tournament, better, rng)];
      const std::size_t child = make_offspring(space, a, b, params.crossover_rate, mutation, rng);
      ledger.evaluate(child);
      offspring.push_back(child);
    }
    if (ledger.count() == before && ledger.count() < k) {
      offspring.push_back(detail::random_unmeasured(ledger, space.size(), rng));
      ledger.evaluate(offspring.back());
    }
    std::vector<std::size_t> merged = population;
    merged.insert(merged.end(), offspring.begin(), offspring.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    const auto sel = nsga3_select(costs_of(merged), std::min(params.population, merged.size()), refs, rng);
    population.clear();
    for (auto p : sel.chosen) population.push_back(merged[p]);
    out.notes.push_back(Json{{"generation", generation}, {"evaluations", ledger.count()},
                             {"niching_used", sel.niching_used}});
  }
  // Front ranks of every evaluated configuration, in evaluation order.
  const auto final_ranks = mobo::front_ranks(mobo::non_dominated_sort(costs_of(ledger.order())), ledger.count());
  out.notes.push_back(Json{{"final_ranks", final_ranks}});
  out.sampled = ledger.configurations();
  return out;
}

}  // namespace perfsampler
