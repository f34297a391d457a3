#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "perfsampler/mobo/ehvi.hpp"
#include "perfsampler/mobo/gp.hpp"
#include "perfsampler/mobo/hypervolume.hpp"
#include "perfsampler/mobo/pareto.hpp"
#include "perfsampler/random.hpp"
#include "perfsampler/sampling/outcome.hpp"

namespace perfsampler::mobo {

struct BoParams {
  std::size_t initial_design = 5;
  bool auto_hyper = true;
  GpHyper hyper;  // used when auto_hyper is false
  std::size_t qmc_draws = QmcNormals::kDefaultDraws;
  std::size_t joint_draw_limit = 5000;
  std::size_t subsample = 2000;

  static BoParams from_json(const Json& j) {
    BoParams p;
    p.initial_design = j.value("initial_design", p.initial_design);
    p.qmc_draws = j.value("qmc_draws", p.qmc_draws);
    p.joint_draw_limit = j.value("joint_draw_limit", p.joint_draw_limit);
    p.subsample = j.value("subsample", p.subsample);
    if (p.qmc_draws == 0 || p.subsample == 0) throw Error(Errc::invalid_argument, "qmc_draws and subsample must be positive");
    if (j.contains("hyper")) {
      const auto& h = j.at("hyper");
      if (h.is_string()) {
        if (h.get<std::string>() != "auto") throw Error(Errc::invalid_argument, "hyper must be \"auto\" or an object");
      } else {
        p.auto_hyper = false;
        p.hyper.lengthscale = h.value("lengthscale", p.hyper.lengthscale);
        p.hyper.signal_variance = h.value("signal_variance", p.hyper.signal_variance);
        p.hyper.noise_variance = h.value("noise_variance", p.hyper.noise_variance);
      }
    }
    return p;
  }
};

/// Reference point 10% beyond the worst measured cost in each objective. The
/// offset uses |worst| (so negated maximization metrics still end up above
/// the data), falling back to the spread or 1 when the worst value is zero.
inline Point reference_point(const std::vector<Point>& costs) {
  const std::size_t m = costs.front().size();
  Point ref(m);
  for (std::size_t j = 0; j < m; ++j) {
    double hi = costs.front()[j];
    double lo = hi;
    for (const auto& c : costs) {
      hi = std::max(hi, c[j]);
      lo = std::min(lo, c[j]);
    }
    double offset = 0.1 * std::abs(hi);
    if (!(hi + offset > hi)) offset = 0.1 * (hi - lo);
    if (!(hi + offset > hi)) offset = 1.0;
    ref[j] = hi + offset;
  }
  return ref;
}

namespace detail {

inline Matrix feature_rows(const EnumeratedSpace& space, const std::vector<std::size_t>& rows) {
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto f = space.features(rows[r]);
    for (std::size_t c = 0; c < f.size(); ++c) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[c];
  }
  return X;
}

inline std::vector<GpModel> fit_models(const Matrix& X, const std::vector<Point>& costs, const BoParams& params) {
  std::vector<GpModel> models;
  const std::size_t m = costs.front().size();
  std::vector<double> y(costs.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < costs.size(); ++i) y[i] = costs[i][j];
    models.push_back(params.auto_hyper ? gp_fit_auto(X, y) : gp_fit(X, y, params.hyper));
  }
  return models;
}

inline void check_objectives(const ObjectiveSpec& objectives) {
  objectives.validate();
  if (objectives.size() < 2 || objectives.size() > 4) {
    throw Error(Errc::invalid_argument, "multi-objective samplers need 2 to 4 objectives");
  }
}

inline void initial_design(EvaluationLedger& ledger, std::size_t n, std::size_t k, const BoParams& params, Rng& rng) {
  for (auto i : rng.sample_indices(n, std::min(k, std::max<std::size_t>(params.initial_design, 1)))) {
    ledger.evaluate(i);
  }
}

inline std::vector<Point> measured_costs(const EvaluationLedger& ledger) {
  std::vector<Point> costs;
  for (auto i : ledger.order()) costs.push_back(ledger.cost(i));
  return costs;
}

}  // namespace detail

inline SamplerOutcome sample_ehvi(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                  const MeasurementOracle& oracle, const ObjectiveSpec& objectives,
                                  const BoParams& params = {}) {
  detail::check_objectives(objectives);
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objectives);
  detail::initial_design(ledger, space.size(), k, params, rng);
  const QmcNormals qmc(objectives.size(), mix_seed(seed, 17), params.qmc_draws);

  std::vector<std::size_t> all(space.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Matrix candidates = detail::feature_rows(space, all);

  SamplerOutcome out{"ehvi", seed, {}, {}};
  while (ledger.count() < k) {
    const auto costs = detail::measured_costs(ledger);
    const auto models = detail::fit_models(detail::feature_rows(space, ledger.order()), costs, params);
    const auto front = ParetoFront::from_costs(costs, reference_point(costs));

    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < space.size(); ++i) {
      if (!ledger.measured(i)) open.push_back(i);
    }
    // Large spaces: score a fresh seeded subsample each iteration.
    if (open.size() > params.subsample) {
      std::vector<std::size_t> sub;
      for (auto pos : rng.sample_indices(open.size(), params.subsample)) sub.push_back(open[pos]);
      std::sort(sub.begin(), sub.end());
      open = std::move(sub);
    }
    std::vector<std::vector<double>> means(models.size()), sds(models.size());
    for (std::size_t j = 0; j < models.size(); ++j) {
      auto [mu, var] = models[j].predict(candidates);
      for (auto i : open) {
        means[j].push_back(mu[i]);
        sds[j].push_back(std::sqrt(var[i]));
      }
    }
    const auto choice = ehvi_argmax(means, sds, front, qmc);
    const std::size_t pick = open[choice.index];
    ledger.evaluate(pick);
    out.notes.push_back(Json{{"iteration", out.notes.size() + 1}, {"pick", pick}, {"ehvi", choice.value},
                             {"front_size", front.points().size()}});
  }
  out.sampled = ledger.configurations();
  return out;
}

/// Uniform choice among the first front of `values` (costs); ties within the
/// front are resolved by the draw, not by index.
inline std::size_t tsemo_pick(const std::vector<Point>& values, Rng& rng) {
  const auto fronts = non_dominated_sort(values);
  const auto& first = fronts.front();
  return first[rng.index(first.size())];
}

inline SamplerOutcome sample_tsemo(const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                                   const MeasurementOracle& oracle, const ObjectiveSpec& objectives,
                                   const BoParams& params = {}) {
  detail::check_objectives(objectives);
  require_budget(k, space.size());
  Rng rng(seed);
  EvaluationLedger ledger(space, oracle, objectives);
  detail::initial_design(ledger, space.size(), k, params, rng);

  // Candidate pool for the joint draws. Above the size limit it is fixed once:
  // the initial design plus a seeded uniform subsample. Picks come from the
  // pool, so every measured point stays inside it.
  std::vector<std::size_t> pool;
  if (space.size() <= params.joint_draw_limit) {
    pool.resize(space.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  } else {
    Rng sub(mix_seed(seed, 29));
    pool = sub.sample_indices(space.size(), params.subsample);
    pool.insert(pool.end(), ledger.order().begin(), ledger.order().end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }
  const Matrix P = detail::feature_rows(space, pool);
  std::map<std::size_t, std::size_t> pool_pos;
  for (std::size_t p = 0; p < pool.size(); ++p) pool_pos[pool[p]] = p;

  // Unit-variance prior Cholesky factors over the pool, one per lengthscale.
  std::map<double, Eigen::MatrixXd> prior_factor;
  auto factor_for = [&](double lengthscale) -> const Eigen::MatrixXd& {
    auto it = prior_factor.find(lengthscale);
    if (it != prior_factor.end()) return it->second;
    auto f = mobo::detail::factorize(se_kernel(P, P, lengthscale, 1.0), 0.0);
    if (!f) throw Error(Errc::factorization_failed, "prior covariance over the candidate pool is not factorizable");
    return prior_factor.emplace(lengthscale, Eigen::MatrixXd(f->first.matrixL())).first->second;
  };

  SamplerOutcome out{"tsemo", seed, {}, {}};
  Rng draw_rng(mix_seed(seed, 31));
  while (ledger.count() < k) {
    const auto costs = detail::measured_costs(ledger);
    const auto models = detail::fit_models(detail::feature_rows(space, ledger.order()), costs, params);
    std::vector<std::size_t> measured_pos;
    for (auto i : ledger.order()) measured_pos.push_back(pool_pos.at(i));

    std::vector<std::size_t> open;  // positions in the pool
    for (std::size_t p = 0; p < pool.size(); ++p) {
      if (!ledger.measured(pool[p])) open.push_back(p);
    }
    std::vector<Point> sampled(open.size(), Point(models.size()));
    for (std::size_t j = 0; j < models.size(); ++j) {
      const auto& gp = models[j];
      const auto& L = factor_for(gp.hyper().lengthscale);
      Eigen::VectorXd z(static_cast<Eigen::Index>(pool.size()));
      for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = draw_rng.normal();
      // Matheron's rule: prior draw plus a data-driven correction gives an
      // exact joint posterior draw over the pool.
      Eigen::VectorXd prior = L.triangularView<Eigen::Lower>() * z;
      prior *= std::sqrt(gp.hyper().signal_variance);
      Eigen::VectorXd resid(static_cast<Eigen::Index>(measured_pos.size()));
      const double noise_sd = std::sqrt(gp.hyper().noise_variance + gp.jitter());
      for (std::size_t i = 0; i < measured_pos.size(); ++i) {
        resid[static_cast<Eigen::Index>(i)] = gp.standardized_targets()[static_cast<Eigen::Index>(i)] -
                                              prior[static_cast<Eigen::Index>(measured_pos[i])] -
                                              noise_sd * draw_rng.normal();
      }
      const Eigen::VectorXd w = gp.solve(resid);
      Matrix Q(static_cast<Eigen::Index>(open.size()), P.cols());
      for (std::size_t r = 0; r < open.size(); ++r) Q.row(static_cast<Eigen::Index>(r)) = P.row(static_cast<Eigen::Index>(open[r]));
      const Eigen::VectorXd correction = gp.cross_kernel(Q) * w;
      for (std::size_t r = 0; r < open.size(); ++r) {
        const double f = prior[static_cast<Eigen::Index>(open[r])] + correction[static_cast<Eigen::Index>(r)];
        sampled[r][j] = f * gp.target_scale() + gp.target_mean();
      }
    }
    const std::size_t chosen = tsemo_pick(sampled, rng);
    const std::size_t pick = pool[open[chosen]];
    ledger.evaluate(pick);
    out.notes.push_back(Json{{"iteration", out.notes.size() + 1}, {"pick", pick}, {"pool", pool.size()}});
  }
  out.sampled = ledger.configurations();
  return out;
}

}  // namespace perfsampler::mobo
