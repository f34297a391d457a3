// Acceptance checks. Prints one PASS/FAIL line per criterion; with arguments,
// runs only the listed criteria. Exit status is non-zero if any check fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "perfsampler/perfsampler.hpp"

#ifndef PERFSAMPLER_DATA_DIR
#define PERFSAMPLER_DATA_DIR "data"
#endif
#ifndef PERF_SAMPLER_BIN
#define PERF_SAMPLER_BIN "perf_sampler"
#endif

namespace fs = std::filesystem;
using namespace perfsampler;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void expect(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("perfsampler-acceptance-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// 1. statistics

double brute_cliffs(const std::vector<double>& a, const std::vector<double>& b) {
  long long s = 0;
  for (double x : a) {
    for (double y : b) s += (x > y) - (x < y);
  }
  return static_cast<double>(s) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Enumerates all 2^n sign patterns of the midranked |differences|.
double brute_wilcoxon(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<long> r2(n);  // doubled midranks
  for (std::size_t i = 0; i < n; ++i) {
    long less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      else if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    r2[i] = 2 * less + equal + 1;
  }
  long w = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w += r2[i];
  }
  long lo = 0, hi = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    long s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s += r2[i];
    }
    lo += s <= w;
    hi += s >= w;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lo, hi)) / std::ldexp(1.0, static_cast<int>(n)));
}

Check criterion1() {
  Check c;
  const auto t0 = Clock::now();
  Rng rng(101);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(1 + rng.index(30)), b(1 + rng.index(30));
    for (auto& x : a) x = static_cast<double>(rng.index(10));
    for (auto& x : b) x = static_cast<double>(rng.index(10));
    if (stats::cliffs_delta(a, b) != brute_cliffs(a, b)) c.fail("cliffs_delta differs from pair enumeration");
  }
  c.expect(stats::cliffs_delta(std::vector<double>{1, 3}, std::vector<double>{2, 4}) == -0.5, "cliffs([1,3],[2,4]) != -0.5");
  int cases = 0;
  for (std::size_t n = 1; n <= 10; ++n) {
    for (int t = 0; t < 40; ++t, ++cases) {
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = static_cast<double>(rng.index(7));
        b[i] = static_cast<double>(rng.index(7));
      }
      const double p = stats::wilcoxon_signed_rank(a, b);
      const double q = brute_wilcoxon(a, b);
      if (std::abs(p - q) > 1e-9) c.fail("wilcoxon p " + std::to_string(p) + " vs enumeration " + std::to_string(q));
    }
  }
  const double p3 = stats::wilcoxon_signed_rank(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0});
  c.expect(std::abs(p3 - 0.25) < 1e-12, "wilcoxon diffs [1,2,3] gave " + std::to_string(p3));
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  if (c.ok) c.detail = "200 cliffs + " + std::to_string(cases) + " wilcoxon instances, " + fixed(secs, 2) + " s";
  return c;
}

// ---------------------------------------------------------------------------
// 2. hypervolume

std::vector<mobo::Point> brute_front(const std::vector<mobo::Point>& pts) {
  std::vector<mobo::Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      bool le = true, lt = false;
      for (std::size_t k = 0; k < pts[i].size(); ++k) {
        le = le && pts[j][k] <= pts[i][k];
        lt = lt || pts[j][k] < pts[i][k];
      }
      dominated = le && lt;
    }
    if (!dominated && std::find(out.begin(), out.end(), pts[i]) == out.end()) out.push_back(pts[i]);
  }
  return out;
}

Check criterion2() {
  Check c;
  const auto t0 = Clock::now();
  const double hv = mobo::hypervolume({{1, 3}, {3, 1}}, std::vector<double>{4, 4});
  c.expect(hv == 5.0, "HV({(1,3),(3,1)}, (4,4)) = " + format_double(hv));
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + t % 2;
    std::vector<mobo::Point> cloud(20);
    for (auto& p : cloud) {
      p.resize(m);
      for (auto& v : p) v = rng.uniform();
    }
    auto front = brute_front(cloud);
    if (front.size() > 8) front.resize(8);
    const std::vector<double> ref(m, 1.1);
    const double exact = mobo::hypervolume(front, ref);
    const long samples = 1'000'000;
    long hits = 0;
    std::vector<double> y(m);
    for (long s = 0; s < samples; ++s) {
      for (auto& v : y) v = 1.1 * rng.uniform();
      for (const auto& p : front) {
        bool dom = true;
        for (std::size_t k = 0; k < m && dom; ++k) dom = p[k] <= y[k];
        if (dom) {
          ++hits;
          break;
        }
      }
    }
    const double mc = std::pow(1.1, static_cast<double>(m)) * static_cast<double>(hits) / samples;
    const double rel = std::abs(mc - exact) / exact;
    worst = std::max(worst, rel);
    if (rel > 0.01) c.fail("front " + std::to_string(t) + ": exact " + format_double(exact) + " vs MC " + format_double(mc));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + std::to_string(secs) + " s");
  if (c.ok) c.detail = "20 fronts, worst MC deviation " + fixed(100 * worst, 3) + "%, " + fixed(secs, 1) + " s";
  return c;
}

// ---------------------------------------------------------------------------
// 3. dominance sorting

std::vector<std::vector<std::size_t>> brute_sort(const std::vector<mobo::Point>& pts) {
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<bool> done(pts.size(), false);
  std::size_t left = pts.size();
  while (left > 0) {
    std::vector<std::size_t> f;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (done[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
        if (done[j] || j == i) continue;
        bool le = true, lt = false;
        for (std::size_t k = 0; k < pts[i].size(); ++k) {
          le = le && pts[j][k] <= pts[i][k];
          lt = lt || pts[j][k] < pts[i][k];
        }
        dominated = le && lt;
      }
      if (!dominated) f.push_back(i);
    }
    for (auto i : f) done[i] = true;
    left -= f.size();
    fronts.push_back(f);
  }
  return fronts;
}

Check criterion3() {
  Check c;
  Rng rng(303);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(50);
    const std::size_t m = 2 + rng.index(3);
    std::vector<mobo::Point> pts(n, mobo::Point(m));
    for (auto& p : pts) {
      for (auto& v : p) v = t % 2 ? rng.uniform() : static_cast<double>(rng.index(5));
    }
    auto got = mobo::non_dominated_sort(pts);
    for (auto& f : got) std::sort(f.begin(), f.end());
    if (got != brute_sort(pts)) c.fail("instance " + std::to_string(t) + " (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ") differs");
  }
  if (c.ok) c.detail = "100 instances, n <= 50, m in 2..4, with ties";
  return c;
}

// ---------------------------------------------------------------------------
// 4. Gaussian process

Check criterion4() {
  Check c;
  Rng rng(404);
  double worst_interp = 0.0;
  for (int t = 0; t < 5; ++t) {
    mobo::Matrix X(12, 3);
    std::vector<double> y(12);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform();
      y[i] = std::sin(3 * X(i, 0)) + X(i, 1) * X(i, 2) + 0.5 * rng.normal();
    }
    const auto gp = mobo::gp_fit(X, y, {0.4, 1.0, 0.0});
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const std::vector<double> x(X.row(i).data(), X.row(i).data() + X.cols());
      worst_interp = std::max(worst_interp, std::abs(gp.predict(x).mean - y[i]));
    }
  }
  c.expect(worst_interp < 1e-6, "interpolation error " + format_double(worst_interp));

  // One training point: mean is the target everywhere, variance is
  // s2 - k(x,x0)^2 / (s2 + noise).
  const mobo::GpHyper h{0.7, 2.0, 0.1};
  mobo::Matrix X1(1, 2);
  X1 << 0.3, -0.2;
  const std::vector<double> y1{1.7};
  const auto gp1 = mobo::gp_fit(X1, y1, h);
  double worst_closed = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> x{rng.uniform() * 2 - 1, rng.uniform() * 2 - 1};
    const double d2 = std::pow(x[0] - 0.3, 2) + std::pow(x[1] + 0.2, 2);
    const double k = h.signal_variance * std::exp(-0.5 * d2 / (h.lengthscale * h.lengthscale));
    const double var = h.signal_variance - k * k / (h.signal_variance + h.noise_variance);
    const auto p = gp1.predict(x);
    worst_closed = std::max({worst_closed, std::abs(p.mean - 1.7), std::abs(p.variance - var)});
  }
  c.expect(worst_closed < 1e-10, "one-point closed form off by " + format_double(worst_closed));

  mobo::Matrix X(15, 3);
  std::vector<double> y(15);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform();
    y[i] = X(i, 0) - 2 * X(i, 1) * X(i, 1) + std::cos(4 * X(i, 2));
  }
  const auto gp = mobo::gp_fit(X, y, {0.5, 1.5, 1e-3});
  double worst_grad = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform()};
    const auto g = gp.mean_gradient(x);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double step = 1e-5;
      auto xp = x, xm = x;
      xp[j] += step;
      xm[j] -= step;
      const double fd = (gp.predict(xp).mean - gp.predict(xm).mean) / (2 * step);
      num += (fd - g[j]) * (fd - g[j]);
      den += g[j] * g[j];
    }
    worst_grad = std::max(worst_grad, std::sqrt(num / std::max(den, 1e-300)));
  }
  c.expect(worst_grad < 1e-4, "mean-gradient relative error " + format_double(worst_grad));
  if (c.ok) {
    c.detail = "interp " + format_double(worst_interp) + ", closed form " + format_double(worst_closed) +
               ", gradient rel " + format_double(worst_grad);
  }
  return c;
}

// ---------------------------------------------------------------------------
// 5. EHVI

Check criterion5() {
  Check c;
  const mobo::QmcNormals qmc(2, 7);
  const mobo::ParetoFront origin({{0.0, 0.0}}, {1.0, 1.0});
  const double limit = mobo::ehvi(std::vector<double>{-1, -1}, std::vector<double>{1e-9, 1e-9}, origin, qmc);
  c.expect(std::abs(limit - 3.0) < 1e-3, "deterministic limit gave " + format_double(limit));

  // Relative error is only meaningful when the improvement is not a far-tail
  // event (the MC estimate itself is noisy there), so cases with EHVI below
  // 1e-3 are drawn but checked on absolute error only.
  Rng rng(505);
  double worst = 0.0, worst_abs = 0.0;
  int compared = 0, tail = 0;
  while (compared < 20) {
    std::vector<mobo::Point> cloud(6);
    for (auto& p : cloud) p = {rng.uniform(), rng.uniform()};
    const mobo::ParetoFront front(brute_front(cloud), {1.2, 1.2});
    const std::vector<double> mean{rng.uniform(), rng.uniform()};
    const std::vector<double> sd{0.1 + 0.3 * rng.uniform(), 0.1 + 0.3 * rng.uniform()};
    const double q = mobo::ehvi(mean, sd, front, qmc);
    double total = 0.0;
    const int samples = 1'000'000;
    std::vector<double> y(2);
    for (int s = 0; s < samples; ++s) {
      y[0] = mean[0] + sd[0] * rng.normal();
      y[1] = mean[1] + sd[1] * rng.normal();
      total += front.improvement(y);
    }
    const double mc = total / samples;
    worst_abs = std::max(worst_abs, std::abs(q - mc));
    if (std::abs(q - mc) > 1e-3) c.fail("QMC " + format_double(q) + " vs MC " + format_double(mc));
    if (mc < 1e-3) {
      ++tail;
      continue;
    }
    const double rel = std::abs(q - mc) / mc;
    worst = std::max(worst, rel);
    if (rel > 0.05) c.fail("case " + std::to_string(compared) + ": QMC " + format_double(q) + " vs MC " + format_double(mc));
    ++compared;
  }
  for (int t = 0; t < 2000; ++t) {
    std::vector<mobo::Point> cloud(1 + rng.index(6));
    for (auto& p : cloud) p = {rng.uniform(), rng.uniform()};
    const mobo::ParetoFront front(brute_front(cloud), {1.0 + rng.uniform(), 1.0 + rng.uniform()});
    const std::vector<double> mean{4 * rng.uniform() - 1.5, 4 * rng.uniform() - 1.5};
    const std::vector<double> sd{rng.uniform() * 2, rng.uniform() * 0.01};
    const double v = mobo::ehvi(mean, sd, front, qmc);
    if (!(v >= 0.0)) c.fail("negative EHVI " + format_double(v));
  }
  if (c.ok) c.detail = "limit " + fixed(limit, 6) + ", worst QMC/MC deviation " + fixed(100 * worst, 2) + "% on 20 cases (+" + std::to_string(tail) +
                       " tail cases; all within " + format_double(worst_abs) + " absolute), 2000 sign checks";
  return c;
}

// ---------------------------------------------------------------------------
// 6. sampler contract

Check criterion6() {
  Check c;
  const auto t0 = Clock::now();
  const fs::path dir = scratch_dir("c6");
  std::vector<std::future<std::string>> jobs;
  std::size_t runs = 0;
  for (const auto& fixture : benchmark_fixtures()) {
    auto data = std::make_shared<DatasetEntry>(detail::synthetic_entry(fixture.spec, Json::object()));
    if (data->full->size() != fixture.full_size) {
      c.fail(fixture.name() + " has " + std::to_string(data->full->size()) + " configurations");
      continue;
    }
    const fs::path mock = dir / (fixture.name() + ".json");
    write_text_file(mock.string(), synth_mock_script(fixture.spec, 10, 3, 7, 5).dump(2));
    for (const auto& kind : sampler_kinds()) {
      SamplerSpec spec = SamplerSpec::from_json(kind == "llm4perf"
                                                    ? Json{{"name", kind}, {"params", {{"mock", mock.string()}, {"batch", 7}, {"generators", 3}}}}
                                                    : Json(kind));
      runs += 7;
      jobs.push_back(std::async(std::launch::async, [data, spec] {
        const auto prepared = prepare_sampler(spec);
        const DatasetOracle oracle(data->full);
        const auto& full = *data->full;
        const ObjectiveSpec objectives = is_multi_objective(spec.kind) ? full.metrics : full.metrics.only(0);
        for (std::size_t k = 10; k <= 70; k += 10) {
          for (std::uint64_t seed : {3u}) {
            const auto a = run_sampler(prepared, *full.space, *data, k, seed, oracle, objectives);
            const std::string where = data->name + "/" + spec.kind + "/k=" + std::to_string(k);
            // Determinism is checked at the smallest and largest budget only (EHVI is slow).
            if (k == 10 || k == 70) {
              const auto b = run_sampler(prepared, *full.space, *data, k, seed, oracle, objectives);
              if (a.to_json().dump() != b.to_json().dump()) return where + ": not seed-deterministic";
            }
            if (a.sampled.size() != k) return where + ": " + std::to_string(a.sampled.size()) + " configurations";
            std::set<std::size_t> rows;
            for (const auto& cfg : a.sampled) {
              if (!validate_configuration(full.space->space(), cfg).valid()) return where + ": invalid " + describe(cfg);
              rows.insert(*full.row_of(cfg));
            }
            if (rows.size() != k) return where + ": duplicates";
          }
        }
        return std::string();
      }));
    }
  }
  for (auto& j : jobs) {
    const auto err = j.get();
    if (!err.empty()) c.fail(err);
  }
  fs::remove_all(dir);
  if (c.ok) {
    c.detail = std::to_string(sampler_kinds().size()) + " samplers x 4 spaces x k=10..70 (" + std::to_string(runs) +
               " runs; k=10 and k=70 repeated for determinism), " + fixed(seconds_since(t0), 1) + " s";
  }
  return c;
}

// ---------------------------------------------------------------------------
// 7. models

Check criterion7() {
  Check c;
  Rng rng(707);
  models::FeatureMatrix X(200, 5);
  std::vector<double> y(200);
  const double w[] = {3.0, -2.0, 1.5, 0.5, -1.0};
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y[i] = 1.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      X(i, j) = rng.uniform();
      y[i] += w[j] * X(i, j);
    }
  }
  const auto gbt = models::train_gbt(X, y, {});
  const double train = models::rmse(gbt.predict(X), y);
  double mu = 0.0, sd = 0.0;
  for (double v : y) mu += v / 200;
  for (double v : y) sd += (v - mu) * (v - mu) / 200;
  sd = std::sqrt(sd);
  c.expect(train < 0.05 * sd, "GBT train RMSE " + format_double(train) + " vs 0.05*std " + format_double(0.05 * sd));

  for (int t = 0; t < 5; ++t) {
    std::vector<double> noisy(y);
    for (auto& v : noisy) v += rng.normal() * (t + 1);
    models::GbtParams p;
    p.max_depth = 1 + t;
    p.min_leaf = 1 + static_cast<std::size_t>(t);
    const auto m = models::train_gbt(X, noisy, p);
    const auto& r = m.training_rmse();
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i] > r[i - 1]) c.fail("GBT round RMSE increased at round " + std::to_string(i));
    }
  }

  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    auto net = models::Network::init({4, 8, 6, 1}, 90 + t);
    Eigen::MatrixXd in(4, 25);
    Eigen::RowVectorXd target(25);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    const double lambda = t == 0 ? 0.0 : 0.01 * t;
    models::Network grad;
    models::loss_and_gradient(net, in, target, lambda, &grad);
    double num = 0.0, den = 0.0;
    auto probe = [&](double& param, double analytic) {
      const double saved = param, step = 1e-6;
      param = saved + step;
      const double up = models::loss_and_gradient(net, in, target, lambda, nullptr);
      param = saved - step;
      const double down = models::loss_and_gradient(net, in, target, lambda, nullptr);
      param = saved;
      const double fd = (up - down) / (2 * step);
      num += (fd - analytic) * (fd - analytic);
      den += analytic * analytic;
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) probe(net.weights[l].data()[i], grad.weights[l].data()[i]);
      for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) probe(net.biases[l][i], grad.biases[l][i]);
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  c.expect(worst < 1e-4, "FNN gradient relative error " + format_double(worst));
  if (c.ok) {
    c.detail = "GBT train RMSE " + fixed(train / sd, 4) + "*std, round RMSE monotone, FNN grad rel " + format_double(worst);
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. pipeline replay

Check criterion8() {
  Check c;
  const auto t0 = Clock::now();
  const fs::path data_dir = PERFSAMPLER_DATA_DIR "/lrzip";
  const auto data = dataset_from_json(
      Json{{"name", "LRZIP"}, {"csv", "measurements.csv"}, {"space", "space.json"}, {"docs", "docs.json"}}, data_dir);
  const DatasetOracle oracle(data.full);
  const llm::SamplingBudget budget{20, 7, 3};
  const fs::path dir = scratch_dir("c8");

  const llm::MockBackend scripted(llm::MockScript::load((data_dir / "mock_running_example.json").string()));
  llm::TranscriptSink sink((dir / "transcript.jsonl").string());
  llm::LlmSession session(scripted, {}, &sink);
  const auto first =
      llm::run_sampling_loop(data.full->space->space(), data.docs, budget, oracle, data.full->metrics, session, 1);

  const auto sizes = first.batch_sizes();
  c.expect(sizes == std::vector<std::size_t>{7, 7, 6}, "iterations " + Json(sizes).dump());
  const auto& dropped = first.filter.pruned.dropped();
  const bool pinned = std::any_of(dropped.begin(), dropped.end(), [](const auto& d) { return d.first == "-N"; });
  c.expect(!first.filter.pruned.find("-N") && pinned, "-N was not pruned");
  c.expect(first.calls.analyzer == 2, "analyzer called " + std::to_string(first.calls.analyzer) + " times");

  const llm::MockBackend replay(llm::transcript_to_mock(llm::read_transcript((dir / "transcript.jsonl").string())));
  llm::LlmSession replay_session(replay);
  const auto second = llm::run_sampling_loop(data.full->space->space(), data.docs, budget, oracle, data.full->metrics,
                                             replay_session, 1);
  c.expect(first.to_json().dump() == second.to_json().dump(), "replayed outcome differs");
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + std::to_string(secs) + " s");
  if (c.ok) {
    c.detail = "iterations [7,7,6], -N pruned, analyzer x2, replay identical (" +
               std::to_string(first.to_json().dump().size()) + " bytes), " + fixed(secs, 2) + " s";
  }
  return c;
}

// ---------------------------------------------------------------------------
// 9. pruned vs full random sampling

Check criterion9() {
  Check c;
  const auto t0 = Clock::now();
  ExperimentSpec spec;
  spec.datasets.push_back(dataset_from_json(Json::parse(R"({"synth": {
      "system": "half-insensitive", "seed": 9, "noise": 0.02, "sensitive_fraction": 0.5, "n_interactions": 2,
      "generate": {"count": 8, "min_levels": 2, "max_levels": 5}}})")));
  spec.samplers.push_back(SamplerSpec::from_json("random"));
  spec.budgets = {20};
  spec.repetitions = 20;
  spec.seed = 900;
  spec.models = {"gbt"};
  spec.space_modes = {SpaceMode::full, SpaceMode::pruned};
  const auto& d = spec.datasets.front();
  const std::size_t insensitive = d.full->space->space().size() - d.pruned_space->size();
  c.expect(2 * insensitive == d.full->space->space().size(), "landscape is not half insensitive");
  const auto report = run_protocol(spec);
  const std::string metric = d.full->metrics.metrics.front();
  const Cell* full = report.find({d.name, SpaceMode::full, metric, "gbt", 20, "random"});
  const Cell* pruned = report.find({d.name, SpaceMode::pruned, metric, "gbt", 20, "random"});
  int wins = 0;
  if (!full || !pruned || full->status != CellStatus::ok || pruned->status != CellStatus::ok) {
    c.fail("protocol cells missing or failed");
  } else {
    for (std::size_t r = 0; r < 20; ++r) wins += *pruned->reps[r].rmse < *full->reps[r].rmse;
    c.expect(wins >= 16, "pruned won " + std::to_string(wins) + "/20");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 300.0, "took " + std::to_string(secs) + " s");
  if (c.ok) {
    c.detail = "pruned beat full in " + std::to_string(wins) + "/20 paired trials (mean RMSE " + fixed(pruned->mean, 4) +
               " vs " + fixed(full->mean, 4) + "), " + fixed(secs, 1) + " s";
  }
  return c;
}

// ---------------------------------------------------------------------------
// 10. report rendering

Check criterion10() {
  Check c;
  EvalReport report;
  report.reference = "nsga3";
  report.candidate = "llm4perf";
  report.sampler_order = {"nsga3", "llm4perf"};
  const CellKey base{"LRZIP", SpaceMode::full, "compression_time", "gbt", 10, ""};
  // Spread around the target means; every candidate rep beats its paired
  // reference rep, so the Wilcoxon p and Cliff's delta are extreme.
  const double spread[] = {-0.4, -0.3, -0.2, -0.1, 0.0, 0.0, 0.1, 0.2, 0.3, 0.4};
  for (const auto& [sampler, centre] : {std::pair<std::string, double>{"nsga3", 5.672}, {"llm4perf", 2.309}}) {
    Cell cell;
    cell.key = base;
    cell.key.sampler = sampler;
    for (std::size_t r = 0; r < 10; ++r) {
      Repetition rep;
      rep.index = r;
      rep.rmse = centre + spread[r];
      cell.reps.push_back(rep);
    }
    report.cells.push_back(cell);
  }
  annotate_report(report);
  const Cell& cand = report.cells[1];
  const std::string text = render_cell(cand, report);
  c.expect(text.rfind("2.309(↑59.3%)", 0) == 0, "rendered \"" + text + "\"");
  c.expect(cand.p_value && cand.delta, "no p-value / delta");
  if (cand.p_value && cand.delta) {
    const std::string markers = significance_markers(cand.p_value, cand.delta, report.large_effect);
    c.expect(text == "2.309(↑59.3%)" + markers, "markers do not follow p/delta: " + text);
    c.expect(markers == "*L", "expected *L for p=" + format_double(*cand.p_value) + ", delta=" + format_double(*cand.delta));
  }
  // Supplied p / delta values map onto markers directly.
  const double impr = improvement_percent(5.672, 2.309);
  c.expect(format_cell(2.309, impr, 0.01, -0.6) == "2.309(↑59.3%)*L", "p=0.01, delta=-0.6");
  c.expect(format_cell(2.309, impr, 0.2, 0.4) == "2.309(↑59.3%)M", "p=0.2, delta=0.4");
  c.expect(format_cell(2.309, impr, 0.04, 0.1) == "2.309(↑59.3%)*", "p=0.04, delta=0.1");
  c.expect(format_cell(2.309, impr, 0.5, 0.0) == "2.309(↑59.3%)", "p=0.5, delta=0");
  // The raw per-repetition dump reproduces the same cell.
  const auto again = report_from_jsonl(report_jsonl(report), "nsga3", "llm4perf");
  const Cell* back = again.find(cand.key);
  c.expect(back && render_cell(*back, again) == text, "JSONL round trip changed the cell");
  if (c.ok) c.detail = "\"" + text + "\"";
  return c;
}

// ---------------------------------------------------------------------------
// 11. end-to-end evaluate through the CLI

Check criterion11() {
  Check c;
  const auto t0 = Clock::now();
  const fs::path dir = scratch_dir("c11");
  const auto fixture = lrzip_fixture();
  write_text_file((dir / "mock.json").string(), synth_mock_script(fixture.spec, 10, 3, 7, 1).dump(2));
  const Json spec{{"datasets", Json::array({Json{{"fixture", "lrzip"}}})},
                  {"samplers", Json::array({"random", "nsbs",
                                            Json{{"name", "llm4perf"},
                                                 {"params", {{"mock", "mock.json"}, {"batch", 7}, {"generators", 3}}}}})},
                  {"budgets", {10, 20, 30}},
                  {"repetitions", 5},
                  {"models", {"gbt", "fnn"}},
                  {"reference", "random"},
                  {"seed", 1}};
  write_text_file((dir / "spec.json").string(), spec.dump(2));
  const std::string cmd = std::string("\"") + PERF_SAMPLER_BIN + "\" evaluate --spec \"" + (dir / "spec.json").string() +
                          "\" --out \"" + (dir / "out").string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  c.expect(status == 0, "evaluate exited with status " + std::to_string(status));
  fs::path csv;
  if (fs::exists(dir / "out")) {
    for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
      if (e.path().filename() == "report.csv") csv = e.path();
    }
  }
  std::size_t rows = 0, failed = 0;
  if (csv.empty()) {
    c.fail("no report.csv written");
  } else {
    std::istringstream in(read_text_file(csv.string()));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      const auto f = detail::split_csv_line(line);
      if (f.size() != 15 || f[6] != "ok" || f[7].empty()) ++failed;
    }
    // 2 metrics x 2 models x 3 budgets x 3 samplers
    c.expect(rows == 36, std::to_string(rows) + " rows in report.csv");
    c.expect(failed == 0, std::to_string(failed) + " incomplete or failed cells");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 600.0, "took " + std::to_string(secs) + " s");
  if (c.ok) c.detail = std::to_string(rows) + " cells, none failed, " + fixed(secs, 1) + " s";
  if (c.ok) fs::remove_all(dir);
  else c.detail += " (log in " + (dir / "log.txt").string() + ")";
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"statistics oracles", criterion1},   {"hypervolume", criterion2},
      {"dominance sorting", criterion3},    {"gaussian process", criterion4},
      {"expected hypervolume improvement", criterion5},
      {"sampler contract", criterion6},     {"regression models", criterion7},
      {"pipeline replay", criterion8},      {"pruned vs full random sampling", criterion9},
      {"report cell rendering", criterion10}, {"end-to-end mock evaluate", criterion11}};
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Check r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    failures += !r.ok;
    std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << (r.ok ? "PASS" : "FAIL") << " - "
              << r.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
