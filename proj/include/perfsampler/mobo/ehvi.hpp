#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "perfsampler/mobo/gp.hpp"
#include "perfsampler/mobo/hypervolume.hpp"
#include "perfsampler/random.hpp"

namespace perfsampler::mobo {

/// Inverse of the standard normal CDF: Acklam's rational approximation plus
/// one Halley step against erfc.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::invalid_argument, "inverse_normal_cdf needs 0 < p < 1");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - lo) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Fixed set of quasi-random standard-normal vectors: a randomly shifted
/// Halton sequence pushed through the inverse normal CDF. The same draws are
/// reused for every candidate, so results do not depend on evaluation order.
class QmcNormals {
 public:
  static constexpr std::size_t kDefaultDraws = 2048;

  QmcNormals(std::size_t dimension, std::uint64_t seed, std::size_t draws = kDefaultDraws)
      : dim_(dimension), draws_(draws), z_(dimension * draws), zmin_(dimension, 0.0) {
    static constexpr unsigned bases[] = {2, 3, 5, 7};
    if (dimension == 0 || dimension > 4) throw Error(Errc::invalid_argument, "QMC draws support 1 to 4 dimensions");
    if (draws == 0) throw Error(Errc::invalid_argument, "QMC needs at least one draw");
    Rng rng(seed);
    std::vector<double> shift(dimension);
    for (auto& s : shift) s = rng.uniform();
    for (std::size_t j = 0; j < dimension; ++j) {
      double lowest = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        double u = radical_inverse(i + 1, bases[j]) + shift[j];
        u -= std::floor(u);
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        const double z = inverse_normal_cdf(u);
        z_[i * dim_ + j] = z;
        lowest = i == 0 ? z : std::min(lowest, z);
      }
      zmin_[j] = lowest;
    }
  }

  std::size_t dimension() const { return dim_; }
  std::size_t draws() const { return draws_; }
  std::span<const double> draw(std::size_t i) const { return {z_.data() + i * dim_, dim_}; }
  /// Component-wise smallest draw.
  std::span<const double> lowest() const { return zmin_; }

 private:
  static double radical_inverse(std::size_t i, unsigned base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
      r += f * static_cast<double>(i % base);
      i /= base;
      f *= inv;
    }
    return r;
  }

  std::size_t dim_;
  std::size_t draws_;
  std::vector<double> z_;
  std::vector<double> zmin_;
};

/// Expected hypervolume improvement of Y ~ N(mean, diag(sd^2)), all in cost
/// (minimization) space.
inline double ehvi(std::span<const double> mean, std::span<const double> sd, const ParetoFront& front,
                   const QmcNormals& qmc) {
  const std::size_t m = front.dimension();
  if (mean.size() != m || sd.size() != m || qmc.dimension() != m) {
    throw Error(Errc::dimension_mismatch, "posterior/front dimension mismatch");
  }
  std::vector<double> y(m);
  double total = 0.0;
  for (std::size_t i = 0; i < qmc.draws(); ++i) {
    const auto z = qmc.draw(i);
    for (std::size_t j = 0; j < m; ++j) y[j] = mean[j] + sd[j] * z[j];
    total += front.improvement(y);
  }
  return std::max(0.0, total / static_cast<double>(qmc.draws()));
}

/// EHVI at x under one GP per objective (each fitted on costs).
inline double ehvi(const std::vector<GpModel>& models, std::span<const double> x, const ParetoFront& front,
                   const QmcNormals& qmc) {
  if (models.size() != front.dimension()) throw Error(Errc::dimension_mismatch, "one model per objective required");
  std::vector<double> mean(models.size());
  std::vector<double> sd(models.size());
  for (std::size_t j = 0; j < models.size(); ++j) {
    const auto p = models[j].predict(x);
    mean[j] = p.mean;
    sd[j] = std::sqrt(p.variance);
  }
  return ehvi(mean, sd, front, qmc);
}

struct EhviChoice {
  std::size_t index = 0;  // position in the candidate list
  double value = 0.0;
  std::size_t evaluated = 0;
};

/// Argmax of EHVI over candidates given per-objective posterior moments
/// (means[j][c], sds[j][c]); ties go to the lowest position. Candidates are
/// visited in order of an upper bound (the improvement at the most optimistic
/// draw), so most of them never need the full estimate.
inline EhviChoice ehvi_argmax(const std::vector<std::vector<double>>& means,
                              const std::vector<std::vector<double>>& sds, const ParetoFront& front,
                              const QmcNormals& qmc) {
  const std::size_t m = front.dimension();
  if (means.size() != m || sds.size() != m) throw Error(Errc::dimension_mismatch, "posterior/front dimension mismatch");
  const std::size_t n = means.front().size();
  if (n == 0) throw Error(Errc::invalid_argument, "no candidates");
  const auto zmin = qmc.lowest();
  std::vector<double> bound(n);
  std::vector<double> mu(m), sd(m), corner(m);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < m; ++j) corner[j] = means[j][c] + sds[j][c] * zmin[j];
    bound[c] = front.improvement(corner);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bound[a] > bound[b]; });
  EhviChoice best{n, -1.0, 0};
  for (auto c : order) {
    if (bound[c] < best.value) break;
    double v = 0.0;
    if (bound[c] > 0.0) {
      for (std::size_t j = 0; j < m; ++j) {
        mu[j] = means[j][c];
        sd[j] = sds[j][c];
      }
      v = ehvi(mu, sd, front, qmc);
      ++best.evaluated;
    }
    if (v > best.value || (v == best.value && c < best.index)) {
      best.index = c;
      best.value = v;
    }
  }
  return best;
}

}  // namespace perfsampler::mobo
