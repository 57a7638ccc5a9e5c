#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rkpr {

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // population (divide by n)
  double central4 = 0.0;
};

inline Moments moments_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("moments_of: empty sample");
  Moments m;
  m.n = static_cast<std::int64_t>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  double s2 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    s2 += d2;
    s4 += d2 * d2;
  }
  m.variance = s2 / static_cast<double>(m.n);
  m.central4 = s4 / static_cast<double>(m.n);
  return m;
}

inline double se_mean(const Moments& m) {
  return std::sqrt(m.variance / static_cast<double>(m.n));
}

/// Asymptotic standard error of the sample variance.
inline double se_variance(const Moments& m) {
  const double v = m.central4 - m.variance * m.variance;
  return std::sqrt(std::max(v, 0.0) / static_cast<double>(m.n));
}

/// z-score of an empirical mean against a reference value; exact agreement
/// with zero spread counts as z = 0.
inline double z_score(const Moments& m, double reference) {
  const double se = se_mean(m);
  const double diff = m.mean - reference;
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

/// sup_a (F_X(a) - F_Y(a)) over the real line, evaluated on the pooled
/// sample points (the CDF difference is constant in between). Never below 0.
inline double one_sided_cdf_gap(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("one_sided_cdf_gap: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  size_t i = 0, j = 0;
  double gap = 0.0;
  while (i < xs.size() || j < ys.size()) {
    double v;
    if (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) v = xs[i];
    else v = ys[j];
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    gap = std::max(gap, static_cast<double>(i) / nx - static_cast<double>(j) / ny);
  }
  return gap;
}

inline double ks_two_sample(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  size_t i = 0, j = 0;
  double stat = 0.0;
  while (i < xs.size() || j < ys.size()) {
    double v;
    if (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) v = xs[i];
    else v = ys[j];
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    stat = std::max(stat, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return stat;
}

/// Two-sample KS critical value at significance alpha.
inline double ks_two_sample_threshold(double alpha, std::int64_t n, std::int64_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                       (static_cast<double>(n) * static_cast<double>(m)));
}

/// One-sample KS distance against a reference CDF.
template <class Cdf>
inline double ks_one_sample(std::vector<double> xs, Cdf&& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double stat = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    stat = std::max(stat, std::max((static_cast<double>(i) + 1.0) / n - f,
                                   f - static_cast<double>(i) / n));
  }
  return stat;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Least-squares slope of y against x.
inline double linear_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("linear_slope: bad input");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_slope: degenerate abscissa");
  return sxy / sxx;
}

/// Interpolated percentile of a sorted sample, p in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile_sorted: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double idx = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<size_t>(idx);
  const double frac = idx - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return percentile_sorted(xs, 0.5);
}

}  // namespace rkpr
