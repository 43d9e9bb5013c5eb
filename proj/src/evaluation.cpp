#include "peduncle/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace peduncle {

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InsufficientSampleError("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw InsufficientSampleError("summarize needs at least one value");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  SummaryStats s;
  s.count = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = quantile(sorted, 0.5);
  s.iqr = std::max(0.0, quantile(sorted, 0.75) - quantile(sorted, 0.25));
  // Sorted order makes the sums independent of input order.
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientSampleError("Welch t-test needs at least 2 values per group");
  const SummaryStats sa = summarize(a);
  const SummaryStats sb = summarize(b);
  const double va = sa.std * sa.std / static_cast<double>(sa.count);
  const double vb = sb.std * sb.std / static_cast<double>(sb.count);
  const double diff = sa.mean - sb.mean;
  const double se2 = va + vb;

  WelchResult r;
  if (se2 == 0.0) {
    r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.dof = static_cast<double>(sa.count + sb.count - 2);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.dof = se2 * se2 / (va * va / static_cast<double>(sa.count - 1) + vb * vb / static_cast<double>(sb.count - 1));
  // Two-sided p = I_{dof/(dof+t^2)}(dof/2, 1/2).
  r.p_value = incomplete_beta(0.5 * r.dof, 0.5, r.dof / (r.dof + r.t * r.t));
  return r;
}

namespace {

MetricComparison compare(std::vector<double> s, std::vector<double> f) {
  if (s.size() < 2 || f.size() < 2) {
    throw InsufficientSampleError("class comparison needs at least 2 trials per class");
  }
  return {summarize(s), summarize(f), welch_t_test(s, f)};
}

}  // namespace

ClassComparison class_comparison(std::span<const TrialMetrics> success, std::span<const TrialMetrics> failure) {
  auto loc = [](std::span<const TrialMetrics> ms) {
    std::vector<double> v;
    for (const auto& m : ms) {
      if (m.localization_error) v.push_back(*m.localization_error);
    }
    return v;
  };
  auto mse = [](std::span<const TrialMetrics> ms) {
    std::vector<double> v;
    for (const auto& m : ms) v.push_back(m.final_mse);
    return v;
  };
  return {compare(loc(success), loc(failure)), compare(mse(success), mse(failure))};
}

}  // namespace peduncle
