#include "zvrare/numeric.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "zvrare/errors.hpp"

namespace zvrare {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_normal_sf(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z / kSqrt2));
  // Mills-ratio series; relative error below 1e-12 for z ≥ 30.
  const double z2 = z * z;
  const double w = 1.0 / z2;
  const double series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
  return -0.5 * z2 - std::log(z) - kLogSqrt2Pi + std::log(series);
}

double log_normal_cdf(double z) { return log_normal_sf(-z); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double gamma_q(double s, double x) {
  if (!(s > 0.0)) throw DomainError("gamma_q: shape must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(s, x);
}

double log_gamma_q(double s, double x) {
  const double q = gamma_q(s, x);
  if (q > 1e-290) return std::log(q);
  // Far tail: Legendre continued fraction (modified Lentz) in log space.
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return -x + s * std::log(x) - std::lgamma(s) + std::log(h);
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

double log_sub_exp(double a, double b) {
  if (b > a) throw DomainError("log_sub_exp: second argument exceeds the first");
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  return a + std::log(-std::expm1(b - a));
}

void LogSumExp::add(double x) {
  ++count_;
  if (x == kNegInf) return;
  if (x <= max_) {
    scaled_ += std::exp(x - max_);
  } else {
    scaled_ = scaled_ * std::exp(max_ - x) + 1.0;
    max_ = x;
  }
}

double LogSumExp::value() const {
  if (max_ == kNegInf) return kNegInf;
  return max_ + std::log(scaled_);
}

namespace {

GaussLegendre build_gauss_legendre(int order) {
  GaussLegendre rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = 0.0;
    for (int j = 1; j <= order; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
    }
    dp = order * (x * p0 - p1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be positive");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussLegendre>(build_gauss_legendre(order));
  return *slot;
}

GaussLegendre composite_rule(double lo, double hi, int panels, int order) {
  const GaussLegendre& base = gauss_legendre(order);
  GaussLegendre out;
  out.nodes.reserve(static_cast<std::size_t>(panels) * order);
  out.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    const double mid = a + 0.5 * width;
    for (int j = 0; j < order; ++j) {
      out.nodes.push_back(mid + 0.5 * width * base.nodes[j]);
      out.weights.push_back(0.5 * width * base.weights[j]);
    }
  }
  return out;
}

double integrate(const std::function<double(double)>& f, double lo, double hi, int panels,
                 int order) {
  const GaussLegendre rule = composite_rule(lo, hi, panels, order);
  double sum = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) sum += rule.weights[j] * f(rule.nodes[j]);
  return sum;
}

double integrate_real_line(const std::function<double(double)>& f, double center, double scale,
                           int panels, int order) {
  const double h = 0.5 * std::numbers::pi;
  return integrate(
      [&](double theta) {
        const double c = std::cos(theta);
        return f(center + scale * std::tan(theta)) * scale / (c * c);
      },
      -h, h, panels, order);
}

double integrate_half_line(const std::function<double(double)>& f, double lo, double scale,
                           int panels, int order) {
  return integrate(
      [&](double w) {
        const double om = 1.0 - w;
        return f(lo + scale * w / om) * scale / (om * om);
      },
      0.0, 1.0, panels, order);
}

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.min = xs[0];
  s.max = xs[0];
  // Welford for numerical stability.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t i = 0;
  for (double x : xs) {
    ++i;
    const double d = x - mean;
    mean += d / static_cast<double>(i);
    m2 += d * (x - mean);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = mean;
  s.variance = xs.size() > 1 ? m2 / static_cast<double>(xs.size() - 1) : 0.0;
  s.sd = std::sqrt(s.variance);
  return s;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

}  // namespace zvrare
