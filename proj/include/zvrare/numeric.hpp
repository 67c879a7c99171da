#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace zvrare {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// log of the normal density 𝔫(mean, var, x).
inline double log_normal_pdf(double mean, double var, double x) {
  const double z = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * z * z / var;
}

double normal_cdf(double z);
/// Upper tail Φ̄(z) = 1 − Φ(z), accurate for large z.
double normal_sf(double z);
/// log Φ̄(z), finite for all z (asymptotic expansion far in the tail).
double log_normal_sf(double z);
double log_normal_cdf(double z);
double normal_quantile(double p);

/// Regularized upper incomplete gamma Q(s, x).
double gamma_q(double s, double x);
/// log Q(s, x), robust when Q underflows.
double log_gamma_q(double s, double x);

double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);
/// log(e^a − e^b) for a ≥ b.
double log_sub_exp(double a, double b);

/// Streaming log-sum-exp accumulator.
class LogSumExp {
 public:
  void add(double x);
  double value() const;
  std::size_t count() const { return count_; }

 private:
  double max_ = kNegInf;
  double scaled_ = 0.0;
  std::size_t count_ = 0;
};

/// Gauss–Legendre rule on [−1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with `order` nodes (thread-safe).
const GaussLegendre& gauss_legendre(int order);

/// Composite Gauss–Legendre over [lo, hi] with `panels` equal panels.
double integrate(const std::function<double(double)>& f, double lo, double hi, int panels = 16,
                 int order = 16);

/// Composite rule flattened into absolute nodes/weights over [lo, hi].
GaussLegendre composite_rule(double lo, double hi, int panels, int order);

/// Integral of f over the real line via the substitution x = c + s·tan(θ).
double integrate_real_line(const std::function<double(double)>& f, double center, double scale,
                           int panels = 64, int order = 16);

/// Integral over (lo, ∞) via x = lo + s·w/(1−w).
double integrate_half_line(const std::function<double(double)>& f, double lo, double scale,
                           int panels = 64, int order = 16);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

SampleSummary summarize(std::span<const double> xs);

double median(std::vector<double> xs);
double quantile(std::vector<double> xs, double q);

}  // namespace zvrare
