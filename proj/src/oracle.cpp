#include "zvrare/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "zvrare/errors.hpp"

namespace zvrare {

namespace {

[[noreturn]] void unsupported(const DistributionModel& model, const char* what) {
  throw UnsupportedError(std::string(what) + ": no analytic oracle for model " + model.name);
}

}  // namespace

double rate_function(const DistributionModel& model, double x) {
  const double t = m_inverse(model, x);
  return x * t - cumulants(model, t).kappa;
}

double log_sum_tail(const DistributionModel& model, int j, double x) {
  if (const auto* g = std::get_if<GaussianFamily>(&model.family)) {
    return log_normal_sf((x - j * g->mean) / (g->sd * std::sqrt(static_cast<double>(j))));
  }
  if (std::holds_alternative<ExponentialFamily>(model.family)) {
    // U_{1,j} + j ~ Gamma(j, 1).
    return log_gamma_q(static_cast<double>(j), x + j);
  }
  unsupported(model, "log_sum_tail");
}

double log_sum_cdf(const DistributionModel& model, int j, double x) {
  if (const auto* g = std::get_if<GaussianFamily>(&model.family)) {
    return log_normal_sf(-(x - j * g->mean) / (g->sd * std::sqrt(static_cast<double>(j))));
  }
  if (std::holds_alternative<ExponentialFamily>(model.family)) {
    const double z = x + j;
    if (!(z > 0.0)) return kNegInf;
    return std::log(boost::math::gamma_p(static_cast<double>(j), z));
  }
  unsupported(model, "log_sum_cdf");
}

double log_exact_tail(const DistributionModel& model, int n, double a) {
  return log_sum_tail(model, n, n * a);
}

double exact_tail(const DistributionModel& model, int n, double a, EventKind event) {
  if (n < 1) throw DomainError("exact_tail: n must be positive");
  const double upper = std::exp(log_exact_tail(model, n, a));
  if (event == EventKind::kUpper) return upper;
  if (!(a >= 0.0)) throw DomainError("exact_tail: symmetric event needs a ≥ 0");
  double lower;
  if (const auto* g = std::get_if<GaussianFamily>(&model.family)) {
    lower = normal_cdf((-a - g->mean) * std::sqrt(static_cast<double>(n)) / g->sd);
  } else {
    // P(Gamma(n) < n(1 − a)).
    lower = a >= 1.0 ? 0.0 : 1.0 - gamma_q(static_cast<double>(n), n * (1.0 - a));
  }
  return upper + lower;
}

TailResult saddlepoint_tail(const DistributionModel& model, int n, double a) {
  if (!(a > model.mean_u)) throw DomainError("saddlepoint_tail: need a > E U");
  const double t = m_inverse(model, a);
  const CumulantQuad q = cumulants(model, t);
  TailResult r;
  r.method = TailMethod::kSaddlepoint;
  r.rate_I = a * t - q.kappa;
  r.psi = t * std::sqrt(q.s2);
  r.value = std::exp(-n * r.rate_I) /
            (std::sqrt(2.0 * std::numbers::pi * n) * r.psi);
  return r;
}

double log_sum_density(const DistributionModel& model, int j, double x) {
  if (j < 1) throw DomainError("log_sum_density: j must be positive");
  if (const auto* g = std::get_if<GaussianFamily>(&model.family)) {
    return log_normal_pdf(j * g->mean, j * g->sd * g->sd, x);
  }
  if (std::holds_alternative<ExponentialFamily>(model.family)) {
    const double z = x + j;
    if (!(z > 0.0)) return kNegInf;
    return (j - 1) * std::log(z) - z - std::lgamma(static_cast<double>(j));
  }
  unsupported(model, "log_sum_density");
}

double exact_conditional_log_density(const DistributionModel& model, int n, int k, double v,
                                     std::span<const double> path) {
  if (k < 1 || k > n - 1 || path.size() != static_cast<std::size_t>(k)) {
    throw DomainError("exact_conditional_log_density: need 1 ≤ k ≤ n−1 and |path| = k");
  }
  double log_p = 0.0;
  double s = 0.0;
  for (double y : path) {
    const PointEval e = log_density_u(model, y);
    log_p += e.log_p;
    s += e.u;
  }
  if (log_p == kNegInf) return kNegInf;
  const double rest = log_sum_density(model, n - k, n * v - s);
  if (rest == kNegInf) return kNegInf;
  return log_p + rest - log_sum_density(model, n, n * v);
}

std::vector<double> exact_conditional_sampler(const DistributionModel& model, int n, int k,
                                              double v, Rng& rng) {
  const auto* g = std::get_if<GaussianFamily>(&model.family);
  if (g == nullptr) unsupported(model, "exact_conditional_sampler");
  if (k < 1 || k > n - 1) throw DomainError("exact_conditional_sampler: need 1 ≤ k ≤ n−1");
  std::vector<double> y;
  y.reserve(k);
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    const double m_i = (n * v - s) / (n - i);
    const double var = g->sd * g->sd * (n - i - 1) / (n - i);
    y.push_back(rng.normal(m_i, std::sqrt(var)));
    s += y.back();
  }
  return y;
}

double direct_pnA_log_density(const DistributionModel& model, int n, int k, double a,
                              std::span<const double> path, int quad_nodes) {
  if (quad_nodes < 64) throw DomainError("direct_pnA_log_density: need at least 64 nodes");
  const double t = m_inverse(model, a);
  if (!(t > 0.0)) throw DomainError("direct_pnA_log_density: need a > E U");
  const double width = 40.0 / (n * t);
  const double log_pn = log_exact_tail(model, n, a);
  // Density of Ū given Ū > a is n·f_n(nv)/P_n on (a, ∞).
  const auto log_integrand = [&](double v) {
    const double c = exact_conditional_log_density(model, n, k, v, path);
    if (c == kNegInf) return kNegInf;
    return c + std::log(static_cast<double>(n)) + log_sum_density(model, n, n * v) - log_pn;
  };
  const auto integrate_log = [&](double lo, double hi) {
    const int order = 16;
    const int panels = (quad_nodes + order - 1) / order;
    const GaussLegendre rule = composite_rule(lo, hi, panels, order);
    LogSumExp acc;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      acc.add(std::log(rule.weights[j]) + log_integrand(rule.nodes[j]));
    }
    return acc.value();
  };
  const double main = integrate_log(a, a + width);
  const double beyond = integrate_log(a + width, a + 2.0 * width);
  if (main == kNegInf) return kNegInf;
  if (beyond - main > std::log(1e-10)) {
    throw QuadratureError("direct_pnA_log_density: mass beyond the integration range exceeds 1e-10");
  }
  return main;
}

double direct_pnA_log_density_closed(const DistributionModel& model, int n, int k, double a,
                                     std::span<const double> path) {
  double log_p = 0.0;
  double s = 0.0;
  for (double y : path) {
    const PointEval e = log_density_u(model, y);
    log_p += e.log_p;
    s += e.u;
  }
  if (log_p == kNegInf) return kNegInf;
  return log_p + log_sum_tail(model, n - k, n * a - s) - log_exact_tail(model, n, a);
}

ConditionsReport check_conditions(const DistributionModel& model, int n, int k, double a, double c,
                                  double eps) {
  ConditionsReport r;
  const double t = m_inverse(model, a);
  r.c_condition = n * c * t;
  r.a_condition = (n - k) * t * t;
  r.eps_condition = eps > 0.0 ? t / eps : kInf;
  // V(v) = s²(m⁻¹(v)), so V′(v) = μ₃(t)/s²(t) at t = m⁻¹(v).
  const double rate = n * t;
  if (rate > 0.0) {
    const double integral = integrate_half_line(
        [&](double v) {
          const CumulantQuad q = cumulants(model, m_inverse(model, v));
          return q.mu3 / q.s2 * std::exp(-rate * (v - a));
        },
        a, 1.0 / rate, 64, 16);
    r.v_integral = std::sqrt(static_cast<double>(n)) * t * integral;
  } else {
    r.notes.push_back("a ≤ E U: the mixing rate is not positive; (V) integral not evaluated");
  }
  std::ostringstream os;
  if (r.a_condition < 1.0) {
    os << "(n−k)·m⁻¹(a)² = " << r.a_condition << " is small at this (n, k)";
    r.notes.push_back(os.str());
  }
  if (r.c_condition < 1.0) r.notes.push_back("n·c·m⁻¹(a) below 1: the truncation would bind");
  return r;
}

}  // namespace zvrare
