#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "zvrare/numeric.hpp"
#include "zvrare/random.hpp"

namespace zvrare {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = kNegInf;
  double hi = kInf;
  bool contains(double x) const { return x > lo && x < hi; }
  double width() const { return hi - lo; }
};

/// κ(t) and its first three derivatives.
struct CumulantQuad {
  double kappa = 0.0;
  double m = 0.0;
  double s2 = 0.0;
  double mu3 = 0.0;
};

struct GaussianFamily {
  double mean = 0.0;
  double sd = 1.0;
};
struct ExponentialFamily {};
/// Analytic family tag; the oracle module only serves tagged models.
using ModelFamily = std::variant<std::monostate, GaussianFamily, ExponentialFamily>;

/// Base law p_X, statistic u and the cumulant function of U = u(X).
///
/// The required members describe the model; the optional ones are closed-form
/// shortcuts that replace generic numerics when set.
struct DistributionModel {
  std::string name;
  std::function<double(double)> base_log_density;  ///< log p_X(x), −∞ off support
  std::function<double(double)> u;
  std::function<double(double)> cumulant;  ///< κ(t) = log E exp(tU)
  Interval cumulant_domain;
  std::function<double(Rng&)> base_sampler;
  double mean_u = 0.0;
  Interval support;         ///< support of X
  bool u_identity = false;  ///< u(x) = x

  std::function<CumulantQuad(double)> analytic_cumulants;
  std::function<double(double)> analytic_m_inverse;
  std::optional<Interval> m_image;  ///< image of m over the cumulant domain
  /// log p_U; only needed by `on_U` tilted densities.
  std::function<double(double)> u_log_density;
  /// Draw from π_u^α given t = m⁻¹(α).
  std::function<double(double, Rng&)> tilted_sampler;
  /// log ∫ p_X(x) 𝔫(mean, var, u(x)) dx.
  std::function<double(double, double)> log_kernel_mass;
  /// Draw x with density ∝ p_X(x) 𝔫(mean, var, u(x)).
  std::function<double(double, double, Rng&)> kernel_sampler;

  ModelFamily family;
};

struct PointEval {
  double log_p = kNegInf;
  double u = 0.0;
};

/// κ, m, s², μ₃ at t. Uses the analytic override when present, otherwise
/// Ridders-extrapolated central differences of κ.
CumulantQuad cumulants(const DistributionModel& model, double t);

/// Same as `cumulants` but always through finite differences.
CumulantQuad cumulants_numeric(const DistributionModel& model, double t);

/// t with m(t) = v.
double m_inverse(const DistributionModel& model, double v);

/// Image of m over the cumulant domain.
Interval m_image(const DistributionModel& model);

/// (log p_X(x), u(x)); never throws.
PointEval log_density_u(const DistributionModel& model, double x);

std::vector<double> sample_base(const DistributionModel& model, Rng& rng, std::size_t count);

/// Variance of U, s²(0).
double variance_u(const DistributionModel& model);

/// N(mean, sd²) with u(x) = x.
DistributionModel gaussian(double mean = 0.0, double sd = 1.0);

/// Exp(1) − 1 on (−1, ∞) with u(x) = x; κ(t) = −t − log(1 − t).
DistributionModel centered_exponential();

/// Copy without any analytic shortcut, so only the generic code paths run.
DistributionModel strip_overrides(const DistributionModel& model);

using ModelParams = std::map<std::string, double>;
using ModelFactory = std::function<DistributionModel(const ModelParams&)>;

/// Adds a named model to the registry used by the command line.
void register_model(const std::string& name, ModelFactory factory);

/// Built-ins: "gaussian" (params mu, sigma) and "centered-exp".
DistributionModel make_model(const std::string& name, const ModelParams& params = {});

std::vector<std::string> registered_models();

}  // namespace zvrare
