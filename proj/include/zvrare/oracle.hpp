#pragma once

#include <span>
#include <string>
#include <vector>

#include "zvrare/mixture.hpp"
#include "zvrare/model.hpp"
#include "zvrare/random.hpp"

namespace zvrare {

enum class TailMethod { kExact, kSaddlepoint };

struct TailResult {
  double value = 0.0;
  TailMethod method = TailMethod::kExact;
  double rate_I = 0.0;  ///< I_U(a)
  double psi = 0.0;     ///< m⁻¹(a)·s(m⁻¹(a))
};

/// I_U(x) = x·m⁻¹(x) − κ(m⁻¹(x)).
double rate_function(const DistributionModel& model, double x);

/// P(Ū > a), or P(|Ū| > a) for the symmetric event; analytic families only.
double exact_tail(const DistributionModel& model, int n, double a,
                  EventKind event = EventKind::kUpper);
double log_exact_tail(const DistributionModel& model, int n, double a);

/// exp(−n·I_U(a)) / (√(2πn)·ψ(a)).
TailResult saddlepoint_tail(const DistributionModel& model, int n, double a);

/// log density of U_{1,j} at x for the analytic families.
double log_sum_density(const DistributionModel& model, int j, double x);

/// log P(U_{1,j} > x) for the analytic families.
double log_sum_tail(const DistributionModel& model, int j, double x);

/// log P(U_{1,j} < x) for the analytic families.
double log_sum_cdf(const DistributionModel& model, int j, double x);

/// log p_nv(y_1^k), the exact law of X_1^k given U_{1,n} = nv.
double exact_conditional_log_density(const DistributionModel& model, int n, int k, double v,
                                     std::span<const double> path);

/// Exact Gaussian conditional chain: y_{i+1} ~ N(m_i, σ²(n−i−1)/(n−i)).
std::vector<double> exact_conditional_sampler(const DistributionModel& model, int n, int k,
                                              double v, Rng& rng);

/// log p_nA(y_1^k) by Gauss–Legendre quadrature over v ∈ (a, a + 40/(n·m⁻¹(a))).
double direct_pnA_log_density(const DistributionModel& model, int n, int k, double a,
                              std::span<const double> path, int quad_nodes = 128);

/// Closed form p_X(y_1^k)·P(U_{k+1,n} > na − u_{1,k}) / P_n.
double direct_pnA_log_density_closed(const DistributionModel& model, int n, int k, double a,
                                     std::span<const double> path);

struct ConditionsReport {
  double c_condition = 0.0;    ///< n·c·m⁻¹(a)
  double a_condition = 0.0;    ///< (n−k)·m⁻¹(a)²
  double eps_condition = 0.0;  ///< m⁻¹(a)/ε
  double v_integral = 0.0;     ///< √n·m⁻¹(a)·∫_a^∞ V′(v)exp(−n·m⁻¹(a)(v−a))dv by quadrature
  std::vector<std::string> notes;
};

ConditionsReport check_conditions(const DistributionModel& model, int n, int k, double a, double c,
                                  double eps = 0.01);

}  // namespace zvrare
