#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zvrare/model.hpp"
#include "zvrare/random.hpp"

namespace zvrare {

/// Where the Gaussian kernel of a step is centred.
enum class KernelCentering {
  kPrinted,     ///< αβ + v, the recursion as written
  kExactChain,  ///< αβ + m_i; for Gaussian u(x)=x this is the exact conditional chain
};

struct GnvOptions {
  KernelCentering centering = KernelCentering::kPrinted;
  bool tau_fast_path = false;
  int tau_resolve_every = 25;
  std::size_t normalizer_draws = 1000;  ///< M for Monte Carlo C_i
  std::size_t kernel_attempt_budget = 100'000;
  std::size_t retry_budget = 1000;  ///< resampled aborts per path
};

/// Tilt state of one recursion step.
struct StepParams {
  int i = 0;
  double m_i = 0.0;
  double t_i = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double kernel_mean = 0.0;
  double s2 = 0.0;
  double mu3 = 0.0;
};

StepParams step_params(const DistributionModel& model, int n, int i, double v, double u_prefix,
                       KernelCentering centering = KernelCentering::kPrinted);

/// Same, with t_i supplied (fast path); m_i is still exact.
StepParams step_params_with_t(const DistributionModel& model, int n, int i, double v,
                              double u_prefix, double t_i,
                              KernelCentering centering = KernelCentering::kPrinted);

/// First-order proxy for the next tilt: t_i − (u_new − m_prev)/((n−i−1)·s2_i).
double tau_step(double t_i, double m_prev, double u_new, int n, int i, double s2_i);

/// True when log C_i has a closed form for this model.
bool has_analytic_normalizer(const DistributionModel& model);

/// log C_i with C_i⁻¹ = ∫ p_X(x) 𝔫(kernel_mean, α, u(x)) dx.
double step_normalizer(const DistributionModel& model, const StepParams& sp, std::size_t M,
                       Rng& rng);

/// One draw with density ∝ p_X(y) 𝔫(kernel_mean, α, u(y)).
double sample_kernel_step(const DistributionModel& model, const StepParams& sp, Rng& rng,
                          std::size_t attempt_budget = 100'000);

struct GnvEvaluation {
  double log_gnv = kNegInf;
  std::vector<StepParams> steps;
  std::vector<double> log_normalizers;  ///< log C_i, i = 1..k−1
  std::vector<double> u_prefix_sums;    ///< u_{1,i}, i = 1..k
};

/// log g_nv(y_1^k). Normalizers: injected if given, else closed form, else
/// Monte Carlo from `rng` (required in that case).
GnvEvaluation eval_log_gnv(const DistributionModel& model, int n, int k, double v,
                           std::span<const double> path, const GnvOptions& opts = {},
                           Rng* rng = nullptr, std::span<const double> injected_log_normalizers = {});

struct GnvSample {
  std::vector<double> y;
  std::vector<double> u;  ///< u(y_i)
  double u_sum = 0.0;
  double log_gnv = kNegInf;
  std::vector<double> log_normalizers;
  std::size_t aborts = 0;
  bool aborted = false;
};

/// Draws y_1^k from g_nv, resampling aborted runs up to the retry budget.
GnvSample sample_gnv(const DistributionModel& model, int n, int k, double v, Rng& rng,
                     const GnvOptions& opts = {});

/// Single attempt; `aborted` is set instead of retrying.
GnvSample sample_gnv_once(const DistributionModel& model, int n, int k, double v, Rng& rng,
                          const GnvOptions& opts = {});

namespace detail {

/// log g_nv(y_1^k) − Σ log p_X(y_i), computed from the u-values alone and
/// without throwing; −∞ when some m_i leaves the image of m. Normalizers as
/// in eval_log_gnv.
double gnv_log_ratio(const DistributionModel& model, int n, int k, double v, const double* u,
                     const GnvOptions& opts, Rng* rng, const double* injected = nullptr);

/// Non-throwing step parameters; false when m_i leaves the image of m.
bool try_step_params(const DistributionModel& model, int n, int i, double v, double u_prefix,
                     KernelCentering centering, StepParams& out);

}  // namespace detail

}  // namespace zvrare
