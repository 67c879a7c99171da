#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zvrare/model.hpp"
#include "zvrare/pathdensity.hpp"
#include "zvrare/random.hpp"

namespace zvrare {

/// Target event for the empirical mean Ū = U_{1,n}/n.
enum class EventKind {
  kUpper,      ///< Ū > a
  kSymmetric,  ///< |Ū| > a
};

/// How g_nA is evaluated on a path.
enum class MixtureEval {
  kAuto,         ///< quadrature when step normalizers are closed form, else Monte Carlo
  kMonteCarlo,   ///< M fresh mixing draws
  kQuadrature,   ///< Gauss–Legendre on a window located around the integrand's mode
};

/// Completion of coordinates k+1..n.
enum class TailMode {
  kAuto,       ///< point mass at k = n−1 when u(x) = x, tilted otherwise
  kTilted,     ///< i.i.d. π^{m_k}
  kPointMass,  ///< k = n−1 only: y_n = nv − u_{1,n−1}
};

/// Law of the mixing variable v.
enum class MixingKind {
  kExponential,  ///< exponential with rate n·|m⁻¹(±a)| on each side of the event
  kExact,        ///< the law of Ū given the event; closed-form sum laws only
};

struct MixtureConfig {
  int n = 100;
  int k = 1;
  double a = 0.0;
  EventKind event = EventKind::kUpper;
  std::size_t M = 100;
  MixtureEval eval = MixtureEval::kAuto;
  int quad_panels = 16;
  int quad_order = 16;
  TailMode tail = TailMode::kAuto;
  MixingKind mixing = MixingKind::kExponential;
  GnvOptions gnv;
};

/// One side of the event: v = edge + direction·D with D > 0. For the
/// exponential kind D ~ Exp(rate); for the exact kind `rate` only sets the
/// length scale and `log_mass` is log P(Ū beyond the edge).
struct MixingBranch {
  double edge = 0.0;
  double direction = 1.0;
  double rate = 1.0;
  double weight = 1.0;
  double log_mass = 0.0;
};

/// Law of v: exponential on (a, ∞) with rate n·m⁻¹(a), for symmetric events
/// a two-branch mixture weighted by the saddlepoint tail of each side, or the
/// exact conditional law of Ū.
struct MixingLaw {
  MixingKind kind = MixingKind::kExponential;
  const DistributionModel* model = nullptr;  ///< exact kind only
  int n = 0;
  std::vector<MixingBranch> branches;

  double sample(Rng& rng) const;
  /// d ≥ 0 with P(D ≤ d) = w on branch b.
  double branch_quantile(std::size_t b, double w) const;
  /// log density of D on branch b.
  double branch_log_density(std::size_t b, double d) const;
  /// First-branch inverse CDF in v.
  double from_uniform(double w) const;
  double log_density(double v) const;
  double mean() const;
};

MixingLaw mixing_law(const DistributionModel& model, const MixtureConfig& cfg);

struct PathSample {
  std::vector<double> y;
  double log_p_base = kNegInf;
  double log_g = kNegInf;
  bool hit = false;
  double v_used = 0.0;
  std::size_t aborts = 0;
  bool aborted = false;
  std::vector<double> log_normalizers;  ///< from sampling, reused by point-mass evaluation
};

bool event_hit(EventKind event, double u_sum, int n, double a);

/// Σ_{i>k} log π^{m_k}(y_i), m_k = (nv − u_{1,k})/(n−k).
double tail_log_density(const DistributionModel& model, double v, double u_prefix_k, int n, int k,
                        std::span<const double> y_tail);

/// Sampler and density of g_nA bound to one model and configuration. The
/// model must outlive the object.
class Mixture {
 public:
  Mixture(const DistributionModel& model, MixtureConfig cfg);

  const MixtureConfig& config() const { return cfg_; }
  const MixingLaw& law() const { return law_; }
  bool point_mass_tail() const { return point_mass_; }
  bool uses_quadrature() const { return quadrature_; }

  double sample_v(Rng& rng) const { return law_.sample(rng); }

  /// Draws a path, resampling aborted attempts up to the retry budget.
  PathSample sample_path(Rng& rng) const;
  /// Single attempt; aborted attempts are returned flagged.
  PathSample sample_path_once(Rng& rng) const;

  /// log g_nA(y_1^n).
  double eval_log_gnA(const PathSample& path, Rng& rng) const;
  /// Equal-weight mixture over the given components; ignores the evaluation mode.
  double eval_log_gnA_at(const PathSample& path, std::span<const double> vs, Rng& rng) const;

  /// log of the k-dimensional marginal ∫ f(v) g_nv(y_1^k) dv.
  double eval_log_prefix(std::span<const double> y_prefix, Rng& rng) const;
  /// Draws y_1^k from that marginal; empty on abort.
  std::vector<double> sample_prefix(Rng& rng, std::size_t* aborts = nullptr) const;

 private:
  double log_ratio_at(double v, const std::vector<double>& u, int k, double tail_sum,
                      Rng& rng) const;
  double integrate_log(const std::vector<double>& u, int k, double tail_sum, bool with_tail,
                       Rng& rng) const;
  double branch_log_integral(std::size_t b, const std::vector<double>& u, int k,
                             double tail_sum, double u_mean, Rng& rng) const;

  const DistributionModel& model_;
  MixtureConfig cfg_;
  MixingLaw law_;
  bool point_mass_ = false;
  bool quadrature_ = false;
  GaussLegendre rule_;
  std::vector<std::vector<double>> quantile_probes_;
};

double sample_v(const DistributionModel& model, const MixtureConfig& cfg, Rng& rng);
PathSample sample_path(const DistributionModel& model, const MixtureConfig& cfg, Rng& rng);
double eval_log_gnA(const DistributionModel& model, const MixtureConfig& cfg,
                    const PathSample& path, Rng& rng);

}  // namespace zvrare
