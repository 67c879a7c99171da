#include "zvrare/pathdensity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zvrare/errors.hpp"
#include "zvrare/tilt.hpp"

namespace zvrare {

namespace {

void check_step_index(int n, int i) {
  if (i < 0 || i > n - 2) {
    throw DomainError("step index " + std::to_string(i) + " outside [0, n−2] for n = " +
                      std::to_string(n));
  }
}

void fill_step(const CumulantQuad& q, int n, int i, double v, double m_i, double t_i,
               KernelCentering centering, StepParams& sp) {
  const double rest = static_cast<double>(n - i - 1);
  sp.i = i;
  sp.m_i = m_i;
  sp.t_i = t_i;
  sp.s2 = q.s2;
  sp.mu3 = q.mu3;
  sp.alpha = q.s2 * rest;
  sp.beta = t_i + q.mu3 / (2.0 * q.s2 * q.s2 * rest);
  sp.kernel_mean = sp.alpha * sp.beta + (centering == KernelCentering::kPrinted ? v : m_i);
}

double step_mean(int n, int i, double v, double u_prefix) {
  return (static_cast<double>(n) * v - u_prefix) / static_cast<double>(n - i);
}

/// Tilts along the recursion: exact solves, or the τ proxy between periodic
/// exact re-solves.
class TiltTrack {
 public:
  TiltTrack(const DistributionModel& model, int n, const GnvOptions& opts)
      : model_(model), n_(n), opts_(opts) {}

  void seed(double t0, double m0, double s2_0) {
    t_ = t0;
    m_ = m0;
    s2_ = s2_0;
  }

  /// t for step i given the new mean m_i and the latest u; false if invalid.
  bool next(int i, double m_i, double u_new, double& t_out) {
    const bool exact = !opts_.tau_fast_path || opts_.tau_resolve_every <= 1 ||
                       i % opts_.tau_resolve_every == 0;
    if (exact) {
      if (model_.m_image && !model_.m_image->contains(m_i)) return false;
      try {
        t_out = m_inverse(model_, m_i);
      } catch (const BracketError&) {
        return false;
      } catch (const NumericalError&) {
        return false;
      }
    } else {
      t_out = tau_step(t_, m_, u_new, n_, i - 1, s2_);
      if (!model_.cumulant_domain.contains(t_out)) return false;
    }
    return true;
  }

  void record(double t, double m, double s2) { seed(t, m, s2); }

 private:
  const DistributionModel& model_;
  int n_;
  const GnvOptions& opts_;
  double t_ = 0.0;
  double m_ = 0.0;
  double s2_ = 1.0;
};

double mc_log_normalizer(const DistributionModel& model, double kmean, double var, std::size_t M,
                         Rng& rng) {
  LogSumExp acc;
  for (std::size_t j = 0; j < M; ++j) {
    const double x = model.base_sampler(rng);
    acc.add(log_normal_pdf(kmean, var, model.u(x)));
  }
  const double log_mass = acc.value() - std::log(static_cast<double>(M));
  if (!std::isfinite(log_mass)) {
    throw DegenerateError("step_normalizer: every kernel evaluation underflowed");
  }
  return -log_mass;
}

double log_normalizer_for(const DistributionModel& model, const StepParams& sp, std::size_t M,
                          Rng* rng) {
  if (model.log_kernel_mass) return -model.log_kernel_mass(sp.kernel_mean, sp.alpha);
  if (rng == nullptr) {
    throw DomainError("Monte Carlo step normalizer requested without a random stream");
  }
  return mc_log_normalizer(model, sp.kernel_mean, sp.alpha, M, *rng);
}

}  // namespace

StepParams step_params(const DistributionModel& model, int n, int i, double v, double u_prefix,
                       KernelCentering centering) {
  check_step_index(n, i);
  const double m_i = step_mean(n, i, v, u_prefix);
  const double t_i = m_inverse(model, m_i);
  StepParams sp;
  fill_step(cumulants(model, t_i), n, i, v, m_i, t_i, centering, sp);
  return sp;
}

StepParams step_params_with_t(const DistributionModel& model, int n, int i, double v,
                              double u_prefix, double t_i, KernelCentering centering) {
  check_step_index(n, i);
  StepParams sp;
  fill_step(cumulants(model, t_i), n, i, v, step_mean(n, i, v, u_prefix), t_i, centering, sp);
  return sp;
}

double tau_step(double t_i, double m_prev, double u_new, int n, int i, double s2_i) {
  return t_i - (u_new - m_prev) / (static_cast<double>(n - i - 1) * s2_i);
}

bool has_analytic_normalizer(const DistributionModel& model) {
  return static_cast<bool>(model.log_kernel_mass);
}

double step_normalizer(const DistributionModel& model, const StepParams& sp, std::size_t M,
                       Rng& rng) {
  if (!(sp.alpha > 0.0)) {
    throw DomainError("step_normalizer: degenerate kernel (α = 0); steps stop at i = n−2");
  }
  if (M == 0) throw DomainError("step_normalizer: M must be positive");
  return log_normalizer_for(model, sp, M, &rng);
}

double sample_kernel_step(const DistributionModel& model, const StepParams& sp, Rng& rng,
                          std::size_t attempt_budget) {
  if (!(sp.alpha > 0.0)) throw DomainError("sample_kernel_step: degenerate kernel (α = 0)");
  if (model.kernel_sampler) return model.kernel_sampler(sp.kernel_mean, sp.alpha, rng);
  const double sd = std::sqrt(sp.alpha);

  if (model.u_identity) {
    // Propose from the kernel's normal law truncated to the support, by
    // inversion; accept against a bound K on p_X over that range. Far right
    // truncations invert the upper tail.
    const double z_lo = (model.support.lo - sp.kernel_mean) / sd;
    const double z_hi = (model.support.hi - sp.kernel_mean) / sd;
    const bool upper = z_lo > 0.0;
    const double f_lo = upper ? normal_sf(z_lo) : normal_cdf(z_lo);
    const double f_hi = upper ? normal_sf(z_hi) : normal_cdf(z_hi);
    const auto at = [&](double w) {
      const double f = f_lo + w * (f_hi - f_lo);
      const double z = upper ? -normal_quantile(f) : normal_quantile(f);
      return std::clamp(sp.kernel_mean + sd * z, model.support.lo, model.support.hi);
    };
    constexpr int kGrid = 512;
    double peak = 0.0;
    for (int j = 0; j < kGrid; ++j) {
      peak = std::max(peak, std::exp(log_density_u(model, at((j + 0.5) / kGrid)).log_p));
    }
    if (peak > 0.0 && f_hi != f_lo) {
      double K = 1.2 * peak;
      for (std::size_t attempt = 0; attempt < attempt_budget; ++attempt) {
        const double x = at(rng.uniform());
        const double p = std::exp(log_density_u(model, x).log_p);
        if (p > K) {
          K *= 2.0;
          continue;
        }
        if (rng.uniform() * K <= p) return x;
      }
      throw EnvelopeError("sample_kernel_step: attempt budget exhausted (kernel mean " +
                          std::to_string(sp.kernel_mean) + ")");
    }
  }

  // Base-law proposal; the kernel itself is bounded by its peak value.
  for (std::size_t attempt = 0; attempt < attempt_budget; ++attempt) {
    const double x = model.base_sampler(rng);
    const double z = (model.u(x) - sp.kernel_mean) / sd;
    if (std::log(rng.uniform()) <= -0.5 * z * z) return x;
  }
  throw EnvelopeError("sample_kernel_step: attempt budget exhausted (kernel mean " +
                      std::to_string(sp.kernel_mean) + ")");
}

namespace detail {

bool try_step_params(const DistributionModel& model, int n, int i, double v, double u_prefix,
                     KernelCentering centering, StepParams& out) {
  const double m_i = step_mean(n, i, v, u_prefix);
  if (model.m_image && !model.m_image->contains(m_i)) return false;
  try {
    const double t_i = m_inverse(model, m_i);
    fill_step(cumulants(model, t_i), n, i, v, m_i, t_i, centering, out);
  } catch (const BracketError&) {
    return false;
  } catch (const NumericalError&) {
    return false;
  }
  return true;
}

double gnv_log_ratio(const DistributionModel& model, int n, int k, double v, const double* u,
                     const GnvOptions& opts, Rng* rng, const double* injected) {
  if (model.m_image && !model.m_image->contains(v)) return kNegInf;
  double t0;
  CumulantQuad q0;
  try {
    t0 = m_inverse(model, v);
    q0 = cumulants(model, t0);
  } catch (const BracketError&) {
    return kNegInf;
  } catch (const NumericalError&) {
    return kNegInf;
  }
  double r = t0 * u[0] - q0.kappa;
  double prefix = u[0];
  TiltTrack track(model, n, opts);
  track.seed(t0, v, q0.s2);
  StepParams sp;
  for (int i = 1; i < k; ++i) {
    const double m_i = step_mean(n, i, v, prefix);
    double t_i;
    if (!track.next(i, m_i, u[i - 1], t_i)) return kNegInf;
    CumulantQuad q;
    try {
      q = cumulants(model, t_i);
    } catch (const Error&) {
      return kNegInf;
    }
    fill_step(q, n, i, v, m_i, t_i, opts.centering, sp);
    track.record(t_i, m_i, q.s2);
    const double log_c = injected != nullptr
                             ? injected[i - 1]
                             : log_normalizer_for(model, sp, opts.normalizer_draws, rng);
    r += log_c + log_normal_pdf(sp.kernel_mean, sp.alpha, u[i]);
    prefix += u[i];
  }
  return r;
}

}  // namespace detail

GnvEvaluation eval_log_gnv(const DistributionModel& model, int n, int k, double v,
                           std::span<const double> path, const GnvOptions& opts, Rng* rng,
                           std::span<const double> injected_log_normalizers) {
  if (k < 1 || k > n - 1) {
    throw DomainError("eval_log_gnv: k = " + std::to_string(k) + " outside [1, n−1]");
  }
  if (path.size() != static_cast<std::size_t>(k)) {
    throw DomainError("eval_log_gnv: path length differs from k");
  }
  if (!injected_log_normalizers.empty() &&
      injected_log_normalizers.size() != static_cast<std::size_t>(k - 1)) {
    throw DomainError("eval_log_gnv: need k−1 injected normalizers");
  }
  GnvEvaluation ev;
  std::vector<double> u(k);
  double sum_log_p = 0.0;
  double prefix = 0.0;
  for (int j = 0; j < k; ++j) {
    const PointEval e = log_density_u(model, path[j]);
    u[j] = e.u;
    sum_log_p += e.log_p;
    prefix += e.u;
    ev.u_prefix_sums.push_back(prefix);
  }
  if (sum_log_p == kNegInf) return ev;

  const double t0 = m_inverse(model, v);
  const CumulantQuad q0 = cumulants(model, t0);
  double r = t0 * u[0] - q0.kappa;
  TiltTrack track(model, n, opts);
  track.seed(t0, v, q0.s2);
  for (int i = 1; i < k; ++i) {
    const double u_prefix = ev.u_prefix_sums[i - 1];
    const double m_i = step_mean(n, i, v, u_prefix);
    double t_i;
    if (!track.next(i, m_i, u[i - 1], t_i)) {
      throw BracketError("eval_log_gnv: m_" + std::to_string(i) + " = " + std::to_string(m_i) +
                         " left the image of m");
    }
    StepParams sp = step_params_with_t(model, n, i, v, u_prefix, t_i, opts.centering);
    track.record(t_i, m_i, sp.s2);
    const double log_c = !injected_log_normalizers.empty()
                             ? injected_log_normalizers[i - 1]
                             : log_normalizer_for(model, sp, opts.normalizer_draws, rng);
    ev.log_normalizers.push_back(log_c);
    r += log_c + log_normal_pdf(sp.kernel_mean, sp.alpha, u[i]);
    ev.steps.push_back(sp);
  }
  ev.log_gnv = sum_log_p + r;
  return ev;
}

GnvSample sample_gnv_once(const DistributionModel& model, int n, int k, double v, Rng& rng,
                          const GnvOptions& opts) {
  if (k < 1 || k > n - 1) {
    throw DomainError("sample_gnv: k = " + std::to_string(k) + " outside [1, n−1]");
  }
  GnvSample out;
  out.y.reserve(k);
  out.u.reserve(k);
  out.log_normalizers.reserve(k > 0 ? k - 1 : 0);

  const TiltedFamily fam = make_tilted(model, v);
  TiltedSampler tilted(fam, rng);
  const double y1 = tilted.draw(rng);
  const PointEval e1 = log_density_u(model, y1);
  double sum_log_p = e1.log_p;
  double r = fam.t * e1.u - fam.log_phi;
  out.y.push_back(y1);
  out.u.push_back(e1.u);
  double prefix = e1.u;

  TiltTrack track(model, n, opts);
  track.seed(fam.t, v, cumulants(model, fam.t).s2);
  StepParams sp;
  for (int i = 1; i < k; ++i) {
    const double m_i = step_mean(n, i, v, prefix);
    double t_i;
    if (!track.next(i, m_i, out.u.back(), t_i)) {
      out.aborted = true;
      return out;
    }
    fill_step(cumulants(model, t_i), n, i, v, m_i, t_i, opts.centering, sp);
    track.record(t_i, m_i, sp.s2);
    const double log_c = log_normalizer_for(model, sp, opts.normalizer_draws, &rng);
    const double y = sample_kernel_step(model, sp, rng, opts.kernel_attempt_budget);
    const PointEval e = log_density_u(model, y);
    if (e.log_p == kNegInf) {
      out.aborted = true;
      return out;
    }
    out.log_normalizers.push_back(log_c);
    r += log_c + log_normal_pdf(sp.kernel_mean, sp.alpha, e.u);
    sum_log_p += e.log_p;
    prefix += e.u;
    out.y.push_back(y);
    out.u.push_back(e.u);
  }
  out.u_sum = prefix;
  out.log_gnv = sum_log_p + r;
  return out;
}

GnvSample sample_gnv(const DistributionModel& model, int n, int k, double v, Rng& rng,
                     const GnvOptions& opts) {
  std::size_t aborts = 0;
  for (;;) {
    GnvSample s = sample_gnv_once(model, n, k, v, rng, opts);
    if (!s.aborted) {
      s.aborts = aborts;
      return s;
    }
    if (++aborts > opts.retry_budget) {
      throw DegenerateError("sample_gnv: retry budget exhausted after " + std::to_string(aborts) +
                            " aborted runs");
    }
  }
}

}  // namespace zvrare
