#include "zvrare/kselect.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zvrare/errors.hpp"
#include "zvrare/parallel.hpp"

namespace zvrare {

double log_pnA_proxy(const DistributionModel& model, int n, int k, double a,
                     std::span<const double> y_prefix) {
  double log_p = 0.0;
  double u_sum = 0.0;
  for (double y : y_prefix) {
    const PointEval e = log_density_u(model, y);
    log_p += e.log_p;
    u_sum += e.u;
  }
  if (log_p == kNegInf) return kNegInf;
  const double m_k = (static_cast<double>(n) * a - u_sum) / (n - k);
  if (model.m_image && !model.m_image->contains(m_k)) {
    throw DomainError("log_pnA_proxy: m_k outside the image of m");
  }
  double t_k;
  try {
    t_k = m_inverse(model, m_k);
  } catch (const BracketError&) {
    throw DomainError("log_pnA_proxy: m_k outside the image of m");
  }
  const double t = m_inverse(model, a);
  const CumulantQuad q = cumulants(model, t);
  const CumulantQuad qk = cumulants(model, t_k);
  // D = [π_U^a(a)/p_U(a)]^n and N = [π_U^{m_k}(m_k)/p_U(m_k)]^{n−k}; p_U cancels.
  const double log_D = n * (t * a - q.kappa);
  const double log_N = (n - k) * (t_k * m_k - qk.kappa);
  return log_p + 0.5 * std::log(static_cast<double>(n) / (n - k)) + 0.5 * std::log(q.s2) -
         0.5 * std::log(qk.s2) + log_D - log_N;
}

ABTerms ab_terms(const DistributionModel& model, int n, int k, double a,
                 std::span<const double> y_prefix, double log_g_prefix,
                 SelectSampling sampling) {
  return ab_terms(model, n, k, a, y_prefix, log_g_prefix, log_g_prefix, sampling);
}

ABTerms ab_terms(const DistributionModel& model, int n, int k, double a,
                 std::span<const double> y_prefix, double log_g_prefix, double log_g_num,
                 SelectSampling sampling) {
  if (k < 1 || k > n - 2) throw DomainError("ab_terms: k must lie in [1, n−2]");
  const double log_r = log_g_num - log_pnA_proxy(model, n, k, a, y_prefix);
  ABTerms out;
  if (sampling == SelectSampling::kMixture) {
    out.log_B = log_r;
    out.log_A = 2.0 * log_r;
  } else {
    double log_p = 0.0;
    for (double y : y_prefix) log_p += log_density_u(model, y).log_p;
    const double log_w = log_g_prefix - log_p;
    out.log_B = log_w + log_r;
    out.log_A = log_w + 2.0 * log_r;
  }
  return out;
}

std::vector<int> default_k_grid(int n, int stride) {
  if (stride <= 0) stride = n <= 200 ? 1 : (n + 99) / 100;
  std::vector<int> ks;
  for (int k = 1; k <= n - 2; k += stride) ks.push_back(k);
  if (ks.empty() || ks.back() != n - 2) ks.push_back(n - 2);
  return ks;
}

void re_point(const DistributionModel& model, int n, double a, int k, const KSelectOptions& opts,
              RECurve& curve) {
  if (k < 1 || k > n - 2) throw DomainError("re_curve: k must lie in [1, n−2]");
  if (opts.L == 0) throw DomainError("re_curve: L must be positive");
  MixtureConfig mc;
  mc.n = n;
  mc.k = k;
  mc.a = a;
  mc.M = opts.M;
  mc.eval = opts.eval;
  mc.quad_panels = opts.quad_panels;
  mc.quad_order = opts.quad_order;
  mc.tail = TailMode::kTilted;
  mc.mixing = opts.mixing;
  mc.gnv = opts.gnv;
  const Mixture mix(model, mc);

  const std::size_t L = opts.L;
  std::vector<ABTerms> terms(L);
  std::vector<char> dropped(L, 0);
  const int threads = resolve_threads(opts.threads);
  const auto index = static_cast<std::uint64_t>(k) << 32;
  parallel_for(L, threads, [&](std::size_t l) {
    Rng rng = Rng::substream(opts.seed, StreamTag::kSelect, index + l);
    std::vector<double> y;
    if (opts.sampling == SelectSampling::kMixture) {
      y = mix.sample_prefix(rng);
      if (y.empty()) {
        dropped[l] = 1;
        return;
      }
    } else {
      y = sample_base(model, rng, static_cast<std::size_t>(k));
    }
    try {
      const bool point = opts.numerator == SelectNumerator::kPoint;
      const double log_num =
          point ? eval_log_gnv(model, n, k, a, y, opts.gnv, &rng).log_gnv : kNaN;
      // Under mixture sampling with the point numerator g_nA never enters.
      const double log_g = point && opts.sampling == SelectSampling::kMixture
                               ? log_num
                               : mix.eval_log_prefix(y, rng);
      terms[l] = ab_terms(model, n, k, a, y, log_g, point ? log_num : log_g, opts.sampling);
    } catch (const DomainError&) {
      dropped[l] = 1;
    } catch (const DegenerateError&) {
      dropped[l] = 1;
    } catch (const BracketError&) {
      dropped[l] = 1;
    }
  });

  LogSumExp acc_a;
  LogSumExp acc_b;
  std::size_t kept = 0;
  for (std::size_t l = 0; l < L; ++l) {
    if (dropped[l]) continue;
    ++kept;
    acc_a.add(terms[l].log_A);
    acc_b.add(terms[l].log_B);
  }
  const double drop_rate = 1.0 - static_cast<double>(kept) / static_cast<double>(L);
  const bool valid = kept > 1 && drop_rate <= opts.max_drop_rate;
  double ere = std::nan("");
  double vre_raw = std::nan("");
  if (kept > 0) {
    // Dropped samples are excluded from the averages.
    const double log_kept = std::log(static_cast<double>(kept));
    const double b_hat = std::exp(acc_b.value() - log_kept);
    const double a_hat = std::exp(acc_a.value() - log_kept);
    ere = 1.0 - b_hat;
    vre_raw = a_hat - b_hat * b_hat;
  }
  const double vre = std::max(0.0, vre_raw);
  const double half = 2.0 * std::sqrt(vre);
  curve.ks.push_back(k);
  curve.ere.push_back(ere);
  curve.vre.push_back(vre);
  curve.vre_raw.push_back(vre_raw);
  curve.ci_lo.push_back(ere - half);
  curve.ci_hi.push_back(ere + half);
  curve.drop_rate.push_back(drop_rate);
  curve.valid.push_back(valid);
  curve.L_used = L;
}

RECurve re_curve(const DistributionModel& model, int n, double a, const std::vector<int>& ks,
                 const KSelectOptions& opts) {
  RECurve curve;
  for (int k : ks) re_point(model, n, a, k, opts, curve);
  return curve;
}

bool violates(const RECurve& curve, std::size_t index, double delta) {
  if (!curve.valid[index] || std::isnan(curve.ere[index])) return true;
  return curve.ci_lo[index] > delta || curve.ci_hi[index] < -delta;
}

int select_k(const DistributionModel& model, int n, double a, double delta,
             const KSelectOptions& opts, RECurve* curve_out) {
  if (!(delta > 0.0) && delta != 0.0) throw DomainError("select_k: delta must be non-negative");
  if (n < 3) throw DomainError("select_k: need n ≥ 3");
  const int cap = n - 2;
  if (std::isinf(delta)) return cap;
  RECurve curve;
  int chosen = 0;
  for (int k : default_k_grid(n, opts.stride)) {
    re_point(model, n, a, k, opts, curve);
    if (violates(curve, curve.ks.size() - 1, delta)) break;
    chosen = k;
  }
  if (curve_out != nullptr) *curve_out = curve;
  if (chosen == 0) {
    throw NoFeasibleK("select_k: accuracy level " + std::to_string(delta) +
                      " is already violated at k = 1");
  }
  return chosen;
}

}  // namespace zvrare
