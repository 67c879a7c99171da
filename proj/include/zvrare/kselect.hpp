#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zvrare/mixture.hpp"
#include "zvrare/model.hpp"

namespace zvrare {

/// Law of the samples behind Â and B̂.
enum class SelectSampling {
  kMixture,  ///< prefixes drawn from g_nA, weights g/p̃ and (g/p̃)²
  kBase,     ///< prefixes drawn i.i.d. from p_X, reweighted by g_nA/p_X
};

/// Density set over the proxy p̃ in the ratio r.
enum class SelectNumerator {
  kPoint,    ///< g_na, the kernel at v = a, matching the point-condition proxy
  kMixture,  ///< g_nA
};

struct KSelectOptions {
  std::size_t L = 1000;
  std::size_t M = 100;
  SelectSampling sampling = SelectSampling::kMixture;
  SelectNumerator numerator = SelectNumerator::kPoint;
  MixtureEval eval = MixtureEval::kAuto;
  int quad_panels = 16;
  int quad_order = 16;
  MixingKind mixing = MixingKind::kExponential;
  GnvOptions gnv;
  int stride = 0;  ///< 0: every k for n ≤ 200, ⌈n/100⌉ above
  std::uint64_t seed = 1;
  int threads = 0;
  double max_drop_rate = 0.2;
};

/// Per-sample terms, in log space.
struct ABTerms {
  double log_A = kNegInf;
  double log_B = kNegInf;
};

/// log of the point-condition proxy p̃(y_1^k) of p_nA built from N and D.
/// Throws DomainError when m_k leaves the image of m.
double log_pnA_proxy(const DistributionModel& model, int n, int k, double a,
                     std::span<const double> y_prefix);

ABTerms ab_terms(const DistributionModel& model, int n, int k, double a,
                 std::span<const double> y_prefix, double log_g_prefix,
                 SelectSampling sampling = SelectSampling::kBase);

/// Same, with r = g_num/p̃ while the kBase weight keeps g_nA/p_X.
ABTerms ab_terms(const DistributionModel& model, int n, int k, double a,
                 std::span<const double> y_prefix, double log_g_prefix, double log_g_num,
                 SelectSampling sampling);

struct RECurve {
  std::vector<int> ks;
  std::vector<double> ere;
  std::vector<double> vre;      ///< clamped at 0
  std::vector<double> vre_raw;  ///< before clamping
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<double> drop_rate;
  std::vector<bool> valid;
  std::size_t L_used = 0;
};

std::vector<int> default_k_grid(int n, int stride = 0);

/// ERE-bar, VRE-bar and CI-bar at every k of `ks`.
RECurve re_curve(const DistributionModel& model, int n, double a, const std::vector<int>& ks,
                 const KSelectOptions& opts);

/// One point of the curve.
void re_point(const DistributionModel& model, int n, double a, int k, const KSelectOptions& opts,
              RECurve& curve);

/// True when the CI-bar of this entry lies wholly outside [−δ, δ].
bool violates(const RECurve& curve, std::size_t index, double delta);

/// Largest k before the first violation of the accuracy level δ, capped at
/// n−2. The scanned curve is returned through `curve_out` when given.
int select_k(const DistributionModel& model, int n, double a, double delta,
             const KSelectOptions& opts, RECurve* curve_out = nullptr);

}  // namespace zvrare
