#include "zvrare/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "zvrare/errors.hpp"
#include "zvrare/oracle.hpp"
#include "zvrare/tilt.hpp"

namespace zvrare {

namespace {

/// log of the saddlepoint tail exp(−nI(x))/(√(2πn)·|ψ(x)|).
double log_saddle_tail(const DistributionModel& model, int n, double x) {
  const double t = m_inverse(model, x);
  const CumulantQuad q = cumulants(model, t);
  const double rate_i = x * t - q.kappa;
  const double psi = std::fabs(t) * std::sqrt(q.s2);
  return -n * rate_i - 0.5 * std::log(2.0 * std::numbers::pi * n) - std::log(psi);
}

}  // namespace

double MixingLaw::sample(Rng& rng) const {
  std::size_t b = 0;
  if (branches.size() > 1) {
    double w = rng.uniform();
    while (b + 1 < branches.size() && w > branches[b].weight) {
      w -= branches[b].weight;
      ++b;
    }
  }
  const MixingBranch& br = branches[b];
  return br.edge + br.direction * branch_quantile(b, rng.uniform());
}

namespace {

/// log P(D > d) on an exact branch.
double exact_log_survival(const MixingLaw& law, const MixingBranch& br, double d) {
  const double x = law.n * (br.edge + br.direction * d);
  const double lt = br.direction > 0.0 ? log_sum_tail(*law.model, law.n, x)
                                       : log_sum_cdf(*law.model, law.n, x);
  return lt - br.log_mass;
}

}  // namespace

double MixingLaw::branch_quantile(std::size_t b, double w) const {
  const MixingBranch& br = branches[b];
  if (kind == MixingKind::kExponential) return -std::log1p(-w) / br.rate;
  const double target = std::log1p(-w);
  const auto f = [&](double d) { return exact_log_survival(*this, br, d) - target; };
  double hi = 1.0 / br.rate;
  for (int it = 0; it < 200 && f(hi) > 0.0; ++it) hi *= 2.0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, 0.0, hi, -target, f(hi), boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (r.first + r.second);
}

double MixingLaw::branch_log_density(std::size_t b, double d) const {
  const MixingBranch& br = branches[b];
  if (!(d > 0.0)) return kNegInf;
  if (kind == MixingKind::kExponential) return std::log(br.rate) - br.rate * d;
  const double v = br.edge + br.direction * d;
  return std::log(static_cast<double>(n)) + log_sum_density(*model, n, n * v) - br.log_mass;
}

double MixingLaw::from_uniform(double w) const {
  const MixingBranch& br = branches.front();
  return br.edge + br.direction * branch_quantile(0, w);
}

double MixingLaw::log_density(double v) const {
  LogSumExp acc;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const MixingBranch& br = branches[b];
    const double d = br.direction * (v - br.edge);
    if (d > 0.0) acc.add(std::log(br.weight) + branch_log_density(b, d));
  }
  return acc.value();
}

double MixingLaw::mean() const {
  double m = 0.0;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const MixingBranch& br = branches[b];
    double mean_d = 1.0 / br.rate;
    if (kind == MixingKind::kExact) {
      // E D = ∫ P(D > d) dd.
      mean_d = integrate_half_line(
          [&](double d) { return std::exp(exact_log_survival(*this, br, d)); }, 0.0,
          1.0 / br.rate, 64, 16);
    }
    m += br.weight * (br.edge + br.direction * mean_d);
  }
  return m;
}

MixingLaw mixing_law(const DistributionModel& model, const MixtureConfig& cfg) {
  MixingLaw law;
  law.kind = cfg.mixing;
  law.n = cfg.n;
  if (cfg.mixing == MixingKind::kExact) law.model = &model;
  const double t_hi = m_inverse(model, cfg.a);
  if (cfg.event == EventKind::kUpper) {
    if (!(t_hi > 0.0)) {
      throw DomainError("mixing law: threshold a must exceed E U for the upper event");
    }
    MixingBranch br{cfg.a, 1.0, cfg.n * t_hi, 1.0, 0.0};
    if (law.kind == MixingKind::kExact) br.log_mass = log_sum_tail(model, cfg.n, cfg.n * cfg.a);
    law.branches.push_back(br);
    return law;
  }
  if (!(cfg.a > 0.0)) throw DomainError("mixing law: symmetric event needs a > 0");
  const double t_lo = m_inverse(model, -cfg.a);
  if (!(t_hi > 0.0) || !(t_lo < 0.0)) {
    throw DomainError("mixing law: symmetric event needs −a < E U < a");
  }
  double lw_hi = 0.0;
  double lw_lo = 0.0;
  if (law.kind == MixingKind::kExact) {
    lw_hi = log_sum_tail(model, cfg.n, cfg.n * cfg.a);
    lw_lo = log_sum_cdf(model, cfg.n, -cfg.n * cfg.a);
  } else {
    lw_hi = log_saddle_tail(model, cfg.n, cfg.a);
    lw_lo = log_saddle_tail(model, cfg.n, -cfg.a);
  }
  const double norm = log_add_exp(lw_hi, lw_lo);
  law.branches.push_back(MixingBranch{cfg.a, 1.0, cfg.n * t_hi, std::exp(lw_hi - norm), lw_hi});
  law.branches.push_back(
      MixingBranch{-cfg.a, -1.0, cfg.n * -t_lo, std::exp(lw_lo - norm), lw_lo});
  if (law.kind == MixingKind::kExponential) {
    for (auto& br : law.branches) br.log_mass = 0.0;
  }
  return law;
}

bool event_hit(EventKind event, double u_sum, int n, double a) {
  const double bound = static_cast<double>(n) * a;
  return event == EventKind::kUpper ? u_sum > bound : std::fabs(u_sum) > bound;
}

double tail_log_density(const DistributionModel& model, double v, double u_prefix_k, int n, int k,
                        std::span<const double> y_tail) {
  if (static_cast<int>(y_tail.size()) != n - k) {
    throw DomainError("tail_log_density: tail length must be n − k");
  }
  const double m_k = (static_cast<double>(n) * v - u_prefix_k) / (n - k);
  const TiltedFamily fam = make_tilted(model, m_k);
  double s = 0.0;
  for (double y : y_tail) s += tilted_log_density(fam, y);
  return s;
}

Mixture::Mixture(const DistributionModel& model, MixtureConfig cfg)
    : model_(model), cfg_(std::move(cfg)) {
  if (cfg_.n < 2) throw DomainError("mixture: n must be at least 2");
  if (cfg_.k < 1 || cfg_.k > cfg_.n - 1) {
    throw DomainError("mixture: k = " + std::to_string(cfg_.k) + " outside [1, n−1]");
  }
  if (cfg_.M == 0) throw DomainError("mixture: M must be positive");
  law_ = mixing_law(model_, cfg_);
  switch (cfg_.tail) {
    case TailMode::kAuto:
      point_mass_ = cfg_.k == cfg_.n - 1 && model_.u_identity;
      break;
    case TailMode::kTilted:
      point_mass_ = false;
      break;
    case TailMode::kPointMass:
      if (cfg_.k != cfg_.n - 1 || !model_.u_identity) {
        throw DomainError("mixture: point-mass tail needs k = n−1 and u(x) = x");
      }
      point_mass_ = true;
      break;
  }
  switch (cfg_.eval) {
    case MixtureEval::kAuto:
      quadrature_ = has_analytic_normalizer(model_);
      break;
    case MixtureEval::kMonteCarlo:
      quadrature_ = false;
      break;
    case MixtureEval::kQuadrature:
      quadrature_ = true;
      break;
  }
  if (quadrature_) {
    rule_ = composite_rule(0.0, 1.0, cfg_.quad_panels, cfg_.quad_order);
    constexpr int kScan = 64;
    for (std::size_t b = 0; b < law_.branches.size(); ++b) {
      std::vector<double> probes;
      for (int j = 0; j < kScan; ++j) probes.push_back(law_.branch_quantile(b, (j + 0.5) / kScan));
      quantile_probes_.push_back(std::move(probes));
    }
  }
}

PathSample Mixture::sample_path_once(Rng& rng) const {
  const int n = cfg_.n;
  const int k = cfg_.k;
  PathSample ps;
  ps.v_used = law_.sample(rng);
  GnvSample g = sample_gnv_once(model_, n, k, ps.v_used, rng, cfg_.gnv);
  if (g.aborted) {
    ps.aborted = true;
    return ps;
  }
  ps.y = std::move(g.y);
  ps.log_normalizers = std::move(g.log_normalizers);
  double u_sum = g.u_sum;
  double log_p = 0.0;
  for (double y : ps.y) log_p += log_density_u(model_, y).log_p;

  if (point_mass_) {
    const double y_n = static_cast<double>(n) * ps.v_used - u_sum;
    const PointEval e = log_density_u(model_, y_n);
    if (e.log_p == kNegInf) {
      ps.aborted = true;
      return ps;
    }
    ps.y.push_back(y_n);
    log_p += e.log_p;
    u_sum += e.u;
  } else {
    const double m_k = (static_cast<double>(n) * ps.v_used - u_sum) / (n - k);
    if (model_.m_image && !model_.m_image->contains(m_k)) {
      ps.aborted = true;
      return ps;
    }
    TiltedFamily fam;
    try {
      fam = make_tilted(model_, m_k);
    } catch (const BracketError&) {
      ps.aborted = true;
      return ps;
    }
    TiltedSampler tilted(fam, rng);
    for (int j = k; j < n; ++j) {
      const double y = tilted.draw(rng);
      const PointEval e = log_density_u(model_, y);
      ps.y.push_back(y);
      log_p += e.log_p;
      u_sum += e.u;
    }
  }
  ps.log_p_base = log_p;
  ps.hit = event_hit(cfg_.event, u_sum, n, cfg_.a);
  return ps;
}

PathSample Mixture::sample_path(Rng& rng) const {
  std::size_t aborts = 0;
  for (;;) {
    PathSample ps = sample_path_once(rng);
    if (!ps.aborted) {
      ps.aborts = aborts;
      return ps;
    }
    if (++aborts > cfg_.gnv.retry_budget) {
      throw DegenerateError("sample_path: retry budget exhausted after " +
                            std::to_string(aborts) + " aborted paths");
    }
  }
}

double Mixture::log_ratio_at(double v, const std::vector<double>& u, int k, double tail_sum,
                             Rng& rng) const {
  const double r = detail::gnv_log_ratio(model_, cfg_.n, k, v, u.data(), cfg_.gnv, &rng);
  if (r == kNegInf || std::isnan(tail_sum)) return r;
  // i.i.d. tilted tail: only its sufficient statistic enters.
  double prefix = 0.0;
  for (int j = 0; j < k; ++j) prefix += u[j];
  const int rest = cfg_.n - k;
  const double m_k = (static_cast<double>(cfg_.n) * v - prefix) / rest;
  if (model_.m_image && !model_.m_image->contains(m_k)) return kNegInf;
  try {
    const double t_k = m_inverse(model_, m_k);
    return r + t_k * tail_sum - rest * cumulants(model_, t_k).kappa;
  } catch (const Error&) {
    return kNegInf;
  }
}

double Mixture::branch_log_integral(std::size_t b, const std::vector<double>& u, int k,
                                    double tail_sum, double u_mean, Rng& rng) const {
  const MixingBranch& br = law_.branches[b];
  // ψ(d) = log f_b(v) + log h(v) at v = edge + direction·d, d > 0.
  const auto psi = [&](double d) {
    const double v = br.edge + br.direction * d;
    const double lf = law_.branch_log_density(b, d);
    return lf == kNegInf ? kNegInf : lf + log_ratio_at(v, u, k, tail_sum, rng);
  };
  const double scale = 1.0 / br.rate;
  const double reach = 40.0 * scale + 2.0 * std::max(0.0, br.direction * (u_mean - br.edge));

  // Coarse scan on both the mixing-law quantile scale and a uniform grid.
  std::vector<double> probes = quantile_probes_[b];
  const int scan = static_cast<int>(probes.size());
  for (int j = 0; j < scan; ++j) probes.push_back(reach * (j + 0.5) / scan);
  std::sort(probes.begin(), probes.end());
  std::size_t best = 0;
  double best_val = kNegInf;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const double val = psi(probes[j]);
    if (val > best_val) {
      best_val = val;
      best = j;
    }
  }
  if (best_val == kNegInf) return kNegInf;

  // Golden-section refinement between the neighbours of the best probe.
  double lo = best == 0 ? 0.0 : probes[best - 1];
  double hi = best + 1 < probes.size() ? probes[best + 1] : 2.0 * probes[best];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = psi(x1);
  double f2 = psi(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = psi(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = psi(x1);
    }
  }
  double mode = probes[best];
  double peak = best_val;
  if (f1 > peak) {
    peak = f1;
    mode = x1;
  }
  if (f2 > peak) {
    peak = f2;
    mode = x2;
  }

  // Window where ψ stays within kDrop of the peak.
  constexpr double kDrop = 30.0;
  const double floor_val = peak - kDrop;
  const auto bisect = [&](double inside, double outside) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (psi(mid) > floor_val) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return outside;
  };
  const double left = psi(0.0) > floor_val ? 0.0 : bisect(mode, 0.0);
  double step = std::max({mode - left, scale, 1e-9});
  double right = mode + step;
  for (int it = 0; it < 60 && psi(right) > floor_val; ++it) {
    step *= 2.0;
    right = mode + step;
  }
  right = bisect(mode, right);

  LogSumExp acc;
  const GaussLegendre& rule = rule_;
  const double width = right - left;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    acc.add(std::log(rule.weights[j] * width) + psi(left + width * rule.nodes[j]));
  }
  return acc.value();
}

double Mixture::integrate_log(const std::vector<double>& u, int k, double tail_sum,
                              bool with_tail, Rng& rng) const {
  const double ts = with_tail ? tail_sum : std::nan("");
  LogSumExp acc;
  double log_scale = 0.0;
  if (quadrature_) {
    double u_total = 0.0;
    for (double x : u) u_total += x;
    const double u_mean = u_total / static_cast<double>(u.size());
    for (std::size_t b = 0; b < law_.branches.size(); ++b) {
      acc.add(std::log(law_.branches[b].weight) + branch_log_integral(b, u, k, ts, u_mean, rng));
    }
  } else {
    for (std::size_t m = 0; m < cfg_.M; ++m) acc.add(log_ratio_at(law_.sample(rng), u, k, ts, rng));
    log_scale = -std::log(static_cast<double>(cfg_.M));
  }
  const double out = acc.value();
  if (out == kNegInf) {
    throw DegenerateError("eval_log_gnA: every mixture component vanished on this path");
  }
  return out + log_scale;
}

namespace {

struct PathStats {
  std::vector<double> u;
  double log_p = 0.0;
  double u_sum = 0.0;
};

PathStats path_stats(const DistributionModel& model, std::span<const double> y) {
  PathStats st;
  st.u.reserve(y.size());
  for (double x : y) {
    const PointEval e = log_density_u(model, x);
    st.u.push_back(e.u);
    st.log_p += e.log_p;
    st.u_sum += e.u;
  }
  return st;
}

}  // namespace

double Mixture::eval_log_gnA(const PathSample& path, Rng& rng) const {
  const int n = cfg_.n;
  const int k = cfg_.k;
  if (static_cast<int>(path.y.size()) != n) throw DomainError("eval_log_gnA: path length ≠ n");
  const PathStats st = path_stats(model_, path.y);
  if (st.log_p == kNegInf) return kNegInf;
  if (point_mass_) {
    // (y_1^{n−1}, v) ↦ y_1^n has Jacobian n.
    const double v = st.u_sum / n;
    const double log_f = law_.log_density(v);
    if (log_f == kNegInf) return kNegInf;
    const bool reuse = !has_analytic_normalizer(model_) &&
                       path.log_normalizers.size() == static_cast<std::size_t>(n - 2);
    const double r = detail::gnv_log_ratio(model_, n, n - 1, v, st.u.data(), cfg_.gnv, &rng,
                                           reuse ? path.log_normalizers.data() : nullptr);
    // y_n is determined by the rest; its base density does not enter.
    const double log_p_prefix = st.log_p - log_density_u(model_, path.y.back()).log_p;
    return log_p_prefix + log_f - std::log(static_cast<double>(n)) + r;
  }
  double tail_sum = 0.0;
  for (int j = k; j < n; ++j) tail_sum += st.u[j];
  return st.log_p + integrate_log(st.u, k, tail_sum, true, rng);
}

double Mixture::eval_log_gnA_at(const PathSample& path, std::span<const double> vs,
                                Rng& rng) const {
  const int n = cfg_.n;
  const int k = cfg_.k;
  if (point_mass_) throw DomainError("eval_log_gnA_at: not defined for the point-mass tail");
  if (vs.empty()) throw DomainError("eval_log_gnA_at: no components");
  if (static_cast<int>(path.y.size()) != n) throw DomainError("eval_log_gnA_at: path length ≠ n");
  const PathStats st = path_stats(model_, path.y);
  if (st.log_p == kNegInf) return kNegInf;
  double tail_sum = 0.0;
  for (int j = k; j < n; ++j) tail_sum += st.u[j];
  LogSumExp acc;
  for (double v : vs) acc.add(log_ratio_at(v, st.u, k, tail_sum, rng));
  return st.log_p + acc.value() - std::log(static_cast<double>(vs.size()));
}

double Mixture::eval_log_prefix(std::span<const double> y_prefix, Rng& rng) const {
  const int k = cfg_.k;
  if (static_cast<int>(y_prefix.size()) != k) throw DomainError("eval_log_prefix: length ≠ k");
  const PathStats st = path_stats(model_, y_prefix);
  if (st.log_p == kNegInf) return kNegInf;
  return st.log_p + integrate_log(st.u, k, 0.0, false, rng);
}

std::vector<double> Mixture::sample_prefix(Rng& rng, std::size_t* aborts) const {
  const double v = law_.sample(rng);
  GnvSample g = sample_gnv_once(model_, cfg_.n, cfg_.k, v, rng, cfg_.gnv);
  if (g.aborted) {
    if (aborts != nullptr) ++*aborts;
    return {};
  }
  return std::move(g.y);
}

double sample_v(const DistributionModel& model, const MixtureConfig& cfg, Rng& rng) {
  return mixing_law(model, cfg).sample(rng);
}

PathSample sample_path(const DistributionModel& model, const MixtureConfig& cfg, Rng& rng) {
  return Mixture(model, cfg).sample_path(rng);
}

double eval_log_gnA(const DistributionModel& model, const MixtureConfig& cfg,
                    const PathSample& path, Rng& rng) {
  return Mixture(model, cfg).eval_log_gnA(path, rng);
}

}  // namespace zvrare
