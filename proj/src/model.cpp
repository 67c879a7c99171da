#include "zvrare/model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "zvrare/errors.hpp"

namespace zvrare {

namespace {

constexpr double kProbeLimit = 1e6;

double domain_margin(const Interval& dom) {
  const double w = dom.width();
  return 1e-8 * (std::isfinite(w) ? w : 1.0);
}

/// Probe range: the domain pulled in by a relative margin, infinite ends
/// replaced by a large finite bound.
Interval probe_domain(const DistributionModel& model) {
  const Interval& dom = model.cumulant_domain;
  const double d = domain_margin(dom);
  Interval p;
  p.lo = std::isfinite(dom.lo) ? dom.lo + d : -kProbeLimit;
  p.hi = std::isfinite(dom.hi) ? dom.hi - d : kProbeLimit;
  return p;
}

struct RiddersResult {
  double value;
  double error;
};

/// Ridders' polynomial extrapolation of a central stencil whose error expands
/// in even powers of h.
template <class Stencil>
RiddersResult ridders(Stencil&& stencil, double h0) {
  constexpr int kTab = 10;
  constexpr double kCon = 1.4;
  constexpr double kCon2 = kCon * kCon;
  double a[kTab][kTab];
  double h = h0;
  a[0][0] = stencil(h);
  RiddersResult best{a[0][0], kInf};
  for (int i = 1; i < kTab; ++i) {
    h /= kCon;
    a[0][i] = stencil(h);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double errt =
          std::max(std::fabs(a[j][i] - a[j - 1][i]), std::fabs(a[j][i] - a[j - 1][i - 1]));
      if (errt <= best.error) {
        best.error = errt;
        best.value = a[j][i];
      }
    }
    if (std::fabs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * best.error) break;
  }
  return best;
}

void check_inside(const DistributionModel& model, double t) {
  if (!model.cumulant_domain.contains(t) || !std::isfinite(t)) {
    throw DomainError("cumulants: t = " + std::to_string(t) + " is outside the cumulant domain of " +
                      model.name);
  }
}

}  // namespace

CumulantQuad cumulants_numeric(const DistributionModel& model, double t) {
  check_inside(model, t);
  const Interval& dom = model.cumulant_domain;
  const double dist = std::min(t - dom.lo, dom.hi - t);
  const double h0 = std::min(0.1 * std::max(1.0, std::fabs(t)), dist / 3.0);
  const auto& k = model.cumulant;

  CumulantQuad q;
  q.kappa = k(t);
  const RiddersResult d1 = ridders([&](double h) { return (k(t + h) - k(t - h)) / (2.0 * h); }, h0);
  const RiddersResult d2 =
      ridders([&](double h) { return (k(t + h) - 2.0 * q.kappa + k(t - h)) / (h * h); }, h0);
  const RiddersResult d3 = ridders(
      [&](double h) {
        return (k(t + 2.0 * h) - 2.0 * k(t + h) + 2.0 * k(t - h) - k(t - 2.0 * h)) /
               (2.0 * h * h * h);
      },
      h0 / 2.0);
  q.m = d1.value;
  q.s2 = d2.value;
  q.mu3 = d3.value;
  const auto lost = [](const RiddersResult& r) {
    return !std::isfinite(r.value) || !(r.error <= 1e-3 * std::max(1.0, std::fabs(r.value)));
  };
  if (!std::isfinite(q.kappa) || lost(d1) || lost(d2) || lost(d3)) {
    throw NumericalError("cumulants: finite differences lost precision at t = " +
                         std::to_string(t) + " for " + model.name);
  }
  if (!(q.s2 > 0.0)) {
    throw NumericalError("cumulants: non-positive s² at t = " + std::to_string(t) + " for " +
                         model.name);
  }
  return q;
}

CumulantQuad cumulants(const DistributionModel& model, double t) {
  if (model.analytic_cumulants) {
    check_inside(model, t);
    return model.analytic_cumulants(t);
  }
  return cumulants_numeric(model, t);
}

Interval m_image(const DistributionModel& model) {
  if (model.m_image) return *model.m_image;
  const Interval p = probe_domain(model);
  return Interval{cumulants(model, p.lo).m, cumulants(model, p.hi).m};
}

double m_inverse(const DistributionModel& model, double v) {
  if (!std::isfinite(v)) throw BracketError("m_inverse: non-finite target");
  if (model.m_image && !model.m_image->contains(v)) {
    throw BracketError("m_inverse: v = " + std::to_string(v) + " is outside the image of m for " +
                       model.name);
  }
  if (model.analytic_m_inverse) return model.analytic_m_inverse(v);

  const double tol = 1e-10 * std::max(1.0, std::fabs(v));
  const Interval p = probe_domain(model);
  const double s2_0 = cumulants(model, 0.0).s2;
  double t = std::clamp((v - model.mean_u) / s2_0, p.lo, p.hi);

  CumulantQuad q = cumulants(model, t);
  double f = q.m - v;
  if (std::fabs(f) <= tol) return t;

  // Bracket by geometric expansion away from the initial guess.
  double lo = t;
  double hi = t;
  double step = std::max(0.5, 0.5 * std::fabs(t));
  const int dir = f < 0.0 ? 1 : -1;
  for (;;) {
    double probe = t + dir * step;
    probe = std::clamp(probe, p.lo, p.hi);
    const double fp = cumulants(model, probe).m - v;
    if (dir > 0) {
      if (fp >= 0.0) {
        hi = probe;
        break;
      }
      lo = probe;
    } else {
      if (fp <= 0.0) {
        lo = probe;
        break;
      }
      hi = probe;
    }
    if (probe == p.lo || probe == p.hi) {
      throw BracketError("m_inverse: cannot bracket v = " + std::to_string(v) +
                         " inside the cumulant domain of " + model.name);
    }
    step *= 2.0;
  }

  // Newton on m(t) = v, bisecting whenever a step leaves the bracket.
  t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 300; ++iter) {
    q = cumulants(model, t);
    f = q.m - v;
    if (std::fabs(f) <= tol) return t;
    if (f < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = t - f / q.s2;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(t)) break;
    t = next;
  }
  throw NumericalError("m_inverse: no convergence for v = " + std::to_string(v) + " (" +
                       model.name + ")");
}

PointEval log_density_u(const DistributionModel& model, double x) {
  PointEval e;
  e.u = model.u(x);
  if (!model.support.contains(x)) return e;
  e.log_p = model.base_log_density(x);
  if (std::isnan(e.log_p)) e.log_p = kNegInf;
  return e;
}

std::vector<double> sample_base(const DistributionModel& model, Rng& rng, std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = model.base_sampler(rng);
  return out;
}

double variance_u(const DistributionModel& model) { return cumulants(model, 0.0).s2; }

DistributionModel gaussian(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(mean)) throw DomainError("gaussian: need sd > 0");
  const double var = sd * sd;
  DistributionModel m;
  m.name = "gaussian";
  m.base_log_density = [mean, var](double x) { return log_normal_pdf(mean, var, x); };
  m.u = [](double x) { return x; };
  m.cumulant = [mean, var](double t) { return mean * t + 0.5 * var * t * t; };
  m.cumulant_domain = Interval{};
  m.base_sampler = [mean, sd](Rng& r) { return r.normal(mean, sd); };
  m.mean_u = mean;
  m.support = Interval{};
  m.u_identity = true;
  m.analytic_cumulants = [mean, var](double t) {
    return CumulantQuad{mean * t + 0.5 * var * t * t, mean + var * t, var, 0.0};
  };
  m.analytic_m_inverse = [mean, var](double v) { return (v - mean) / var; };
  m.m_image = Interval{};
  m.u_log_density = m.base_log_density;
  m.tilted_sampler = [mean, var, sd](double t, Rng& r) { return r.normal(mean + var * t, sd); };
  m.log_kernel_mass = [mean, var](double kmean, double kvar) {
    return log_normal_pdf(mean, var + kvar, kmean);
  };
  m.kernel_sampler = [mean, var](double kmean, double kvar, Rng& r) {
    const double post_mean = (kvar * mean + var * kmean) / (kvar + var);
    const double post_var = kvar * var / (kvar + var);
    return r.normal(post_mean, std::sqrt(post_var));
  };
  m.family = GaussianFamily{mean, sd};
  return m;
}

DistributionModel centered_exponential() {
  DistributionModel m;
  m.name = "centered-exp";
  m.base_log_density = [](double x) { return x > -1.0 ? -(x + 1.0) : kNegInf; };
  m.u = [](double x) { return x; };
  m.cumulant = [](double t) { return t < 1.0 ? -t - std::log1p(-t) : kInf; };
  m.cumulant_domain = Interval{kNegInf, 1.0};
  m.base_sampler = [](Rng& r) { return r.exponential() - 1.0; };
  m.mean_u = 0.0;
  m.support = Interval{-1.0, kInf};
  m.u_identity = true;
  m.analytic_cumulants = [](double t) {
    const double r = 1.0 / (1.0 - t);
    return CumulantQuad{-t - std::log1p(-t), r - 1.0, r * r, 2.0 * r * r * r};
  };
  m.analytic_m_inverse = [](double v) { return v / (1.0 + v); };
  m.m_image = Interval{-1.0, kInf};
  m.u_log_density = m.base_log_density;
  m.tilted_sampler = [](double t, Rng& r) { return r.exponential() / (1.0 - t) - 1.0; };
  // p_X(x)𝔫(μ, σ², x) = exp(−1 − μ + σ²/2)·𝔫(μ − σ², σ², x) on (−1, ∞).
  m.log_kernel_mass = [](double kmean, double kvar) {
    const double sd = std::sqrt(kvar);
    return -1.0 - kmean + 0.5 * kvar + log_normal_sf((-1.0 - kmean + kvar) / sd);
  };
  m.kernel_sampler = [](double kmean, double kvar, Rng& r) {
    return sample_truncated_normal_below(r, kmean - kvar, std::sqrt(kvar), -1.0);
  };
  m.family = ExponentialFamily{};
  return m;
}

DistributionModel strip_overrides(const DistributionModel& model) {
  DistributionModel m;
  m.name = model.name + "-generic";
  m.base_log_density = model.base_log_density;
  m.u = model.u;
  m.cumulant = model.cumulant;
  m.cumulant_domain = model.cumulant_domain;
  m.base_sampler = model.base_sampler;
  m.mean_u = model.mean_u;
  m.support = model.support;
  m.u_identity = model.u_identity;
  m.u_log_density = model.u_log_density;
  return m;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, ModelFactory>& registry() {
  static std::map<std::string, ModelFactory> reg = [] {
    std::map<std::string, ModelFactory> r;
    r["gaussian"] = [](const ModelParams& p) {
      for (const auto& [key, value] : p) {
        if (key != "mu" && key != "sigma") {
          throw DomainError("gaussian: unknown parameter '" + key + "'");
        }
      }
      const auto get = [&](const char* key, double def) {
        const auto it = p.find(key);
        return it == p.end() ? def : it->second;
      };
      return gaussian(get("mu", 0.0), get("sigma", 1.0));
    };
    r["centered-exp"] = [](const ModelParams& p) {
      if (!p.empty()) throw DomainError("centered-exp takes no parameters");
      return centered_exponential();
    };
    return r;
  }();
  return reg;
}

}  // namespace

void register_model(const std::string& name, ModelFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[name] = std::move(factory);
}

DistributionModel make_model(const std::string& name, const ModelParams& params) {
  ModelFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    const auto it = registry().find(name);
    if (it == registry().end()) throw DomainError("unknown model '" + name + "'");
    factory = it->second;
  }
  return factory(params);
}

std::vector<std::string> registered_models() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [name, f] : registry()) names.push_back(name);
  return names;
}

}  // namespace zvrare
