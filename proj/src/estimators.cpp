#include "zvrare/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "zvrare/errors.hpp"
#include "zvrare/parallel.hpp"
#include "zvrare/tilt.hpp"

namespace zvrare {

namespace {

constexpr std::size_t kBlock = 1024;
constexpr double kZ95 = 1.959963984540054;

void finish_interval(EstimateReport& r) {
  r.ci_lo = std::max(0.0, r.estimate - kZ95 * r.std_error);
  r.ci_hi = r.estimate + kZ95 * r.std_error;
  if (r.hits == 0) {
    r.relative_error = kInf;
    r.warnings.push_back("zero hits: the estimate is 0 and its relative error is unbounded");
  } else {
    r.relative_error = r.estimate > 0.0 ? r.std_error / r.estimate : kInf;
  }
}

ImportanceSummary importance_summary(const std::vector<double>& values,
                                     const std::vector<char>& hits, std::size_t bins) {
  std::vector<double> f;
  for (std::size_t l = 0; l < values.size(); ++l) {
    if (hits[l]) f.push_back(values[l]);
  }
  ImportanceSummary s;
  s.count = f.size();
  if (f.empty()) return s;
  const SampleSummary st = summarize(f);
  s.min = st.min;
  s.max = st.max;
  s.mean = st.mean;
  s.cv = st.mean > 0.0 ? st.sd / st.mean : 0.0;
  if (bins == 0) return s;
  const double lo = st.min;
  const double hi = st.max > st.min ? st.max : st.min + 1.0;
  s.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) s.edges[b] = lo + (hi - lo) * b / bins;
  s.counts.assign(bins, 0);
  for (double x : f) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * bins);
    s.counts[std::min(b, bins - 1)]++;
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kCrude: return "crude";
    case Scheme::kClassical: return "classical";
    case Scheme::kAdaptive: return "adaptive";
  }
  return "unknown";
}

EstimateReport summarize_replicates(Scheme scheme, const std::vector<double>& values,
                                    const std::vector<char>& hits, std::size_t bins) {
  EstimateReport r;
  r.scheme = scheme;
  r.L = values.size();
  for (char h : hits) r.hits += h ? 1 : 0;
  r.hit_rate = r.L ? static_cast<double>(r.hits) / static_cast<double>(r.L) : 0.0;
  const SampleSummary st = summarize(values);
  r.estimate = st.mean;
  r.std_error = r.L ? st.sd / std::sqrt(static_cast<double>(r.L)) : 0.0;
  if (!values.empty()) {
    const double cut = quantile(values, 0.999);
    std::vector<double> kept;
    kept.reserve(values.size());
    for (double x : values) {
      if (x <= cut) kept.push_back(x);
    }
    const SampleSummary ts = summarize(kept);
    r.trimmed_estimate = ts.mean;
    r.trimmed_std_error = kept.empty() ? 0.0 : ts.sd / std::sqrt(static_cast<double>(kept.size()));
  }
  r.importance = importance_summary(values, hits, bins);
  finish_interval(r);
  return r;
}

EstimateReport estimate_crude(const DistributionModel& model, const RunConfig& cfg) {
  if (cfg.L == 0 || cfg.n < 1) throw DomainError("estimate_crude: need L ≥ 1 and n ≥ 1");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t blocks = (cfg.L + kBlock - 1) / kBlock;
  std::vector<std::size_t> block_hits(blocks, 0);
  std::vector<char> hits(cfg.keep_replicates ? cfg.L : 0, 0);
  parallel_for(blocks, resolve_threads(cfg.threads), [&](std::size_t b) {
    Rng rng = Rng::substream(cfg.seed, StreamTag::kCrude, b);
    const std::size_t end = std::min(cfg.L, (b + 1) * kBlock);
    std::size_t count = 0;
    for (std::size_t l = b * kBlock; l < end; ++l) {
      double s = 0.0;
      for (int i = 0; i < cfg.n; ++i) s += model.u(model.base_sampler(rng));
      const bool h = event_hit(cfg.event, s, cfg.n, cfg.a);
      count += h;
      if (cfg.keep_replicates) hits[l] = h;
    }
    block_hits[b] = count;
  });
  EstimateReport r;
  r.scheme = Scheme::kCrude;
  r.L = cfg.L;
  for (std::size_t c : block_hits) r.hits += c;
  const double p = static_cast<double>(r.hits) / static_cast<double>(r.L);
  r.estimate = p;
  r.hit_rate = p;
  r.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(r.L));
  r.trimmed_estimate = p;
  r.trimmed_std_error = r.std_error;
  r.importance.count = r.hits;
  if (r.hits > 0) {
    r.importance.min = r.importance.max = r.importance.mean = 1.0;
  }
  if (cfg.keep_replicates) {
    r.replicates.reserve(cfg.L);
    for (char h : hits) r.replicates.push_back(h ? 1.0 : 0.0);
  }
  finish_interval(r);
  r.config = cfg;
  r.wall_seconds = seconds_since(t0);
  return r;
}

EstimateReport estimate_classical(const DistributionModel& model, const RunConfig& cfg) {
  if (cfg.L == 0 || cfg.n < 1) throw DomainError("estimate_classical: need L ≥ 1 and n ≥ 1");
  if (!(cfg.a > model.mean_u)) {
    throw DomainError("estimate_classical: the tilted scheme needs a > E U");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const TiltedFamily fam = make_tilted(model, cfg.a);
  const std::size_t blocks = (cfg.L + kBlock - 1) / kBlock;
  std::vector<double> values(cfg.L, 0.0);
  std::vector<char> hits(cfg.L, 0);
  parallel_for(blocks, resolve_threads(cfg.threads), [&](std::size_t b) {
    Rng rng = Rng::substream(cfg.seed, StreamTag::kClassical, b);
    TiltedSampler sampler(fam, rng);
    const std::size_t end = std::min(cfg.L, (b + 1) * kBlock);
    for (std::size_t l = b * kBlock; l < end; ++l) {
      double s = 0.0;
      for (int i = 0; i < cfg.n; ++i) s += model.u(sampler.draw(rng));
      // ∏ p_X/π^a = exp(−t·ΣU + n·κ(t)).
      const bool h = event_hit(cfg.event, s, cfg.n, cfg.a);
      hits[l] = h;
      values[l] = h ? std::exp(-fam.t * s + cfg.n * fam.log_phi) : 0.0;
    }
  });
  EstimateReport r = summarize_replicates(Scheme::kClassical, values, hits, cfg.histogram_bins);
  if (cfg.keep_replicates) r.replicates = std::move(values);
  r.config = cfg;
  r.wall_seconds = seconds_since(t0);
  return r;
}

MixtureConfig mixture_config(const RunConfig& cfg, int k) {
  MixtureConfig mc;
  mc.n = cfg.n;
  mc.k = k;
  mc.a = cfg.a;
  mc.event = cfg.event;
  mc.M = cfg.M;
  mc.eval = cfg.mixture_eval;
  mc.quad_panels = cfg.quad_panels;
  mc.quad_order = cfg.quad_order;
  mc.tail = cfg.tail;
  mc.mixing = cfg.mixing;
  mc.gnv = cfg.gnv;
  return mc;
}

KSelectOptions kselect_options(const RunConfig& cfg) {
  KSelectOptions o;
  o.L = cfg.select_L;
  o.M = cfg.M;
  o.sampling = cfg.select_sampling;
  o.numerator = cfg.select_numerator;
  o.eval = cfg.mixture_eval;
  o.quad_panels = cfg.quad_panels;
  o.quad_order = cfg.quad_order;
  o.mixing = cfg.mixing;
  o.gnv = cfg.gnv;
  o.stride = cfg.select_stride;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  return o;
}

EstimateReport estimate_adaptive(const DistributionModel& model, const RunConfig& cfg) {
  if (cfg.L == 0) throw DomainError("estimate_adaptive: need L ≥ 1");
  const auto t0 = std::chrono::steady_clock::now();
  int k = cfg.k;
  if (k == 0) {
    if (cfg.event != EventKind::kUpper) {
      throw DomainError("estimate_adaptive: automatic k needs the one-sided event");
    }
    k = select_k(model, cfg.n, cfg.a, cfg.delta, kselect_options(cfg));
  }
  const Mixture mix(model, mixture_config(cfg, k));
  std::vector<double> values(cfg.L, 0.0);
  std::vector<char> hits(cfg.L, 0);
  std::vector<char> aborted(cfg.L, 0);
  parallel_for(cfg.L, resolve_threads(cfg.threads), [&](std::size_t l) {
    Rng path_rng = Rng::substream(cfg.seed, StreamTag::kPath, l);
    const PathSample ps = mix.sample_path_once(path_rng);
    if (ps.aborted) {
      // g_nA is a sub-density on the non-aborted paths; an aborted draw
      // contributes a zero replicate.
      aborted[l] = 1;
      return;
    }
    hits[l] = ps.hit;
    if (!ps.hit) return;
    Rng density_rng = Rng::substream(cfg.seed, StreamTag::kDensity, l);
    const double log_g = mix.eval_log_gnA(ps, density_rng);
    values[l] = std::exp(ps.log_p_base - log_g);
  });
  EstimateReport r = summarize_replicates(Scheme::kAdaptive, values, hits, cfg.histogram_bins);
  for (char a : aborted) r.aborts += a;
  r.k_used = k;
  if (cfg.keep_replicates) r.replicates = std::move(values);
  r.config = cfg;
  r.config.k = k;
  r.wall_seconds = seconds_since(t0);
  return r;
}

EstimateReport estimate(const DistributionModel& model, const RunConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::kCrude: return estimate_crude(model, cfg);
    case Scheme::kClassical: return estimate_classical(model, cfg);
    case Scheme::kAdaptive: return estimate_adaptive(model, cfg);
  }
  throw DomainError("estimate: unknown scheme");
}

EstimateReport estimate(const RunConfig& cfg) {
  const DistributionModel model = make_model(cfg.model, cfg.model_params);
  return estimate(model, cfg);
}

double theoretical_re(int n, int k, double a, std::size_t L, Scheme scheme) {
  if (L == 0) throw DomainError("theoretical_re: L must be positive");
  const double c = std::sqrt(2.0 * std::numbers::pi) * a / static_cast<double>(L);
  switch (scheme) {
    case Scheme::kClassical: return c * std::sqrt(static_cast<double>(n));
    case Scheme::kAdaptive:
      if (k < 1 || k > n - 1) throw DomainError("theoretical_re: k must lie in [1, n−1]");
      return c * std::sqrt(static_cast<double>(n - k - 1));
    case Scheme::kCrude: break;
  }
  throw DomainError("theoretical_re: defined for the classical and adaptive schemes only");
}

}  // namespace zvrare
