#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include "internal.hpp"
#include "zvrare/errors.hpp"
#include "zvrare/numeric.hpp"
#include "zvrare/oracle.hpp"

namespace zvrare::cli {

namespace {

using detail::json;

struct Output {
  std::filesystem::path dir;
  bool has_dir() const { return !dir.empty(); }
};

/// Exact tail when the family has one, with its z-score against `r`.
json oracle_block(const DistributionModel& model, const RunConfig& cfg, const EstimateReport* r) {
  json j;
  try {
    const double exact = exact_tail(model, cfg.n, cfg.a, cfg.event);
    j["exact"] = exact;
    if (r != nullptr && r->std_error > 0.0) j["z"] = (r->estimate - exact) / r->std_error;
  } catch (const UnsupportedError&) {
    j["exact"] = nullptr;
  }
  if (cfg.event == EventKind::kUpper && cfg.a > model.mean_u) {
    j["saddlepoint"] = saddlepoint_tail(model, cfg.n, cfg.a).value;
  }
  return j;
}

int run_estimate(const CommandSpec& spec, std::ostream& out, const Output& o) {
  const DistributionModel model = make_model(spec.run.model, spec.run.model_params);
  const EstimateReport r = estimate(model, spec.run);
  json j = detail::envelope(spec);
  j["result"] = detail::report_json(r, spec.emit_timings);
  j["theoretical_relative_error"] =
      r.scheme == Scheme::kCrude
          ? json(nullptr)
          : json(theoretical_re(spec.run.n, r.k_used, spec.run.a, r.L, r.scheme));
  j["oracle"] = oracle_block(model, spec.run, &r);
  const detail::CsvTable table = detail::estimate_table({{"main", &r}});
  if (o.has_dir()) {
    detail::save_json(o.dir / "report.json", j);
    table.save(o.dir / "estimate.csv");
    if (spec.write_replicates) detail::replicates_table(r.replicates).save(o.dir / "replicates.csv");
  }
  if (spec.format == Format::kJson) {
    out << j.dump(2) << '\n';
  } else {
    table.write(out);
  }
  return 0;
}

/// k chosen from an already computed curve by the select_k rule.
json k_from_curve(const RECurve& c, int n, double delta) {
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    if (!c.valid[i] || violates(c, i, delta)) {
      if (i == 0) return nullptr;
      return c.ks[i - 1];
    }
  }
  if (c.ks.empty()) return nullptr;
  return std::min(c.ks.back(), n - 2);
}

json curve_json(const RECurve& c) {
  json rows = json::array();
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    rows.push_back({{"k", c.ks[i]},
                    {"ere", c.ere[i]},
                    {"vre", c.vre[i]},
                    {"ci", {c.ci_lo[i], c.ci_hi[i]}},
                    {"drop_rate", c.drop_rate[i]},
                    {"valid", static_cast<bool>(c.valid[i])}});
  }
  return rows;
}

int run_curve(const CommandSpec& spec, std::ostream& out, const Output& o, bool select) {
  const RunConfig& cfg = spec.run;
  const DistributionModel model = make_model(cfg.model, cfg.model_params);
  const KSelectOptions opts = kselect_options(cfg);
  RECurve curve;
  json chosen;
  if (select) {
    chosen = select_k(model, cfg.n, cfg.a, cfg.delta, opts, &curve);
  } else {
    const std::vector<int> ks =
        spec.ks.empty() ? default_k_grid(cfg.n, cfg.select_stride) : spec.ks;
    curve = re_curve(model, cfg.n, cfg.a, ks, opts);
    chosen = k_from_curve(curve, cfg.n, cfg.delta);
  }
  json j = detail::envelope(spec);
  j["chosen_k"] = chosen;
  j["L"] = curve.L_used;
  j["curve"] = curve_json(curve);
  const detail::CsvTable table = detail::curve_table(curve);
  if (o.has_dir()) {
    detail::save_json(o.dir / "report.json", j);
    table.save(o.dir / "re_curve.csv");
  }
  if (spec.format == Format::kJson) {
    out << j.dump(2) << '\n';
  } else {
    table.write(out);
  }
  return 0;
}

int run_compare(const CommandSpec& spec, std::ostream& out, const Output& o) {
  const RunConfig& base = spec.run;
  const DistributionModel model = make_model(base.model, base.model_params);
  const double exact = [&] {
    try {
      return exact_tail(model, base.n, base.a, base.event);
    } catch (const UnsupportedError&) {
      return kNaN;
    }
  }();

  std::vector<std::pair<std::string, EstimateReport>> arms;
  if (spec.crude_L > 0) {
    RunConfig c = base;
    c.scheme = Scheme::kCrude;
    c.L = spec.crude_L;
    arms.emplace_back("crude", estimate(model, c));
  }
  RunConfig classical = base;
  classical.scheme = Scheme::kClassical;
  classical.L = spec.classical_L > 0 ? spec.classical_L : base.L;
  arms.emplace_back("classical", estimate(model, classical));
  RunConfig adaptive = base;
  adaptive.scheme = Scheme::kAdaptive;
  arms.emplace_back("adaptive", estimate(model, adaptive));
  const int k_main = arms.back().second.k_used;

  // Adaptive runs at fixed k share the master seed, so sweeps use common random numbers.
  std::map<int, EstimateReport> at_k;
  at_k.emplace(k_main, arms.back().second);
  const auto run_at = [&](int k) -> const EstimateReport& {
    auto it = at_k.find(k);
    if (it == at_k.end()) {
      RunConfig c = adaptive;
      c.k = k;
      it = at_k.emplace(k, estimate(model, c)).first;
    }
    return it->second;
  };

  json j = detail::envelope(spec);
  j["oracle"] = {{"exact", std::isnan(exact) ? json(nullptr) : json(exact)}};
  json arms_json = json::array();
  std::vector<std::pair<std::string, const EstimateReport*>> rows;
  for (const auto& [name, r] : arms) {
    json a = detail::report_json(r, spec.emit_timings);
    a["arm"] = name;
    if (!std::isnan(exact) && r.std_error > 0.0) a["z"] = (r.estimate - exact) / r.std_error;
    arms_json.push_back(a);
    rows.emplace_back(name, &r);
  }
  j["arms"] = arms_json;
  const EstimateReport& cl = arms[arms.size() - 2].second;
  const EstimateReport& ad = arms.back().second;
  j["importance_cv_ratio"] = ad.importance.cv > 0.0 ? json(cl.importance.cv / ad.importance.cv)
                                                    : json(nullptr);

  detail::CsvTable sweep("k_sweep", {"k", "estimate", "std_error", "lo_2sigma", "hi_2sigma",
                                     "hit_rate", "importance_cv", "aborts"});
  json sweep_json = json::array();
  for (int k : spec.sweep_ks) {
    const EstimateReport& r = run_at(k);
    sweep.add_row({std::to_string(k), detail::format_double(r.estimate),
                   detail::format_double(r.std_error),
                   detail::format_double(r.estimate - 2.0 * r.std_error),
                   detail::format_double(r.estimate + 2.0 * r.std_error),
                   detail::format_double(r.hit_rate), detail::format_double(r.importance.cv),
                   std::to_string(r.aborts)});
    sweep_json.push_back({{"k", k},
                          {"estimate", r.estimate},
                          {"std_error", r.std_error},
                          {"hit_rate", r.hit_rate},
                          {"importance_cv", r.importance.cv}});
  }
  j["sweep"] = sweep_json;

  std::vector<std::pair<std::string, const ImportanceSummary*>> histograms;
  histograms.emplace_back("classical", &cl.importance);
  for (int k : spec.histogram_ks) {
    histograms.emplace_back("k" + std::to_string(k), &run_at(k).importance);
  }

  detail::CsvTable mse_runs("mse_runs",
                            {"k", "seed", "mse_adaptive", "mse_classical", "ratio"});
  detail::CsvTable mse("mse_ratio", {"k", "median_ratio", "reference", "min_ratio", "max_ratio"});
  json mse_json = json::array();
  if (!spec.mse_ks.empty()) {
    // The replicate mean is unbiased, so its MSE is estimated by std_error².
    std::vector<double> classical_mse;
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < spec.mse_seeds; ++s) {
      seeds.push_back(base.seed + static_cast<std::uint64_t>(s));
      RunConfig c = classical;
      c.seed = seeds.back();
      c.L = spec.mse_L;
      const EstimateReport r = estimate(model, c);
      classical_mse.push_back(r.std_error * r.std_error);
    }
    for (int k : spec.mse_ks) {
      std::vector<double> ratios;
      for (int s = 0; s < spec.mse_seeds; ++s) {
        RunConfig c = adaptive;
        c.k = k;
        c.seed = seeds[s];
        c.L = spec.mse_L;
        const EstimateReport r = estimate(model, c);
        const double m = r.std_error * r.std_error;
        const double ratio = classical_mse[s] > 0.0 ? m / classical_mse[s] : kNaN;
        ratios.push_back(ratio);
        mse_runs.add_row({std::to_string(k), std::to_string(seeds[s]), detail::format_double(m),
                          detail::format_double(classical_mse[s]),
                          detail::format_double(ratio)});
      }
      const double med = median(ratios);
      const double ref = std::sqrt(static_cast<double>(base.n - k) / base.n);
      const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
      mse.add_row({std::to_string(k), detail::format_double(med), detail::format_double(ref),
                   detail::format_double(*lo), detail::format_double(*hi)});
      mse_json.push_back({{"k", k}, {"median_ratio", med}, {"reference", ref}});
    }
  }
  j["mse_ratio"] = mse_json;

  const detail::CsvTable table = detail::estimate_table(rows);
  if (o.has_dir()) {
    detail::save_json(o.dir / "report.json", j);
    table.save(o.dir / "compare.csv");
    if (!spec.sweep_ks.empty()) sweep.save(o.dir / "k_sweep.csv");
    for (const auto& [label, h] : histograms) {
      detail::histogram_table(*h).save(o.dir / ("importance_" + label + ".csv"));
    }
    if (!spec.mse_ks.empty()) {
      mse.save(o.dir / "mse_ratio.csv");
      mse_runs.save(o.dir / "mse_runs.csv");
    }
  }
  if (spec.format == Format::kJson) {
    out << j.dump(2) << '\n';
  } else {
    table.write(out);
  }
  return 0;
}

int run_oracle(const CommandSpec& spec, std::ostream& out, const Output& o) {
  const RunConfig& cfg = spec.run;
  const DistributionModel model = make_model(cfg.model, cfg.model_params);
  const std::vector<int> ns = spec.oracle_ns.empty() ? std::vector<int>{cfg.n} : spec.oracle_ns;
  detail::CsvTable table("oracle", {"n", "a", "event", "exact", "saddlepoint", "ratio", "rate_I",
                                    "psi"});
  json rows = json::array();
  for (int n : ns) {
    double exact = kNaN;
    try {
      exact = exact_tail(model, n, cfg.a, cfg.event);
    } catch (const UnsupportedError&) {
    }
    json row = {{"n", n}, {"a", cfg.a}, {"event", detail::event_name(cfg.event)}};
    row["exact"] = std::isnan(exact) ? json(nullptr) : json(exact);
    double sp = kNaN;
    double rate = kNaN;
    double psi = kNaN;
    if (cfg.event == EventKind::kUpper) {
      const TailResult t = saddlepoint_tail(model, n, cfg.a);
      sp = t.value;
      rate = t.rate_I;
      psi = t.psi;
      row["saddlepoint"] = sp;
      row["ratio"] = std::isnan(exact) ? json(nullptr) : json(sp / exact);
      row["rate_I"] = rate;
      row["psi"] = psi;
    }
    rows.push_back(row);
    table.add_row({std::to_string(n), detail::format_double(cfg.a),
                   detail::event_name(cfg.event), detail::format_double(exact),
                   detail::format_double(sp), detail::format_double(sp / exact),
                   detail::format_double(rate), detail::format_double(psi)});
  }
  json j = detail::envelope(spec);
  j["tails"] = rows;
  if (o.has_dir()) {
    detail::save_json(o.dir / "report.json", j);
    table.save(o.dir / "oracle.csv");
  }
  if (spec.format == Format::kJson) {
    out << j.dump(2) << '\n';
  } else {
    table.write(out);
  }
  return 0;
}

int run_conditions(const CommandSpec& spec, std::ostream& out, const Output& o) {
  const RunConfig& cfg = spec.run;
  if (cfg.k == 0) throw DomainError("conditions needs an integer --k");
  const DistributionModel model = make_model(cfg.model, cfg.model_params);
  const ConditionsReport r = check_conditions(model, cfg.n, cfg.k, cfg.a, spec.c, spec.eps);
  json j = detail::envelope(spec);
  j["diagnostics"] = {{"c_condition", r.c_condition},
                      {"a_condition", r.a_condition},
                      {"eps_condition", r.eps_condition},
                      {"v_integral", r.v_integral},
                      {"notes", r.notes}};
  if (o.has_dir()) detail::save_json(o.dir / "report.json", j);
  if (spec.format == Format::kCsv) {
    detail::CsvTable t("conditions", {"c_condition", "a_condition", "eps_condition", "v_integral"});
    t.add_row({detail::format_double(r.c_condition), detail::format_double(r.a_condition),
               detail::format_double(r.eps_condition), detail::format_double(r.v_integral)});
    t.write(out);
  } else {
    out << j.dump(2) << '\n';
  }
  return 0;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain:
    case ErrorKind::kUnsupported:
    case ErrorKind::kNoFeasibleK:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int run(const CommandSpec& spec, std::ostream& out) {
  Output o;
  const auto fail = [&](const std::string& kind, const std::string& what, int code) {
    const json e = detail::error_json(kind, what);
    out << e.dump(2) << '\n';
    if (o.has_dir()) {
      try {
        detail::save_json(o.dir / "error.json", e);
      } catch (const Error&) {
      }
    }
    return code;
  };
  try {
    o.dir = detail::prepare_out_dir(spec);
    if (spec.subcommand == "estimate") return run_estimate(spec, out, o);
    if (spec.subcommand == "select-k") return run_curve(spec, out, o, true);
    if (spec.subcommand == "re-curve") return run_curve(spec, out, o, false);
    if (spec.subcommand == "compare") return run_compare(spec, out, o);
    if (spec.subcommand == "oracle") return run_oracle(spec, out, o);
    if (spec.subcommand == "conditions") return run_conditions(spec, out, o);
    return fail("UsageError", "unknown subcommand '" + spec.subcommand + "'", 1);
  } catch (const Error& e) {
    return fail(e.name(), e.what(), exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 2);
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  int code = 0;
  const std::optional<CommandSpec> spec = parse_command_line(argc, argv, out, err, code);
  if (!spec) return code;
  return run(*spec, out);
}

}  // namespace zvrare::cli
