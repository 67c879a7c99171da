#include <charconv>
#include <cmath>
#include <ostream>

#include "internal.hpp"
#include "zvrare/errors.hpp"
#include "zvrare/version.hpp"

namespace zvrare::cli::detail {

const char* event_name(EventKind e) {
  return e == EventKind::kUpper ? "upper" : "symmetric";
}

const char* eval_name(MixtureEval e) {
  switch (e) {
    case MixtureEval::kAuto: return "auto";
    case MixtureEval::kMonteCarlo: return "mc";
    case MixtureEval::kQuadrature: return "quadrature";
  }
  return "auto";
}

const char* tail_name(TailMode t) {
  switch (t) {
    case TailMode::kAuto: return "auto";
    case TailMode::kTilted: return "tilted";
    case TailMode::kPointMass: return "point-mass";
  }
  return "auto";
}

const char* mixing_name(MixingKind m) {
  return m == MixingKind::kExponential ? "exponential" : "exact";
}

const char* centering_name(KernelCentering c) {
  return c == KernelCentering::kPrinted ? "printed" : "exact-chain";
}

const char* sampling_name(SelectSampling s) {
  return s == SelectSampling::kMixture ? "mixture" : "base";
}

const char* numerator_name(SelectNumerator s) {
  return s == SelectNumerator::kPoint ? "point" : "mixture";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json config_echo(const CommandSpec& s) {
  const RunConfig& r = s.run;
  json c;
  c["preset"] = s.preset;
  c["model"] = r.model;
  json params = json::object();
  for (const auto& [key, value] : r.model_params) params[key] = value;
  c["model_params"] = params;
  c["n"] = r.n;
  c["a"] = r.a;
  c["event"] = event_name(r.event);
  c["L"] = r.L;
  c["k"] = s.k_text;
  c["M"] = r.M;
  c["delta"] = r.delta;
  c["scheme"] = scheme_name(r.scheme);
  c["mixture_eval"] = eval_name(r.mixture_eval);
  c["quad_panels"] = r.quad_panels;
  c["quad_order"] = r.quad_order;
  c["tail"] = tail_name(r.tail);
  c["mixing"] = mixing_name(r.mixing);
  c["centering"] = centering_name(r.gnv.centering);
  c["tau_fast_path"] = r.gnv.tau_fast_path;
  c["normalizer_draws"] = r.gnv.normalizer_draws;
  c["select_L"] = r.select_L;
  c["select_sampling"] = sampling_name(r.select_sampling);
  c["select_numerator"] = numerator_name(r.select_numerator);
  c["select_stride"] = r.select_stride;
  c["bins"] = r.histogram_bins;
  if (s.subcommand == "re-curve") c["ks"] = s.ks;
  if (s.subcommand == "compare") {
    c["classical_L"] = s.classical_L;
    c["crude_L"] = s.crude_L;
    c["sweep_ks"] = s.sweep_ks;
    c["histogram_ks"] = s.histogram_ks;
    c["mse_ks"] = s.mse_ks;
    c["mse_seeds"] = s.mse_seeds;
    c["mse_L"] = s.mse_L;
  }
  if (s.subcommand == "oracle") c["ns"] = s.oracle_ns;
  if (s.subcommand == "conditions") {
    c["c"] = s.c;
    c["eps"] = s.eps;
  }
  return c;
}

json envelope(const CommandSpec& s) {
  json j;
  j["tool"] = "zvrare";
  j["version"] = kVersion;
  j["command"] = s.subcommand;
  j["seed"] = s.run.seed;
  j["config"] = config_echo(s);
  return j;
}

json importance_json(const ImportanceSummary& s) {
  json j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["cv"] = s.cv;
  return j;
}

json report_json(const EstimateReport& r, bool timings) {
  json j;
  j["scheme"] = scheme_name(r.scheme);
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["ci95"] = {r.ci_lo, r.ci_hi};
  j["relative_error"] = r.relative_error;
  j["L"] = r.L;
  j["hits"] = r.hits;
  j["hit_rate"] = r.hit_rate;
  j["aborts"] = r.aborts;
  if (r.scheme == Scheme::kAdaptive) j["k"] = r.k_used;
  j["trimmed_estimate"] = r.trimmed_estimate;
  j["trimmed_std_error"] = r.trimmed_std_error;
  j["importance"] = importance_json(r.importance);
  j["warnings"] = r.warnings;
  if (timings) j["wall_seconds"] = r.wall_seconds;
  return j;
}

json error_json(const std::string& kind, const std::string& message) {
  json j;
  j["tool"] = "zvrare";
  j["version"] = kVersion;
  j["error"] = {{"kind", kind}, {"message", message}};
  return j;
}

CsvTable::CsvTable(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw DomainError("csv " + schema_ + ": row width does not match the header");
  }
  rows_.push_back(std::move(cells));
}

void CsvTable::write(std::ostream& os) const {
  os << csv_header_line(schema_) << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

void CsvTable::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path.string());
  write(os);
}

CsvTable estimate_table(const std::vector<std::pair<std::string, const EstimateReport*>>& rows) {
  CsvTable t("estimate", {"arm", "scheme", "k", "L", "estimate", "std_error", "ci_lo", "ci_hi",
                          "relative_error", "hits", "hit_rate", "aborts", "importance_cv",
                          "trimmed_estimate"});
  for (const auto& [arm, r] : rows) {
    t.add_row({arm, scheme_name(r->scheme), std::to_string(r->k_used), std::to_string(r->L),
               format_double(r->estimate), format_double(r->std_error), format_double(r->ci_lo),
               format_double(r->ci_hi), format_double(r->relative_error),
               std::to_string(r->hits), format_double(r->hit_rate), std::to_string(r->aborts),
               format_double(r->importance.cv), format_double(r->trimmed_estimate)});
  }
  return t;
}

CsvTable histogram_table(const ImportanceSummary& s) {
  CsvTable t("importance_histogram", {"bin_lo", "bin_hi", "count"});
  for (std::size_t b = 0; b < s.counts.size(); ++b) {
    t.add_row({format_double(s.edges[b]), format_double(s.edges[b + 1]),
               std::to_string(s.counts[b])});
  }
  return t;
}

CsvTable curve_table(const RECurve& c) {
  CsvTable t("re_curve",
             {"k", "ere", "vre", "vre_raw", "ci_lo", "ci_hi", "drop_rate", "valid"});
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    t.add_row({std::to_string(c.ks[i]), format_double(c.ere[i]), format_double(c.vre[i]),
               format_double(c.vre_raw[i]), format_double(c.ci_lo[i]), format_double(c.ci_hi[i]),
               format_double(c.drop_rate[i]), c.valid[i] ? "1" : "0"});
  }
  return t;
}

CsvTable replicates_table(const std::vector<double>& values) {
  CsvTable t("replicates", {"index", "value"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.add_row({std::to_string(i), format_double(values[i])});
  }
  return t;
}

std::filesystem::path prepare_out_dir(const CommandSpec& spec) {
  if (spec.out_dir.empty()) return {};
  std::filesystem::path p(spec.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw DomainError("cannot create output directory " + p.string() + ": " + ec.message());
  return p;
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace zvrare::cli::detail
