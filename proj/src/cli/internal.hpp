#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zvrare/cli.hpp"
#include "zvrare/kselect.hpp"

namespace zvrare::cli::detail {

using json = nlohmann::ordered_json;

/// (name, TOML text) of every preset compiled into the binary.
const std::vector<std::pair<std::string, std::string>>& embedded_presets();

const char* event_name(EventKind e);
const char* eval_name(MixtureEval e);
const char* tail_name(TailMode t);
const char* mixing_name(MixingKind m);
const char* centering_name(KernelCentering c);
const char* sampling_name(SelectSampling s);
const char* numerator_name(SelectNumerator s);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

/// Flat echo of every setting that can change the numbers (threads excluded).
json config_echo(const CommandSpec& spec);

/// tool, version, command, seed and config echo.
json envelope(const CommandSpec& spec);

json report_json(const EstimateReport& r, bool timings);
json importance_json(const ImportanceSummary& s);
json error_json(const std::string& kind, const std::string& message);

/// Comma-separated table whose first line is the versioned schema comment.
class CsvTable {
 public:
  CsvTable(std::string schema, std::vector<std::string> columns);
  void add_row(std::vector<std::string> cells);
  void write(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable estimate_table(const std::vector<std::pair<std::string, const EstimateReport*>>& rows);
CsvTable histogram_table(const ImportanceSummary& s);
CsvTable curve_table(const RECurve& c);
CsvTable replicates_table(const std::vector<double>& values);

/// Creates the output directory when one was requested.
std::filesystem::path prepare_out_dir(const CommandSpec& spec);

void save_json(const std::filesystem::path& path, const json& j);

}  // namespace zvrare::cli::detail
