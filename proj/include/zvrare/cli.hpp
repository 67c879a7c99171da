#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zvrare/estimators.hpp"

namespace zvrare::cli {

enum class Format { kJson, kCsv };

/// Everything one invocation of the command line asks for.
struct CommandSpec {
  std::string subcommand;
  std::string config_path;
  std::string preset;
  std::string out_dir;
  Format format = Format::kJson;
  bool seed_given = false;
  bool emit_timings = false;
  bool write_replicates = false;

  RunConfig run;
  std::optional<double> mu;
  std::optional<double> sigma;
  std::string k_text = "auto";

  std::vector<int> ks;  ///< re-curve grid; empty means the default grid

  std::size_t classical_L = 0;  ///< 0: same as L
  std::size_t crude_L = 0;      ///< 0: crude arm skipped
  std::vector<int> sweep_ks;
  std::vector<int> histogram_ks;
  std::vector<int> mse_ks;
  int mse_seeds = 5;
  std::size_t mse_L = 2000;

  std::vector<int> oracle_ns;
  double c = 1.0;
  double eps = 0.01;
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();

/// TOML text of a built-in preset; throws DomainError for an unknown name.
const std::string& preset_text(const std::string& name);

/// Parses argv into a spec. Returns nullopt after printing help or a usage
/// error; `exit_code` then holds the status to return.
std::optional<CommandSpec> parse_command_line(int argc, const char* const* argv,
                                              std::ostream& out, std::ostream& err,
                                              int& exit_code);

/// Runs a parsed spec, writing the report to `out` and artifacts to
/// spec.out_dir. Returns the process exit status.
int run(const CommandSpec& spec, std::ostream& out);

/// parse_command_line followed by run.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zvrare::cli
