#include <cstring>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "internal.hpp"
#include "zvrare/errors.hpp"
#include "zvrare/version.hpp"

namespace zvrare::cli {

namespace {

const std::map<std::string, EventKind> kEvents{{"upper", EventKind::kUpper},
                                               {"symmetric", EventKind::kSymmetric}};
const std::map<std::string, Scheme> kSchemes{{"crude", Scheme::kCrude},
                                             {"classical", Scheme::kClassical},
                                             {"adaptive", Scheme::kAdaptive}};
const std::map<std::string, MixtureEval> kEvals{{"auto", MixtureEval::kAuto},
                                                {"mc", MixtureEval::kMonteCarlo},
                                                {"quadrature", MixtureEval::kQuadrature}};
const std::map<std::string, TailMode> kTails{{"auto", TailMode::kAuto},
                                             {"tilted", TailMode::kTilted},
                                             {"point-mass", TailMode::kPointMass}};
const std::map<std::string, KernelCentering> kCenterings{
    {"printed", KernelCentering::kPrinted}, {"exact-chain", KernelCentering::kExactChain}};
const std::map<std::string, SelectSampling> kSamplings{{"mixture", SelectSampling::kMixture},
                                                       {"base", SelectSampling::kBase}};
const std::map<std::string, SelectNumerator> kNumerators{{"point", SelectNumerator::kPoint},
                                                         {"mixture", SelectNumerator::kMixture}};
const std::map<std::string, MixingKind> kMixings{{"exponential", MixingKind::kExponential},
                                                 {"exact", MixingKind::kExact}};
const std::map<std::string, Format> kFormats{{"json", Format::kJson}, {"csv", Format::kCsv}};

const std::vector<std::pair<const char*, const char*>> kSubcommands{
    {"estimate", "one IS estimate of P(mean of u(X) in the event)"},
    {"select-k", "choose k from the ERE/VRE curve at accuracy delta"},
    {"re-curve", "ERE-bar, VRE-bar and their interval over a grid of k"},
    {"compare", "crude, classical and adaptive side by side, k sweeps and MSE ratios"},
    {"oracle", "exact and saddlepoint tail values"},
    {"conditions", "growth-condition diagnostics at (n, k, a)"},
};

std::string find_preset_arg(int argc, const char* const* argv) {
  std::string name;
  for (int i = 1; i < argc; ++i) {
    const char* s = argv[i];
    if (std::strcmp(s, "--preset") == 0 && i + 1 < argc) {
      name = argv[i + 1];
    } else if (std::strncmp(s, "--preset=", 9) == 0) {
      name = s + 9;
    }
  }
  return name;
}

void apply_preset(CLI::App& app, const std::string& name) {
  std::istringstream in(preset_text(name));
  const std::vector<CLI::ConfigItem> items = CLI::ConfigTOML().from_config(in);
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = item.parents.empty() ? app.get_option_no_throw("--" + item.name) : nullptr;
    if (opt == nullptr) {
      throw DomainError("preset " + name + ": unknown key '" + item.fullname() + "'");
    }
    for (const std::string& v : item.inputs) opt->add_result(v);
    opt->run_callback();
    // Results are dropped so that the config file and flags still count as unset.
    opt->clear();
  }
}

void add_options(CLI::App& app, CommandSpec& s) {
  RunConfig& r = s.run;
  app.add_option("--preset", s.preset, "built-in preset (paper-6.1, paper-6.2, paper-6.3)");
  app.add_option("--model", r.model, "registered model name")->check([](const std::string& m) {
    for (const auto& name : registered_models()) {
      if (name == m) return std::string();
    }
    return "unknown model '" + m + "'";
  });
  app.add_option("--mu", s.mu, "gaussian mean");
  app.add_option("--sigma", s.sigma, "gaussian standard deviation");
  app.add_option("--n", r.n, "number of summands")->check(CLI::PositiveNumber);
  app.add_option("--a", r.a, "threshold on the mean");
  app.add_option("--event", r.event, "upper | symmetric")
      ->transform(CLI::CheckedTransformer(kEvents, CLI::ignore_case));
  app.add_option("--L", r.L, "replicates")->check(CLI::PositiveNumber);
  app.add_option("--k", s.k_text, "coordinates drawn from the adaptive kernel, or auto");
  app.add_option("--M", r.M, "mixing draws per density evaluation")->check(CLI::PositiveNumber);
  app.add_option("--delta", r.delta, "accuracy level for k selection")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", r.seed, "master seed");
  app.add_option("--scheme", r.scheme, "crude | classical | adaptive")
      ->transform(CLI::CheckedTransformer(kSchemes, CLI::ignore_case));
  app.add_option("--threads", r.threads, "workers (ZVRARE_THREADS when unset)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", s.out_dir, "directory for artifacts");
  app.add_option("--format", s.format, "json | csv")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
  app.add_flag("--replicates", s.write_replicates, "write per-replicate values");
  app.add_flag("--emit-timings", s.emit_timings, "include wall times in reports");
  app.add_option("--mixture-eval", r.mixture_eval, "auto | mc | quadrature")
      ->transform(CLI::CheckedTransformer(kEvals, CLI::ignore_case));
  app.add_option("--quad-panels", r.quad_panels)->check(CLI::PositiveNumber);
  app.add_option("--quad-order", r.quad_order)->check(CLI::Range(2, 64));
  app.add_option("--tail", r.tail, "auto | tilted | point-mass")
      ->transform(CLI::CheckedTransformer(kTails, CLI::ignore_case));
  app.add_option("--mixing", r.mixing, "exponential | exact (law of v)")
      ->transform(CLI::CheckedTransformer(kMixings, CLI::ignore_case));
  app.add_option("--centering", r.gnv.centering, "printed | exact-chain")
      ->transform(CLI::CheckedTransformer(kCenterings, CLI::ignore_case));
  app.add_flag("--tau-fast-path", r.gnv.tau_fast_path, "one-step tilt update between solves");
  app.add_option("--normalizer-draws", r.gnv.normalizer_draws)->check(CLI::PositiveNumber);
  app.add_option("--select-L", r.select_L, "samples per k for the ERE/VRE curve")
      ->check(CLI::PositiveNumber);
  app.add_option("--select-sampling", r.select_sampling, "mixture | base")
      ->transform(CLI::CheckedTransformer(kSamplings, CLI::ignore_case));
  app.add_option("--select-numerator", r.select_numerator, "point | mixture")
      ->transform(CLI::CheckedTransformer(kNumerators, CLI::ignore_case));
  app.add_option("--select-stride", r.select_stride)->check(CLI::NonNegativeNumber);
  app.add_option("--bins", r.histogram_bins, "importance-factor histogram bins");
  app.add_option("--ks", s.ks, "k grid for re-curve")->delimiter(',');
  app.add_option("--classical-L", s.classical_L, "classical replicates in compare (0: L)");
  app.add_option("--crude-L", s.crude_L, "crude replicates in compare (0: skip)");
  app.add_option("--sweep-ks", s.sweep_ks, "k values for the estimate/hit-rate sweep")
      ->delimiter(',');
  app.add_option("--histogram-ks", s.histogram_ks, "k values with importance histograms")
      ->delimiter(',');
  app.add_option("--mse-ks", s.mse_ks, "k values for the MSE ratio")->delimiter(',');
  app.add_option("--mse-seeds", s.mse_seeds)->check(CLI::PositiveNumber);
  app.add_option("--mse-L", s.mse_L)->check(CLI::PositiveNumber);
  app.add_option("--ns", s.oracle_ns, "n values for the oracle table")->delimiter(',');
  app.add_option("--c", s.c, "constant in the n·c·t condition");
  app.add_option("--eps", s.eps, "epsilon in the t/eps condition");
}

void finish_spec(CLI::App& app, CommandSpec& s, const std::string& prescanned) {
  for (const auto& [name, desc] : kSubcommands) {
    if (app.got_subcommand(name)) s.subcommand = name;
  }
  if (s.preset != prescanned) {
    throw DomainError("--preset must be given on the command line");
  }
  s.seed_given = app.get_option("--seed")->count() > 0;
  if (const auto* cfg = app.get_config_ptr(); cfg != nullptr && cfg->count() > 0) {
    s.config_path = cfg->as<std::string>();
  }
  if ((s.subcommand == "estimate" || s.subcommand == "compare") && !s.seed_given) {
    throw DomainError(s.subcommand + " needs an explicit --seed");
  }
  if (s.k_text == "auto") {
    s.run.k = 0;
  } else {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(s.k_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.k_text.size() || k < 1) {
      throw DomainError("--k must be a positive integer or 'auto', got '" + s.k_text + "'");
    }
    s.run.k = k;
  }
  s.run.model_params.clear();
  if (s.mu) s.run.model_params["mu"] = *s.mu;
  if (s.sigma) s.run.model_params["sigma"] = *s.sigma;
  s.run.keep_replicates = s.write_replicates;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::embedded_presets()) names.push_back(name);
  return names;
}

const std::string& preset_text(const std::string& name) {
  for (const auto& [n, text] : detail::embedded_presets()) {
    if (n == name) return text;
  }
  throw DomainError("unknown preset '" + name + "'");
}

std::optional<CommandSpec> parse_command_line(int argc, const char* const* argv,
                                              std::ostream& out, std::ostream& err,
                                              int& exit_code) {
  CommandSpec spec;
  CLI::App app{"Adaptive importance sampling for sums of i.i.d. variables in a rare set",
               "zvrare"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "flat key = value file mirroring the flags");
  app.allow_config_extras(CLI::config_extras_mode::error);
  add_options(app, spec);
  for (const auto& [name, desc] : kSubcommands) app.add_subcommand(name, desc)->fallthrough();

  const std::string preset = find_preset_arg(argc, argv);
  try {
    if (!preset.empty()) apply_preset(app, preset);
    app.parse(argc, argv);
    finish_spec(app, spec, preset);
  } catch (const CLI::CallForHelp& e) {
    exit_code = app.exit(e, out, err);
    return std::nullopt;
  } catch (const CLI::CallForAllHelp& e) {
    exit_code = app.exit(e, out, err);
    return std::nullopt;
  } catch (const CLI::CallForVersion& e) {
    exit_code = app.exit(e, out, err);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    out << detail::error_json("UsageError", e.what()).dump(2) << '\n';
    err << "zvrare: " << e.what() << '\n';
    exit_code = 1;
    return std::nullopt;
  } catch (const Error& e) {
    out << detail::error_json(e.name(), e.what()).dump(2) << '\n';
    err << "zvrare: " << e.what() << '\n';
    exit_code = 1;
    return std::nullopt;
  }
  exit_code = 0;
  return spec;
}

}  // namespace zvrare::cli
