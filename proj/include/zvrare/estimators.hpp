#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "zvrare/kselect.hpp"
#include "zvrare/mixture.hpp"
#include "zvrare/model.hpp"

namespace zvrare {

enum class Scheme { kCrude, kClassical, kAdaptive };

const char* scheme_name(Scheme s);

struct RunConfig {
  std::string model = "gaussian";
  ModelParams model_params;
  int n = 100;
  double a = 0.232;
  EventKind event = EventKind::kUpper;
  std::size_t L = 2000;
  int k = 0;  ///< 0: chosen by select_k at accuracy `delta`
  std::size_t M = 100;
  double delta = 0.05;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::kAdaptive;
  int threads = 0;
  bool keep_replicates = false;
  MixtureEval mixture_eval = MixtureEval::kAuto;
  int quad_panels = 16;
  int quad_order = 16;
  TailMode tail = TailMode::kAuto;
  MixingKind mixing = MixingKind::kExponential;
  GnvOptions gnv;
  std::size_t select_L = 1000;
  SelectSampling select_sampling = SelectSampling::kMixture;
  SelectNumerator select_numerator = SelectNumerator::kPoint;
  int select_stride = 0;
  std::size_t histogram_bins = 20;
};

struct ImportanceSummary {
  std::size_t count = 0;  ///< hitting paths
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double cv = 0.0;
  std::vector<double> edges;  ///< bins + 1 edges
  std::vector<std::size_t> counts;
};

struct EstimateReport {
  Scheme scheme = Scheme::kAdaptive;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double relative_error = 0.0;  ///< std_error / estimate, +∞ on zero hits
  std::size_t L = 0;
  std::size_t hits = 0;
  double hit_rate = 0.0;
  std::size_t aborts = 0;
  int k_used = 0;
  double trimmed_estimate = 0.0;  ///< replicates above the 99.9th percentile dropped
  double trimmed_std_error = 0.0;
  ImportanceSummary importance;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  std::vector<double> replicates;  ///< filled when keep_replicates is set
  RunConfig config;
};

EstimateReport estimate_crude(const DistributionModel& model, const RunConfig& cfg);
EstimateReport estimate_classical(const DistributionModel& model, const RunConfig& cfg);
EstimateReport estimate_adaptive(const DistributionModel& model, const RunConfig& cfg);

/// Dispatch on cfg.scheme.
EstimateReport estimate(const DistributionModel& model, const RunConfig& cfg);

/// Builds the registered model named in the config.
EstimateReport estimate(const RunConfig& cfg);

/// Leading-order relative error: √(2π)·√n·a/L for the classical scheme and
/// √(2π)·√(n−k−1)·a/L for the adaptive one.
double theoretical_re(int n, int k, double a, std::size_t L, Scheme scheme);

/// Mixture configuration derived from a run configuration and a resolved k.
MixtureConfig mixture_config(const RunConfig& cfg, int k);

/// k-selection options derived from a run configuration.
KSelectOptions kselect_options(const RunConfig& cfg);

/// Summary statistics of a vector of replicate values (and hit flags).
EstimateReport summarize_replicates(Scheme scheme, const std::vector<double>& values,
                                    const std::vector<char>& hits, std::size_t bins);

}  // namespace zvrare
