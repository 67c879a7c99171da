#pragma once

#include <cstddef>

#include "zvrare/model.hpp"
#include "zvrare/random.hpp"

namespace zvrare {

enum class TiltTarget { kOnU, kOnX };

/// π^α: base law reweighted by exp(t·u − κ(t)) with m(t) = α.
struct TiltedFamily {
  const DistributionModel* model = nullptr;  ///< must outlive the family
  double alpha = 0.0;
  double t = 0.0;
  double log_phi = 0.0;  ///< κ(t)
};

TiltedFamily make_tilted(const DistributionModel& model, double alpha);
TiltedFamily make_tilted_at(const DistributionModel& model, double t);

double tilted_log_density(const TiltedFamily& fam, double x, TiltTarget target = TiltTarget::kOnX);

struct TiltSamplerOptions {
  std::size_t attempt_budget = 1'000'000;
  std::size_t pilot_draws = 2'000;
};

/// Reusable sampler. For models without a tilted-sampler override it runs
/// rejection against the base sampler with an adaptively raised bound on
/// t·u(x).
class TiltedSampler {
 public:
  TiltedSampler(const TiltedFamily& fam, Rng& pilot_rng, TiltSamplerOptions opts = {});
  double draw(Rng& rng);
  std::size_t rejected() const { return rejected_; }

 private:
  TiltedFamily fam_;
  TiltSamplerOptions opts_;
  double log_bound_ = 0.0;
  std::size_t rejected_ = 0;
};

double sample_tilted(const TiltedFamily& fam, Rng& rng, TiltSamplerOptions opts = {});

}  // namespace zvrare
