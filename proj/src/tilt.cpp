#include "zvrare/tilt.hpp"

#include <algorithm>
#include <cmath>

#include "zvrare/errors.hpp"

namespace zvrare {

TiltedFamily make_tilted(const DistributionModel& model, double alpha) {
  TiltedFamily fam;
  fam.model = &model;
  fam.alpha = alpha;
  fam.t = m_inverse(model, alpha);
  fam.log_phi = cumulants(model, fam.t).kappa;
  return fam;
}

TiltedFamily make_tilted_at(const DistributionModel& model, double t) {
  const CumulantQuad q = cumulants(model, t);
  return TiltedFamily{&model, q.m, t, q.kappa};
}

double tilted_log_density(const TiltedFamily& fam, double x, TiltTarget target) {
  const DistributionModel& model = *fam.model;
  if (target == TiltTarget::kOnU) {
    if (!model.u_log_density) {
      throw UnsupportedError("tilted_log_density: " + model.name +
                             " exposes no marginal density of U");
    }
    const double lp = model.u_log_density(x);
    if (lp == kNegInf) return kNegInf;
    return fam.t * x - fam.log_phi + lp;
  }
  const PointEval e = log_density_u(model, x);
  if (e.log_p == kNegInf) return kNegInf;
  return fam.t * e.u - fam.log_phi + e.log_p;
}

TiltedSampler::TiltedSampler(const TiltedFamily& fam, Rng& pilot_rng, TiltSamplerOptions opts)
    : fam_(fam), opts_(opts) {
  if (fam_.model->tilted_sampler || fam_.t == 0.0) return;
  // Start the bound at the largest t·u seen in a pilot run; violations raise
  // it later.
  double bound = 0.0;
  for (std::size_t i = 0; i < opts_.pilot_draws; ++i) {
    const double x = fam_.model->base_sampler(pilot_rng);
    bound = std::max(bound, fam_.t * fam_.model->u(x));
  }
  log_bound_ = bound;
}

double TiltedSampler::draw(Rng& rng) {
  const DistributionModel& model = *fam_.model;
  if (model.tilted_sampler) return model.tilted_sampler(fam_.t, rng);
  if (fam_.t == 0.0) return model.base_sampler(rng);
  for (std::size_t attempt = 0; attempt < opts_.attempt_budget; ++attempt) {
    const double x = model.base_sampler(rng);
    const double tu = fam_.t * model.u(x);
    if (tu > log_bound_) {
      // Envelope violated: enlarge and start over so later draws are exact.
      log_bound_ = tu + 1.0;
      continue;
    }
    if (std::log(rng.uniform()) <= tu - log_bound_) return x;
    ++rejected_;
  }
  throw EnvelopeError("sample_tilted: rejection budget exhausted for " + model.name +
                      " at t = " + std::to_string(fam_.t));
}

double sample_tilted(const TiltedFamily& fam, Rng& rng, TiltSamplerOptions opts) {
  TiltedSampler sampler(fam, rng, opts);
  return sampler.draw(rng);
}

}  // namespace zvrare
