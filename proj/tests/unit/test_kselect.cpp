#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "stat_tests.hpp"
#include "zvrare/errors.hpp"
#include "zvrare/kselect.hpp"
#include "zvrare/oracle.hpp"
#include "zvrare/parallel.hpp"

using namespace zvrare;

namespace {

/// a with Q(n, n(1 + a)) = p for the centered exponential.
double exp_threshold(int n, double p) {
  const auto f = [&](double a) { return std::log(boost::math::gamma_q(n, n * (1.0 + a))) - std::log(p); };
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, 5.0,
                                                   boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

double log_base(const DistributionModel& m, std::span<const double> y) {
  double s = 0.0;
  for (double x : y) s += log_density_u(m, x).log_p;
  return s;
}

}  // namespace

TEST_SUITE("kselect") {

TEST_CASE("proxy at zero drift") {
  // All y_i = a: m_k = a, the s² ratio is 1 and N/D = exp(−k a²/2).
  const DistributionModel g = gaussian();
  constexpr int n = 100;
  constexpr double a = 0.232;
  CHECK(n * a * a / 2.0 == doctest::Approx(2.6912));
  CHECK(std::exp(n * a * a / 2.0) == doctest::Approx(14.750).epsilon(1e-4));
  for (int k : {1, 10, 60}) {
    const std::vector<double> y(k, a);
    const double log_pt = log_pnA_proxy(g, n, k, a, y);
    const double log_nd = -k * a * a / 2.0;
    CHECK(log_pt - log_base(g, y) - 0.5 * std::log(double(n) / (n - k)) ==
          doctest::Approx(-log_nd).epsilon(1e-12));
  }
}

TEST_CASE("the proxy is the exact point conditional for the Gaussian") {
  const DistributionModel g = gaussian();
  Rng rng(3);
  for (int k : {1, 5, 40, 98}) {
    std::vector<double> y(k);
    for (double& x : y) x = rng.normal(0.232, 1.0);
    CHECK(log_pnA_proxy(g, 100, k, 0.232, y) ==
          doctest::Approx(exact_conditional_log_density(g, 100, k, 0.232, y)).epsilon(1e-10));
  }
}

TEST_CASE("ab_terms under both sampling laws") {
  const DistributionModel e = centered_exponential();
  const std::vector<double> y{0.3, -0.2, 1.1};
  const double log_g = -2.5;
  const double log_pt = log_pnA_proxy(e, 50, 3, 0.4, y);
  const ABTerms mix = ab_terms(e, 50, 3, 0.4, y, log_g, SelectSampling::kMixture);
  CHECK(mix.log_B == doctest::Approx(log_g - log_pt));
  CHECK(mix.log_A == doctest::Approx(2.0 * (log_g - log_pt)));
  const ABTerms base = ab_terms(e, 50, 3, 0.4, y, log_g, SelectSampling::kBase);
  const double log_w = log_g - log_base(e, y);
  CHECK(base.log_B == doctest::Approx(log_w + log_g - log_pt));
  CHECK(base.log_A == doctest::Approx(log_w + 2.0 * (log_g - log_pt)));
  const ABTerms split = ab_terms(e, 50, 3, 0.4, y, log_g, -1.0, SelectSampling::kBase);
  CHECK(split.log_B == doctest::Approx(log_w - 1.0 - log_pt));

  CHECK_THROWS_AS(ab_terms(e, 50, 0, 0.4, {}, log_g), DomainError);
  CHECK_THROWS_AS(ab_terms(e, 50, 49, 0.4, std::vector<double>(49, 0.4), log_g), DomainError);
  const std::vector<double> far{80.0};
  CHECK_THROWS_AS(log_pnA_proxy(e, 50, 1, 0.4, far), DomainError);
}

TEST_CASE("curve shape and bookkeeping") {
  const DistributionModel e = centered_exponential();
  const double a = exp_threshold(100, 1e-8);
  CHECK(a == doctest::Approx(0.6662985).epsilon(1e-6));
  KSelectOptions o;
  o.seed = 3;
  const RECurve c = re_curve(e, 100, a, {1, 10, 30, 50, 70, 90}, o);
  REQUIRE(c.ks.size() == 6);
  CHECK(c.ere.size() == 6);
  CHECK(c.ci_hi.size() == 6);
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    CHECK(c.ci_lo[i] <= c.ere[i]);
    CHECK(c.ere[i] <= c.ci_hi[i]);
    CHECK(c.vre[i] == std::max(0.0, c.vre_raw[i]));
    CHECK(c.valid[i]);
  }
  CHECK(std::abs(c.ere[0]) < 1e-3);
  CHECK(c.ci_hi[5] - c.ci_lo[5] > c.ci_hi[0] - c.ci_lo[0]);
  CHECK(std::abs(c.ere[5]) > std::abs(c.ere[0]));
  CHECK_THROWS_AS(re_curve(e, 100, a, {99}, o), DomainError);
}

TEST_CASE("CI-bar width settles in L while ERE-bar scatter falls like 1/√L") {
  const DistributionModel e = centered_exponential();
  const double a = exp_threshold(100, 1e-8);
  auto run = [&](std::size_t L) {
    std::vector<double> ere;
    std::vector<double> width;
    for (std::uint64_t s = 0; s < 40; ++s) {
      KSelectOptions o;
      o.L = L;
      o.seed = 1000 + s;
      const RECurve c = re_curve(e, 100, a, {40}, o);
      ere.push_back(c.ere[0]);
      width.push_back(c.ci_hi[0] - c.ci_lo[0]);
    }
    return std::pair{std::sqrt(testing::variance_of(ere)), median(width)};
  };
  const auto [sd_small, w_small] = run(250);
  const auto [sd_large, w_large] = run(1000);
  CHECK(sd_small / sd_large == doctest::Approx(2.0).epsilon(0.3));
  CHECK(w_small / w_large == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("select_k boundaries and the 1e-8 band") {
  const DistributionModel e = centered_exponential();
  const double a = exp_threshold(100, 1e-8);
  KSelectOptions o;
  o.seed = 7;
  CHECK(select_k(e, 100, a, std::numeric_limits<double>::infinity(), o) == 98);

  auto at_zero = [&]() {
    try {
      return select_k(e, 100, a, 0.0, o);
    } catch (const NoFeasibleK&) {
      return -1;
    }
  };
  const int z1 = at_zero();
  CHECK(at_zero() == z1);
  CHECK((z1 == -1 || z1 >= 1));

  RECurve curve;
  const int k = select_k(e, 100, a, 0.05, o, &curve);
  CHECK(curve.ks.back() == k + 1);
  CHECK(violates(curve, curve.ks.size() - 1, 0.05));
  CHECK_THROWS_AS(select_k(e, 100, a, -1.0, o), DomainError);
}

TEST_CASE("select_k at delta = 0.05 lands in the [60, 95] band") {
  const DistributionModel e = centered_exponential();
  KSelectOptions o;
  o.seed = 7;
  const int k = select_k(e, 100, exp_threshold(100, 1e-8), 0.05, o);
  CHECK(k >= 60);
  CHECK(k <= 95);
}

TEST_CASE("default grid") {
  CHECK(default_k_grid(10).size() == 8);
  const std::vector<int> big = default_k_grid(1000);
  CHECK(big.front() == 1);
  CHECK(big[1] == 11);
  CHECK(big.back() == 998);
}

TEST_CASE("Gaussian direct relative error stays below 1e-2") {
  const DistributionModel g = gaussian();
  constexpr int n = 100;
  constexpr double a = 0.232;
  for (int k : {10, 30, 50, 70, 90, 98}) {
    MixtureConfig mc;
    mc.n = n;
    mc.k = k;
    mc.a = a;
    mc.tail = TailMode::kTilted;
    mc.mixing = MixingKind::kExact;
    mc.gnv.centering = KernelCentering::kExactChain;
    const Mixture mix(g, mc);
    constexpr std::size_t L = 1000;
    std::vector<double> ratio(L);
    parallel_for(L, 0, [&](std::size_t l) {
      Rng rng = Rng::substream(77, StreamTag::kMisc, l);
      const std::vector<double> y = mix.sample_prefix(rng);
      ratio[l] = std::exp(mix.eval_log_prefix(y, rng) - direct_pnA_log_density(g, n, k, a, y));
    });
    const double ere = 1.0 - testing::mean_of(ratio);
    CAPTURE(k);
    CHECK(std::abs(ere) <= 1e-2);
  }
}

}  // TEST_SUITE
