#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "stat_tests.hpp"
#include "zvrare/errors.hpp"
#include "zvrare/estimators.hpp"
#include "zvrare/oracle.hpp"

using namespace zvrare;

TEST_SUITE("oracle") {

TEST_CASE("exact tails") {
  const boost::math::normal z;
  CHECK(exact_tail(gaussian(), 100, 0.232) ==
        doctest::Approx(boost::math::cdf(boost::math::complement(z, 2.32))).epsilon(1e-12));
  CHECK(exact_tail(gaussian(), 100, 0.232) == doctest::Approx(0.0101704387).epsilon(1e-8));
  CHECK(exact_tail(centered_exponential(), 100, 0.232) ==
        doctest::Approx(boost::math::gamma_q(100.0, 123.2)).epsilon(1e-12));
  CHECK(exact_tail(centered_exponential(), 100, 0.232) ==
        doctest::Approx(0.0141078904).epsilon(1e-8));
  CHECK(exact_tail(gaussian(0.05, 1.0), 100, 0.28, EventKind::kSymmetric) ==
        doctest::Approx(0.0112075342).epsilon(1e-8));
  CHECK(std::exp(log_exact_tail(centered_exponential(), 100, 0.6)) ==
        doctest::Approx(exact_tail(centered_exponential(), 100, 0.6)).epsilon(1e-12));
  CHECK_THROWS_AS(exact_tail(strip_overrides(gaussian()), 100, 0.232), UnsupportedError);
}

TEST_CASE("saddlepoint tails") {
  const TailResult g = saddlepoint_tail(gaussian(), 100, 0.232);
  CHECK(g.value == doctest::Approx(0.0116586636).epsilon(1e-8));
  CHECK(g.value / exact_tail(gaussian(), 100, 0.232) == doctest::Approx(1.1463285).epsilon(1e-6));
  CHECK(g.method == TailMethod::kSaddlepoint);

  const TailResult e = saddlepoint_tail(centered_exponential(), 100, 0.232);
  CHECK(e.rate_I == doctest::Approx(0.0233611349).epsilon(1e-9));
  CHECK(e.psi == doctest::Approx(0.232).epsilon(1e-12));
  CHECK(e.value == doctest::Approx(0.0166287990).epsilon(1e-8));

  CHECK_THROWS_AS(saddlepoint_tail(gaussian(), 100, 0.0), DomainError);
  CHECK_THROWS_AS(saddlepoint_tail(gaussian(), 100, -0.1), DomainError);
}

TEST_CASE("saddlepoint over exact decreases to 1") {
  for (const DistributionModel& m : {gaussian(), centered_exponential()}) {
    double prev = kInf;
    for (int n : {100, 1000, 10000}) {
      const TailResult sp = saddlepoint_tail(m, n, 0.232);
      const double log_sp = -n * sp.rate_I - 0.5 * std::log(2 * M_PI * n) - std::log(sp.psi);
      const double ratio = std::exp(log_sp - log_exact_tail(m, n, 0.232));
      CHECK(ratio > 1.0);
      CHECK(ratio < prev);
      prev = ratio;
    }
    CHECK(prev < 1.01);
  }
}

TEST_CASE("rate function") {
  for (const DistributionModel& m : {gaussian(0.05, 1.0), centered_exponential()}) {
    CHECK(std::abs(rate_function(m, m.mean_u)) < 1e-14);
    double prev = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double x = m.mean_u + 0.04 * j;
      const double r = rate_function(m, x);
      CHECK(r > prev);
      prev = r;
    }
  }
  CHECK(rate_function(gaussian(), 0.232) == doctest::Approx(0.232 * 0.232 / 2));
}

TEST_CASE("exact conditional density") {
  const std::vector<double> zero{0.0};
  CHECK(exact_conditional_log_density(gaussian(), 2, 1, 0.0, zero) ==
        doctest::Approx(-0.5723649429247001).epsilon(1e-13));

  const std::vector<double> y{0.4, -0.7, 1.3};
  const std::vector<double> yp{1.3, 0.4, -0.7};
  for (const DistributionModel& m : {gaussian(), centered_exponential()}) {
    CHECK(exact_conditional_log_density(m, 20, 3, 0.3, y) ==
          doctest::Approx(exact_conditional_log_density(m, 20, 3, 0.3, yp)).epsilon(1e-13));
  }
  const std::vector<double> big{30.0};
  CHECK(exact_conditional_log_density(centered_exponential(), 10, 1, 0.5, big) ==
        -std::numeric_limits<double>::infinity());

  boost::math::quadrature::tanh_sinh<double> ts;
  const double g_mass = ts.integrate(
      [](double x) {
        const std::vector<double> p{x};
        return std::exp(exact_conditional_log_density(gaussian(), 20, 1, 0.5, p));
      },
      -kInf, kInf);
  CHECK(g_mass == doctest::Approx(1.0).epsilon(1e-6));
  const double e_mass = ts.integrate(
      [](double x) {
        const std::vector<double> p{x};
        return std::exp(exact_conditional_log_density(centered_exponential(), 20, 1, 0.5, p));
      },
      -1.0, 20 * 0.5 + 19.0);
  CHECK(e_mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sum laws") {
  for (const DistributionModel& m : {gaussian(0.05, 1.0), centered_exponential()}) {
    for (double x : {-3.0, 0.0, 2.5, 9.0}) {
      const double up = std::exp(log_sum_tail(m, 7, x));
      const double down = std::exp(log_sum_cdf(m, 7, x));
      CHECK(up + down == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact Gaussian conditional sampler") {
  const DistributionModel g = gaussian();
  constexpr int n = 10;
  Rng rng(5);
  std::vector<double> means;
  std::vector<std::vector<double>> steps(n - 1);
  for (int r = 0; r < 10'000; ++r) {
    const std::vector<double> y = exact_conditional_sampler(g, n, n - 1, 0.4, rng);
    double s = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      steps[i].push_back(y[i] - (n * 0.4 - s) / (n - i));
      s += y[i];
    }
    means.push_back((s + (n * 0.4 - s)) / n);
  }
  CHECK(testing::mean_of(means) == doctest::Approx(0.4).epsilon(1e-12));
  for (int i = 0; i < n - 1; ++i) {
    const double var = double(n - i - 1) / (n - i);
    CHECK(testing::within_sigma(testing::mean_of(steps[i]), 0.0, std::sqrt(var / 1e4)));
    CHECK(testing::within_sigma(testing::variance_of(steps[i]), var, var * std::sqrt(2.0 / 1e4)));
  }
}

TEST_CASE("direct p_nA quadrature") {
  const DistributionModel g = gaussian();
  const DistributionModel e = centered_exponential();
  Rng rng(7);
  MixtureConfig mc;
  mc.n = 100;
  mc.k = 10;
  mc.a = 0.232;
  mc.tail = TailMode::kTilted;
  mc.mixing = MixingKind::kExact;
  mc.gnv.centering = KernelCentering::kExactChain;
  const Mixture mix(g, mc);
  // The first coordinate is drawn N(v, 1) against the exact N(v, 0.99): the
  // per-path factor leaves [0.99, 1.01] once |y₁ − v| passes about 1.7.
  std::vector<double> ratios;
  for (int r = 0; r < 200; ++r) {
    const std::vector<double> y = mix.sample_prefix(rng);
    const double direct = direct_pnA_log_density(g, 100, 10, 0.232, y);
    const double ratio = std::exp(direct - mix.eval_log_prefix(y, rng));
    ratios.push_back(ratio);
    if (std::abs(y[0] - 0.232) <= 1.5) {
      CHECK(ratio >= 0.99);
      CHECK(ratio <= 1.01);
    }
    if (r >= 20) continue;
    CHECK(direct_pnA_log_density(g, 100, 10, 0.232, y, 256) ==
          doctest::Approx(direct).epsilon(1e-8));
    CHECK(direct_pnA_log_density_closed(g, 100, 10, 0.232, y) ==
          doctest::Approx(direct).epsilon(1e-8));
    std::vector<double> rev(y.rbegin(), y.rend());
    CHECK(direct_pnA_log_density(g, 100, 10, 0.232, rev) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(testing::mean_of(ratios) >= 0.99);
  CHECK(testing::mean_of(ratios) <= 1.01);
  const std::vector<double> ye{0.3, 0.9, -0.4};
  CHECK(direct_pnA_log_density(e, 50, 3, 0.5, ye) ==
        doctest::Approx(direct_pnA_log_density_closed(e, 50, 3, 0.5, ye)).epsilon(1e-8));
}

TEST_CASE("growth-condition diagnostics") {
  const ConditionsReport g = check_conditions(gaussian(), 100, 99, 0.232, 1.0);
  CHECK(g.v_integral == doctest::Approx(0.0));
  CHECK(g.a_condition == doctest::Approx(0.053824));
  CHECK_FALSE(g.notes.empty());
  CHECK(g.c_condition == doctest::Approx(23.2));
  CHECK(g.eps_condition == doctest::Approx(23.2));

  const ConditionsReport e = check_conditions(centered_exponential(), 100, 50, 0.232, 1.0);
  const double t = 0.232 / 1.232;
  const double closed = 10.0 * t * (2.0 * 1.232 / (100 * t) + 2.0 / ((100 * t) * (100 * t)));
  CHECK(closed == doctest::Approx(0.2570206897).epsilon(1e-9));
  CHECK(e.v_integral == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("exact tail against crude Monte Carlo") {
  for (const DistributionModel& m : {gaussian(), centered_exponential()}) {
    RunConfig c;
    c.model = m.name;
    c.n = 30;
    c.a = 0.3;
    c.L = 100'000;
    c.seed = 9;
    const EstimateReport r = estimate_crude(m, c);
    const double p = exact_tail(m, 30, 0.3);
    CHECK(p >= 1e-2);
    CHECK(testing::within_sigma(r.estimate, p, std::sqrt(p * (1 - p) / 1e5)));
  }
}

TEST_CASE("conditioned moments by rejection (n = 20, P = 1e-2)") {
  // Exact: E[U₁ | Ū > a] = E[Ū | Ū > a] = σφ(z)/Φ̄(z), and
  // E[U₁U₂ | Ū > a] = E[Ū² | Ū > a] − 1/n with σ = 1/√n.
  constexpr int n = 20;
  const boost::math::normal std_normal;
  const double z = boost::math::quantile(boost::math::complement(std_normal, 0.01));
  const double a = z / std::sqrt(double(n));
  const double hazard = boost::math::pdf(std_normal, z) / 0.01;
  const double eu1 = hazard / std::sqrt(double(n));
  const double eu12 = (1.0 + z * hazard) / n - 1.0 / n;
  CHECK(a == doctest::Approx(0.5201872).epsilon(1e-6));
  CHECK(eu1 == doctest::Approx(0.5959600).epsilon(1e-6));
  CHECK(eu12 == doctest::Approx(0.3100108).epsilon(1e-6));

  Rng rng(31);
  std::vector<double> u1;
  std::vector<double> u12;
  std::vector<double> y(n);
  while (u1.size() < 20'000) {
    double s = 0.0;
    for (double& x : y) {
      x = rng.normal();
      s += x;
    }
    if (s > n * a) {
      u1.push_back(y[0]);
      u12.push_back(y[0] * y[1]);
    }
  }
  CHECK(testing::within_sigma(testing::mean_of(u1), eu1,
                              std::sqrt(testing::variance_of(u1) / u1.size())));
  CHECK(testing::within_sigma(testing::mean_of(u12), eu12,
                              std::sqrt(testing::variance_of(u12) / u12.size())));
}

}  // TEST_SUITE
