#include <cmath>
#include <vector>

#include "doctest.h"
#include "forestdual/rng.hpp"
#include "forestdual/stats.hpp"

using namespace forestdual;

TEST_CASE("kolmogorov tail") {
  CHECK(stats::kolmogorov_q(0.0) == doctest::Approx(1.0));
  CHECK(stats::kolmogorov_q(10.0) == doctest::Approx(0.0));
  // classical table value Q(1.36) is about 0.049
  CHECK(stats::kolmogorov_q(1.36) == doctest::Approx(0.049).epsilon(0.02));
}

TEST_CASE("two-sample distance of identical samples is zero") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto r = stats::ks_two_sample(a, a);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("two-sample test separates different exponentials") {
  Rng rng(5);
  std::vector<double> a(5000), b(5000);
  for (auto& x : a) x = rng.exponential(1.0);
  for (auto& x : b) x = rng.exponential(2.0);
  CHECK(stats::ks_two_sample(a, b).p_value < 1e-6);
  // same law: no rejection at a tight level
  std::vector<double> c(5000);
  for (auto& x : c) x = rng.exponential(1.0);
  CHECK(stats::ks_two_sample(a, c).p_value > 1e-3);
}

TEST_CASE("one-sample test against the exact cdf") {
  Rng rng(6);
  std::vector<double> a(20000);
  for (auto& x : a) x = rng.exponential(1.5);
  const auto good = stats::ks_one_sample(
      a, [](double x) { return 1.0 - std::exp(-1.5 * x); });
  CHECK(good.p_value > 1e-3);
  const auto bad = stats::ks_one_sample(
      a, [](double x) { return 1.0 - std::exp(-1.0 * x); });
  CHECK(bad.p_value < 1e-6);
}

TEST_CASE("regularized incomplete gamma") {
  // Q(1, x) = e^{-x}; Q(1/2, x) = erfc(sqrt(x))
  CHECK(stats::gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
  CHECK(stats::gamma_q(0.5, 1.0) ==
        doctest::Approx(std::erfc(1.0)).epsilon(1e-10));
  CHECK(stats::gamma_q(3.0, 0.0) == doctest::Approx(1.0));
  // chi-square with 4 dof at its mean: Q(2, 2) = 3 e^{-2}
  CHECK(stats::gamma_q(2.0, 2.0) ==
        doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("geometric goodness of fit accepts its own law and rejects others") {
  Rng rng(8);
  const double p = 1.0 / (2.0 - std::exp(-1.0));  // about 0.6127
  std::vector<long> sample(100000);
  for (auto& v : sample) v = 1 + static_cast<long>(rng.geometric(p));
  CHECK(stats::chi2_geometric(sample, p).p_value > 1e-3);
  CHECK(stats::chi2_geometric(sample, 0.5).p_value < 1e-6);
}

TEST_CASE("chi-square pools sparse bins") {
  std::vector<double> obs{50.0, 30.0, 15.0, 3.0, 1.0, 1.0};
  std::vector<double> exp{48.0, 32.0, 14.0, 3.0, 2.0, 1.0};
  const auto r = stats::chi2_gof(obs, exp);
  CHECK(r.p_value > 0.05);
  CHECK(r.dof >= 1);
}

TEST_CASE("binomial sigma check") {
  const auto ok = stats::binomial_sigma_check(5000, 10000, 0.5);
  CHECK(ok.within);
  CHECK(ok.z == doctest::Approx(0.0));
  const auto off = stats::binomial_sigma_check(5300, 10000, 0.5);
  CHECK(!off.within);
}

TEST_CASE("correlation of independent draws is near zero") {
  Rng rng(9);
  std::vector<double> x(20000), y(20000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  CHECK(std::fabs(stats::pearson_r(x, y)) < 3.0 / std::sqrt(20000.0));
  CHECK(stats::pearson_r(x, x) == doctest::Approx(1.0));
}

TEST_CASE("rng stream derivation decorrelates indices") {
  Rng a = Rng::stream(1, 2, 3, 0);
  Rng b = Rng::stream(1, 2, 3, 1);
  Rng a2 = Rng::stream(1, 2, 3, 0);
  CHECK(a.next_u64() != b.next_u64());
  Rng a3 = Rng::stream(1, 2, 3, 0);
  CHECK(a2.next_u64() == a3.next_u64());
  // uniform stays inside (0, 1)
  Rng u(77);
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}
