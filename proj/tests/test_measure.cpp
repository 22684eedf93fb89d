#include <cmath>
#include <vector>

#include "doctest.h"
#include "forestdual/measure.hpp"
#include "forestdual/stats.hpp"

using namespace forestdual;

TEST_CASE("laplace exponent of the exponential family") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  CHECK(mu.mass() == doctest::Approx(2.0));
  CHECK(mu.mean() == doctest::Approx(2.0));
  CHECK(mu.laplace_exponent(0.0) == doctest::Approx(0.0));
  // largest root: psi(eta) = 0 at eta = b - d = 1
  CHECK(mu.laplace_exponent(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mu.laplace_exponent(3.0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(mu.laplace_exponent(-0.5), std::domain_error);
}

TEST_CASE("largest root of the laplace exponent") {
  CHECK(LifespanMeasure::exponential(2.0, 1.0).eta() == doctest::Approx(1.0));
  CHECK(LifespanMeasure::exponential(1.0, 2.0).eta() == 0.0);
  CHECK(LifespanMeasure::exponential(1.0, 1.0).eta() == 0.0);
  CHECK(LifespanMeasure::exponential(4.0, 1.0).eta() == doctest::Approx(3.0));
}

TEST_CASE("laplace exponent is convex and eventually positive") {
  const auto mu = LifespanMeasure::exponential(3.0, 2.0);
  double prev_slope = -1e30;
  for (double lam = 0.0; lam < 10.0; lam += 0.25) {
    const double slope =
        (mu.laplace_exponent(lam + 1e-5) - mu.laplace_exponent(lam)) / 1e-5;
    CHECK(slope >= prev_slope - 1e-6);
    prev_slope = slope;
  }
  CHECK(mu.laplace_exponent(50.0) > 0.0);
}

TEST_CASE("tilting the supercritical exponential swaps the rates") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const auto tilted = mu.tilted();
  CHECK(tilted.kind() == MeasureKind::Exponential);
  CHECK(tilted.exp_birth_rate() == doctest::Approx(1.0));
  CHECK(tilted.exp_death_rate() == doctest::Approx(2.0));
  CHECK(tilted.eta() == 0.0);
  // tilting a (sub)critical measure is the identity
  const auto sub = LifespanMeasure::exponential(1.0, 2.0);
  const auto sub_t = sub.tilted();
  CHECK(sub_t.exp_birth_rate() == doctest::Approx(1.0));
  CHECK(sub_t.exp_death_rate() == doctest::Approx(2.0));
  // tilt of a tilt is the identity (eta of the tilt vanishes)
  CHECK(tilted.tilted().exp_birth_rate() == doctest::Approx(1.0));
}

TEST_CASE("tail of the exponential measure") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  CHECK(mu.tail(0.0) == doctest::Approx(2.0));
  CHECK(mu.tail(1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(mu.tail(-3.0) == doctest::Approx(2.0));
}

TEST_CASE("point-mass measure: mass, mean, eta, tail") {
  const auto mu = LifespanMeasure::atoms({{0.5, 1.0}, {2.0, 0.8}});
  CHECK(mu.mass() == doctest::Approx(1.8));
  CHECK(mu.mean() == doctest::Approx(0.5 * 1.0 + 2.0 * 0.8));
  CHECK(mu.mean() > 1.0);     // supercritical
  CHECK(mu.eta() > 0.0);
  CHECK(mu.laplace_exponent(mu.eta()) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(mu.tail(1.0) == doctest::Approx(0.8));
  CHECK(mu.tail(2.5) == doctest::Approx(0.0));
  // tilted measure keeps the locations, damps weights by e^{-eta r}
  const auto t = mu.tilted();
  CHECK(t.atom_list()[0].first == doctest::Approx(0.5));
  CHECK(t.atom_list()[0].second ==
        doctest::Approx(1.0 * std::exp(-mu.eta() * 0.5)));
  CHECK(t.mean() < 1.0);  // tilted law is subcritical
}

TEST_CASE("tabulated measure approximates its exponential counterpart") {
  // density of Pi(dr) = b d e^{-d r} dr with b=1, d=2, on a fine grid
  std::vector<double> grid, dens;
  for (int i = 1; i <= 4000; ++i) {
    const double r = i * 0.005;
    grid.push_back(r);
    dens.push_back(1.0 * 2.0 * std::exp(-2.0 * r));
  }
  const auto mu = LifespanMeasure::tabulated(grid, dens);
  CHECK(mu.mass() == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(mu.mean() == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(mu.eta() == 0.0);
  CHECK(mu.tail(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
  const auto ref = LifespanMeasure::exponential(1.0, 2.0);
  for (double lam : {0.5, 1.0, 3.0})
    CHECK(mu.laplace_exponent(lam) ==
          doctest::Approx(ref.laplace_exponent(lam)).epsilon(1e-3));
}

TEST_CASE("measure constructors reject bad input") {
  CHECK_THROWS_AS(LifespanMeasure::exponential(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LifespanMeasure::atoms({}), std::invalid_argument);
  CHECK_THROWS_AS(LifespanMeasure::atoms({{-1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LifespanMeasure::tabulated({1.0}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(LifespanMeasure::tabulated({1.0, 0.5}, {1.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("lifespan sampler matches the normalized law") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  Rng rng(12345);
  const std::size_t n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = mu.sample_lifespan(rng);
  const auto ks = stats::ks_one_sample(
      xs, [](double x) { return 1.0 - std::exp(-x); });
  CHECK(ks.p_value > 0.001);
  CHECK(stats::mean(xs) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("point-mass sampler reproduces the weights") {
  const auto mu = LifespanMeasure::atoms({{0.5, 1.0}, {2.0, 0.8}});
  Rng rng(99);
  std::size_t small = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i)
    if (mu.sample_lifespan(rng) < 1.0) ++small;
  const auto b = stats::binomial_sigma_check(small, n, 1.0 / 1.8);
  CHECK(b.within);
}

TEST_CASE("ancestor laws of the exponential family are exponential") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const auto top = ancestor_law_top(mu);
  const auto bot = ancestor_law_bot(mu);
  // undershoot law: Exp(max(b, d)) = Exp(2); overshoot law: Exp(d) = Exp(1)
  for (double u : {0.1, 0.7, 1.9}) {
    CHECK(top.density(u) == doctest::Approx(2.0 * std::exp(-2.0 * u)).epsilon(1e-12));
    CHECK(bot.density(u) == doctest::Approx(1.0 * std::exp(-1.0 * u)).epsilon(1e-12));
    CHECK(top.cdf(u) == doctest::Approx(1.0 - std::exp(-2.0 * u)));
    CHECK(bot.cdf(u) == doctest::Approx(1.0 - std::exp(-1.0 * u)));
  }
  CHECK(top.total_mass() == doctest::Approx(1.0));
  CHECK(bot.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("ancestor law of a point-mass measure integrates to one") {
  const auto mu = LifespanMeasure::atoms({{0.5, 1.0}, {2.0, 0.8}});
  const auto top = AncestorLaw(mu, AncestorLaw::Which::Top);
  const auto bot = AncestorLaw(mu, AncestorLaw::Which::Bot);
  CHECK(top.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(bot.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(top.cdf(mu.support_max()) == doctest::Approx(1.0));
}

TEST_CASE("ancestor law samplers match their own cdfs") {
  const auto mu = LifespanMeasure::atoms({{0.5, 1.0}, {2.0, 0.8}});
  for (auto which : {AncestorLaw::Which::Top, AncestorLaw::Which::Bot}) {
    const AncestorLaw law(mu, which);
    Rng rng(which == AncestorLaw::Which::Top ? 7u : 8u);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = law.sample(rng);
    const auto ks = stats::ks_one_sample(xs, [&](double u) { return law.cdf(u); });
    CHECK(ks.statistic < 0.01);  // table-lookup law: distance, not p-value
  }
}

TEST_CASE("exponential ancestor sampler matches the closed form") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const auto top = ancestor_law_top(mu);
  Rng rng(31337);
  const std::size_t n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = top.sample(rng);
  const auto ks = stats::ks_one_sample(
      xs, [](double u) { return 1.0 - std::exp(-2.0 * u); });
  CHECK(ks.p_value > 0.001);
}
