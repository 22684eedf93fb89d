#include <cmath>
#include <vector>

#include "doctest.h"
#include "forestdual/measure.hpp"
#include "forestdual/scale.hpp"

using namespace forestdual;

namespace {
double closed_form_w(double b, double d, double x) {
  if (x < 0.0) return 0.0;
  return b == d ? 1.0 + b * x : (b * std::exp((b - d) * x) - d) / (b - d);
}
}  // namespace

TEST_CASE("closed-form scale function values") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const ScaleTable w(mu, 5.0, 1e-3);
  CHECK(w(0.0) == doctest::Approx(1.0));
  CHECK(w(1.0) == doctest::Approx(2.0 * std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(w(10.0), std::out_of_range);
  CHECK(w(-1.0) == 0.0);
}

TEST_CASE("subcritical scale function saturates at 1/(1-m)") {
  const auto mu = LifespanMeasure::exponential(1.0, 2.0);  // m = 1/2
  const ScaleTable w(mu, 40.0, 1e-2);
  CHECK(w(40.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(w(1.0) == doctest::Approx((std::exp(-1.0) - 2.0) / (-1.0)).epsilon(1e-12));
}

TEST_CASE("renewal solver agrees with the closed form") {
  const double pairs[4][2] = {{2.0, 1.0}, {1.0, 2.0}, {1.0, 1.0}, {4.0, 1.0}};
  for (const auto& p : pairs) {
    const auto mu = LifespanMeasure::exponential(p[0], p[1]);
    const ScaleTable wv(mu, 5.0, 1e-3, ScaleTable::Method::Volterra);
    for (double x = 0.0; x <= 5.0; x += 0.25) {
      const double ref = closed_form_w(p[0], p[1], x);
      CHECK(std::fabs(wv(x) - ref) / ref < 1e-6);
    }
    CHECK(wv.convolution_residual() < 1e-6);
  }
}

TEST_CASE("scale function is nondecreasing with W(0) = 1") {
  const auto mu = LifespanMeasure::atoms({{0.5, 1.0}, {2.0, 0.8}});
  const ScaleTable w(mu, 4.0, 1e-3);
  CHECK(w.values().front() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < w.values().size(); ++i)
    CHECK(w.values()[i] >= w.values()[i - 1]);
  // Quadrature of the integral equation loses an order of accuracy at the
  // tail discontinuities of an atomic measure; the bound reflects that.
  CHECK(w.convolution_residual() < 5e-4);
}

TEST_CASE("tilt relation W(x) = e^{eta x} W_tilted(x)") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const double eta = mu.eta();
  const ScaleTable w(mu, 3.0, 1e-3);
  const ScaleTable wt(mu.tilted(), 3.0, 1e-3);
  for (double x = 0.0; x <= 3.0; x += 0.2)
    CHECK(w(x) == doctest::Approx(std::exp(eta * x) * wt(x)).epsilon(1e-9));
}

TEST_CASE("two-sided exit probability") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const ScaleTable w(mu, 2.0, 1e-4);
  // start x = 0.5, barrier a = 1: W(0.5)/W(1) = (2 e^{1/2} - 1)/(2 e - 1)
  const double expect =
      (2.0 * std::exp(0.5) - 1.0) / (2.0 * std::exp(1.0) - 1.0);
  CHECK(exit_down_prob(w, 0.5, 1.0) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(expect == doctest::Approx(0.517843).epsilon(1e-5));
  CHECK(exit_down_prob(w, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(exit_down_prob(w, 1.0, 1.0) ==
        doctest::Approx(1.0 / (2.0 * std::exp(1.0) - 1.0)));
  CHECK_THROWS_AS(exit_down_prob(w, 1.5, 1.0), std::out_of_range);
}

TEST_CASE("survival parameters gamma and gamma_tilde") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  const auto g = gamma_params(mu, 1.0);
  // 1/W(1) = 1/(2e - 1); tilted side swaps rates: 1/(2 - e^{-1})
  CHECK(g.gamma == doctest::Approx(1.0 / (2.0 * std::exp(1.0) - 1.0))
                       .epsilon(1e-10));
  CHECK(g.gamma == doctest::Approx(0.225399).epsilon(1e-5));
  CHECK(g.gamma_tilde ==
        doctest::Approx(1.0 / (2.0 - std::exp(-1.0))).epsilon(1e-10));
  CHECK(g.gamma_tilde == doctest::Approx(0.612700).epsilon(1e-5));
}

TEST_CASE("probability of ever hitting zero") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  CHECK(hit_zero_prob(mu, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(hit_zero_prob(mu, 0.0) == doctest::Approx(1.0));
  const auto sub = LifespanMeasure::exponential(1.0, 2.0);
  CHECK(hit_zero_prob(sub, 7.0) == doctest::Approx(1.0));
}

TEST_CASE("geometric parameter of the subcritical stopped sequence") {
  const auto mu = LifespanMeasure::exponential(1.0, 2.0);
  // 1 - (1 - 1/W(1)) / (1 - 1/W(inf)) with W(1) = 2 - e^{-1}, W(inf) = 2
  const double w1 = 2.0 - std::exp(-1.0);
  const double expect = 1.0 - (1.0 - 1.0 / w1) / (1.0 - 0.5);
  CHECK(subcritical_dual_geometric_param(mu, 1.0) ==
        doctest::Approx(expect).epsilon(1e-8));
  CHECK(expect == doctest::Approx(0.225399).epsilon(1e-5));
  CHECK_THROWS_AS(
      subcritical_dual_geometric_param(LifespanMeasure::exponential(2.0, 1.0),
                                       1.0),
      std::domain_error);
}

TEST_CASE("grid validation") {
  const auto mu = LifespanMeasure::exponential(2.0, 1.0);
  CHECK_THROWS_AS(ScaleTable(mu, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ScaleTable(mu, -1.0, 1e-3), std::invalid_argument);
}
