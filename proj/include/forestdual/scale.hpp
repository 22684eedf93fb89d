#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "forestdual/measure.hpp"

namespace forestdual {

// Scale function W on a uniform grid, from the renewal identity
//   W(x) = 1 + int_0^x W(x - v) Pibar(v) dv,
// solved by forward marching with trapezoid weights (the implicit diagonal
// term is moved to the left-hand side). Closed form for the exponential
// family unless the Volterra route is forced.
class ScaleTable {
 public:
  enum class Method { Auto, Volterra, ClosedForm };

  ScaleTable(const LifespanMeasure& mu, double x_max, double h,
             Method method = Method::Auto)
      : mu_(mu), h_(h), x_max_(x_max) {
    if (!(h > 0.0) || !(x_max > 0.0) || h > x_max / 100.0)
      throw std::invalid_argument("ScaleTable: need 0 < h <= x_max/100");
    const std::size_t n = static_cast<std::size_t>(std::llround(x_max / h));
    x_max_ = h * static_cast<double>(n);
    values_.resize(n + 1);
    const bool closed =
        method == Method::ClosedForm ||
        (method == Method::Auto && mu.kind() == MeasureKind::Exponential);
    if (closed) {
      if (mu.kind() != MeasureKind::Exponential)
        throw std::invalid_argument("closed-form W only for the exponential family");
      const double b = mu.exp_birth_rate(), d = mu.exp_death_rate();
      for (std::size_t k = 0; k <= n; ++k) {
        const double x = h * static_cast<double>(k);
        values_[k] = b == d ? 1.0 + b * x
                            : (b * std::exp((b - d) * x) - d) / (b - d);
      }
    } else {
      solve_volterra(n);
    }
  }

  double grid_step() const { return h_; }
  double x_max() const { return x_max_; }
  const std::vector<double>& values() const { return values_; }
  const LifespanMeasure& measure() const { return mu_; }

  // Linear interpolation between grid points; W(x) = 0 for x < 0.
  double operator()(double x) const {
    if (x < 0.0) return 0.0;
    if (x >= x_max_) {
      if (x <= x_max_ * (1.0 + 1e-12)) return values_.back();
      throw std::out_of_range("ScaleTable: x beyond horizon");
    }
    const double pos = x / h_;
    const std::size_t k = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(k);
    return values_[k] + w * (values_[k + 1] - values_[k]);
  }

  // max_k |int_0^{x_k} W(x_k - v) Pibar(v) dv - (W(x_k) - 1)| / W(x_k),
  // composite Simpson quadrature on the table's own grid (3/8 rule on the
  // last three intervals when the count is odd).
  double convolution_residual() const {
    double worst = 0.0;
    std::vector<double> tail(values_.size());
    for (std::size_t j = 0; j < tail.size(); ++j)
      tail[j] = mu_.tail(h_ * static_cast<double>(j));
    std::vector<double> f(values_.size());
    for (std::size_t k = 1; k < values_.size(); ++k) {
      for (std::size_t j = 0; j <= k; ++j) f[j] = values_[k - j] * tail[j];
      double integral;
      if (k == 1) {
        integral = 0.5 * h_ * (f[0] + f[1]);
      } else {
        const std::size_t m = k % 2 == 0 ? k : k - 3;
        integral = 0.0;
        if (m > 0) {
          double s = f[0] + f[m];
          for (std::size_t j = 1; j < m; ++j) s += (j % 2 == 1 ? 4.0 : 2.0) * f[j];
          integral += s * h_ / 3.0;
        }
        if (m != k)
          integral +=
              0.375 * h_ * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[k]);
      }
      const double res = std::abs(integral - (values_[k] - 1.0)) / values_[k];
      if (res > worst) worst = res;
    }
    return worst;
  }

 private:
  // Forward marching with trapezoid weights; the implicit diagonal term is
  // moved to the left-hand side. Second-order accurate.
  std::vector<double> march(std::size_t n, double h) const {
    std::vector<double> tail(n + 1), w(n + 1);
    for (std::size_t j = 0; j <= n; ++j)
      tail[j] = mu_.tail(h * static_cast<double>(j));
    w[0] = 1.0;
    const double diag = 1.0 - 0.5 * h * tail[0];
    if (diag <= 0.0)
      throw std::runtime_error("ScaleTable: step too coarse for this measure");
    for (std::size_t k = 1; k <= n; ++k) {
      double rhs = 1.0 + 0.5 * h * w[0] * tail[k];
      for (std::size_t j = 1; j < k; ++j) rhs += h * w[k - j] * tail[j];
      w[k] = rhs / diag;
      if (w[k] < w[k - 1])
        throw std::runtime_error("ScaleTable: solution not increasing (step too coarse)");
    }
    return w;
  }

  // Richardson extrapolation of the trapezoid march at steps h and h/2
  // lifts the second-order error to fourth order.
  void solve_volterra(std::size_t n) {
    const std::vector<double> coarse = march(n, h_);
    const std::vector<double> fine = march(2 * n, 0.5 * h_);
    for (std::size_t k = 0; k <= n; ++k)
      values_[k] = (4.0 * fine[2 * k] - coarse[k]) / 3.0;
  }

  LifespanMeasure mu_;
  double h_, x_max_;
  std::vector<double> values_;
};

inline ScaleTable build_scale_table(const LifespanMeasure& mu, double x_max,
                                    double h,
                                    ScaleTable::Method method = ScaleTable::Method::Auto) {
  return ScaleTable(mu, x_max, h, method);
}

// P_x(tau_0 < tau_a^+) = W(a - x) / W(a) for 0 <= x <= a.
inline double exit_down_prob(const ScaleTable& table, double x, double a) {
  if (x < 0.0 || x > a) throw std::out_of_range("exit_down_prob: need 0 <= x <= a");
  return table(a - x) / table(a);
}

// (gamma, gamma_tilde) = (1/W(T), 1/Wtilde(T)).
struct GammaParams {
  double gamma;
  double gamma_tilde;
};

inline GammaParams gamma_params(const LifespanMeasure& mu, double T,
                                double h = 1e-4) {
  const double x_max = std::max(T, 100.0 * h);
  ScaleTable w(mu, x_max, h);
  ScaleTable wt(mu.tilted(), x_max, h);
  return {1.0 / w(T), 1.0 / wt(T)};
}

// P_x(tau_0 < inf) = e^{-eta x}.
inline double hit_zero_prob(const LifespanMeasure& mu, double x) {
  if (x < 0.0) throw std::domain_error("hit_zero_prob: x >= 0");
  return std::exp(-mu.eta() * x);
}

// Geometric parameter of the dual stopped sequence in the strictly
// subcritical case: 1 - (1 - 1/W(T)) / (1 - 1/W(inf)), W(inf) = 1/(1-m).
inline double subcritical_dual_geometric_param(const LifespanMeasure& mu, double T,
                                               double h = 1e-4) {
  if (mu.mean() >= 1.0)
    throw std::domain_error("subcritical_dual_geometric_param: need m < 1");
  ScaleTable w(mu, std::max(T, 100.0 * h), h);
  const double w_inf = 1.0 / (1.0 - mu.mean());
  return 1.0 - (1.0 - 1.0 / w(T)) / (1.0 - 1.0 / w_inf);
}

}  // namespace forestdual
