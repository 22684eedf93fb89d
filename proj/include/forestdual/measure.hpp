#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forestdual/rng.hpp"

namespace forestdual {

enum class MeasureKind { Exponential, TabulatedDensity, PointMasses };

// Finite lifespan measure on (0, inf): total mass b (birth rate), mean m
// (criticality parameter), largest root eta of the Laplace exponent
//   psi(lambda) = lambda - int (1 - exp(-lambda r)) Pi(dr).
class LifespanMeasure {
 public:
  static LifespanMeasure exponential(double b, double d) {
    if (!(b > 0.0) || !(d > 0.0))
      throw std::invalid_argument("exponential measure needs b>0, d>0");
    LifespanMeasure mu;
    mu.kind_ = MeasureKind::Exponential;
    mu.exp_b_ = b;
    mu.exp_d_ = d;
    mu.mass_ = b;
    mu.mean_ = b / d;
    mu.eta_ = b > d ? b - d : 0.0;
    return mu;
  }

  // Density values on a strictly increasing grid in (0, r_max]; zero beyond.
  static LifespanMeasure tabulated(std::vector<double> grid,
                                   std::vector<double> density) {
    if (grid.size() != density.size() || grid.size() < 2)
      throw std::invalid_argument("tabulated measure: bad grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] <= 0.0 || (i > 0 && grid[i] <= grid[i - 1]))
        throw std::invalid_argument("tabulated measure: grid not increasing in (0,inf)");
      if (density[i] < 0.0)
        throw std::invalid_argument("tabulated measure: negative density");
    }
    LifespanMeasure mu;
    mu.kind_ = MeasureKind::TabulatedDensity;
    mu.grid_ = std::move(grid);
    mu.dens_ = std::move(density);
    mu.init_table();
    mu.eta_ = mu.solve_eta();
    return mu;
  }

  static LifespanMeasure atoms(std::vector<std::pair<double, double>> pts) {
    if (pts.empty()) throw std::invalid_argument("point-mass measure: empty");
    for (auto& [r, w] : pts)
      if (!(r > 0.0) || !(w > 0.0))
        throw std::invalid_argument("point-mass measure: need r>0, w>0");
    std::sort(pts.begin(), pts.end());
    LifespanMeasure mu;
    mu.kind_ = MeasureKind::PointMasses;
    mu.atoms_ = std::move(pts);
    mu.mass_ = 0.0;
    mu.mean_ = 0.0;
    for (auto& [r, w] : mu.atoms_) {
      mu.mass_ += w;
      mu.mean_ += r * w;
    }
    mu.eta_ = mu.solve_eta();
    return mu;
  }

  MeasureKind kind() const { return kind_; }
  double mass() const { return mass_; }   // b
  double mean() const { return mean_; }   // m
  double eta() const { return eta_; }
  double exp_birth_rate() const { return exp_b_; }
  double exp_death_rate() const { return exp_d_; }
  const std::vector<std::pair<double, double>>& atom_list() const { return atoms_; }
  const std::vector<double>& table_grid() const { return grid_; }
  const std::vector<double>& table_density() const { return dens_; }

  // Largest lifespan with positive measure; infinity for the exponential kind.
  double support_max() const {
    switch (kind_) {
      case MeasureKind::Exponential: return std::numeric_limits<double>::infinity();
      case MeasureKind::TabulatedDensity: return grid_.back();
      case MeasureKind::PointMasses: return atoms_.back().first;
    }
    return 0.0;
  }

  // Tail Pi([u, inf)).
  double tail(double u) const {
    if (u <= 0.0) return mass_;
    switch (kind_) {
      case MeasureKind::Exponential:
        return exp_b_ * std::exp(-exp_d_ * u);
      case MeasureKind::TabulatedDensity:
        return tail_interp(u);
      case MeasureKind::PointMasses: {
        double s = 0.0;
        for (auto& [r, w] : atoms_)
          if (r >= u) s += w;
        return s;
      }
    }
    return 0.0;
  }

  // psi(lambda) = lambda - int (1 - e^{-lambda r}) Pi(dr).
  double laplace_exponent(double lambda) const {
    if (lambda < 0.0)
      throw std::domain_error("laplace_exponent: lambda must be >= 0");
    switch (kind_) {
      case MeasureKind::Exponential:
        // closed form: lambda (lambda + d - b) / (lambda + d)
        return lambda * (lambda + exp_d_ - exp_b_) / (lambda + exp_d_);
      case MeasureKind::TabulatedDensity: {
        double integral = 0.0;  // trapezoid on the supplied grid, from 0
        double prev_r = 0.0, prev_f = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
          const double f = (1.0 - std::exp(-lambda * grid_[i])) * dens_[i];
          integral += 0.5 * (f + prev_f) * (grid_[i] - prev_r);
          prev_r = grid_[i];
          prev_f = f;
        }
        return lambda - integral;
      }
      case MeasureKind::PointMasses: {
        double integral = 0.0;
        for (auto& [r, w] : atoms_) integral += w * (1.0 - std::exp(-lambda * r));
        return lambda - integral;
      }
    }
    return 0.0;
  }

  // Tilted measure e^{-eta y} Pi(dy); identity when eta = 0.
  LifespanMeasure tilted() const {
    if (eta_ == 0.0) return *this;
    switch (kind_) {
      case MeasureKind::Exponential:
        // eta = b - d, so e^{-eta y} b d e^{-d y} = (d)(b) e^{-b y}: swapped rates
        return exponential(exp_d_, exp_b_);
      case MeasureKind::TabulatedDensity: {
        std::vector<double> dens(dens_.size());
        for (std::size_t i = 0; i < dens_.size(); ++i)
          dens[i] = dens_[i] * std::exp(-eta_ * grid_[i]);
        return tabulated(grid_, std::move(dens));
      }
      case MeasureKind::PointMasses: {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(atoms_.size());
        for (auto& [r, w] : atoms_) pts.emplace_back(r, w * std::exp(-eta_ * r));
        return atoms(std::move(pts));
      }
    }
    throw std::logic_error("unreachable");
  }

  // One draw from the normalized law Pi(.)/b.
  double sample_lifespan(Rng& rng) const {
    switch (kind_) {
      case MeasureKind::Exponential:
        return rng.exponential(exp_d_);
      case MeasureKind::TabulatedDensity: {
        const double u = rng.uniform() * mass_;
        return inverse_cumulative(u);
      }
      case MeasureKind::PointMasses: {
        double u = rng.uniform() * mass_;
        for (auto& [r, w] : atoms_) {
          if (u < w) return r;
          u -= w;
        }
        return atoms_.back().first;
      }
    }
    return 0.0;
  }

 private:
  LifespanMeasure() = default;

  void init_table() {
    mass_ = 0.0;
    mean_ = 0.0;
    cum_.assign(grid_.size(), 0.0);
    double prev_r = 0.0, prev_f = 0.0, prev_rf = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double dr = grid_[i] - prev_r;
      mass_ += 0.5 * (dens_[i] + prev_f) * dr;
      mean_ += 0.5 * (grid_[i] * dens_[i] + prev_rf) * dr;
      cum_[i] = mass_;
      prev_r = grid_[i];
      prev_f = dens_[i];
      prev_rf = grid_[i] * dens_[i];
    }
    if (!(mass_ > 0.0))
      throw std::invalid_argument("tabulated measure: zero mass");
  }

  double tail_interp(double u) const {
    if (u >= grid_.back()) return 0.0;
    // mass below u by trapezoid, linearly interpolating the density
    auto it = std::lower_bound(grid_.begin(), grid_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    const double r0 = i == 0 ? 0.0 : grid_[i - 1];
    const double f0 = i == 0 ? 0.0 : dens_[i - 1];
    const double c0 = i == 0 ? 0.0 : cum_[i - 1];
    const double w = (u - r0) / (grid_[i] - r0);
    const double fu = f0 + w * (dens_[i] - f0);
    const double below = c0 + 0.5 * (f0 + fu) * (u - r0);
    return mass_ - below;
  }

  double inverse_cumulative(double target) const {
    auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i >= grid_.size()) return grid_.back();
    const double r0 = i == 0 ? 0.0 : grid_[i - 1];
    const double c0 = i == 0 ? 0.0 : cum_[i - 1];
    const double seg = cum_[i] - c0;
    if (seg <= 0.0) return grid_[i];
    return r0 + (grid_[i] - r0) * (target - c0) / seg;
  }

  // Bisection on [tiny, hi] after doubling hi until psi(hi) > 0.
  double solve_eta() const {
    const double slope0 = 1.0 - mean_;  // psi'(0+)
    if (slope0 >= 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (laplace_exponent(hi) <= 0.0) {
      hi *= 2.0;
      if (++guard > 200)
        throw std::runtime_error("solve_eta: root not bracketed");
    }
    double lo = 1e-12;
    if (laplace_exponent(lo) >= 0.0) {
      // psi dips negative somewhere in (lo, hi); move lo past the dip
      double probe = hi / 2.0;
      while (laplace_exponent(probe) >= 0.0 && probe > lo) probe /= 2.0;
      lo = probe;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      (laplace_exponent(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  MeasureKind kind_ = MeasureKind::Exponential;
  double mass_ = 0.0, mean_ = 0.0, eta_ = 0.0;
  double exp_b_ = 0.0, exp_d_ = 0.0;
  std::vector<double> grid_, dens_, cum_;
  std::vector<std::pair<double, double>> atoms_;
};

inline double laplace_exponent(const LifespanMeasure& mu, double lambda) {
  return mu.laplace_exponent(lambda);
}
inline double solve_eta(const LifespanMeasure& mu) { return mu.eta(); }
inline LifespanMeasure tilt(const LifespanMeasure& mu) { return mu.tilted(); }

// Ancestor lifespan law with density and inverse-CDF sampler.
// top: mu_top(du) = e^{-eta u} Pibar(u) / (m ^ 1) du   (undershoot law)
// bot: mu_bot(dv) = e^{eta v} tilted-Pibar(v) / (m ^ 1) dv   (overshoot law)
class AncestorLaw {
 public:
  enum class Which { Top, Bot };

  AncestorLaw(const LifespanMeasure& mu, Which which, std::size_t table_size = 4096)
      : which_(which) {
    const double eta = mu.eta();
    const double norm = std::min(mu.mean(), 1.0);
    if (mu.kind() == MeasureKind::Exponential) {
      // top is Exp(b v d), bot is Exp(d)
      const double b = mu.exp_birth_rate(), d = mu.exp_death_rate();
      exp_rate_ = which == Which::Top ? std::max(b, d) : d;
      return;
    }
    LifespanMeasure tilted = mu.tilted();
    const double r_max = mu.support_max();
    dens_fn_ = [mu, tilted, eta, norm, which](double u) {
      if (u <= 0.0) return 0.0;
      if (which == Which::Top) return std::exp(-eta * u) * mu.tail(u) / norm;
      return std::exp(eta * u) * tilted.tail(u) / norm;
    };
    // inverse-CDF table on (0, r_max]
    grid_.resize(table_size + 1);
    cdf_.resize(table_size + 1);
    const double h = r_max / static_cast<double>(table_size);
    double acc = 0.0, prev = dens_fn_(0.0);
    grid_[0] = 0.0;
    cdf_[0] = 0.0;
    for (std::size_t i = 1; i <= table_size; ++i) {
      const double u = h * static_cast<double>(i);
      const double f = dens_fn_(u);
      acc += 0.5 * (f + prev) * h;
      grid_[i] = u;
      cdf_[i] = acc;
      prev = f;
    }
    total_ = acc;
  }

  double density(double u) const {
    if (u <= 0.0) return 0.0;
    if (exp_rate_ > 0.0) return exp_rate_ * std::exp(-exp_rate_ * u);
    return dens_fn_(u);
  }

  // Integral of the density over (0, inf); 1 up to quadrature error.
  double total_mass() const { return exp_rate_ > 0.0 ? 1.0 : total_; }

  double cdf(double u) const {
    if (u <= 0.0) return 0.0;
    if (exp_rate_ > 0.0) return 1.0 - std::exp(-exp_rate_ * u);
    if (u >= grid_.back()) return 1.0;
    auto it = std::upper_bound(grid_.begin(), grid_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    const double w = (u - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
    return (cdf_[i - 1] + w * (cdf_[i] - cdf_[i - 1])) / total_;
  }

  double sample(Rng& rng) const {
    if (exp_rate_ > 0.0) return rng.exponential(exp_rate_);
    const double target = rng.uniform() * total_;
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) i = 1;
    if (i >= cdf_.size()) i = cdf_.size() - 1;
    const double seg = cdf_[i] - cdf_[i - 1];
    if (seg <= 0.0) return grid_[i];
    return grid_[i - 1] + (grid_[i] - grid_[i - 1]) * (target - cdf_[i - 1]) / seg;
  }

 private:
  Which which_;
  double exp_rate_ = 0.0;  // closed-form exponential family when > 0
  double total_ = 1.0;
  std::function<double(double)> dens_fn_;
  std::vector<double> grid_, cdf_;
};

inline AncestorLaw ancestor_law_top(const LifespanMeasure& mu) {
  return AncestorLaw(mu, AncestorLaw::Which::Top);
}
inline AncestorLaw ancestor_law_bot(const LifespanMeasure& mu) {
  return AncestorLaw(mu, AncestorLaw::Which::Bot);
}

}  // namespace forestdual
