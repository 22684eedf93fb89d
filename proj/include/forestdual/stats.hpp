#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace forestdual {
namespace stats {

// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 l^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

struct KsResult {
  double statistic;  // sup |F1 - F2|
  double p_value;    // asymptotic, with small-sample lambda correction
};

// Two-sample Kolmogorov-Smirnov. Ties are handled by stepping both CDFs at
// the tied value before comparing, which is conservative for integer data.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return {d, kolmogorov_q(lambda)};
}

// One-sample Kolmogorov-Smirnov against an exact continuous CDF.
template <typename Cdf>
KsResult ks_one_sample(std::vector<double> a, Cdf&& cdf) {
  if (a.size() < 2) throw std::invalid_argument("ks: sample too small");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
  }
  const double sq = std::sqrt(n);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return {d, kolmogorov_q(lambda)};
}

// Regularized upper incomplete gamma Q(a, x), by series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad args");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // P by series, Q = 1 - P
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Q by Lentz continued fraction
  const double tiny = 1e-300;
  double bcf = x + 1.0 - a, c = 1.0 / tiny, dcf = 1.0 / bcf, h = dcf;
  for (int n = 1; n < 500; ++n) {
    const double an = -n * (n - a);
    bcf += 2.0;
    dcf = an * dcf + bcf;
    if (std::fabs(dcf) < tiny) dcf = tiny;
    c = bcf + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    dcf = 1.0 / dcf;
    const double delta = dcf * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

struct Chi2Result {
  double statistic;
  double p_value;
  std::size_t dof;
};

// Pearson chi-square of observed counts against expected counts; bins are
// pooled from the right until every expected count is >= min_expected.
inline Chi2Result chi2_gof(std::vector<double> observed,
                           std::vector<double> expected,
                           double min_expected = 5.0,
                           std::size_t estimated_params = 0) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi2: size mismatch");
  // pool the tail
  while (expected.size() > 2 && expected.back() < min_expected) {
    expected[expected.size() - 2] += expected.back();
    observed[observed.size() - 2] += observed.back();
    expected.pop_back();
    observed.pop_back();
  }
  // pool any remaining small interior bins into their right neighbour
  std::vector<double> obs, exp;
  double co = 0.0, ce = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    co += observed[i];
    ce += expected[i];
    if (ce >= min_expected || i + 1 == expected.size()) {
      obs.push_back(co);
      exp.push_back(ce);
      co = ce = 0.0;
    }
  }
  if (exp.size() >= 2 && exp.back() < min_expected) {
    exp[exp.size() - 2] += exp.back();
    obs[obs.size() - 2] += obs.back();
    exp.pop_back();
    obs.pop_back();
  }
  if (exp.size() < 2) throw std::invalid_argument("chi2: too few usable bins");
  double stat = 0.0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    const double d = obs[i] - exp[i];
    stat += d * d / exp[i];
  }
  const std::size_t dof =
      exp.size() - 1 - std::min(estimated_params, exp.size() - 2);
  return {stat, gamma_q(0.5 * static_cast<double>(dof), 0.5 * stat), dof};
}

// Chi-square of observed integer counts (values 1,2,...) against
// Geometric(p) on {1,2,...}: P(k) = p (1-p)^{k-1}.
inline Chi2Result chi2_geometric(const std::vector<long>& sample, double p) {
  if (sample.empty()) throw std::invalid_argument("chi2_geometric: empty");
  long maxv = 1;
  for (long v : sample) {
    if (v < 1) throw std::invalid_argument("chi2_geometric: value < 1");
    maxv = std::max(maxv, v);
  }
  const double n = static_cast<double>(sample.size());
  std::vector<double> obs(static_cast<std::size_t>(maxv) + 1, 0.0);
  std::vector<double> expd(static_cast<std::size_t>(maxv) + 1, 0.0);
  for (long v : sample) obs[static_cast<std::size_t>(v) - 1] += 1.0;
  double tail = 1.0;
  for (long k = 1; k <= maxv; ++k) {
    const double pk = p * std::pow(1.0 - p, static_cast<double>(k - 1));
    expd[static_cast<std::size_t>(k) - 1] = n * pk;
    tail -= pk;
  }
  // last cell: everything above maxv
  obs.back() = 0.0;
  expd.back() = n * std::max(tail, 0.0);
  return chi2_gof(std::move(obs), std::move(expd));
}

struct BinomialCheck {
  double observed_freq;
  double expected_prob;
  double z;  // (obs - exp) / sqrt(p(1-p)/n)
  bool within;
};

inline BinomialCheck binomial_sigma_check(std::size_t hits, std::size_t n,
                                          double p, double n_sigma = 3.0) {
  const double freq = static_cast<double>(hits) / static_cast<double>(n);
  const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  const double z = (freq - p) / sd;
  return {freq, p, z, std::fabs(z) <= n_sigma};
}

inline double pearson_r(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_r: bad sizes");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace stats
}  // namespace forestdual
