#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "forestdual/contour.hpp"
#include "forestdual/measure.hpp"
#include "forestdual/parallel.hpp"
#include "forestdual/path.hpp"
#include "forestdual/report.hpp"
#include "forestdual/rng.hpp"
#include "forestdual/scale.hpp"
#include "forestdual/sim.hpp"
#include "forestdual/stats.hpp"
#include "forestdual/tree.hpp"

namespace forestdual {

namespace detail {

// RNG stream tags, one per check, so checks never share randomness.
enum StreamTag : std::uint64_t {
  kTagWidth = 1,
  kTagContour = 2,
  kTagSurvival = 3,
  kTagOverUnder = 4,
  kTagReversal = 5,
  kTagMeasureChange = 6,
  kTagDecomposition = 7,
  kTagCalibration = 8,
};

class StopWatch {
 public:
  StopWatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

// The two dual forest specifications compared by the main identity: the
// base measure with overshoot-law ancestors vs the tilted measure with
// undershoot-law ancestors of the base measure, both stopped at the first
// tree reaching T.
struct DualPair {
  ForestSpec left;
  ForestSpec right;
  double gamma;        // 1/W(T): success prob of the right-side tree count
  double gamma_tilde;  // 1/W~(T): success prob of the left-side tree count
};

inline DualPair make_dual_pair(const LifespanMeasure& mu, double T,
                               double h = 1e-4) {
  DualPair d;
  d.left.measure = mu;
  d.left.ceiling = T;
  d.left.stop = ForestStop::FirstSurvivor;
  d.left.root_law = ForestSpec::RootLaw::AncestorBot;
  d.left.ancestor_base = mu;
  d.right = d.left;
  d.right.measure = mu.tilted();
  d.right.root_law = ForestSpec::RootLaw::AncestorTop;
  if (mu.mean() < 1.0) {
    // strictly subcritical base: the tilt is the identity, both stopped
    // sequences share the saturation-corrected success probability
    d.gamma = d.gamma_tilde = subcritical_dual_geometric_param(mu, T, h);
  } else {
    const auto g = gamma_params(mu, T, h);
    d.gamma = g.gamma;
    d.gamma_tilde = g.gamma_tilde;
  }
  return d;
}

namespace detail {

struct ForestSummary {
  std::array<long, 3> slice;  // widths at the three interior slice levels
  long survivors;
  long trees;
  double area;
  long max_width;
};

// Forward-time summary; `reversed` evaluates the slices at T - t instead
// of t, matching the time-reversed side of the identity.
inline ForestSummary summarize_forest(const Forest& f, double T,
                                      bool reversed) {
  WidthProcess w(f);
  ForestSummary s;
  static constexpr double kFrac[3] = {0.25, 0.5, 0.75};
  for (int i = 0; i < 3; ++i) {
    const double t = kFrac[i] * T;
    s.slice[static_cast<std::size_t>(i)] = w(reversed ? T - t : t);
  }
  s.survivors = w(T);
  s.trees = static_cast<long>(f.size());
  s.area = forest_total_length(f);
  s.max_width = w.max_width();
  return s;
}

struct SummaryColumns {
  std::vector<double> s0, s1, s2, survivors, trees, area, max_width;
  std::vector<long> trees_l;
  explicit SummaryColumns(std::size_t n)
      : s0(n), s1(n), s2(n), survivors(n), trees(n), area(n), max_width(n),
        trees_l(n) {}
  void put(std::size_t i, const ForestSummary& s) {
    s0[i] = static_cast<double>(s.slice[0]);
    s1[i] = static_cast<double>(s.slice[1]);
    s2[i] = static_cast<double>(s.slice[2]);
    survivors[i] = static_cast<double>(s.survivors);
    trees[i] = static_cast<double>(s.trees);
    area[i] = s.area;
    max_width[i] = static_cast<double>(s.max_width);
    trees_l[i] = s.trees;
  }
};

}  // namespace detail

// Width-process time-reversal identity between the two dual forests:
// slice marginals of the reversed left width process against the right
// width process, scalar functionals, and each side's tree-count law.
// With null_mode = true both sides are summarized forward in time and the
// endpoint statistics are compared like for like; used to calibrate the
// test battery on two independent samples of one specification.
inline RunReport check_width_reversal_pair(const DualPair& d, std::size_t n,
                                           std::uint64_t seed,
                                           unsigned threads = 0,
                                           std::uint64_t tag =
                                               detail::kTagWidth,
                                           const char* check_id =
                                               "width_reversal",
                                           bool null_mode = false) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = check_id;
  rep.seed = seed;
  rep.n_samples = n;

  detail::SummaryColumns left(n), right(n);
  const AncestorLaw anc_left = make_ancestor_law(d.left);
  const AncestorLaw anc_right = make_ancestor_law(d.right);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rl = Rng::stream(seed, tag, i, 0);
    left.put(i, detail::summarize_forest(simulate_forest(d.left, &anc_left, rl),
                                         d.left.ceiling, !null_mode));
    Rng rr = Rng::stream(seed, tag, i, 1);
    right.put(i,
              detail::summarize_forest(simulate_forest(d.right, &anc_right, rr),
                                       d.right.ceiling, false));
  });

  const int n_tests = 9;
  const double alpha = 0.01 / n_tests;
  auto ks = [&](const char* name, const std::vector<double>& a,
                const std::vector<double>& b) {
    const auto r = stats::ks_two_sample(a, b);
    rep.add_p(name, r.statistic, r.p_value, alpha);
  };
  ks("slice_0.25", left.s0, right.s0);
  ks("slice_0.50", left.s1, right.s1);
  ks("slice_0.75", left.s2, right.s2);
  if (null_mode) {
    ks("endpoint_trees", left.trees, right.trees);
    ks("endpoint_top", left.survivors, right.survivors);
  } else {
    ks("endpoint_left_trees_vs_right_top", left.trees, right.survivors);
    ks("endpoint_left_top_vs_right_trees", left.survivors, right.trees);
  }
  ks("total_area", left.area, right.area);
  ks("max_width", left.max_width, right.max_width);
  {
    const auto c = stats::chi2_geometric(left.trees_l, d.gamma_tilde);
    rep.add_p("left_tree_count_geometric", c.statistic, c.p_value, alpha);
    const auto c2 = stats::chi2_geometric(right.trees_l, d.gamma);
    rep.add_p("right_tree_count_geometric", c2.statistic, c2.p_value, alpha);
  }
  rep.runtime_seconds = timer.seconds();
  return rep;
}

inline RunReport check_width_reversal(const LifespanMeasure& mu, double T,
                                      std::size_t n, std::uint64_t seed,
                                      unsigned threads = 0) {
  return check_width_reversal_pair(make_dual_pair(mu, T), n, seed, threads);
}

// Null calibration of the width check: both sides drawn from the left
// specification; the family-wise rejection rate over `seeds` seeds must stay
// within the stated budget.
inline RunReport calibrate_width_reversal(const LifespanMeasure& mu, double T,
                                          std::size_t n_per_side,
                                          std::size_t n_seeds,
                                          std::uint64_t seed,
                                          unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "calibration_width_reversal";
  rep.seed = seed;
  rep.n_samples = n_seeds;
  DualPair d = make_dual_pair(mu, T);
  d.right = d.left;  // null: identical specifications on both sides
  d.gamma = d.gamma_tilde;
  std::vector<int> rejected(n_seeds, 0);
  parallel_for(n_seeds, threads, [&](std::size_t s) {
    const std::uint64_t sub_seed = mix_seed(seed, detail::kTagCalibration, s, 0);
    const auto r = check_width_reversal_pair(d, n_per_side, sub_seed, 1,
                                             detail::kTagCalibration,
                                             "calibration_member", true);
    rejected[s] = r.pass() ? 0 : 1;
  });
  long total = 0;
  for (int r : rejected) total += r;
  const double freq =
      static_cast<double>(total) / static_cast<double>(n_seeds);
  rep.add_bound("family_wise_rejection_rate", freq, 0.05);
  rep.runtime_seconds = timer.seconds();
  return rep;
}

// Contour identity: the last-passage rearrangement + reversal of left-side
// contours against independently simulated right-side contours, plus the
// exact deterministic transport of local times.
inline RunReport check_contour_transform(const LifespanMeasure& mu, double T,
                                         std::size_t n, std::uint64_t seed,
                                         unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "contour_transform";
  rep.seed = seed;
  rep.n_samples = n;
  const DualPair d = make_dual_pair(mu, T);
  const AncestorLaw anc_left = make_ancestor_law(d.left);
  const AncestorLaw anc_right = make_ancestor_law(d.right);

  constexpr int kLevels = 8;
  struct Row {
    double zeta, njumps, mean_jump;
    std::array<double, kLevels> gamma;
  };
  std::vector<Row> lrow(n), rrow(n);
  std::vector<double> zeta_err(n), transport_fail(n);
  std::array<double, kLevels> levels{};
  for (int j = 0; j < kLevels; ++j)
    levels[static_cast<std::size_t>(j)] = T * (j + 1) / (kLevels + 1.0);
  // generic non-breakpoint probe fractions for the exact transport identity
  const std::array<double, 4> probes = {0.2137 * T, 0.4711 * T, 0.6553 * T,
                                        0.9291 * T};

  auto fill = [&](const PiecewisePath& p, Row& row) {
    row.zeta = p.lifetime();
    row.njumps = static_cast<double>(p.jump_count());
    double s = 0.0;
    for (const auto& e : p.events()) s += e.jump;
    row.mean_jump = p.jump_count() ? s / row.njumps : 0.0;
    for (int j = 0; j < kLevels; ++j)
      row.gamma[static_cast<std::size_t>(j)] = static_cast<double>(
          p.local_time(levels[static_cast<std::size_t>(j)]));
  };

  parallel_for(n, threads, [&](std::size_t i) {
    Rng rl = Rng::stream(seed, detail::kTagContour, i, 0);
    const Forest fl = simulate_forest(d.left, &anc_left, rl);
    const PiecewisePath p = jccp(fl);
    const PiecewisePath kp = last_passage_reversal(p, T);
    fill(kp, lrow[i]);
    // the last tree is the only survivor, so g_0 = zeta and the kill in the
    // transform drops nothing
    zeta_err[i] = std::fabs(kp.lifetime() - p.lifetime());
    double fails = 0.0;
    for (double t : probes)
      if (p.local_time(T - t) != kp.local_time(t)) fails += 1.0;
    transport_fail[i] = fails;

    Rng rr = Rng::stream(seed, detail::kTagContour, i, 1);
    const Forest fr = simulate_forest(d.right, &anc_right, rr);
    fill(jccp(fr), rrow[i]);
  });

  const int n_tests = 3 + kLevels;
  const double alpha = 0.01 / n_tests;
  auto column = [&](const std::vector<Row>& rows, auto&& get) {
    std::vector<double> v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = get(rows[i]);
    return v;
  };
  auto ks = [&](const std::string& name, auto&& get) {
    const auto r = stats::ks_two_sample(column(lrow, get), column(rrow, get));
    rep.add_p(name, r.statistic, r.p_value, alpha);
  };
  ks("lifetime", [](const Row& r) { return r.zeta; });
  ks("jump_count", [](const Row& r) { return r.njumps; });
  ks("mean_jump_size", [](const Row& r) { return r.mean_jump; });
  for (int j = 0; j < kLevels; ++j)
    ks("local_time_" + std::to_string(j + 1),
       [j](const Row& r) { return r.gamma[static_cast<std::size_t>(j)]; });
  rep.add_bound("lifetime_preserved_max_err",
                *std::max_element(zeta_err.begin(), zeta_err.end()), 1e-9);
  double total_fail = 0.0;
  for (double f : transport_fail) total_fail += f;
  rep.add_bound("local_time_transport_exact_failures", total_fail, 0.0);
  rep.runtime_seconds = timer.seconds();
  return rep;
}

// Survival probabilities of the two single-tree laws against 1/W~(T) and
// 1/W(T).
inline RunReport check_survival_probability(const LifespanMeasure& mu, double T,
                                      std::size_t n, std::uint64_t seed,
                                      unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "survival_probability";
  rep.seed = seed;
  rep.n_samples = n;
  DualPair d = make_dual_pair(mu, T);
  d.left.stop = ForestStop::FixedCount;
  d.left.fixed_count = 1;
  d.right.stop = ForestStop::FixedCount;
  d.right.fixed_count = 1;
  const AncestorLaw anc_left = make_ancestor_law(d.left);
  const AncestorLaw anc_right = make_ancestor_law(d.right);
  std::vector<int> lsurv(n), rsurv(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rl = Rng::stream(seed, detail::kTagSurvival, i, 0);
    lsurv[i] = simulate_forest(d.left, &anc_left, rl)[0].survives_to(T) ? 1 : 0;
    Rng rr = Rng::stream(seed, detail::kTagSurvival, i, 1);
    rsurv[i] =
        simulate_forest(d.right, &anc_right, rr)[0].survives_to(T) ? 1 : 0;
  });
  std::size_t lh = 0, rh = 0;
  for (std::size_t i = 0; i < n; ++i) {
    lh += static_cast<std::size_t>(lsurv[i]);
    rh += static_cast<std::size_t>(rsurv[i]);
  }
  const auto bl = stats::binomial_sigma_check(lh, n, d.gamma_tilde);
  rep.add_bound("base_overshoot_survival_z", std::fabs(bl.z), 3.0)
      .note = "expected " + std::to_string(d.gamma_tilde);
  const auto br = stats::binomial_sigma_check(rh, n, d.gamma);
  rep.add_bound("tilted_undershoot_survival_z", std::fabs(br.z), 3.0)
      .note = "expected " + std::to_string(d.gamma);
  rep.runtime_seconds = timer.seconds();
  return rep;
}

namespace detail {

// Undershoot/overshoot of the first passage above 0 by the slope -1 process
// started at 0. Returns false when the path falls below -depth_cutoff first
// (treated as never returning).
inline bool sample_zero_crossing(const LifespanMeasure& mu, double depth_cutoff,
                                 Rng& rng, double& undershoot,
                                 double& overshoot) {
  const double b = mu.mass();
  double depth = 0.0;
  for (std::size_t i = 0; i < kMaxNodes; ++i) {
    depth += rng.exponential(b);
    if (depth > depth_cutoff) return false;
    const double j = mu.sample_lifespan(rng);
    if (j > depth) {
      undershoot = depth;
      overshoot = j - depth;
      return true;
    }
    depth -= j;
  }
  throw std::runtime_error("sample_zero_crossing: event budget exhausted");
}

}  // namespace detail

// Over/undershoot laws of the excursion away from 0, the return
// probability in the subcritical case, and the two-sided joint density.
inline RunReport check_over_undershoot(const LifespanMeasure& mu_super,
                                       const LifespanMeasure& mu_sub,
                                       std::size_t n, std::uint64_t seed,
                                       unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "over_undershoot";
  rep.seed = seed;
  rep.n_samples = n;
  const double alpha = 0.01;

  // (a) marginals for the supercritical measure: crossing happens a.s.
  {
    const AncestorLaw top(mu_super, AncestorLaw::Which::Top);
    const AncestorLaw bot(mu_super, AncestorLaw::Which::Bot);
    std::vector<double> us(n), vs(n);
    parallel_for(n, threads, [&](std::size_t i) {
      Rng r = Rng::stream(seed, detail::kTagOverUnder, i, 0);
      double u, v;
      if (!detail::sample_zero_crossing(mu_super, 1e9, r, u, v))
        throw std::logic_error("supercritical excursion failed to cross");
      us[i] = u;
      vs[i] = v;
    });
    const auto ku =
        stats::ks_one_sample(us, [&](double x) { return top.cdf(x); });
    rep.add_p("undershoot_law", ku.statistic, ku.p_value, alpha);
    const auto kv =
        stats::ks_one_sample(vs, [&](double x) { return bot.cdf(x); });
    rep.add_p("overshoot_law", kv.statistic, kv.p_value, alpha);
  }

  // (b) subcritical return probability P(tau_0^+ < inf) = m, with a deep
  // cutoff standing in for "never returns" (exponentially small bias).
  {
    const double m = mu_sub.mean();
    std::vector<int> hit(n);
    parallel_for(n, threads, [&](std::size_t i) {
      Rng r = Rng::stream(seed, detail::kTagOverUnder, i, 1);
      double u, v;
      hit[i] = detail::sample_zero_crossing(mu_sub, 50.0, r, u, v) ? 1 : 0;
    });
    std::size_t h = 0;
    for (int x : hit) h += static_cast<std::size_t>(x);
    const auto bc = stats::binomial_sigma_check(h, n, m);
    rep.add_bound("subcritical_return_prob_z", std::fabs(bc.z), 3.0).note =
        "expected " + std::to_string(m) + ", cutoff bias < 1e-20";
  }

  // (c) joint two-sided law at first passage above a without touching 0,
  // subcritical measure, x = 0.5, a = 1: chi^2 of an 8x8 histogram against
  // cell masses integrated from the joint density.
  {
    const double x = 0.5, a = 1.0;
    const double b = mu_sub.mass();
    std::vector<double> uacc, vacc;
    uacc.reserve(n / 4);
    vacc.reserve(n / 4);
    std::vector<std::array<double, 2>> rows(n, {-1.0, -1.0});
    parallel_for(n, threads, [&](std::size_t i) {
      Rng r = Rng::stream(seed, detail::kTagOverUnder, i, 2);
      double v = x;
      for (;;) {
        const double wait = r.exponential(b);
        if (wait >= v) break;  // hits 0 first: rejected
        v -= wait;
        const double j = mu_sub.sample_lifespan(r);
        if (v + j > a) {
          rows[i] = {a - v, v + j - a};
          break;
        }
        v += j;
      }
    });
    for (const auto& row : rows)
      if (row[0] >= 0.0) {
        uacc.push_back(row[0]);
        vacc.push_back(row[1]);
      }
    const ScaleTable W = build_scale_table(mu_sub, 2.5, 1e-4);
    const double total = 1.0 - W(a - x) / W(a);
    constexpr int kU = 8, kV = 8;
    const double du = a / kU, dv = 3.0 / kV;
    const double d_rate = mu_sub.exp_death_rate();
    // occupation density before exit; discontinuous at u = a - x, so each
    // cell is integrated with the branch fixed per sub-interval
    auto g = [&](double u, bool with_w2) {
      const double w1 = a - u >= 0.0 ? W(a - u) : 0.0;
      const double w2 = with_w2 ? W(std::max(a - x - u, 0.0)) : 0.0;
      return W(a - x) * w1 / W(a) - w2;
    };
    auto simpson = [&](double u1, double u2, bool with_w2) {
      if (!(u2 > u1)) return 0.0;
      const double um = 0.5 * (u1 + u2);
      return (u2 - u1) / 6.0 *
             (g(u1, with_w2) * std::exp(-d_rate * u1) +
              4.0 * g(um, with_w2) * std::exp(-d_rate * um) +
              g(u2, with_w2) * std::exp(-d_rate * u2));
    };
    const double ustar = a - x;
    std::vector<double> expected, observed;
    double mass_sum = 0.0;
    for (int iu = 0; iu < kU; ++iu) {
      const double u1 = iu * du, u2 = u1 + du;
      const double integ = simpson(u1, std::min(u2, ustar), true) +
                           simpson(std::max(u1, ustar), u2, false);
      for (int iv = 0; iv < kV; ++iv) {
        const double v1 = iv * dv, v2 = v1 + dv;
        const double mass =
            b * integ * (std::exp(-d_rate * v1) - std::exp(-d_rate * v2));
        expected.push_back(mass / total *
                           static_cast<double>(uacc.size()));
        mass_sum += mass;
        long count = 0;
        for (std::size_t k = 0; k < uacc.size(); ++k)
          if (uacc[k] >= u1 && uacc[k] < u2 && vacc[k] >= v1 && vacc[k] < v2)
            ++count;
        observed.push_back(static_cast<double>(count));
      }
    }
    // pooled remainder: overshoot beyond the binned range
    const double rest = std::max(total - mass_sum, 0.0);
    long seen = 0;
    for (double o : observed) seen += static_cast<long>(o);
    expected.push_back(rest / total * static_cast<double>(uacc.size()));
    observed.push_back(static_cast<double>(uacc.size()) -
                       static_cast<double>(seen));
    const auto c2 = stats::chi2_gof(std::move(observed), std::move(expected));
    rep.add_p("joint_two_sided_chi2", c2.statistic, c2.p_value, alpha);
  }

  rep.runtime_seconds = timer.seconds();
  return rep;
}

// Space-time-reversal invariance of the excursion from T conditioned to
// reach 0 before (T, inf), plus the post-crossing independence property of
// the excursion from 0 (subcritical measure, binned conditioning).
inline RunReport check_reversal_invariance(const LifespanMeasure& mu, double T,
                                           const LifespanMeasure& mu_sub,
                                           std::size_t n, std::uint64_t seed,
                                           unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "reversal_invariance";
  rep.seed = seed;
  rep.n_samples = n;

  // (a) excursions from T conditioned on tau_0 < tau_T^+, killed at tau_0;
  // split-half design: functionals of the raw excursion from the first half
  // against functionals of the reversed excursion from the second half.
  struct Fun {
    double v_mid, area, hit_half;
  };
  auto functionals = [&](const PiecewisePath& p) {
    Fun f;
    const double z = p.lifetime();
    f.v_mid = p.value_at(0.5 * z);
    double area = 0.0, t0 = 0.0, v = p.start_value();
    for (const auto& e : p.events()) {
      area += e.drop * (v - 0.5 * e.drop);
      v = e.va;
      t0 += e.drop;
    }
    area += p.tail_drop() * (v - 0.5 * p.tail_drop());
    f.area = area;
    const auto h = p.first_hit(0.5 * T);
    f.hit_half = h ? *h : -1.0;
    return f;
  };
  std::vector<Fun> half_a(n), half_b(n);
  std::vector<double> zeta_gap(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng r = Rng::stream(seed, detail::kTagReversal, i, 0);
    PiecewisePath exc = PiecewisePath::segment(T, T);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      PiecewisePath p =
          simulate_levy_path(mu, T, PathStop::EnterAbove, T, r);
      if (p.max_value() <= T && p.terminal_left_limit() == 0.0) {
        exc = p;
        break;
      }
    }
    const PiecewisePath rev = exc.reverse();
    zeta_gap[i] = std::fabs(rev.lifetime() - exc.lifetime());
    half_a[i] = functionals(exc);
    half_b[i] = functionals(rev);
  });
  {
    const std::size_t h = n / 2;
    const int n_tests = 3;
    const double alpha = 0.01 / n_tests;
    auto ks = [&](const char* name, auto&& get) {
      std::vector<double> a, bvec;
      for (std::size_t i = 0; i < h; ++i) a.push_back(get(half_a[i]));
      for (std::size_t i = h; i < n; ++i) bvec.push_back(get(half_b[i]));
      const auto r = stats::ks_two_sample(a, bvec);
      rep.add_p(name, r.statistic, r.p_value, alpha);
    };
    ks("value_at_half_lifetime", [](const Fun& f) { return f.v_mid; });
    ks("area", [](const Fun& f) { return f.area; });
    ks("first_passage_half_level", [](const Fun& f) { return f.hit_half; });
    rep.add_bound("lifetime_preserved_max_err",
                  *std::max_element(zeta_gap.begin(), zeta_gap.end()), 1e-9);
  }

  // (b) independence of the pre-crossing excursion and the post-crossing
  // path, conditionally on the (undershoot, jump) pair at the crossing. The
  // conditioning pair is controlled by regressing every functional on a
  // quadratic basis in (y, z); the residual correlations must vanish.
  {
    struct Cross {
      double y, z;           // undershoot, crossing jump size
      double t1, j1;         // pre-crossing duration and jump count
      double t2, j2;         // post-crossing (to tau_0) duration and count
    };
    std::vector<Cross> xs(n);
    const double b = mu_sub.mass();
    parallel_for(n, threads, [&](std::size_t i) {
      Rng r = Rng::stream(seed, detail::kTagReversal, i, 1);
      Cross c{};
      for (;;) {  // pre-crossing: from 0 until the jump over 0; the rare
                  // deep dive is conditioned out and resampled
        double depth = 0.0, time = 0.0;
        long jumps = 0;
        bool ok = false;
        for (int k = 0; k < 1000000; ++k) {
          const double wait = r.exponential(b);
          depth += wait;
          time += wait;
          if (depth > 80.0) break;  // drifted away: conditioned out
          const double j = mu_sub.sample_lifespan(r);
          ++jumps;
          if (j > depth) {
            c.y = depth;
            c.z = j;
            c.t1 = time;
            c.j1 = static_cast<double>(jumps);
            ok = true;
            break;
          }
          depth -= j;
        }
        if (ok) break;
      }
      // post-crossing: from z - y down to 0 (subcritical: finite a.s.)
      const PiecewisePath tail = simulate_levy_path(
          mu_sub, c.z - c.y, PathStop::HitZero, 0.0, r);
      c.t2 = tail.lifetime();
      c.j2 = static_cast<double>(tail.jump_count());
      xs[i] = c;
    });
    // residual of v after least squares on (1, y, z, y^2, z^2, yz)
    auto residualize = [&](auto&& get) {
      constexpr int kP = 6;
      std::array<std::array<double, kP>, kP> ata{};
      std::array<double, kP> atv{};
      auto basis = [](const Cross& c) {
        return std::array<double, kP>{1.0, c.y, c.z, c.y * c.y,
                                      c.z * c.z, c.y * c.z};
      };
      for (const auto& c : xs) {
        const auto phi = basis(c);
        const double v = get(c);
        for (int r1 = 0; r1 < kP; ++r1) {
          atv[static_cast<std::size_t>(r1)] +=
              phi[static_cast<std::size_t>(r1)] * v;
          for (int r2 = 0; r2 < kP; ++r2)
            ata[static_cast<std::size_t>(r1)][static_cast<std::size_t>(r2)] +=
                phi[static_cast<std::size_t>(r1)] *
                phi[static_cast<std::size_t>(r2)];
        }
      }
      // Gaussian elimination with partial pivoting
      for (int col = 0; col < kP; ++col) {
        int piv = col;
        for (int r1 = col + 1; r1 < kP; ++r1)
          if (std::fabs(ata[static_cast<std::size_t>(r1)]
                           [static_cast<std::size_t>(col)]) >
              std::fabs(ata[static_cast<std::size_t>(piv)]
                           [static_cast<std::size_t>(col)]))
            piv = r1;
        std::swap(ata[static_cast<std::size_t>(col)],
                  ata[static_cast<std::size_t>(piv)]);
        std::swap(atv[static_cast<std::size_t>(col)],
                  atv[static_cast<std::size_t>(piv)]);
        const double d = ata[static_cast<std::size_t>(col)]
                            [static_cast<std::size_t>(col)];
        for (int r1 = col + 1; r1 < kP; ++r1) {
          const double f = ata[static_cast<std::size_t>(r1)]
                              [static_cast<std::size_t>(col)] / d;
          for (int c2 = col; c2 < kP; ++c2)
            ata[static_cast<std::size_t>(r1)][static_cast<std::size_t>(c2)] -=
                f * ata[static_cast<std::size_t>(col)]
                       [static_cast<std::size_t>(c2)];
          atv[static_cast<std::size_t>(r1)] -=
              f * atv[static_cast<std::size_t>(col)];
        }
      }
      std::array<double, kP> beta{};
      for (int r1 = kP - 1; r1 >= 0; --r1) {
        double s = atv[static_cast<std::size_t>(r1)];
        for (int c2 = r1 + 1; c2 < kP; ++c2)
          s -= ata[static_cast<std::size_t>(r1)][static_cast<std::size_t>(c2)] *
               beta[static_cast<std::size_t>(c2)];
        beta[static_cast<std::size_t>(r1)] =
            s / ata[static_cast<std::size_t>(r1)][static_cast<std::size_t>(r1)];
      }
      std::vector<double> res(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto phi = basis(xs[i]);
        double fit = 0.0;
        for (int r1 = 0; r1 < kP; ++r1)
          fit += beta[static_cast<std::size_t>(r1)] *
                 phi[static_cast<std::size_t>(r1)];
        res[i] = get(xs[i]) - fit;
      }
      return res;
    };
    const auto rt1 = residualize([](const Cross& c) { return c.t1; });
    const auto rt2 = residualize([](const Cross& c) { return c.t2; });
    const auto rj1 = residualize([](const Cross& c) { return c.j1; });
    const auto rj2 = residualize([](const Cross& c) { return c.j2; });
    const double bound = 4.0 / std::sqrt(static_cast<double>(n));
    rep.add_bound("segment_duration_partial_corr",
                  std::fabs(stats::pearson_r(rt1, rt2)), bound);
    rep.add_bound("segment_jump_count_partial_corr",
                  std::fabs(stats::pearson_r(rj1, rj2)), bound);
  }
  rep.runtime_seconds = timer.seconds();
  return rep;
}

// Change-of-measure identity between the tilted and base path laws on
// events up to the first hit of level a.
inline RunReport check_measure_change(const LifespanMeasure& mu, double a,
                                      double x, std::size_t n,
                                      std::uint64_t seed,
                                      unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "measure_change";
  rep.seed = seed;
  rep.n_samples = n;
  const double eta = mu.eta();
  if (eta == 0.0) {
    rep.add_bound("skipped_eta_zero", 0.0, 1.0).note =
        "identity is trivial when the tilt exponent vanishes";
    rep.runtime_seconds = timer.seconds();
    return rep;
  }
  const LifespanMeasure tilted = mu.tilted();
  const double horizon = a + 50.0 / eta;
  const double factor = std::exp(-eta * (a - x));
  const std::array<long, 3> ks = {2, 5, 1000000};

  // outcome per replicate: jump count at tau_a when {tau_a^+ < tau_0,
  // tau_a < inf} holds, else -1
  auto run_one = [&](const LifespanMeasure& m, Rng& r) -> long {
    const double b = m.mass();
    double v = x;
    long jumps = 0;
    bool crossed = false;
    for (int k = 0; k < 1000000; ++k) {
      if (crossed && v <= a) return jumps;  // descended back to a: tau_a
      const double wait = r.exponential(b);
      if (!crossed && wait >= v) return -1;  // hit 0 first
      if (crossed && v - wait <= a) return jumps;  // hits a descending
      v -= wait;
      v += m.sample_lifespan(r);
      ++jumps;
      if (!crossed && v > a) crossed = true;
      if (v > horizon) return -1;  // proxies tau_a = inf
    }
    return -1;
  };

  std::vector<long> lcount(n), rcount(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rl = Rng::stream(seed, detail::kTagMeasureChange, i, 0);
    lcount[i] = run_one(tilted, rl);
    Rng rr = Rng::stream(seed, detail::kTagMeasureChange, i, 1);
    rcount[i] = run_one(mu, rr);
  });
  for (long k : ks) {
    std::size_t lh = 0, rh = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (lcount[i] >= 0 && lcount[i] <= k) ++lh;
      if (rcount[i] >= 0 && rcount[i] <= k) ++rh;
    }
    const double nl = static_cast<double>(n);
    const double pl = static_cast<double>(lh) / nl;
    const double pr = static_cast<double>(rh) / nl * factor;
    const double sd = std::sqrt(pl * (1.0 - pl) / nl +
                                factor * factor * (pr / factor) *
                                    (1.0 - pr / factor) / nl);
    const double z = sd > 0.0 ? (pl - pr) / sd : 0.0;
    const std::string name =
        k > 999999 ? std::string("full_event_z")
                   : "jump_count_le_" + std::to_string(k) + "_z";
    rep.add_bound(name, std::fabs(z), 3.0).note =
        "tilted " + std::to_string(pl) + " vs scaled base " +
        std::to_string(pr);
  }
  rep.runtime_seconds = timer.seconds();
  return rep;
}

}  // namespace forestdual
