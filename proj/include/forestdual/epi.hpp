#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "forestdual/contour.hpp"
#include "forestdual/measure.hpp"
#include "forestdual/parallel.hpp"
#include "forestdual/report.hpp"
#include "forestdual/rng.hpp"
#include "forestdual/scale.hpp"
#include "forestdual/sim.hpp"
#include "forestdual/stats.hpp"
#include "forestdual/tree.hpp"
#include "forestdual/verify.hpp"

namespace forestdual {

// Individuals alive at T, in planar (contour traversal) order: the order in
// which the contour of the truncated forest visits level T.
inline std::vector<std::pair<std::size_t, int>> survivors_planar_order(
    const Forest& f, double T) {
  std::vector<std::pair<std::size_t, int>> out;  // (tree index, node index)
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto& t = f[k];
    if (t.size() == 0) continue;
    const auto ch = detail::children_by_decreasing_birth(t);
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    if (t.node(0).alpha < T && t.node(0).omega >= T) out.emplace_back(k, 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& kids = ch[static_cast<std::size_t>(node)];
      if (next < kids.size()) {
        const int c = kids[next++];
        const auto& nd = t.node(static_cast<std::size_t>(c));
        if (nd.alpha < T && nd.omega >= T) out.emplace_back(k, c);
        stack.emplace_back(c, 0);
      } else {
        stack.pop_back();
      }
    }
  }
  return out;
}

// Coalescence times of the time-T survivors, from the forest contour: for
// each pair of consecutive visits to level T, T minus the infimum of the
// path in between. Counts: (number of survivors) - 1.
inline std::vector<double> coalescence_times(const Forest& f, double T) {
  const Forest ft = truncate(f, T);
  const PiecewisePath c = jccp(ft);
  std::vector<double> out;
  double s = c.start_value();
  bool seen_hit = false;
  double inf_since = std::numeric_limits<double>::infinity();
  auto feed = [&](double top, double bottom) {
    // descent covering (bottom, top]
    if (bottom < T && T <= top) {
      if (seen_hit) out.push_back(T - inf_since);
      seen_hit = true;
      inf_since = std::numeric_limits<double>::infinity();
    }
    if (seen_hit) inf_since = std::min(inf_since, bottom);
  };
  for (const auto& e : c.events()) {
    feed(s, e.vb);
    s = e.va;
  }
  feed(s, c.terminal_left_limit());
  if (!seen_hit) throw std::domain_error("coalescence_times: no survivor at T");
  return out;
}

// Independent genealogical computation of the same quantities: for each
// adjacent pair of survivors in planar order, the level at which their
// ancestral lineages part, via the last common ancestor. Survivors in
// different trees part at level 0.
inline std::vector<double> coalescence_levels_mrca(const Forest& f, double T) {
  const auto surv = survivors_planar_order(f, T);
  if (surv.empty())
    throw std::domain_error("coalescence_levels_mrca: no survivor at T");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < surv.size(); ++i) {
    const auto [ta, na] = surv[i];
    const auto [tb, nb] = surv[i + 1];
    if (ta != tb) {
      out.push_back(0.0);
      continue;
    }
    const auto& t = f[ta];
    // ancestor chain of a: node -> child-on-chain birth level
    std::unordered_map<int, double> branch_level;  // node -> alpha of the
                                                   // chain link above it
    double up = std::numeric_limits<double>::infinity();
    for (int v = na; v != -1;) {
      branch_level[v] = up;
      up = t.node(static_cast<std::size_t>(v)).alpha;
      v = t.node(static_cast<std::size_t>(v)).parent;
    }
    double upb = std::numeric_limits<double>::infinity();
    double level = 0.0;
    for (int v = nb; v != -1;) {
      const auto it = branch_level.find(v);
      if (it != branch_level.end()) {
        level = std::min(it->second, upb);
        break;
      }
      upb = t.node(static_cast<std::size_t>(v)).alpha;
      v = t.node(static_cast<std::size_t>(v)).parent;
    }
    out.push_back(level);
  }
  return out;
}

// Ultrametric genealogy of the survivors: leaves at time T, internal node
// depths (time before T) given by the adjacent coalescence times.
struct ReconstructedTree {
  std::size_t leaves = 0;
  std::vector<double> depths;  // adjacent coalescence depths, planar order
  std::string newick;
};

namespace detail {

inline void newick_rec(const std::vector<double>& h, std::size_t lo,
                       std::size_t hi, double parent_depth,
                       std::ostringstream& os) {
  // leaves lo..hi inclusive; splits at the deepest coalescence inside
  if (lo == hi) {
    os << lo << ':' << parent_depth;
    return;
  }
  std::size_t k = lo;
  for (std::size_t i = lo; i < hi; ++i)
    if (h[i] > h[k]) k = i;
  os << '(';
  newick_rec(h, lo, k, h[k], os);
  os << ',';
  newick_rec(h, k + 1, hi, h[k], os);
  os << ')';
  os << ':' << parent_depth - h[k];
}

}  // namespace detail

inline ReconstructedTree reconstructed_tree(const Forest& f, double T) {
  ReconstructedTree r;
  r.depths = coalescence_times(f, T);
  r.leaves = r.depths.size() + 1;
  std::ostringstream os;
  os.precision(17);
  if (r.leaves == 1) {
    os << "0:0;";
  } else {
    std::size_t k = 0;
    for (std::size_t i = 0; i < r.depths.size(); ++i)
      if (r.depths[i] > r.depths[k]) k = i;
    os << '(';
    detail::newick_rec(r.depths, 0, k, r.depths[k], os);
    os << ',';
    detail::newick_rec(r.depths, k + 1, r.depths.size(), r.depths[k], os);
    os << ");";
  }
  r.newick = os.str();
  return r;
}

// Counts of birth (transmission) events per time bin over [0, T].
inline std::vector<long> incidence_series(const Forest& f, double bin,
                                          double T) {
  if (!(bin > 0.0)) throw std::invalid_argument("incidence_series: bin <= 0");
  const std::size_t nbins =
      static_cast<std::size_t>(std::ceil(T / bin - 1e-12));
  std::vector<long> out(std::max<std::size_t>(nbins, 1), 0);
  for (const auto& t : f)
    for (std::size_t i = 1; i < t.size(); ++i) {
      const double a = t.node(i).alpha;
      if (a >= T) continue;
      const auto k = static_cast<std::size_t>(a / bin);
      if (k < out.size()) ++out[k];
    }
  return out;
}

// Conditional decomposition of the reversed width process: stratified on
// the number of coalescence events (0 or 1, the latter with the coalescence
// depth in a narrow bin), against independently simulated component trees.
inline RunReport check_conditional_decomposition(const LifespanMeasure& mu,
                                                 double T, std::size_t n,
                                                 std::uint64_t seed,
                                                 unsigned threads = 0) {
  detail::StopWatch timer;
  RunReport rep;
  rep.check_id = "conditional_decomposition";
  rep.seed = seed;
  rep.n_samples = n;
  const DualPair d = make_dual_pair(mu, T);
  const AncestorLaw anc_left = make_ancestor_law(d.left);
  const AncestorLaw anc_right = make_ancestor_law(d.right);
  const double delta = T / 20.0;
  const double bin_lo = 0.5 * T - 0.5 * delta;
  const double bin_hi = 0.5 * T + 0.5 * delta;
  const std::array<double, 3> frac = {0.25, 0.5, 0.75};

  // left: reversed width slices, survivor count, coalescence depth when the
  // forest has exactly two survivors
  struct LeftRow {
    std::array<long, 3> rev_slice;
    long survivors;
    double h1;
  };
  std::vector<LeftRow> left(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng r = Rng::stream(seed, detail::kTagDecomposition, i, 0);
    const Forest f = simulate_forest(d.left, &anc_left, r);
    WidthProcess w(f);
    LeftRow row{};
    for (int j = 0; j < 3; ++j)
      row.rev_slice[static_cast<std::size_t>(j)] =
          w(T - frac[static_cast<std::size_t>(j)] * T);
    row.survivors = w(T);
    row.h1 = -1.0;
    if (row.survivors == 2) {
      const auto h = coalescence_times(f, T);
      row.h1 = h.at(0);
    }
    left[i] = row;
  });

  // geometric law of the survivor count
  {
    std::vector<long> surv(n);
    for (std::size_t i = 0; i < n; ++i) surv[i] = left[i].survivors;
    const auto c = stats::chi2_geometric(surv, d.gamma);
    rep.add_p("survivor_count_geometric", c.statistic, c.p_value, 0.01);
  }

  // right-hand components, simulated by rejection
  const std::size_t n_right = std::max<std::size_t>(n / 8, 1000);
  ForestSpec single = d.right;
  single.stop = ForestStop::FixedCount;
  single.fixed_count = 1;
  struct RightRow {
    std::array<long, 3> sum_slice;
  };
  std::vector<RightRow> right0(n_right), right1(n_right);
  parallel_for(n_right, threads, [&](std::size_t i) {
    Rng r = Rng::stream(seed, detail::kTagDecomposition, i, 1);
    auto conditioned_tree = [&](auto&& accept) {
      for (int k = 0; k < 1000000; ++k) {
        ChronologicalTree t = simulate_forest(single, &anc_right, r)[0];
        if (accept(t)) return t;
      }
      throw std::runtime_error("conditioned tree: rejection stalled");
    };
    const ChronologicalTree survivor0 = conditioned_tree(
        [&](const ChronologicalTree& t) { return t.survives_to(T); });
    RightRow r0{};
    for (int j = 0; j < 3; ++j)
      r0.sum_slice[static_cast<std::size_t>(j)] =
          survivor0.width(frac[static_cast<std::size_t>(j)] * T);
    right0[i] = r0;

    const ChronologicalTree survivor1 = conditioned_tree(
        [&](const ChronologicalTree& t) { return t.survives_to(T); });
    const ChronologicalTree extinct1 =
        conditioned_tree([&](const ChronologicalTree& t) {
          if (t.survives_to(T)) return false;
          const double e = t.extinction_level();
          return e >= bin_lo && e < bin_hi;
        });
    RightRow r1{};
    for (int j = 0; j < 3; ++j)
      r1.sum_slice[static_cast<std::size_t>(j)] =
          survivor1.width(frac[static_cast<std::size_t>(j)] * T) +
          extinct1.width(frac[static_cast<std::size_t>(j)] * T);
    right1[i] = r1;
  });

  const int n_tests = 6;
  const double alpha = 0.01 / n_tests;
  auto run_stratum = [&](const char* label, auto&& select,
                         const std::vector<RightRow>& rhs) {
    std::size_t count = 0;
    for (const auto& row : left)
      if (select(row)) ++count;
    for (int j = 0; j < 3; ++j) {
      std::vector<double> a, bvec;
      for (const auto& row : left)
        if (select(row))
          a.push_back(static_cast<double>(
              row.rev_slice[static_cast<std::size_t>(j)]));
      for (const auto& row : rhs)
        bvec.push_back(static_cast<double>(
            row.sum_slice[static_cast<std::size_t>(j)]));
      const auto r = stats::ks_two_sample(a, bvec);
      auto& sc = rep.add_p(std::string(label) + "_slice_" +
                               std::to_string(j + 1),
                           r.statistic, r.p_value, alpha);
      if (count < 500)
        sc.note = "stratum population " + std::to_string(count) +
                  " below 500: low power";
    }
  };
  run_stratum("stratum_n0",
              [](const LeftRow& r) { return r.survivors == 1; }, right0);
  run_stratum("stratum_n1_binned",
              [&](const LeftRow& r) {
                return r.survivors == 2 && r.h1 >= bin_lo && r.h1 < bin_hi;
              },
              right1);
  rep.runtime_seconds = timer.seconds();
  return rep;
}

}  // namespace forestdual
