#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forestdual/measure.hpp"
#include "forestdual/path.hpp"
#include "forestdual/rng.hpp"
#include "forestdual/tree.hpp"

namespace forestdual {

inline constexpr std::size_t kMaxNodes = 10'000'000;

// Grow a binary homogeneous branching tree: each individual begets at the
// birth rate (the measure's total mass) along its lifetime, offspring
// lifespans are i.i.d. from the normalized lifespan measure. `ceiling`
// truncates the tree at that level (death levels clipped, no births at or
// above it); pass +inf for the full tree (finite a.s. only when subcritical).
inline ChronologicalTree simulate_tree_with_root(const LifespanMeasure& mu,
                                                 double root_lifespan,
                                                 double ceiling, Rng& rng) {
  const double b = mu.mass();
  ChronologicalTree t = ChronologicalTree::single(
      root_lifespan > ceiling ? ceiling : root_lifespan);
  struct Pending {
    int idx;
    double alpha;
    double omega_raw;
  };
  std::vector<Pending> queue{{0, 0.0, root_lifespan}};
  while (!queue.empty()) {
    const Pending cur = queue.back();
    queue.pop_back();
    const double fertile_top =
        cur.omega_raw < ceiling ? cur.omega_raw : ceiling;
    double level = cur.alpha;
    for (;;) {
      level += rng.exponential(b);
      if (level >= fertile_top) break;
      const double life = mu.sample_lifespan(rng);
      const double omega_raw = level + life;
      const int idx =
          t.add_node(level, omega_raw > ceiling ? ceiling : omega_raw, cur.idx);
      if (t.size() > kMaxNodes)
        throw std::runtime_error("simulate_tree: node budget exhausted");
      queue.push_back({idx, level, omega_raw});
    }
  }
  return t;
}

inline ChronologicalTree simulate_tree(const LifespanMeasure& mu,
                                       double ceiling, Rng& rng) {
  return simulate_tree_with_root(mu, mu.sample_lifespan(rng), ceiling, rng);
}

// How the number of trees in a simulated forest is chosen.
enum class ForestStop {
  FixedCount,      // exactly n trees
  FirstSurvivor,   // i.i.d. trees until the first one reaching the ceiling
  GeometricCount,  // N ~ Geometric(p) on {1,2,...}, independent of the trees
};

struct ForestSpec {
  LifespanMeasure measure = LifespanMeasure::exponential(1.0, 2.0);
  double ceiling = 1.0;  // truncation level T
  ForestStop stop = ForestStop::FirstSurvivor;
  std::size_t fixed_count = 1;
  double geometric_p = 0.0;
  // Root lifespans: by default from the lifespan measure itself; optionally
  // from one of the stationary over/undershoot laws, or a fixed value. The
  // over/undershoot laws are derived from `ancestor_base` when set (the
  // dual-side forests pair tilted tree dynamics with the undershoot law of
  // the untilted measure), else from `measure` itself.
  enum class RootLaw { Lifespan, AncestorTop, AncestorBot, Fixed } root_law =
      RootLaw::Lifespan;
  std::optional<LifespanMeasure> ancestor_base;
  double fixed_root = 1.0;
};

inline double sample_root(const ForestSpec& spec, const AncestorLaw* anc,
                          Rng& rng) {
  switch (spec.root_law) {
    case ForestSpec::RootLaw::Lifespan:
      return spec.measure.sample_lifespan(rng);
    case ForestSpec::RootLaw::Fixed:
      return spec.fixed_root;
    default:
      if (anc == nullptr)
        throw std::logic_error("sample_root: ancestor law missing");
      return anc->sample(rng);
  }
}

inline bool needs_ancestor_law(const ForestSpec& spec) {
  return spec.root_law == ForestSpec::RootLaw::AncestorTop ||
         spec.root_law == ForestSpec::RootLaw::AncestorBot;
}

inline AncestorLaw make_ancestor_law(const ForestSpec& spec) {
  const LifespanMeasure& base =
      spec.ancestor_base ? *spec.ancestor_base : spec.measure;
  return AncestorLaw(base, spec.root_law == ForestSpec::RootLaw::AncestorBot
                               ? AncestorLaw::Which::Bot
                               : AncestorLaw::Which::Top);
}

// `anc` may be null unless the spec's root law requires one; callers running
// many replicates should build it once and pass it in.
inline Forest simulate_forest(const ForestSpec& spec, const AncestorLaw* anc,
                              Rng& rng) {

  Forest f;
  switch (spec.stop) {
    case ForestStop::FixedCount: {
      for (std::size_t i = 0; i < spec.fixed_count; ++i)
        f.push_back(simulate_tree_with_root(
            spec.measure, sample_root(spec, anc, rng), spec.ceiling, rng));
      break;
    }
    case ForestStop::FirstSurvivor: {
      for (std::size_t i = 0; i < kMaxNodes; ++i) {
        f.push_back(simulate_tree_with_root(
            spec.measure, sample_root(spec, anc, rng), spec.ceiling, rng));
        if (f.back().survives_to(spec.ceiling)) return f;
      }
      throw std::runtime_error("simulate_forest: no survivor within budget");
    }
    case ForestStop::GeometricCount: {
      if (!(spec.geometric_p > 0.0 && spec.geometric_p <= 1.0))
        throw std::invalid_argument("simulate_forest: bad geometric parameter");
      const std::size_t n = 1 + rng.geometric(spec.geometric_p);
      for (std::size_t i = 0; i < n; ++i)
        f.push_back(simulate_tree_with_root(
            spec.measure, sample_root(spec, anc, rng), spec.ceiling, rng));
      break;
    }
  }
  return f;
}

inline Forest simulate_forest(const ForestSpec& spec, Rng& rng) {
  if (needs_ancestor_law(spec)) {
    const AncestorLaw anc = make_ancestor_law(spec);
    return simulate_forest(spec, &anc, rng);
  }
  return simulate_forest(spec, nullptr, rng);
}

// --- spectrally positive Levy path simulation ----------------------------

enum class PathStop {
  HitZero,        // kill at the first hit of 0
  EnterAbove,     // kill at the first entry above `barrier`
  ReflectBelow,   // clip jumps at `barrier`, kill at the first hit of 0
};

// Slope -1, jumps at the measure's total mass rate with sizes from the
// normalized measure, started at x0 > 0.
inline PiecewisePath simulate_levy_path(const LifespanMeasure& mu, double x0,
                                        PathStop stop, double barrier,
                                        Rng& rng,
                                        std::size_t max_events = kMaxNodes) {
  if (!(x0 > 0.0)) throw std::invalid_argument("simulate_levy_path: x0 <= 0");
  const double b = mu.mass();
  std::vector<PathEvent> evs;
  double v = x0;
  for (std::size_t i = 0; i < max_events; ++i) {
    const double wait = rng.exponential(b);
    if (wait >= v) {
      // hits 0 before the next jump: final descent of exactly v time units
      return PiecewisePath(x0, std::move(evs), v, true);
    }
    const double vb = v - wait;
    double va = vb + mu.sample_lifespan(rng);
    if (stop == PathStop::ReflectBelow && va > barrier) va = barrier;
    PathEvent e;
    e.drop = wait;
    e.jump = va - vb;
    e.vb = vb;
    e.va = va;
    if (!(e.jump > 0.0))
      throw std::logic_error("simulate_levy_path: non-positive jump");
    evs.push_back(e);
    v = va;
    if (stop == PathStop::EnterAbove && va > barrier)
      return PiecewisePath(x0, std::move(evs), 0.0, true);
  }
  throw std::runtime_error("simulate_levy_path: event budget exhausted");
}

}  // namespace forestdual
