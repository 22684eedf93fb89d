#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "forestdual/path.hpp"
#include "forestdual/tree.hpp"

namespace forestdual {

namespace detail {

inline std::vector<std::vector<int>> children_by_decreasing_birth(
    const ChronologicalTree& t) {
  std::vector<std::vector<int>> ch(t.size());
  for (std::size_t i = 1; i < t.size(); ++i)
    ch[static_cast<std::size_t>(t.node(i).parent)].push_back(static_cast<int>(i));
  for (auto& v : ch)
    std::sort(v.begin(), v.end(), [&](int a, int b) {
      const double aa = t.node(static_cast<std::size_t>(a)).alpha;
      const double ab = t.node(static_cast<std::size_t>(b)).alpha;
      if (aa != ab) return aa > ab;
      return a < b;  // stable tie-break: earlier sibling first
    });
  return ch;
}

inline void emit_tree_contour(const ChronologicalTree& t, PathBuilder& b) {
  const auto ch = children_by_decreasing_birth(t);
  // iterative depth-first walk; each visit emits the jump onto that node's
  // death level, descents are implicit
  std::vector<std::pair<int, std::size_t>> stack;
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    const auto& kids = ch[static_cast<std::size_t>(node)];
    if (next_child < kids.size()) {
      const int c = kids[next_child++];
      b.jump_at_level(t.node(static_cast<std::size_t>(c)).alpha,
                      t.node(static_cast<std::size_t>(c)).omega);
      stack.emplace_back(c, 0);
    } else {
      stack.pop_back();
    }
  }
}

}  // namespace detail

// Jumping chronological contour of one tree: starts at the root's death
// level, explores children by decreasing birth level, ends descending to 0.
inline PiecewisePath jccp(const ChronologicalTree& t) {
  if (t.size() == 0) throw std::invalid_argument("jccp: empty tree");
  if (t.node(0).alpha != 0.0)
    throw std::invalid_argument("jccp: root must be rooted at level 0");
  PathBuilder b(t.node(0).omega);
  detail::emit_tree_contour(t, b);
  return b.finish(0.0);
}

// Forest contour: tree contours juxtaposed; each junction is a jump from 0
// onto the next root's death level.
inline PiecewisePath jccp(const Forest& f) {
  if (f.empty()) throw std::invalid_argument("jccp: empty forest");
  PathBuilder b(f.front().node(0).omega);
  detail::emit_tree_contour(f.front(), b);
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (f[k].node(0).alpha != 0.0)
      throw std::invalid_argument("jccp: root must be rooted at level 0");
    b.jump_at_level(0.0, f[k].node(0).omega);
    detail::emit_tree_contour(f[k], b);
  }
  return b.finish(0.0);
}

// Inverse contour coding. Recovers the forest bit-exactly from the stored
// jump levels: a jump from level 0 opens a new tree, any other jump from
// level v attaches a child born at v to the deepest open ancestor whose
// birth level is strictly below v.
inline Forest forest_from_contour(const PiecewisePath& p) {
  if (p.infinite())
    throw std::invalid_argument("forest_from_contour: infinite lifetime");
  if (p.start_value() <= 0.0)
    throw std::invalid_argument("forest_from_contour: must start above 0");
  if (p.terminal_left_limit() != 0.0)
    throw std::invalid_argument("forest_from_contour: must end at level 0");
  Forest out;
  ChronologicalTree cur = ChronologicalTree::single(p.start_value());
  struct Open {
    int node;
    double alpha;
  };
  std::vector<Open> lineage{{0, 0.0}};
  for (const auto& e : p.events()) {
    if (e.vb < 0.0)
      throw std::invalid_argument("forest_from_contour: negative level");
    if (e.vb == 0.0) {
      out.push_back(std::move(cur));
      cur = ChronologicalTree::single(e.va);
      lineage = {{0, 0.0}};
      continue;
    }
    while (!lineage.empty() && lineage.back().alpha >= e.vb) lineage.pop_back();
    if (lineage.empty())
      throw std::invalid_argument("forest_from_contour: jump below tree base");
    const double parent_omega =
        cur.node(static_cast<std::size_t>(lineage.back().node)).omega;
    if (!(e.vb < parent_omega))
      throw std::invalid_argument(
          "forest_from_contour: birth above parent's death level");
    const int idx = cur.add_node(e.vb, e.va, lineage.back().node);
    lineage.push_back({idx, e.vb});
  }
  out.push_back(std::move(cur));
  return out;
}

// Gamma_r of the contour equals the population size at level r; exposed for
// the identity checks.
inline long width_via_local_time(const PiecewisePath& contour, double r) {
  return contour.local_time(r);
}

}  // namespace forestdual
