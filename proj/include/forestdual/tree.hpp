#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace forestdual {

// One individual of a chronological tree: born at level alpha (its parent's
// lifetime contains alpha), dies at level omega > alpha.
struct TreeNode {
  double alpha;
  double omega;
  int parent;  // -1 for the root
};

class ChronologicalTree {
 public:
  ChronologicalTree() = default;
  explicit ChronologicalTree(std::vector<TreeNode> nodes)
      : nodes_(std::move(nodes)) {
    validate();
  }

  static ChronologicalTree single(double root_omega) {
    return ChronologicalTree({{0.0, root_omega, -1}});
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_.at(i); }

  int add_node(double alpha, double omega, int parent) {
    nodes_.push_back({alpha, omega, parent});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // T_Ext: level of the last death.
  double extinction_level() const {
    double m = 0.0;
    for (const auto& n : nodes_) m = std::max(m, n.omega);
    return m;
  }

  double total_length() const {
    double s = 0.0;
    for (const auto& n : nodes_) s += n.omega - n.alpha;
    return s;
  }

  // Number of individuals alive at level t. An individual occupies the
  // half-open level interval (alpha, omega].
  long width(double t) const {
    long w = 0;
    for (const auto& n : nodes_)
      if (n.alpha < t && t <= n.omega) ++w;
    return w;
  }

  // Keep the part of the tree below level T: drop individuals born at or
  // above T, clip lifetimes at T.
  ChronologicalTree truncate(double T) const {
    std::vector<TreeNode> out;
    std::vector<int> remap(nodes_.size(), -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.alpha >= T) continue;
      TreeNode c = n;
      if (c.omega > T) c.omega = T;
      if (c.parent >= 0) {
        c.parent = remap[static_cast<std::size_t>(c.parent)];
        if (c.parent < 0)
          throw std::logic_error("truncate: child kept but parent dropped");
      }
      remap[i] = static_cast<int>(out.size());
      out.push_back(c);
    }
    return ChronologicalTree(std::move(out));
  }

  bool survives_to(double T) const {
    for (const auto& n : nodes_)
      if (n.alpha < T && n.omega >= T) return true;
    return false;
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (!(n.omega > n.alpha))
        throw std::invalid_argument("tree: omega <= alpha");
      if (n.parent < -1 || n.parent >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("tree: bad parent index");
      if (i == 0 && n.parent != -1)
        throw std::invalid_argument("tree: node 0 must be the root");
      if (i > 0 && n.parent == -1)
        throw std::invalid_argument("tree: multiple roots");
      if (n.parent >= 0) {
        const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
        if (!(n.alpha > p.alpha) || !(n.alpha < p.omega))
          throw std::invalid_argument("tree: birth outside parent's lifetime");
      }
    }
  }

  std::vector<TreeNode> nodes_;
};

using Forest = std::vector<ChronologicalTree>;

// Population size of the forest at level t, via merged sorted birth/death
// levels (O(log n) per query after the one-time sort).
class WidthProcess {
 public:
  explicit WidthProcess(const Forest& forest) {
    for (const auto& t : forest)
      for (const auto& n : t.nodes()) {
        births_.push_back(n.alpha);
        deaths_.push_back(n.omega);
      }
    std::sort(births_.begin(), births_.end());
    std::sort(deaths_.begin(), deaths_.end());
  }

  long operator()(double t) const {
    const auto nb = std::lower_bound(births_.begin(), births_.end(), t) -
                    births_.begin();
    const auto nd = std::lower_bound(deaths_.begin(), deaths_.end(), t) -
                    deaths_.begin();
    return static_cast<long>(nb - nd);
  }

  double max_level() const { return deaths_.empty() ? 0.0 : deaths_.back(); }

  // sup_t xi(t): sweep of +1 at each birth, -1 once the matching death level
  // is passed (an individual is alive on (alpha, omega]).
  long max_width() const {
    long best = 0, cur = 0;
    std::size_t i = 0, j = 0;
    while (i < births_.size()) {
      // process deaths strictly below the next birth first
      if (j < deaths_.size() && deaths_[j] <= births_[i]) {
        --cur;
        ++j;
        continue;
      }
      ++cur;
      ++i;
      best = std::max(best, cur);
    }
    return best;
  }

 private:
  std::vector<double> births_, deaths_;
};

inline double forest_total_length(const Forest& f) {
  double s = 0.0;
  for (const auto& t : f) s += t.total_length();
  return s;
}

inline double forest_extinction_level(const Forest& f) {
  double m = 0.0;
  for (const auto& t : f) m = std::max(m, t.extinction_level());
  return m;
}

inline Forest truncate(const Forest& f, double T) {
  Forest out;
  out.reserve(f.size());
  for (const auto& t : f) out.push_back(t.truncate(T));
  return out;
}

}  // namespace forestdual
