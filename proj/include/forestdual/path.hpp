#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace forestdual {

// One jump event: the path drifts down for `drop` time units, then jumps up
// by `jump`. `vb`/`va` are the values just before / at the jump; they are
// carried explicitly so that tree <-> contour round trips are bit-exact
// instead of being re-derived through floating sums.
struct PathEvent {
  double drop;
  double jump;
  double vb = 0.0;
  double va = 0.0;
};

// Finite-variation cadlag path of slope -1 with positive jumps:
//   descend drop_0, jump_0, descend drop_1, jump_1, ..., descend tail_drop.
// Equality is structural on (x0, drops, jumps, tail_drop); value annotations
// are caches.
class PiecewisePath {
 public:
  PiecewisePath() = default;
  // With annotated = false the level annotations are (re)derived from x0 and
  // the drop/jump structure. Internal operations pass annotated = true to
  // carry exact levels through unchanged; in that case drops remain the
  // authoritative clock and annotations the authoritative levels.
  PiecewisePath(double x0, std::vector<PathEvent> events, double tail_drop,
                bool annotated = false)
      : x0_(x0), events_(std::move(events)), tail_drop_(tail_drop) {
    validate();
    if (!annotated) refresh_values();
  }

  static PiecewisePath segment(double x0, double duration) {
    return PiecewisePath(x0, {}, duration);
  }

  double start_value() const { return x0_; }
  const std::vector<PathEvent>& events() const { return events_; }
  double tail_drop() const { return tail_drop_; }
  bool infinite() const { return std::isinf(tail_drop_); }

  double lifetime() const {
    double z = tail_drop_;
    for (const auto& e : events_) z += e.drop;
    return z;
  }

  // X_{zeta-}.
  double terminal_left_limit() const {
    if (infinite()) throw std::domain_error("terminal_left_limit: infinite lifetime");
    return (events_.empty() ? x0_ : events_.back().va) - tail_drop_;
  }

  double value_at(double t) const {
    if (t < 0.0) throw std::out_of_range("value_at: t < 0");
    double t0 = 0.0, v = x0_;
    for (const auto& e : events_) {
      if (t < t0 + e.drop) return v - (t - t0);
      t0 += e.drop;
      v = e.va;
    }
    if (t - t0 < tail_drop_ || (t == t0 && tail_drop_ == 0.0))
      return v - (t - t0);
    if (t - t0 <= tail_drop_) return v - (t - t0);  // t == zeta boundary
    throw std::out_of_range("value_at: t beyond lifetime");
  }

  double max_value() const {
    double m = x0_;
    for (const auto& e : events_)
      if (e.va > m) m = e.va;
    return m;
  }

  // Infimum of the path (smallest left limit actually approached).
  double min_left_limit() const {
    double m = terminal_left_limit();
    for (const auto& e : events_)
      if (e.vb < m) m = e.vb;
    return m;
  }

  std::size_t jump_count() const { return events_.size(); }

  // --- first passages -----------------------------------------------------
  // Segment i covers values (lo_i, s_i]; an exact hit of r happens once per
  // segment with lo_i < r <= s_i.

  // tau_r: inf{t > 0 : X_t = r}. A start exactly at r does not count (the
  // path is at r only at t = 0 there); an exact hit at the lifetime does.
  std::optional<double> first_hit(double r) const {
    double t0 = 0.0, s = x0_;
    for (const auto& e : events_) {
      if (e.vb < r && r <= s) {
        const double t = t0 + (s - r);
        if (t > 0.0) return t;
      }
      t0 += e.drop;
      s = e.va;
    }
    if (!infinite()) {
      const double lo = s - tail_drop_;
      if (lo <= r && r <= s) {
        const double t = t0 + (s - r);
        if (t > 0.0) return t;
      }
    } else if (r <= s) {
      const double t = t0 + (s - r);
      if (t > 0.0) return t;
    }
    return std::nullopt;
  }

  // tau_r^+ : first entry into the open interval (r, +inf). An exact touch
  // of r does not count.
  std::optional<double> first_entry_above(double r) const {
    if (x0_ > r) return 0.0;
    double t0 = 0.0;
    for (const auto& e : events_) {
      t0 += e.drop;
      if (e.va > r) return t0;
    }
    return std::nullopt;
  }

  // tau_r^- : first entry into (-inf, r).
  std::optional<double> first_entry_below(double r) const {
    if (x0_ < r) return 0.0;
    double t0 = 0.0, s = x0_;
    for (const auto& e : events_) {
      if (e.vb < r && r <= s) return t0 + (s - r);
      t0 += e.drop;
      if (e.va < r) return t0;
      s = e.va;
    }
    if (!infinite()) {
      const double lo = s - tail_drop_;
      if (lo < r && r <= s) return t0 + (s - r);
    } else if (r <= s) {
      return t0 + (s - r);
    }
    return std::nullopt;
  }

  // Gamma_r: number of exact hits of level r.
  long local_time(double r) const {
    if (infinite()) throw std::domain_error("local_time: infinite lifetime");
    long count = 0;
    double s = x0_;
    for (const auto& e : events_) {
      if (e.vb < r && r <= s) ++count;
      s = e.va;
    }
    if (s - tail_drop_ < r && r <= s) ++count;
    return count;
  }

  // --- operators ----------------------------------------------------------

  PiecewisePath shift(double s) const {
    if (s == 0.0) return *this;
    if (s < 0.0) throw std::out_of_range("shift: s < 0");
    double t0 = 0.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (s < t0 + e.drop) {
        std::vector<PathEvent> evs(events_.begin() + static_cast<long>(i), events_.end());
        evs.front().drop = (t0 + e.drop) - s;
        const double start = (i == 0 ? x0_ : events_[i - 1].va) - (s - t0);
        return PiecewisePath(start, std::move(evs), tail_drop_, true);
      }
      t0 += e.drop;
      if (s == t0) {
        // shift lands exactly on a jump time: the value at s is va
        std::vector<PathEvent> evs(events_.begin() + static_cast<long>(i) + 1,
                                   events_.end());
        return PiecewisePath(e.va, std::move(evs), tail_drop_, true);
      }
    }
    if (infinite()) return PiecewisePath::segment((events_.empty() ? x0_ : events_.back().va) - (s - t0),
                                                  tail_drop_);
    if (s - t0 >= tail_drop_) throw std::out_of_range("shift: s >= lifetime");
    return PiecewisePath::segment((events_.empty() ? x0_ : events_.back().va) - (s - t0),
                                  tail_drop_ - (s - t0));
  }

  // k_s: keep [0, s).
  PiecewisePath kill(double s) const {
    if (s < 0.0) throw std::out_of_range("kill: s < 0");
    double t0 = 0.0;
    std::vector<PathEvent> evs;
    for (const auto& e : events_) {
      if (s <= t0 + e.drop) {
        return PiecewisePath(x0_, std::move(evs), s - t0, true);
      }
      t0 += e.drop;
      evs.push_back(e);
    }
    if (!infinite() && s - t0 > tail_drop_ * (1.0 + 1e-12) && s - t0 > tail_drop_ + 1e-12)
      throw std::out_of_range("kill: s > lifetime");
    return PiecewisePath(x0_, std::move(evs), std::min(s - t0, tail_drop_), true);
  }

  // Kill keeping events [0, i) and the full descent of segment i, so the
  // new lifetime is exactly the time of event i. Used where the kill time
  // is known to be an event time (e.g. g_0 on a contour).
  PiecewisePath kill_at_event(std::size_t i) const {
    if (i > events_.size()) throw std::out_of_range("kill_at_event");
    std::vector<PathEvent> evs(events_.begin(), events_.begin() + static_cast<long>(i));
    const double tail = i == events_.size() ? tail_drop_ : events_[i].drop;
    return PiecewisePath(x0_, std::move(evs), tail, true);
  }

  // rho: space-time reversal at the lifetime, rho(X)_t = X_0 - X_{(zeta-t)-}.
  // Stays in the slope -1 / positive-jump class for any finite event-list
  // path; only an infinite lifetime is rejected.
  PiecewisePath reverse() const {
    if (infinite())
      throw std::domain_error("reverse: infinite lifetime is out of class");
    const std::size_t n = events_.size();
    std::vector<PathEvent> evs(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& e = events_[n - 1 - k];
      evs[k].drop = k == 0 ? tail_drop_ : events_[n - k].drop;
      evs[k].jump = e.jump;
      evs[k].vb = x0_ - e.va;
      evs[k].va = x0_ - e.vb;
    }
    const double new_tail = n == 0 ? tail_drop_ : events_[0].drop;
    PiecewisePath out;
    out.x0_ = x0_ - terminal_left_limit();
    out.events_ = std::move(evs);
    out.tail_drop_ = new_tail;
    out.validate();
    return out;
  }

  bool operator==(const PiecewisePath& o) const {
    if (x0_ != o.x0_ || tail_drop_ != o.tail_drop_ ||
        events_.size() != o.events_.size())
      return false;
    for (std::size_t i = 0; i < events_.size(); ++i)
      if (events_[i].drop != o.events_[i].drop ||
          events_[i].jump != o.events_[i].jump)
        return false;
    return true;
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (!(e.jump > 0.0)) throw std::invalid_argument("path: jump must be > 0");
      if (e.drop < 0.0) throw std::invalid_argument("path: negative drop");
      if (i + 1 == events_.size() && std::isinf(tail_drop_)) break;
    }
    if (tail_drop_ < 0.0) throw std::invalid_argument("path: negative tail");
  }

  void refresh_values() {
    double v = x0_;
    for (auto& e : events_) {
      e.vb = v - e.drop;
      e.va = e.vb + e.jump;
      v = e.va;
    }
  }

  friend PiecewisePath concat(const std::vector<PiecewisePath>& parts);
  friend class PathBuilder;

  double x0_ = 0.0;
  std::vector<PathEvent> events_;
  double tail_drop_ = 0.0;
};

// Incremental construction with explicit value annotations (used by the
// contour coding, where levels are authoritative).
class PathBuilder {
 public:
  explicit PathBuilder(double x0) : x0_(x0), current_(x0) {}

  // Descend to level vb, jump to level va.
  void jump_at_level(double vb, double va) {
    PathEvent e;
    e.drop = current_ - vb;
    e.jump = va - vb;
    e.vb = vb;
    e.va = va;
    if (!(e.jump > 0.0)) throw std::invalid_argument("PathBuilder: jump <= 0");
    if (e.drop < 0.0) throw std::invalid_argument("PathBuilder: ascent without jump");
    events_.push_back(e);
    current_ = va;
  }

  // Final descent to level `floor` and kill.
  PiecewisePath finish(double floor) {
    PiecewisePath p;
    p.x0_ = x0_;
    p.events_ = std::move(events_);
    p.tail_drop_ = current_ - floor;
    p.validate();
    return p;
  }

 private:
  double x0_, current_;
  std::vector<PathEvent> events_;
};

// [X1, X2, ...]: juxtaposition, stopping at the first infinite lifetime.
// A junction where the next start value exceeds the previous terminal left
// limit becomes a jump; equal values merge the adjacent descents.
inline PiecewisePath concat(const std::vector<PiecewisePath>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty sequence");
  PiecewisePath out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (out.infinite()) break;
    const auto& p = parts[i];
    const double left = out.terminal_left_limit();
    if (p.start_value() > left) {
      PathEvent junction;
      junction.drop = out.tail_drop_;
      junction.jump = p.start_value() - left;
      junction.vb = left;
      junction.va = p.start_value();
      out.events_.push_back(junction);
      out.tail_drop_ = 0.0;
    } else if (p.start_value() < left) {
      throw std::invalid_argument("concat: downward junction leaves the class");
    }
    // merge the pending tail descent with the first descent of p
    if (p.events_.empty()) {
      out.tail_drop_ += p.tail_drop_;
    } else {
      const double pending = out.tail_drop_;
      for (const auto& e : p.events_) out.events_.push_back(e);
      out.events_[out.events_.size() - p.events_.size()].drop += pending;
      out.tail_drop_ = p.tail_drop_;
    }
  }
  return out;
}

inline PiecewisePath concat(const PiecewisePath& a, const PiecewisePath& b) {
  return concat(std::vector<PiecewisePath>{a, b});
}

namespace detail {
// Append the sub-path of p between value-checkpoints, used by the clocks.
}  // namespace detail

// Clock alpha: erase the closed time set {X <= 0} and close up the gaps.
// The glued point takes the right limit.
inline PiecewisePath clock_alpha(const PiecewisePath& p) {
  std::vector<PathEvent> evs;
  bool started = false;
  double x0 = 0.0;
  auto feed_segment = [&](double start, double drop, bool is_tail) -> double {
    // returns the kept portion of this descent
    if (start <= 0.0) return 0.0;
    const double lo = start - drop;
    (void)is_tail;
    return lo >= 0.0 ? drop : start;
  };
  double s = p.start_value();
  if (s > 0.0) {
    started = true;
    x0 = s;
  }
  double pending = 0.0;  // kept descent not yet attached to an event
  for (const auto& e : p.events()) {
    pending += feed_segment(s, e.drop, false);
    if (e.va > 0.0) {
      if (!started) {
        started = true;
        x0 = e.va;
      } else {
        PathEvent out;
        out.drop = pending;
        out.vb = e.vb > 0.0 ? e.vb : 0.0;
        out.va = e.va;
        out.jump = e.vb > 0.0 ? e.jump : e.va;
        evs.push_back(out);
      }
      pending = 0.0;
    }
    s = e.va;
  }
  if (!started)
    throw std::invalid_argument("clock_alpha: path never positive");
  const double tail = pending + feed_segment(s, p.tail_drop(), true);
  return PiecewisePath(x0, std::move(evs), tail, true);
}

// Clock alpha^T: erase {X > T} and close up the gaps; a jump crossing T is
// clipped to land exactly at T (reflection below T). A jump landing exactly
// on T is kept.
inline PiecewisePath clock_above(const PiecewisePath& p, double T) {
  if (p.start_value() > T)
    throw std::invalid_argument("clock_above: start above the ceiling");
  std::vector<PathEvent> evs;
  double s = p.start_value();  // current kept value
  bool above = false;          // currently inside an excised excursion
  double pending = 0.0;
  double excess = 0.0;         // depth still above T within the excursion
  for (const auto& e : p.events()) {
    if (!above) {
      pending += e.drop;
      if (e.va > T) {
        PathEvent out;
        out.drop = pending;
        out.vb = e.vb;
        out.va = T;
        out.jump = T - e.vb;
        if (!(out.jump > 0.0))
          throw std::invalid_argument("clock_above: clipped jump degenerates");
        evs.push_back(out);
        pending = 0.0;
        above = true;
        excess = e.va - T;
        s = T;
      } else {
        evs.push_back(e);
        pending = 0.0;
        // keep original event untouched
        PathEvent& out = evs.back();
        out.drop += 0.0;
        s = e.va;
      }
    } else {
      // inside the excursion above T: descents first eat the excess
      if (e.drop < excess) {
        excess -= e.drop;
      } else {
        pending += e.drop - excess;
        excess = 0.0;
        above = false;
        // the event itself happens at or below T now
        if (e.va > T) {
          // vb <= T (we just came back) but the jump re-crosses T
          PathEvent out;
          out.drop = pending;
          out.vb = e.vb;
          out.va = T;
          out.jump = T - e.vb;
          if (!(out.jump > 0.0))
            throw std::invalid_argument("clock_above: clipped jump degenerates");
          evs.push_back(out);
          pending = 0.0;
          above = true;
          excess = e.va - T;
        } else {
          PathEvent out = e;
          out.drop = pending;
          evs.push_back(out);
          pending = 0.0;
        }
      }
      s = above ? T : e.va;
    }
  }
  double tail;
  if (above) {
    if (p.infinite()) {
      tail = std::numeric_limits<double>::infinity();
    } else if (p.tail_drop() >= excess) {
      tail = p.tail_drop() - excess;
    } else {
      tail = 0.0;
    }
  } else {
    tail = pending + p.tail_drop();
  }
  (void)s;
  return PiecewisePath(p.start_value(), std::move(evs), tail, true);
}

struct LastPassagePoints {
  double g_T;        // first hit of T
  double gbar_T;     // last hit of T before g_0
  double g_0;        // first left-limit 0 after g_T
  std::size_t g0_event;  // event index of g_0, events().size() when g_0 = zeta
};

// The special points of the "last passage from T to 0" transform. Requires
// that after first hitting T the path attains left limit 0.
inline LastPassagePoints last_passage_points(const PiecewisePath& p, double T) {
  if (p.infinite()) throw std::domain_error("last_passage_points: infinite lifetime");
  const auto g_T = p.start_value() == T ? std::optional<double>(0.0)
                                        : p.first_hit(T);
  if (!g_T) throw std::domain_error("last_passage_points: path never hits T");
  // locate g_0: first event with vb == 0 after g_T, else terminal if 0
  double t0 = 0.0;
  std::size_t g0_event = p.events().size();
  double g_0 = -1.0;
  {
    double t = 0.0;
    for (std::size_t i = 0; i < p.events().size(); ++i) {
      t += p.events()[i].drop;
      if (t > *g_T && p.events()[i].vb == 0.0) {
        g0_event = i;
        g_0 = t;
        break;
      }
    }
    if (g_0 < 0.0) {
      if (p.terminal_left_limit() == 0.0 && p.lifetime() > *g_T) {
        g_0 = p.lifetime();
        g0_event = p.events().size();
      } else {
        throw std::domain_error("last_passage_points: g_0 undefined");
      }
    }
  }
  // last hit of T strictly before g_0
  double gbar = *g_T;
  double s = p.start_value();
  t0 = 0.0;
  for (std::size_t i = 0; i < p.events().size(); ++i) {
    const auto& e = p.events()[i];
    if (e.vb < T && T <= s) {
      const double hit = t0 + (s - T);
      if (hit < g_0) gbar = hit;
    }
    t0 += e.drop;
    s = e.va;
  }
  if (s - p.tail_drop() < T && T <= s) {
    const double hit = t0 + (s - T);
    if (hit < g_0) gbar = hit;
  }
  return {*g_T, gbar, g_0, g0_event};
}

// chi: relocate the sub-path [gbar_T, g_0) to the front, shift the rest
// right, kill at g_0.
inline PiecewisePath chi(const PiecewisePath& p, double T) {
  const auto lp = last_passage_points(p, T);
  // Locate the segment whose exact hit of T happens at gbar_T. Consecutive
  // segments can share a boundary instant (a jump landing exactly at T), so
  // interval containment is ambiguous there; instead re-enumerate hit times
  // with the same arithmetic used to find gbar_T and match them exactly.
  double t0 = 0.0, s = p.start_value();
  std::size_t seg = p.events().size() + 1;
  for (std::size_t i = 0; i <= p.events().size(); ++i) {
    const bool tail_seg = i == p.events().size();
    const double lo = tail_seg ? s - p.tail_drop() : p.events()[i].vb;
    if (lo < T && T <= s && t0 + (s - T) == lp.gbar_T) {
      seg = i;
      break;
    }
    if (tail_seg) break;
    t0 += p.events()[i].drop;
    s = p.events()[i].va;
  }
  if (seg > p.events().size())
    throw std::logic_error("chi: lost the last passage segment");

  // Value at the top of the hit segment. When it is exactly T the passage
  // happens at the jump landing (or at t = 0), so the straddling jump is
  // absorbed into the relocated piece's start value and the prefix ends at
  // the pre-jump left limit.
  const double top = seg == 0 ? p.start_value() : p.events()[seg - 1].va;
  const bool touch = top == T;

  // Part A: starts at value exactly T inside segment `seg`, ends at g_0.
  PiecewisePath part_a;
  {
    std::vector<PathEvent> evs;
    if (seg < p.events().size()) {
      for (std::size_t i = seg; i < lp.g0_event && i < p.events().size(); ++i)
        evs.push_back(p.events()[i]);
      if (!evs.empty()) evs.front().drop = T - evs.front().vb;
      double tail;
      if (lp.g0_event == p.events().size()) {
        tail = evs.empty() ? T - p.terminal_left_limit() : p.tail_drop();
      } else {
        tail = evs.empty() ? T - p.events()[lp.g0_event].vb
                           : p.events()[lp.g0_event].drop;
      }
      part_a = PiecewisePath(T, std::move(evs), tail, true);
    } else {
      // gbar_T in the tail descent: pure drop from T to the terminal value
      part_a = PiecewisePath::segment(T, T - p.terminal_left_limit());
    }
  }
  // Part B: the prefix [0, gbar_T).
  if (touch && seg == 0) return part_a;  // gbar_T = 0: nothing precedes it
  PiecewisePath part_b;
  if (touch) {
    // prefix ends with the full descent of the straddling jump's segment
    std::vector<PathEvent> evs(p.events().begin(),
                               p.events().begin() + static_cast<long>(seg) - 1);
    part_b = PiecewisePath(p.start_value(), std::move(evs),
                           p.events()[seg - 1].drop, true);
  } else {
    // prefix ends descending into T inside segment `seg`
    std::vector<PathEvent> evs(p.events().begin(),
                               p.events().begin() + static_cast<long>(seg));
    part_b = PiecewisePath(p.start_value(), std::move(evs), top - T, true);
  }
  return concat(part_a, part_b);
}

// K = rho . chi.
inline PiecewisePath last_passage_reversal(const PiecewisePath& p, double T) {
  return chi(p, T).reverse();
}

}  // namespace forestdual
