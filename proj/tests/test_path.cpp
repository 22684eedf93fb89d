#include <cmath>
#include <vector>

#include "doctest.h"
#include "forestdual/path.hpp"
#include "forestdual/rng.hpp"

using namespace forestdual;

namespace {

// Random finite path in class starting at x0 > 0 and ending with left limit
// exactly 0 (the domain on which reversal is involutive).
PiecewisePath random_path(Rng& rng, double x0 = 3.0) {
  PathBuilder b(x0);
  double v = x0;
  const int k = static_cast<int>(rng.uniform() * 6);
  for (int i = 0; i < k; ++i) {
    const double vb = v * rng.uniform();
    const double va = vb + 0.1 + rng.uniform();
    b.jump_at_level(vb, va);
    v = va;
  }
  return b.finish(0.0);
}

}  // namespace

TEST_CASE("value evaluation and first passages of a pure descent") {
  const auto p = PiecewisePath::segment(3.0, 3.0);
  CHECK(p.lifetime() == doctest::Approx(3.0));
  CHECK(p.value_at(0.0) == doctest::Approx(3.0));
  CHECK(p.value_at(1.25) == doctest::Approx(1.75));
  CHECK(*p.first_hit(0.0) == doctest::Approx(3.0));       // tau_0 = zeta
  CHECK(*p.first_entry_below(1.0) == doctest::Approx(2.0));
  CHECK(!p.first_entry_above(3.0));
  CHECK(p.local_time(1.5) == 1);
  CHECK(p.local_time(4.0) == 0);
}

TEST_CASE("exact-touch vs strict-exceed at a jump landing on the level") {
  // start 3, descend 2 units, jump +2 back to exactly 3, descend to 0
  const PiecewisePath p(3.0, {{2.0, 2.0}}, 3.0);
  CHECK(p.lifetime() == doctest::Approx(5.0));
  CHECK(*p.first_hit(0.0) == doctest::Approx(5.0));
  CHECK(!p.first_entry_above(3.0));       // exact touch is not strict entry
  CHECK(*p.first_hit(3.0) == doctest::Approx(2.0));  // the t = 0 start is excluded
  CHECK(p.value_at(2.0) == doctest::Approx(3.0));
  CHECK(p.value_at(2.0 - 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.local_time(3.0) == 2);  // landing hit + terminal descent through 3
  CHECK(p.local_time(2.0) == 2);
  CHECK(p.local_time(0.5) == 1);
}

TEST_CASE("shift and kill") {
  const PiecewisePath p(3.0, {{2.0, 2.0}}, 3.0);
  CHECK(p.shift(0.0) == p);
  const auto s1 = p.shift(1.0);
  CHECK(s1.start_value() == doctest::Approx(2.0));
  CHECK(s1.lifetime() == doctest::Approx(4.0));
  CHECK(s1.shift(0.5) == p.shift(1.5));  // semigroup
  const auto k = p.kill(*p.first_hit(3.0));
  CHECK(k.lifetime() == doctest::Approx(2.0));
  CHECK(k.jump_count() == 0);
  CHECK(k.terminal_left_limit() == doctest::Approx(1.0));
  CHECK_THROWS_AS(p.kill(9.0), std::out_of_range);
  CHECK_THROWS_AS(p.shift(-1.0), std::out_of_range);
}

TEST_CASE("reversal maps a jump at time s to a jump at zeta - s") {
  std::vector<PathEvent> evs = {{1.0, 2.0}, {3.0, 1.0}};
  const PiecewisePath p(5.0, evs, 4.0);  // terminal left limit 0, zeta = 8
  const auto r = p.reverse();
  CHECK(r.start_value() == doctest::Approx(5.0));
  CHECK(r.lifetime() == doctest::Approx(8.0));
  REQUIRE(r.jump_count() == 2);
  // jump times 1 and 4 become 8-4 = 4 and 8-1 = 7, sizes swapped in order
  CHECK(r.events()[0].drop == doctest::Approx(4.0));
  CHECK(r.events()[0].jump == doctest::Approx(1.0));
  CHECK(r.events()[1].drop == doctest::Approx(3.0));
  CHECK(r.events()[1].jump == doctest::Approx(2.0));
  CHECK(r.terminal_left_limit() == doctest::Approx(0.0));
}

TEST_CASE("reversal is an involution, bit-exact on event lists") {
  Rng rng(4242);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto p = random_path(rng);
    CHECK(p.reverse().reverse() == p);
  }
  // a pure descent is its own reversal
  const auto seg = PiecewisePath::segment(3.0, 3.0);
  CHECK(seg.reverse() == seg);
  // infinite lifetime is rejected
  const auto inf_path = PiecewisePath::segment(
      1.0, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(inf_path.reverse(), std::domain_error);
}

TEST_CASE("concatenation") {
  const auto a = PiecewisePath::segment(2.0, 2.0);
  const auto b = PiecewisePath(1.0, {{0.5, 1.0}}, 1.5);
  const auto c = concat(a, b);
  CHECK(c.lifetime() == doctest::Approx(a.lifetime() + b.lifetime()));
  // junction from level 0 up to 1 becomes a jump of size 1
  REQUIRE(c.jump_count() == 2);
  CHECK(c.events()[0].jump == doctest::Approx(1.0));
  CHECK(c.value_at(2.0) == doctest::Approx(1.0));
  CHECK(concat(std::vector<PiecewisePath>{a}) == a);
  // killing at zeta(a) recovers a
  CHECK(c.kill(a.lifetime()) == a);
  // downward junction is out of class
  CHECK_THROWS_AS(
      concat(PiecewisePath::segment(2.0, 1.0), PiecewisePath::segment(0.5, 0.5)),
      std::invalid_argument);
}

TEST_CASE("local time is additive under concatenation") {
  Rng rng(777);
  for (int rep = 0; rep < 200; ++rep) {
    auto a = random_path(rng);
    auto b = random_path(rng, a.terminal_left_limit() + 0.5 + rng.uniform());
    const auto c = concat(a, b);
    for (double r : {0.31, 1.7, 2.9, 4.2})
      CHECK(c.local_time(r) == a.local_time(r) + b.local_time(r));
  }
}

TEST_CASE("positive-part clock on a hand path") {
  // start -1, descend 1 (to -2), jump +3 (to 1), descend 1 to 0
  const PiecewisePath p(-1.0, {{1.0, 3.0}}, 1.0);
  const auto q = clock_alpha(p);
  CHECK(q.start_value() == doctest::Approx(1.0));
  CHECK(q.lifetime() == doctest::Approx(1.0));
  CHECK(q.jump_count() == 0);
  // entirely positive path is untouched
  const PiecewisePath pos(2.0, {{0.5, 1.0}}, 2.0);
  CHECK(clock_alpha(pos).lifetime() == doctest::Approx(pos.lifetime()));
  CHECK(clock_alpha(pos) == pos);
}

TEST_CASE("positive-part clock commutes with concatenation") {
  // elements ending at 0, some dipping negative
  Rng rng(555);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<PiecewisePath> parts;
    for (int i = 0; i < 3; ++i) {
      std::vector<PathEvent> evs;
      double v = 0.5 + rng.uniform();
      const double x0 = v;
      const int k = 1 + static_cast<int>(rng.uniform() * 3);
      for (int j2 = 0; j2 < k; ++j2) {
        PathEvent e;
        e.drop = rng.uniform() * (v + 1.0);  // may cross below 0
        e.jump = 0.2 + rng.uniform();
        v = v - e.drop + e.jump;
        evs.push_back(e);
      }
      if (v <= 0.0) {
        parts.push_back(PiecewisePath(x0, {}, x0));  // fallback: plain descent
      } else {
        parts.push_back(PiecewisePath(x0, evs, v));  // ends exactly at 0
      }
    }
    const auto lhs = clock_alpha(concat(parts));
    std::vector<PiecewisePath> mapped;
    for (const auto& p : parts) mapped.push_back(clock_alpha(p));
    const auto rhs = concat(mapped);
    CHECK(lhs.lifetime() == doctest::Approx(rhs.lifetime()).epsilon(1e-12));
    CHECK(lhs.jump_count() == rhs.jump_count());
    for (double r : {0.21, 0.63, 1.11})
      CHECK(lhs.local_time(r) == rhs.local_time(r));
  }
}

TEST_CASE("ceiling clock clips a crossing jump to land exactly at the ceiling") {
  const double T = 1.0;
  // start 0.5, descend 0.2 to 0.3, jump +1 to 1.3 (above T), descend to 0
  const PiecewisePath p(0.5, {{0.2, 1.0}}, 1.3);
  const auto q = clock_above(p, T);
  REQUIRE(q.jump_count() == 1);
  CHECK(q.events()[0].va == 1.0);  // bitwise exactly T
  CHECK(q.events()[0].jump == doctest::Approx(0.7));
  CHECK(q.lifetime() == doctest::Approx(0.2 + 1.0));
  CHECK(q.terminal_left_limit() == doctest::Approx(0.0));
  // a path never exceeding T passes through unchanged
  const PiecewisePath under(0.5, {{0.2, 0.3}}, 0.6);
  CHECK(clock_above(under, T) == under);
  // jump landing exactly on T is kept as-is
  const PiecewisePath touch(0.5, {{0.2, 0.7}}, 1.0);
  CHECK(clock_above(touch, T) == touch);
}

TEST_CASE("last-passage rearrangement on a hand-built contour") {
  const double T = 2.0;
  // Contour of a two-tree forest truncated at T = 2: first tree is a single
  // node (0, 1.5), second is a root clipped at 2 surviving to T.
  // Path: start 1.5, descend to 0 (tree 1), jump to 2, descend to 0.
  PathBuilder b(1.5);
  b.jump_at_level(0.0, 2.0);
  const auto p = b.finish(0.0);
  const auto lp = last_passage_points(p, T);
  CHECK(lp.g_T == doctest::Approx(1.5));   // right after the junction jump
  CHECK(lp.gbar_T == doctest::Approx(1.5));
  CHECK(lp.g_0 == doctest::Approx(3.5));   // the lifetime
  const auto x = chi(p, T);
  // chi moves the final T-to-0 descent to the front: start 2, descend to 0,
  // then the prefix start 1.5 descend to 0, ending at the old gbar level T...
  CHECK(x.start_value() == doctest::Approx(2.0));
  CHECK(x.lifetime() == doctest::Approx(p.lifetime()));
  CHECK(x.value_at(0.5) == doctest::Approx(1.5));
  REQUIRE(x.jump_count() == 1);
  CHECK(x.events()[0].vb == doctest::Approx(0.0));
  CHECK(x.events()[0].va == doctest::Approx(1.5));
  const auto k = last_passage_reversal(p, T);
  CHECK(k.lifetime() == doctest::Approx(p.lifetime()));
  // local-time transport: Gamma_{T-t}(p) = Gamma_t(K(p)) at generic levels
  for (double t : {0.3, 0.9, 1.4, 1.9})
    CHECK(p.local_time(T - t) == k.local_time(t));
}

TEST_CASE("rearrangement with the last passage already at the origin") {
  const double T = 1.0;
  const auto p = PiecewisePath::segment(1.0, 1.0);  // starts at T, dies at 0
  const auto x = chi(p, T);
  CHECK(x == p);  // chi reduces to kill at g_0 = zeta
  const auto k = last_passage_reversal(p, T);
  CHECK(k.lifetime() == doctest::Approx(1.0));
}

TEST_CASE("rearrangement preconditions") {
  const auto p = PiecewisePath::segment(0.5, 0.5);
  CHECK_THROWS_AS(last_passage_points(p, 1.0), std::domain_error);
}
