#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "forestdual/measure.hpp"
#include "forestdual/path.hpp"
#include "forestdual/sim.hpp"
#include "forestdual/tree.hpp"

namespace forestdual {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key,
          const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T optional(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

inline LifespanMeasure parse_measure(const nlohmann::json& j) {
  const std::string where = "measure";
  const std::string kind = detail::require<std::string>(j, "kind", where);
  if (kind == "exponential") {
    detail::reject_unknown_keys(j, {"kind", "b", "d"}, where);
    return LifespanMeasure::exponential(
        detail::require<double>(j, "b", where),
        detail::require<double>(j, "d", where));
  }
  if (kind == "atoms") {
    detail::reject_unknown_keys(j, {"kind", "points"}, where);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : detail::require<nlohmann::json>(j, "points", where)) {
      if (!p.is_array() || p.size() != 2)
        throw ConfigError(where + ": each atom must be [location, weight]");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return LifespanMeasure::atoms(pts);
  }
  if (kind == "table") {
    detail::reject_unknown_keys(j, {"kind", "grid", "density"}, where);
    return LifespanMeasure::tabulated(
        detail::require<std::vector<double>>(j, "grid", where),
        detail::require<std::vector<double>>(j, "density", where));
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

struct RunConfig {
  LifespanMeasure measure = LifespanMeasure::exponential(2.0, 1.0);
  LifespanMeasure measure_subcritical = LifespanMeasure::exponential(1.0, 2.0);
  double T = 1.0;
  double x_max = 5.0;
  double h = 1e-3;
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  ForestSpec forest;
};

inline RunConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"measure", "measure_subcritical", "T", "x_max", "h", "replicates",
       "seed", "stop", "geometric_p", "fixed_count", "root_law", "fixed_root"},
      "config");
  RunConfig c;
  c.measure = parse_measure(detail::require<nlohmann::json>(j, "measure",
                                                            "config"));
  if (j.contains("measure_subcritical"))
    c.measure_subcritical = parse_measure(j.at("measure_subcritical"));
  c.T = detail::optional<double>(j, "T", 1.0);
  c.x_max = detail::optional<double>(j, "x_max", 5.0);
  c.h = detail::optional<double>(j, "h", 1e-3);
  c.replicates = detail::optional<std::size_t>(j, "replicates", 10000);
  c.seed = detail::optional<std::uint64_t>(j, "seed", 1);
  if (!(c.T > 0.0)) throw ConfigError("config: T must be > 0");
  if (!(c.h > 0.0) || !(c.x_max > 0.0))
    throw ConfigError("config: grid parameters must be > 0");
  if (c.replicates == 0) throw ConfigError("config: replicates must be > 0");

  c.forest.measure = c.measure;
  c.forest.ceiling = c.T;
  const std::string stop =
      detail::optional<std::string>(j, "stop", "first_survivor");
  if (stop == "first_survivor") {
    c.forest.stop = ForestStop::FirstSurvivor;
  } else if (stop == "geometric") {
    c.forest.stop = ForestStop::GeometricCount;
    c.forest.geometric_p = detail::require<double>(j, "geometric_p", "config");
    if (!(c.forest.geometric_p > 0.0 && c.forest.geometric_p <= 1.0))
      throw ConfigError("config: geometric_p must lie in (0, 1]");
  } else if (stop == "fixed") {
    c.forest.stop = ForestStop::FixedCount;
    c.forest.fixed_count =
        detail::require<std::size_t>(j, "fixed_count", "config");
  } else {
    throw ConfigError("config: unknown stop '" + stop + "'");
  }
  const std::string root =
      detail::optional<std::string>(j, "root_law", "lifespan");
  if (root == "lifespan") {
    c.forest.root_law = ForestSpec::RootLaw::Lifespan;
  } else if (root == "undershoot") {
    c.forest.root_law = ForestSpec::RootLaw::AncestorTop;
  } else if (root == "overshoot") {
    c.forest.root_law = ForestSpec::RootLaw::AncestorBot;
  } else if (root == "fixed") {
    c.forest.root_law = ForestSpec::RootLaw::Fixed;
    c.forest.fixed_root = detail::require<double>(j, "fixed_root", "config");
  } else {
    throw ConfigError("config: unknown root_law '" + root + "'");
  }
  return c;
}

// --- forests as JSONL ----------------------------------------------------

inline nlohmann::json forest_to_json(const Forest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes())
      nodes.push_back({n.alpha, n.omega, n.parent});
    trees.push_back(std::move(nodes));
  }
  return nlohmann::json{{"trees", std::move(trees)}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
  Forest f;
  for (const auto& tj : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& nj : tj)
      nodes.push_back({nj.at(0).get<double>(), nj.at(1).get<double>(),
                       nj.at(2).get<int>()});
    f.emplace_back(std::move(nodes));
  }
  return f;
}

inline void write_forests_jsonl(std::ostream& os,
                                const std::vector<Forest>& forests) {
  for (const auto& f : forests) os << forest_to_json(f).dump() << '\n';
}

inline std::vector<Forest> read_forests_jsonl(std::istream& is) {
  std::vector<Forest> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(forest_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

// --- paths as CSV --------------------------------------------------------
// Format (one record per line):
//   path,<index>,<x0>
//   e,<drop>,<jump>,<vb>,<va>     (one per jump event)
//   end,<tail_drop>
// Doubles are printed with round-trip precision so a read-back is bit-exact.

namespace detail {
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_paths_csv(std::ostream& os,
                            const std::vector<PiecewisePath>& paths) {
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    os << "path," << i << ',' << detail::fmt(p.start_value()) << '\n';
    for (const auto& e : p.events())
      os << "e," << detail::fmt(e.drop) << ',' << detail::fmt(e.jump) << ','
         << detail::fmt(e.vb) << ',' << detail::fmt(e.va) << '\n';
    os << "end," << detail::fmt(p.tail_drop()) << '\n';
  }
}

inline std::vector<PiecewisePath> read_paths_csv(std::istream& is) {
  std::vector<PiecewisePath> out;
  std::string line;
  bool open = false;
  double x0 = 0.0;
  std::vector<PathEvent> evs;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
      const auto c = s.find(',', pos);
      parts.push_back(s.substr(pos, c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    return parts;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto parts = split(line);
    if (parts[0] == "path") {
      if (open) throw std::runtime_error("paths csv: unterminated path");
      if (parts.size() != 3) throw std::runtime_error("paths csv: bad header");
      x0 = std::stod(parts[2]);
      evs.clear();
      open = true;
    } else if (parts[0] == "e") {
      if (!open || parts.size() != 5)
        throw std::runtime_error("paths csv: bad event line");
      PathEvent e;
      e.drop = std::stod(parts[1]);
      e.jump = std::stod(parts[2]);
      e.vb = std::stod(parts[3]);
      e.va = std::stod(parts[4]);
      evs.push_back(e);
    } else if (parts[0] == "end") {
      if (!open || parts.size() != 2)
        throw std::runtime_error("paths csv: bad end line");
      out.emplace_back(x0, evs, std::stod(parts[1]), true);
      open = false;
    } else {
      throw std::runtime_error("paths csv: unknown record '" + parts[0] + "'");
    }
  }
  if (open) throw std::runtime_error("paths csv: unterminated path");
  return out;
}

}  // namespace forestdual
