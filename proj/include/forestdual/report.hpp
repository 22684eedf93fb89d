#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace forestdual {

// One statistic within a check: a named test with its value, the threshold
// it was compared against, and the direction of the comparison.
struct SubCheck {
  std::string name;
  double statistic = 0.0;   // KS distance, chi2, |z|, max error, ...
  double p_value = -1.0;    // -1 when the test is not p-value based
  double threshold = 0.0;   // alpha for p-values, bound for direct stats
  bool higher_is_pass = true;  // p-value tests pass when p > threshold
  bool pass = false;
  std::string note;
};

struct RunReport {
  std::string check_id;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::vector<SubCheck> checks;
  double runtime_seconds = 0.0;
  std::string note;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  SubCheck& add(std::string name, double statistic, double p_value,
                double threshold, bool higher_is_pass) {
    SubCheck c;
    c.name = std::move(name);
    c.statistic = statistic;
    c.p_value = p_value;
    c.threshold = threshold;
    c.higher_is_pass = higher_is_pass;
    const double v = p_value >= 0.0 ? p_value : statistic;
    c.pass = higher_is_pass ? v > threshold : v <= threshold;
    checks.push_back(std::move(c));
    return checks.back();
  }

  // p-value based test at level alpha
  SubCheck& add_p(std::string name, double statistic, double p_value,
                  double alpha) {
    return add(std::move(name), statistic, p_value, alpha, true);
  }
  // direct bound: pass iff statistic <= bound
  SubCheck& add_bound(std::string name, double statistic, double bound) {
    return add(std::move(name), statistic, -1.0, bound, false);
  }
};

inline nlohmann::json to_json(const SubCheck& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["statistic"] = c.statistic;
  if (c.p_value >= 0.0) j["p_value"] = c.p_value;
  j["threshold"] = c.threshold;
  j["pass"] = c.pass;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["check_id"] = r.check_id;
  j["seed"] = r.seed;
  j["n_samples"] = r.n_samples;
  j["pass"] = r.pass();
  j["runtime_seconds"] = r.runtime_seconds;
  if (!r.note.empty()) j["note"] = r.note;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  return j;
}

}  // namespace forestdual
