// forestdual: simulation and verification toolkit for splitting-tree
// forests, their contour processes, and time-reversal width dualities.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "forestdual/contour.hpp"
#include "forestdual/epi.hpp"
#include "forestdual/io.hpp"
#include "forestdual/measure.hpp"
#include "forestdual/parallel.hpp"
#include "forestdual/scale.hpp"
#include "forestdual/sim.hpp"
#include "forestdual/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

forestdual::RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw forestdual::ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw forestdual::ConfigError("config is not valid JSON: " +
                                  std::string(e.what()));
  }
  return forestdual::parse_config(j);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw forestdual::ConfigError("cannot open output file: " + path);
  return os;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 bool seed_set, const std::string& out,
                 const std::string& contour_out, unsigned threads) {
  forestdual::RunConfig cfg = load_config(config_path);
  if (seed_set) cfg.seed = seed;
  std::vector<forestdual::Forest> forests(cfg.replicates);
  const bool needs_anc = forestdual::needs_ancestor_law(cfg.forest);
  const forestdual::AncestorLaw* anc = nullptr;
  std::optional<forestdual::AncestorLaw> storage;
  if (needs_anc) {
    storage.emplace(forestdual::make_ancestor_law(cfg.forest));
    anc = &*storage;
  }
  forestdual::parallel_for(cfg.replicates, threads, [&](std::size_t i) {
    forestdual::Rng rng = forestdual::Rng::stream(cfg.seed, 100, i, 0);
    forests[i] = forestdual::simulate_forest(cfg.forest, anc, rng);
  });
  if (!out.empty()) {
    auto os = open_out(out);
    forestdual::write_forests_jsonl(os, forests);
  }
  if (!contour_out.empty()) {
    std::vector<forestdual::PiecewisePath> paths;
    paths.reserve(forests.size());
    for (const auto& f : forests) paths.push_back(forestdual::jccp(f));
    auto os = open_out(contour_out);
    forestdual::write_paths_csv(os, paths);
  }
  std::cout << "simulate: " << cfg.replicates << " forests written\n";
  return kExitOk;
}

int cmd_scale_table(double b, double d, double xmax, double h,
                    const std::string& out) {
  const auto mu = forestdual::LifespanMeasure::exponential(b, d);
  const auto W = forestdual::build_scale_table(mu, xmax, h);
  const auto Wt = forestdual::build_scale_table(mu.tilted(), xmax, h);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file = open_out(out);
    os = &file;
  }
  (*os) << "x,W,W_tilted\n";
  char buf[96];
  for (double x = 0.0; x <= xmax + 0.5 * h; x += 100.0 * h) {
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g\n", x, W(x), Wt(x));
    (*os) << buf;
  }
  return kExitOk;
}

int cmd_contour(const std::string& in, const std::string& out) {
  std::ifstream is(in);
  if (!is) throw forestdual::ConfigError("cannot open input file: " + in);
  const auto forests = forestdual::read_forests_jsonl(is);
  std::vector<forestdual::PiecewisePath> paths;
  paths.reserve(forests.size());
  for (const auto& f : forests) paths.push_back(forestdual::jccp(f));
  auto os = open_out(out);
  forestdual::write_paths_csv(os, paths);
  std::cout << "contour: " << paths.size() << " paths written\n";
  return kExitOk;
}

int cmd_forest_from_contour(const std::string& in, const std::string& out) {
  std::ifstream is(in);
  if (!is) throw forestdual::ConfigError("cannot open input file: " + in);
  const auto paths = forestdual::read_paths_csv(is);
  std::vector<forestdual::Forest> forests;
  forests.reserve(paths.size());
  for (const auto& p : paths)
    forests.push_back(forestdual::forest_from_contour(p));
  auto os = open_out(out);
  forestdual::write_forests_jsonl(os, forests);
  std::cout << "forest-from-contour: " << forests.size()
            << " forests written\n";
  return kExitOk;
}

int cmd_verify(const std::string& config_path, const std::string& check,
               std::uint64_t seed, bool seed_set, const std::string& out,
               unsigned threads) {
  forestdual::RunConfig cfg = load_config(config_path);
  if (seed_set) cfg.seed = seed;
  using forestdual::RunReport;
  std::vector<RunReport> reports;
  const auto want = [&](const std::string& id) {
    return check == "all" || check == id;
  };
  bool known = check == "all";
  const std::size_t n = cfg.replicates;
  if (want("width_reversal")) {
    known = true;
    reports.push_back(forestdual::check_width_reversal(cfg.measure, cfg.T, n,
                                                       cfg.seed, threads));
  }
  if (want("contour_transform")) {
    known = true;
    reports.push_back(forestdual::check_contour_transform(cfg.measure, cfg.T,
                                                          n, cfg.seed,
                                                          threads));
  }
  if (want("survival_probability")) {
    known = true;
    reports.push_back(forestdual::check_survival_probability(cfg.measure, cfg.T, n,
                                                       cfg.seed, threads));
  }
  if (want("over_undershoot")) {
    known = true;
    reports.push_back(forestdual::check_over_undershoot(
        cfg.measure, cfg.measure_subcritical, n, cfg.seed, threads));
  }
  if (want("reversal_invariance")) {
    known = true;
    reports.push_back(forestdual::check_reversal_invariance(
        cfg.measure, cfg.T, cfg.measure_subcritical, n, cfg.seed, threads));
  }
  if (want("measure_change")) {
    known = true;
    reports.push_back(forestdual::check_measure_change(
        cfg.measure, cfg.T, 0.5 * cfg.T, n, cfg.seed, threads));
  }
  if (want("conditional_decomposition")) {
    known = true;
    reports.push_back(forestdual::check_conditional_decomposition(
        cfg.measure, cfg.T, n, cfg.seed, threads));
  }
  if (want("calibration")) {
    known = true;
    reports.push_back(forestdual::calibrate_width_reversal(
        cfg.measure, cfg.T, std::min<std::size_t>(n, 2000), 200, cfg.seed,
        threads));
  }
  if (!known) {
    std::cerr << "unknown check id: " << check << '\n';
    return kExitUsage;
  }
  bool all_pass = true;
  nlohmann::json jreports = nlohmann::json::array();
  for (const auto& r : reports) {
    all_pass = all_pass && r.pass();
    std::cout << (r.pass() ? "PASS " : "FAIL ") << r.check_id << " ("
              << r.checks.size() << " tests, "
              << r.runtime_seconds << " s)\n";
    jreports.push_back(forestdual::to_json(r));
  }
  if (!out.empty()) {
    auto os = open_out(out);
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["reports"] = std::move(jreports);
    j["pass"] = all_pass;
    os << j.dump(2) << '\n';
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_epi(const std::string& config_path, std::uint64_t seed, bool seed_set,
            const std::string& out_prefix, double bin, unsigned threads) {
  forestdual::RunConfig cfg = load_config(config_path);
  if (seed_set) cfg.seed = seed;
  (void)threads;
  // one forest with survivors, then its reconstructed genealogy + incidence
  forestdual::Forest forest;
  for (std::size_t attempt = 0;; ++attempt) {
    forestdual::Rng rng = forestdual::Rng::stream(cfg.seed, 101, attempt, 0);
    forest = forestdual::simulate_forest(cfg.forest, rng);
    forestdual::WidthProcess w(forest);
    if (w(cfg.T) > 0) break;
    if (attempt > 1000000)
      throw std::runtime_error("epi: no forest with survivors");
  }
  const auto rec = forestdual::reconstructed_tree(forest, cfg.T);
  {
    auto os = open_out(out_prefix + ".nwk");
    os << rec.newick << '\n';
  }
  {
    auto os = open_out(out_prefix + "_incidence.csv");
    os << "bin_start,count\n";
    const auto inc = forestdual::incidence_series(forest, bin, cfg.T);
    char buf[64];
    for (std::size_t i = 0; i < inc.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%ld\n",
                    static_cast<double>(i) * bin, inc[i]);
      os << buf;
    }
  }
  std::cout << "epi: " << rec.leaves << " survivors, outputs written to "
            << out_prefix << ".nwk / _incidence.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "forestdual: splitting-tree forest simulation, contour coding, and "
      "width-process time-reversal verification"};
  app.require_subcommand(1);

  std::string config_path, out, in, contour_out, check = "all";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double b = 2.0, d = 1.0, xmax = 5.0, h = 1e-3, bin = 0.05;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* copt = sub->add_option("--config", config_path, "JSON config file");
    if (needs_config) copt->required();
    sub->add_option("--seed", seed, "64-bit master seed");
    sub->add_option("--threads", threads,
                    "worker threads (default: FORESTDUAL_THREADS or all "
                    "cores)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate forests");
  add_common(sim, true);
  sim->add_option("--out", out, "forests JSONL output");
  sim->add_option("--contour-out", contour_out, "contour CSV output");

  auto* sct = app.add_subcommand("scale-table", "tabulate scale functions");
  sct->set_help_flag("--help", "print help and exit");  // frees -h for --h
  sct->add_option("--b", b, "birth rate");
  sct->add_option("--d", d, "death rate");
  sct->add_option("--xmax", xmax, "table horizon");
  sct->add_option("--h", h, "solver step");
  sct->add_option("--out", out, "CSV output (default: stdout)");

  auto* ctr = app.add_subcommand("contour", "forests JSONL -> contour CSV");
  ctr->add_option("--in", in, "forests JSONL input")->required();
  ctr->add_option("--out", out, "contour CSV output")->required();

  auto* ffc = app.add_subcommand("forest-from-contour",
                                 "contour CSV -> forests JSONL");
  ffc->add_option("--in", in, "contour CSV input")->required();
  ffc->add_option("--out", out, "forests JSONL output")->required();

  auto* ver = app.add_subcommand("verify", "run verification checks");
  add_common(ver, true);
  ver->add_option("--check", check, "check id or 'all'");
  ver->add_option("--out", out, "report JSON output");

  auto* epi = app.add_subcommand("epi", "reconstructed genealogy + incidence");
  add_common(epi, true);
  epi->add_option("--out", out, "output path prefix")->required();
  epi->add_option("--bin", bin, "incidence bin width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const bool seed_set = app.count_all() && (sim->count("--seed") ||
                                              ver->count("--seed") ||
                                              epi->count("--seed"));
    if (sim->parsed())
      return cmd_simulate(config_path, seed, seed_set, out, contour_out,
                          threads);
    if (sct->parsed()) return cmd_scale_table(b, d, xmax, h, out);
    if (ctr->parsed()) return cmd_contour(in, out);
    if (ffc->parsed()) return cmd_forest_from_contour(in, out);
    if (ver->parsed())
      return cmd_verify(config_path, check, seed, seed_set, out, threads);
    if (epi->parsed()) return cmd_epi(config_path, seed, seed_set, out, bin, threads);
  } catch (const forestdual::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}
