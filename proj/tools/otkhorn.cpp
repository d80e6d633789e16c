// otkhorn: entropic optimal-transport solvers, benchmarks and data tools.
//
// Exit codes: 0 converged, 1 usage error, 2 iteration cap hit,
// 3 numerical failure, 4 missing dataset, 5 unwritable output path.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <otkhorn/data.hpp>
#include <otkhorn/driver.hpp>
#include <otkhorn/protocol.hpp>
#include <otkhorn/rng.hpp>

using json = nlohmann::json;
using namespace otk;

namespace {

int default_jobs() {
  if (const char* env = std::getenv("OTKHORN_JOBS")) {
    const int jobs = std::atoi(env);
    if (jobs >= 1) return jobs;
  }
  return 1;
}

// Flat key=value benchmark config; '#' starts a comment. Values for list
// keys are space- or comma-separated. Flags passed on the command line win.
std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) entries[key] = value;
  }
  return entries;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string token;
  for (char ch : value) {
    if (ch == ' ' || ch == ',' || ch == '\t') {
      if (!token.empty()) out.push_back(std::move(token));
      token.clear();
    } else {
      token.push_back(ch);
    }
  }
  if (!token.empty()) out.push_back(std::move(token));
  return out;
}

void write_trace_csv(const std::string& path, const SolveReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,error,dual_f,elapsed_ns\n";
  char buf[64];
  for (const auto& row : report.trace) {
    out << row.iter << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", row.error);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", row.dual_objective);
    out << buf << ',' << row.elapsed_ns << '\n';
  }
}

json record_to_json(const GuaranteeRecord& record) {
  json j;
  j["method"] = to_string(record.method);
  j["n"] = record.n;
  j["eps"] = record.eps;
  j["eta"] = record.eta;
  j["eps_prime"] = record.eps_prime;
  j["R"] = record.r_bound;
  if (record.bound_iterations) {
    j["bound_iterations"] = *record.bound_iterations;
  } else {
    j["bound_iterations"] = nullptr;
  }
  j["actual_iterations"] = record.actual_iterations;
  j["cost"] = record.cost;
  j["wall_ns"] = record.wall_ns;
  j["seed"] = record.seed;
  j["termination"] = to_string(record.termination);
  if (!record.note.empty()) j["note"] = record.note;
  return j;
}

int run_solve(const std::string& method_name, const std::string& cost_path,
              const std::string& r_path, const std::string& c_path, double eps,
              std::optional<double> eta, std::optional<double> eps_prime,
              std::optional<long> max_iter, std::uint64_t seed,
              bool normalization_trick, bool assert_bounds,
              const std::string& out_path, const std::string& trace_path) {
  const auto method = method_from_string(method_name);
  if (!method) {
    std::cerr << "unknown method '" << method_name << "'\n";
    return 1;
  }
  ApproxRequest req;
  req.method = *method;
  req.eps = eps;
  req.eta = eta;
  req.eps_prime = eps_prime;
  req.max_iter = max_iter;
  req.seed = seed;
  req.normalization_trick = normalization_trick;
  req.assert_bounds = assert_bounds;

  DriverResult result;
  try {
    const CostMatrix cost(read_csv_matrix(cost_path));
    const Measure r(read_csv_vector(r_path));
    const Measure c(read_csv_vector(c_path));
    result = approx_ot(req, cost, r, c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      out << record_to_json(result.record).dump(2) << '\n';
    } else {
      std::cout << record_to_json(result.record).dump(2) << '\n';
    }
    if (!trace_path.empty()) write_trace_csv(trace_path, result.report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }

  switch (result.record.termination) {
    case Termination::kConverged: return 0;
    case Termination::kMaxIterations: return 2;
    case Termination::kNumericalFailure: return 3;
  }
  return 3;
}

int run_bench_cmd(const BenchSpec& spec, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  BenchResult result;
  try {
    result = run_bench(spec);
  } catch (const FormatError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 4;
  } catch (const std::runtime_error& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    const auto dir = std::filesystem::path(out_dir);
    if (!result.pair_traces.empty()) {
      write_pair_traces_csv((dir / "pair_traces.csv").string(), result.pair_traces);
      write_ratio_summary_csv((dir / "ratio_summary.csv").string(),
                              result.ratio_summary, spec.methods.at(0),
                              spec.methods.at(1));
    }
    if (!result.eta_sweep.empty()) {
      write_eta_sweep_csv((dir / "eta_sweep.csv").string(), result);
    }
    if (!result.eps_sweep.empty()) {
      write_eps_sweep_csv((dir / "eps_sweep.csv").string(), result);
    }

    json meta;
    meta["experiment"] = to_string(spec.experiment);
    meta["seed"] = spec.seed;
    meta["pairs"] = spec.pairs;
    meta["side"] = spec.side;
    meta["max_updates"] = spec.max_updates;
    meta["bound_violations"] = result.total_bound_violations;
    // budget normalization: cost of one iteration in row/column updates
    json units;
    const int n = spec.side * spec.side;
    for (Method m : {Method::kSinkhorn, Method::kGreenkhorn, Method::kApdamd,
                     Method::kApdagd, Method::kRandkhorn, Method::kGandkhorn}) {
      units[to_string(m)] = updates_per_iteration(m, n);
    }
    meta["updates_per_iteration"] = units;
    if (!result.baseline_kind.empty()) {
      meta["baseline"] = {{"value", result.baseline_value},
                          {"kind", result.baseline_kind}};
    }
    if (!result.sweep_median_slope.empty()) {
      json slopes;
      for (const auto& [m, slope] : result.sweep_median_slope) {
        slopes[to_string(m)] = slope;
      }
      meta["median_slopes"] = slopes;
    }
    std::ofstream out(dir / "bench_meta.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write bench_meta.json");
    out << meta.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}

int run_gen(const std::string& what, std::uint64_t seed, const std::string& out,
            int side, double fg_fraction) {
  try {
    if (what == "synthetic") {
      const GridImage image = gen_synthetic_image(seed, side, fg_fraction);
      write_csv_matrix(out, image.intensities);
      const auto cost_path = out + ".cost.csv";
      write_csv_matrix(cost_path, l1_ground_cost(side).entries());
      return 0;
    }
    if (what == "idx-fixture") {
      CounterRng rng(seed);
      std::vector<std::vector<std::uint8_t>> images;
      images.emplace_back(28 * 28, 0);  // all-zero image
      for (int k = 0; k < 2; ++k) {
        std::vector<std::uint8_t> pixels(28 * 28);
        for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.uniform_below(256));
        images.push_back(std::move(pixels));
      }
      write_idx_images(out + ".images.idx", images, 28, 28);
      write_idx_labels(out + ".labels.idx", {0, 1, 2});
      return 0;
    }
    std::cerr << "unknown --what '" << what << "'\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropic optimal-transport solvers and benchmark harness"};
  app.require_subcommand(1);

  // --- solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "approximate one OT instance");
  std::string method = "sinkhorn", cost_path, r_path, c_path, out_path, trace_path;
  double eps = 0.0;
  double eta_flag = 0.0, eps_prime_flag = 0.0;
  long max_iter_flag = 0;
  std::uint64_t seed = 0;
  bool normalization_trick = false, assert_bounds = false;
  solve->add_option("--method", method, "sinkhorn|greenkhorn|apdamd|apdagd|randkhorn|gandkhorn");
  solve->add_option("--cost", cost_path, "cost matrix CSV")->required();
  solve->add_option("--r", r_path, "source marginal CSV")->required();
  solve->add_option("--c", c_path, "target marginal CSV")->required();
  solve->add_option("--eps", eps, "additive cost tolerance")->required();
  auto* eta_opt = solve->add_option("--eta", eta_flag, "override regularization");
  auto* epsp_opt = solve->add_option("--eps-prime", eps_prime_flag, "override marginal tolerance");
  auto* iter_opt = solve->add_option("--max-iter", max_iter_flag, "iteration safeguard");
  solve->add_option("--seed", seed, "RNG seed");
  solve->add_flag("--normalization-trick", normalization_trick, "rescale mass each iteration");
  solve->add_flag("--assert-bounds", assert_bounds, "enable theorem-backed runtime asserts");
  solve->add_option("--out", out_path, "guarantee record JSON path");
  solve->add_option("--trace", trace_path, "iteration trace CSV path");

  // --- bench ---------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "run a comparative benchmark experiment");
  std::string config_path, experiment = "synthetic-pairs";
  std::vector<std::string> method_names;
  BenchSpec spec;
  std::string out_dir = "bench_out";
  bench->add_option("--config", config_path, "key=value config file (flags win)");
  auto* o_experiment = bench->add_option(
      "--experiment", experiment, "synthetic-pairs|mnist-pairs|eps-sweep|eta-sweep");
  auto* o_methods =
      bench->add_option("--methods", method_names, "methods (two for pairwise)");
  auto* o_pairs = bench->add_option("--pairs", spec.pairs, "image pairs");
  auto* o_etas = bench->add_option("--etas", spec.etas, "regularization grid");
  auto* o_eps_grid =
      bench->add_option("--eps-grid", spec.eps_grid, "eps' grid for the sweep");
  auto* o_max_updates =
      bench->add_option("--max-updates", spec.max_updates, "row/column update budget");
  auto* o_seed = bench->add_option("--seed", spec.seed, "master seed");
  auto* o_side = bench->add_option("--side", spec.side, "synthetic image side");
  auto* o_sweep_seeds =
      bench->add_option("--sweep-seeds", spec.sweep_seeds, "seeds per sweep point");
  auto* o_sweep_eta =
      bench->add_option("--sweep-eta", spec.sweep_eta, "eps-sweep regularization");
  auto* o_images = bench->add_option("--images", spec.images_path, "MNIST IDX images");
  auto* o_labels = bench->add_option("--labels", spec.labels_path, "MNIST IDX labels");
  auto* o_assert =
      bench->add_flag("--assert-bounds", spec.assert_bounds, "runtime asserts during runs");
  spec.jobs = default_jobs();
  auto* o_jobs = bench->add_option("--jobs", spec.jobs, "worker pool size (env OTKHORN_JOBS)");
  auto* o_out_dir = bench->add_option("--out-dir", out_dir, "output directory");

  // --- gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate data files");
  std::string what = "synthetic", gen_out = "image.csv";
  std::uint64_t gen_seed = 0;
  int gen_side = 20;
  double fg_fraction = 0.1;
  gen->add_option("--what", what, "synthetic|idx-fixture")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output path (base name)")->required();
  gen->add_option("--side", gen_side, "image side");
  gen->add_option("--fg-fraction", fg_fraction, "foreground area fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (solve->parsed()) {
    if (!(eps > 0)) {
      std::cerr << "--eps must be > 0\n";
      return 1;
    }
    return run_solve(method, cost_path, r_path, c_path, eps,
                     eta_opt->count() ? std::optional<double>(eta_flag) : std::nullopt,
                     epsp_opt->count() ? std::optional<double>(eps_prime_flag)
                                       : std::nullopt,
                     iter_opt->count() ? std::optional<long>(max_iter_flag)
                                       : std::nullopt,
                     seed, normalization_trick, assert_bounds, out_path, trace_path);
  }
  if (bench->parsed()) {
    if (!config_path.empty()) {
      std::map<std::string, std::string> file;
      try {
        file = read_flat_config(config_path);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
      auto want = [&](const char* key, const CLI::Option* opt) {
        return file.count(key) != 0 && opt->count() == 0;
      };
      try {
        if (want("experiment", o_experiment)) experiment = file["experiment"];
        if (want("methods", o_methods)) method_names = split_list(file["methods"]);
        if (want("pairs", o_pairs)) spec.pairs = std::stoi(file["pairs"]);
        if (want("etas", o_etas)) {
          spec.etas.clear();
          for (const auto& v : split_list(file["etas"])) spec.etas.push_back(std::stod(v));
        }
        if (want("eps-grid", o_eps_grid)) {
          spec.eps_grid.clear();
          for (const auto& v : split_list(file["eps-grid"]))
            spec.eps_grid.push_back(std::stod(v));
        }
        if (want("max-updates", o_max_updates))
          spec.max_updates = std::stol(file["max-updates"]);
        if (want("seed", o_seed)) spec.seed = std::stoull(file["seed"]);
        if (want("side", o_side)) spec.side = std::stoi(file["side"]);
        if (want("sweep-seeds", o_sweep_seeds))
          spec.sweep_seeds = std::stoi(file["sweep-seeds"]);
        if (want("sweep-eta", o_sweep_eta)) spec.sweep_eta = std::stod(file["sweep-eta"]);
        if (want("images", o_images)) spec.images_path = file["images"];
        if (want("labels", o_labels)) spec.labels_path = file["labels"];
        if (want("assert-bounds", o_assert))
          spec.assert_bounds = file["assert-bounds"] != "0" &&
                               file["assert-bounds"] != "false";
        if (want("jobs", o_jobs)) spec.jobs = std::stoi(file["jobs"]);
        if (want("out-dir", o_out_dir)) out_dir = file["out-dir"];
      } catch (const std::exception& e) {
        std::cerr << "error: bad config value: " << e.what() << '\n';
        return 1;
      }
    }
    const auto exp = experiment_from_string(experiment);
    if (!exp) {
      std::cerr << "unknown experiment '" << experiment << "'\n";
      return 1;
    }
    spec.experiment = *exp;
    for (const auto& name : method_names) {
      const auto m = method_from_string(name);
      if (!m) {
        std::cerr << "unknown method '" << name << "'\n";
        return 1;
      }
      spec.methods.push_back(*m);
    }
    if (spec.experiment == Experiment::kMnistPairs && spec.images_path.empty()) {
      std::cerr << "mnist-pairs needs --images\n";
      return 4;
    }
    if (spec.experiment == Experiment::kMnistPairs &&
        !std::filesystem::exists(spec.images_path)) {
      std::cerr << "dataset missing: " << spec.images_path << '\n';
      return 4;
    }
    try {
      spec.validate();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    return run_bench_cmd(spec, out_dir);
  }
  if (gen->parsed()) {
    return run_gen(what, gen_seed, gen_out, gen_side, fg_fraction);
  }
  return 1;
}
