#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <otkhorn/data.hpp>
#include <sstream>
#include <string>

#include "common.hpp"

using namespace otk;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string command = std::string(OTKHORN_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr) {
    result.output += buffer.data();
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::filesystem::path work_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "otkhorn_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("solve subcommand on the 2x2 fixture") {
  const auto dir = work_dir();
  const auto cost = dir / "cost.csv";
  const auto r = dir / "r.csv";
  const auto c = dir / "c.csv";
  write_csv_matrix(cost.string(), (Matrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished());
  write_csv_matrix(r.string(), (Matrix(1, 2) << 0.3, 0.7).finished());
  write_csv_matrix(c.string(), (Matrix(1, 2) << 0.6, 0.4).finished());

  const auto out = dir / "record.json";
  const auto trace = dir / "trace.csv";
  const auto res = run_cli("solve --method greenkhorn --cost " + cost.string() +
                           " --r " + r.string() + " --c " + c.string() +
                           " --eps 0.05 --seed 4 --out " + out.string() + " --trace " +
                           trace.string() + " --assert-bounds");
  CHECK(res.exit_code == 0);

  const std::string record = read_file(out);
  CHECK(record.find("\"method\": \"greenkhorn\"") != std::string::npos);
  CHECK(record.find("\"termination\": \"converged\"") != std::string::npos);
  // LP optimum is 0.3, so the reported cost sits inside [0.3, 0.35]
  const auto cost_pos = record.find("\"cost\": ");
  REQUIRE(cost_pos != std::string::npos);
  const double cost_value = std::stod(record.substr(cost_pos + 8));
  CHECK(cost_value >= 0.3 - 1e-9);
  CHECK(cost_value <= 0.35 + 1e-9);

  const std::string trace_text = read_file(trace);
  CHECK(trace_text.rfind("iter,error,dual_f,elapsed_ns", 0) == 0);
}

TEST_CASE("solve reports an iteration-capped run with exit code 2") {
  const auto dir = work_dir();
  const auto cost = dir / "cap_cost.csv";
  const auto r = dir / "cap_r.csv";
  write_csv_matrix(cost.string(), (Matrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished());
  write_csv_matrix(r.string(), (Matrix(1, 2) << 0.3, 0.7).finished());
  const auto res = run_cli("solve --method greenkhorn --cost " + cost.string() +
                           " --r " + r.string() + " --c " + r.string() +
                           " --eps 0.001 --max-iter 1");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("max_iterations") != std::string::npos);
}

TEST_CASE("solve usage errors exit with code 1") {
  const auto dir = work_dir();
  const auto res = run_cli("solve --method sinkhorn --eps 0.1");
  CHECK(res.exit_code == 1);  // missing --cost/--r/--c

  const auto cost = dir / "cost.csv";
  write_csv_matrix(cost.string(), Matrix::Ones(2, 2));
  const auto r = dir / "r.csv";
  write_csv_matrix(r.string(), (Matrix(1, 2) << 0.5, 0.5).finished());
  const auto zero_eps =
      run_cli("solve --cost " + cost.string() + " --r " + r.string() + " --c " +
              r.string() + " --eps 0");
  CHECK(zero_eps.exit_code == 1);
}

TEST_CASE("gen is deterministic and idx fixtures round-trip") {
  const auto dir = work_dir();
  const auto img1 = dir / "a.csv";
  const auto img2 = dir / "b.csv";
  CHECK(run_cli("gen --what synthetic --seed 9 --side 20 --out " + img1.string())
            .exit_code == 0);
  CHECK(run_cli("gen --what synthetic --seed 9 --side 20 --out " + img2.string())
            .exit_code == 0);
  CHECK(read_file(img1) == read_file(img2));

  const Matrix image = read_csv_matrix(img1.string());
  CHECK(image.rows() == 20);
  CHECK(image.cols() == 20);  // a 400-entry measure grid
  CHECK(image.sum() == doctest::Approx(1.0).epsilon(1e-9));

  const auto fixture = (dir / "fixture").string();
  CHECK(run_cli("gen --what idx-fixture --seed 3 --out " + fixture).exit_code == 0);
  const auto images = load_mnist_idx(fixture + ".images.idx", fixture + ".labels.idx");
  CHECK(images.size() == 3);
  CHECK(images[0].side == 28);
  // first fixture image is all zeros, so it loads as the uniform measure
  CHECK(images[0].intensities(5, 5) == doctest::Approx(1.0 / 784.0).epsilon(1e-12));
}

TEST_CASE("bench smoke run writes the summary files") {
  const auto dir = work_dir() / "bench";
  const auto res = run_cli(
      "bench --experiment synthetic-pairs --methods sinkhorn greenkhorn --pairs 1 "
      "--side 4 --etas 1 --max-updates 320 --seed 12 --out-dir " +
      dir.string());
  CHECK(res.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "pair_traces.csv"));
  CHECK(std::filesystem::exists(dir / "ratio_summary.csv"));
  CHECK(std::filesystem::exists(dir / "eta_sweep.csv"));
  CHECK(std::filesystem::exists(dir / "bench_meta.json"));

  const std::string meta = read_file(dir / "bench_meta.json");
  CHECK(meta.find("updates_per_iteration") != std::string::npos);
}

TEST_CASE("bench on a missing MNIST file exits with code 4") {
  const auto res = run_cli(
      "bench --experiment mnist-pairs --methods sinkhorn greenkhorn --pairs 1 "
      "--images /nonexistent/mnist.idx");
  CHECK(res.exit_code == 4);
}

TEST_CASE("bench reads key=value config files with flags taking precedence") {
  const auto dir = work_dir();
  const auto config = dir / "bench.cfg";
  {
    std::ofstream out(config);
    out << "experiment=synthetic-pairs\n"
        << "methods=sinkhorn greenkhorn\n"
        << "pairs=1\n"
        << "side=3\n"
        << "etas=1\n"
        << "max-updates=90\n"
        << "seed=5\n";
  }
  const auto out_dir = dir / "bench_cfg_out";
  const auto res = run_cli("bench --config " + config.string() + " --seed 6 --out-dir " +
                           out_dir.string());
  CHECK(res.exit_code == 0);
  const std::string meta = read_file(out_dir / "bench_meta.json");
  CHECK(meta.find("\"seed\": 6") != std::string::npos);   // flag wins over file
  CHECK(meta.find("\"pairs\": 1") != std::string::npos);  // file value applies
}

TEST_CASE("gen to an unwritable path exits with code 5") {
  const auto res =
      run_cli("gen --what synthetic --seed 1 --out /nonexistent_dir/image.csv");
  CHECK(res.exit_code == 5);
}
