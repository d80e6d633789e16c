#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <otkhorn/protocol.hpp>

#include "common.hpp"

using namespace otk;

TEST_CASE("update normalization units") {
  CHECK(updates_per_iteration(Method::kSinkhorn, 16) == 32);
  CHECK(updates_per_iteration(Method::kGreenkhorn, 16) == 1);
  CHECK(updates_per_iteration(Method::kRandkhorn, 16) == 34);
  CHECK(updates_per_iteration(Method::kGandkhorn, 16) == 3);
  CHECK(updates_per_iteration(Method::kApdamd, 16) == 32);
}

TEST_CASE("median and slope helpers") {
  CHECK(median_of({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median_of({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK(least_squares_slope({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0}) == doctest::Approx(2.0));
}

TEST_CASE("tiny synthetic pairwise bench produces finite summaries") {
  BenchSpec spec;
  spec.experiment = Experiment::kSyntheticPairs;
  spec.methods = {Method::kSinkhorn, Method::kGreenkhorn};
  spec.pairs = 1;
  spec.side = 4;  // n = 16
  spec.etas = {1.0};
  spec.max_updates = 10 * 32;  // ten sinkhorn-equivalents
  spec.seed = 5;

  const BenchResult result = run_bench(spec);
  CHECK(!result.pair_traces.empty());
  CHECK(!result.ratio_summary.empty());
  for (const auto& row : result.pair_traces) {
    CHECK(std::isfinite(row.error));
    CHECK(row.error >= 0.0);
  }
  for (const auto& row : result.ratio_summary) {
    CHECK(std::isfinite(row.median));
    CHECK(row.min <= row.median);
    CHECK(row.median <= row.max);
  }
  CHECK(!result.eta_sweep.empty());
  CHECK(result.baseline_kind == "reference");  // n = 16 is past the oracle guard
  CHECK(std::isfinite(result.baseline_value));
}

TEST_CASE("a method against itself has zero competitive ratio") {
  BenchSpec spec;
  spec.experiment = Experiment::kSyntheticPairs;
  spec.methods = {Method::kGreenkhorn, Method::kGreenkhorn};
  spec.pairs = 2;
  spec.side = 3;
  spec.etas = {1.0};
  spec.max_updates = 100;
  spec.seed = 8;

  const BenchResult result = run_bench(spec);
  for (const auto& row : result.ratio_summary) {
    CHECK(row.max == doctest::Approx(0.0));
    CHECK(row.median == doctest::Approx(0.0));
    CHECK(row.min == doctest::Approx(0.0));
  }
}

TEST_CASE("jobs > 1 reproduces the serial result") {
  BenchSpec spec;
  spec.experiment = Experiment::kSyntheticPairs;
  spec.methods = {Method::kSinkhorn, Method::kRandkhorn};
  spec.pairs = 3;
  spec.side = 3;
  spec.etas = {2.0};
  spec.max_updates = 200;
  spec.seed = 21;

  const BenchResult serial = run_bench(spec);
  spec.jobs = 3;
  const BenchResult parallel = run_bench(spec);
  REQUIRE(serial.pair_traces.size() == parallel.pair_traces.size());
  for (std::size_t k = 0; k < serial.pair_traces.size(); ++k) {
    CHECK(serial.pair_traces[k].error == parallel.pair_traces[k].error);
  }
}

TEST_CASE("eps sweep fits slopes per method") {
  BenchSpec spec;
  spec.experiment = Experiment::kEpsSweep;
  spec.side = 4;
  spec.eps_grid = {1e-1, 3e-2, 1e-2};
  spec.sweep_seeds = 3;
  spec.sweep_eta = 0.5;
  spec.seed = 9;

  const BenchResult result = run_bench(spec);
  CHECK(result.sweep_median_slope.count(Method::kSinkhorn) == 1);
  CHECK(result.sweep_median_slope.count(Method::kRandkhorn) == 1);
  CHECK(result.eps_sweep.size() == 2 * 3 * 3);
  for (const auto& [method, slope] : result.sweep_median_slope) {
    CHECK(std::isfinite(slope));
  }
}

TEST_CASE("mnist pairs run end to end on an idx fixture") {
  const auto dir = std::filesystem::temp_directory_path() / "otk_mnist_fixture";
  std::filesystem::create_directories(dir);
  const std::string images = (dir / "images.idx").string();

  CounterRng rng(71);
  std::vector<std::vector<std::uint8_t>> pixels;
  for (int k = 0; k < 4; ++k) {
    std::vector<std::uint8_t> img(28 * 28);
    for (auto& b : img) b = static_cast<std::uint8_t>(rng.uniform_below(256));
    pixels.push_back(std::move(img));
  }
  write_idx_images(images, pixels, 28, 28);

  BenchSpec spec;
  spec.experiment = Experiment::kMnistPairs;
  spec.methods = {Method::kSinkhorn, Method::kGreenkhorn};
  spec.pairs = 1;
  spec.etas = {5.0};
  spec.max_updates = 3 * 2 * 784;  // three sinkhorn-equivalents at n = 784
  spec.seed = 4;
  spec.images_path = images;

  const BenchResult result = run_bench(spec);
  CHECK(!result.ratio_summary.empty());
  for (const auto& row : result.pair_traces) CHECK(std::isfinite(row.error));
  CHECK(result.baseline_kind == "reference");

  spec.pairs = 3;  // only 4 images in the fixture
  CHECK_THROWS(run_bench(spec));
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv writers emit the pinned headers") {
  BenchSpec spec;
  spec.experiment = Experiment::kSyntheticPairs;
  spec.methods = {Method::kSinkhorn, Method::kGreenkhorn};
  spec.pairs = 1;
  spec.side = 3;
  spec.etas = {1.0};
  spec.max_updates = 60;
  spec.seed = 2;
  const BenchResult result = run_bench(spec);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string traces = (dir / "otk_traces.csv").string();
  const std::string ratios = (dir / "otk_ratios.csv").string();
  const std::string sweep = (dir / "otk_sweep.csv").string();
  write_pair_traces_csv(traces, result.pair_traces);
  write_ratio_summary_csv(ratios, result.ratio_summary, spec.methods[0],
                          spec.methods[1]);
  write_eta_sweep_csv(sweep, result);

  auto first_line = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
  };
  CHECK(first_line(traces) == "pair,method,updates,d");
  CHECK(first_line(ratios) == "updates,ratio_max,ratio_median,ratio_min,ratio_of");
  CHECK(first_line(sweep) ==
        "method,eta,updates,cost_rounded,reg_objective,baseline,baseline_kind");
  std::remove(traces.c_str());
  std::remove(ratios.c_str());
  std::remove(sweep.c_str());
}
