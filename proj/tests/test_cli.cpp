#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sfw/certificates.hpp"
#include "sfw/commands.hpp"
#include "sfw/io.hpp"

using namespace sfw;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sfw_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(SFW_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

const char* kTinyConfig =
    "[run]\nseed = 5\n"
    "[kernel]\nvariant = matirf\nn1 = 16\nn2 = 16\nplanes = 2\n"
    "[solver]\nlambda = 20\nstop_tol = 1e-9\n"
    "[simulation]\nn_total = 6\nn_per_frame = 3\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes a deterministic dataset") {
  const auto dir = work_dir("simulate");
  auto cfg = parse_config_text(kTinyConfig);
  cfg.out_dir = (dir / "a").string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  CHECK(fs::exists(dir / "a" / "ground_truth.csv"));
  CHECK(fs::exists(dir / "a" / "frame_0000.bin"));
  CHECK(fs::exists(dir / "a" / "frame_0001.bin"));
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["frame_count"] == 2);
  CHECK(manifest["observation_dim"] == 16 * 16 * 2);
  CHECK(manifest["noise_scales"].size() == 2);

  cfg.out_dir = (dir / "b").string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  CHECK(slurp(dir / "a" / "frame_0000.bin") == slurp(dir / "b" / "frame_0000.bin"));
  CHECK(slurp(dir / "a" / "frame_0001.bin") == slurp(dir / "b" / "frame_0001.bin"));
  CHECK(slurp(dir / "a" / "ground_truth.csv") == slurp(dir / "b" / "ground_truth.csv"));

  // different seed, different data
  cfg.seed = 6;
  cfg.out_dir = (dir / "c").string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  CHECK(slurp(dir / "a" / "frame_0000.bin") != slurp(dir / "c" / "frame_0000.bin"));
}

TEST_CASE("reconstruct produces localizations and traces") {
  const auto dir = work_dir("reconstruct");
  auto cfg = parse_config_text(kTinyConfig);
  cfg.out_dir = dir.string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  REQUIRE(cmd_reconstruct(cfg, {(dir / "frame_0000.bin").string(), (dir / "frame_0001.bin").string()}) == kExitOk);
  CHECK(fs::exists(dir / "localizations.csv"));

  auto traces = nlohmann::json::parse(slurp(dir / "traces.json"));
  CHECK(traces["frame_count"] == 2);
  CHECK(traces["frames"][0].contains("trace"));

  // determinism: byte-identical localizations on a second run
  const std::string first = slurp(dir / "localizations.csv");
  REQUIRE(cmd_reconstruct(cfg, {(dir / "frame_0000.bin").string(), (dir / "frame_0001.bin").string()}) == kExitOk);
  CHECK(slurp(dir / "localizations.csv") == first);

  // an empty frame produces no rows for that frame
  write_frames_binary(dir / "empty.bin", {Vec::Zero(16 * 16 * 2)});
  cfg.out_dir = (dir / "empty_out").string();
  REQUIRE(cmd_reconstruct(cfg, {(dir / "empty.bin").string()}) == kExitOk);
  CHECK(read_localizations_csv(fs::path(cfg.out_dir) / "localizations.csv").empty());
}

TEST_CASE("reconstruct output does not depend on the worker count") {
  const auto dir = work_dir("threads");
  auto cfg = parse_config_text(kTinyConfig);
  cfg.out_dir = dir.string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  const std::vector<std::string> frames = {(dir / "frame_0000.bin").string(),
                                           (dir / "frame_0001.bin").string()};
  std::string outputs[2];
  int threads_case = 0;
  for (int threads : {1, 3}) {
    cfg.threads = threads;
    cfg.out_dir = (dir / ("t" + std::to_string(threads))).string();
    REQUIRE(cmd_reconstruct(cfg, frames) == kExitOk);
    outputs[threads_case++] = slurp(fs::path(cfg.out_dir) / "localizations.csv");
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(!outputs[0].empty());
}

TEST_CASE("reconstruct handles 1-D csv frames") {
  const auto dir = work_dir("csv1d");
  auto cfg = parse_config_text(
      "[kernel]\nvariant = gaussian1d\n[solver]\nlambda = 0.05\n[run]\nframes_format = csv\n");
  cfg.out_dir = dir.string();
  auto kernel = make_kernel(cfg.effective_kernel());
  DiscreteMeasure m0;
  m0.add(1.0, point1d(0.42));
  write_frames_csv(dir / "obs.csv", {apply_forward(*kernel, m0)});
  REQUIRE(cmd_reconstruct(cfg, {(dir / "obs.csv").string()}) == kExitOk);
  auto rows = read_localizations_csv(dir / "localizations.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].position.size() == 1);
  CHECK(std::abs(rows[0].position[0] - 0.42) < 1e-4);
}

TEST_CASE("iteration cap is reported, not hidden") {
  const auto dir = work_dir("itercap");
  auto cfg = parse_config_text(kTinyConfig);
  cfg.out_dir = dir.string();
  cfg.max_outer = 1;  // cannot finish a 3-molecule frame in one insertion
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  REQUIRE(cmd_reconstruct(cfg, {(dir / "frame_0000.bin").string()}) == kExitOk);
  auto traces = nlohmann::json::parse(slurp(dir / "traces.json"));
  CHECK(traces["frames"][0]["trace"]["termination"] == "iteration_cap");
}

TEST_CASE("reconstruct error paths") {
  const auto dir = work_dir("reconstruct_errors");
  auto cfg = parse_config_text(kTinyConfig);
  cfg.out_dir = dir.string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);

  // dimension mismatch: frames with the wrong observation size
  write_frames_binary(dir / "wrong.bin", {Vec::Zero(10)});
  CHECK(cmd_reconstruct(cfg, {(dir / "wrong.bin").string()}) == kExitDimensionMismatch);

  // corrupted file: recorded as an error, run continues with exit code 4
  spit(dir / "corrupt.bin", "not a frame file at all");
  CHECK(cmd_reconstruct(cfg, {(dir / "frame_0000.bin").string(), (dir / "corrupt.bin").string()}) ==
        kExitPartialFailure);
  auto traces = nlohmann::json::parse(slurp(dir / "traces.json"));
  CHECK(traces["file_errors"].size() == 1);
  CHECK(traces["frame_count"] == 1);  // the good file was still processed

  // missing lambda is a config error
  auto no_lambda = parse_config_text("[kernel]\nvariant = matirf\nn1 = 16\nn2 = 16\nplanes = 2\n");
  no_lambda.out_dir = dir.string();
  CHECK_THROWS_WITH_AS(cmd_reconstruct(no_lambda, {(dir / "frame_0000.bin").string()}),
                       doctest::Contains("solver.lambda"), ConfigError);
}

TEST_CASE("evaluate scores identical files as perfect") {
  const auto dir = work_dir("evaluate");
  std::vector<LocalizationRow> rows = {
      {0, 1.0, point3d(1.0, 2.0, 0.1)},
      {0, 1.2, point3d(4.0, 5.0, 0.6)},
      {1, 0.9, point3d(3.0, 3.0, 0.3)},
  };
  write_localizations_csv(dir / "est.csv", rows, 3);
  write_localizations_csv(dir / "gt.csv", rows, 3);
  RunConfig cfg;
  cfg.out_dir = dir.string();
  EvaluateArgs args;
  args.estimated_csv = (dir / "est.csv").string();
  args.ground_truth_csv = (dir / "gt.csv").string();
  args.tag = "selftest";
  REQUIRE(cmd_evaluate(cfg, args) == kExitOk);
  auto scores = nlohmann::json::parse(slurp(dir / "scores.json"));
  CHECK(scores["detection"]["pooled"]["jaccard"] == 1.0);
  CHECK(scores["detection"]["pooled"]["recall"] == 1.0);
  CHECK(scores["detection"]["pooled"]["precision"] == 1.0);
  CHECK(scores["localization"]["pooled"]["rmse"][0] == 0.0);
  CHECK(slurp(dir / "scores.csv").find("selftest") != std::string::npos);
}

TEST_CASE("certify emits the continuous-oracle curve") {
  const auto dir = work_dir("certify");
  auto cfg = parse_config_text("[kernel]\nvariant = laplace\nb1 = 4\nlaplace_s_count = 10\n");
  cfg.out_dir = dir.string();
  CertifyArgs args;
  args.mode = "eta_w";
  args.continuous = true;
  args.x_c = 1.0;
  args.n_spikes = 2;
  args.grid = 500;
  REQUIRE(cmd_certify(cfg, args) == kExitOk);

  // CSV matches the closed form pointwise
  std::ifstream in(dir / "certificate.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,eta");
  int count = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma));
    const double eta = std::stod(line.substr(comma + 1));
    CHECK(std::abs(eta - closed_form_eta_w_laplace(x, 1.0, 2, false)) < 1e-12);
    ++count;
  }
  CHECK(count == 500);

  auto report = nlohmann::json::parse(slurp(dir / "certificate_report.json"));
  CHECK(report["verdict"] == "nondegenerate");
  CHECK(report.contains("eta_derivative_2n"));

  // eta_v mode over a measure file
  auto cfg3 = parse_config_text("[kernel]\nvariant = gaussian1d\n");
  cfg3.out_dir = (dir / "etav").string();
  write_localizations_csv(dir / "measure.csv",
                          {{0, 1.0, point1d(0.35)}, {0, 1.0, point1d(0.72)}}, 1);
  CertifyArgs vargs;
  vargs.mode = "eta_v";
  vargs.measure_csv = (dir / "measure.csv").string();
  REQUIRE(cmd_certify(cfg3, vargs) == kExitOk);
  auto vreport = nlohmann::json::parse(slurp(dir / "etav" / "certificate_report.json"));
  CHECK(vreport["verdict"] == "nondegenerate");
}

TEST_CASE("demo1d reproduces the three-iteration walkthrough") {
  const auto dir = work_dir("demo1d");
  RunConfig cfg;
  cfg.out_dir = dir.string();
  cfg.seed = 1;
  REQUIRE(cmd_demo1d(cfg) == kExitOk);

  auto summary = nlohmann::json::parse(slurp(dir / "demo_summary.json"));
  CHECK(summary["trace"]["outer_iterations"] == 3);
  CHECK(summary["trace"]["termination"] == "certificate_bounded");
  CHECK(summary["optimality"]["optimal"] == true);
  CHECK(summary["recovered_spikes"] == 3);

  // objective trace: three monotone plateaus separated by insertion drops
  std::ifstream in(dir / "objective_trace.csv");
  std::string line;
  std::getline(in, line);
  std::map<int, std::vector<double>> blocks;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string outer, inner, value;
    std::getline(ss, outer, ',');
    std::getline(ss, inner, ',');
    std::getline(ss, value, ',');
    blocks[std::stoi(outer)].push_back(std::stod(value));
  }
  REQUIRE(blocks.size() == 3);
  double prev_end = std::numeric_limits<double>::infinity();
  for (const auto& [outer, values] : blocks) {
    for (std::size_t i = 1; i < values.size(); ++i)
      CHECK(values[i] <= values[i - 1] + 1e-12);
    CHECK(values.back() < prev_end);
    prev_end = values.back();
  }

  CHECK(fs::exists(dir / "eta_v.csv"));
  CHECK(fs::exists(dir / "eta_final.csv"));
  CHECK(fs::exists(dir / "localizations.csv"));
  for (int k = 0; k < 3; ++k) {
    CHECK(fs::exists(dir / ("spikes_iter_" + std::to_string(k) + ".csv")));
    CHECK(fs::exists(dir / ("eta_iter_" + std::to_string(k) + ".csv")));
  }
}

TEST_CASE("executable exit codes") {
  const auto dir = work_dir("exe");
  spit(dir / "good.cfg", kTinyConfig);
  spit(dir / "missing_variant.cfg", "[solver]\nlambda = 1\n");
  spit(dir / "unknown_key.cfg", "[kernel]\nvariant = matirf\nbogus = 1\n");

  CHECK(run_cli("simulate --config " + (dir / "good.cfg").string() + " --out-dir " +
                (dir / "out").string()) == kExitOk);
  CHECK(run_cli("simulate --config " + (dir / "missing_variant.cfg").string()) ==
        kExitConfigError);
  CHECK(run_cli("simulate --config " + (dir / "unknown_key.cfg").string()) == kExitConfigError);
  CHECK(run_cli("simulate --config " + (dir / "nonexistent.cfg").string()) == kExitConfigError);

  // dump-config round trip through the binary
  const int status = std::system((std::string(SFW_CLI_PATH) + " simulate --config " +
                                  (dir / "good.cfg").string() + " --dump-config > " +
                                  (dir / "dump1.cfg").string())
                                     .c_str());
  REQUIRE(WEXITSTATUS(status) == 0);
  const int status2 = std::system((std::string(SFW_CLI_PATH) + " simulate --config " +
                                   (dir / "dump1.cfg").string() + " --dump-config > " +
                                   (dir / "dump2.cfg").string())
                                      .c_str());
  REQUIRE(WEXITSTATUS(status2) == 0);
  CHECK(slurp(dir / "dump1.cfg") == slurp(dir / "dump2.cfg"));
}

}  // TEST_SUITE
