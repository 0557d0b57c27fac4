#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dyndisc/commands.hpp"
#include "dyndisc/data_io.hpp"
#include "dyndisc/mcmc.hpp"

using namespace dyndisc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Truth/mcmc configs small enough for command-level tests.
std::string write_small_truth(const fs::path& dir) {
  const std::string path = (dir / "truth.json").string();
  std::ofstream out(path);
  out << R"({
    "schema_version": 1,
    "noise_sd": 1e-4,
    "seed": 11,
    "p_levels": [0.04, 0.2],
    "profile": {"n_points": 13}
  })";
  return path;
}

std::string write_small_mcmc(const fs::path& dir, int n_iter, int n_burn,
                             std::uint64_t seed) {
  const std::string path = (dir / "mcmc.json").string();
  std::ofstream out(path);
  out << R"({"schema_version": 1,
    "mcmc": {"n_iter": )"
      << n_iter << R"(, "n_burn": )" << n_burn << R"(, "seed": )" << seed << R"(},
    "layout": {"grid_size": 128, "n_basis": 6, "n_main": 6, "n_interaction": 6},
    "solver": {"substeps": 4}})";
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("gen-data: outputs, dataset shape, and seeded reproducibility") {
  const fs::path root = temp_dir("dyndisc_cmd_gen");
  GenDataOptions opts;
  opts.config_path = write_small_truth(root);
  opts.out_dir = (root / "data").string();
  CHECK(cmd_gen_data(opts) == 0);

  CHECK(fs::exists(root / "data" / "dataset_manifest.json"));
  CHECK(fs::exists(root / "data" / "run_manifest.json"));
  const auto data = load_dataset(opts.out_dir);
  REQUIRE(data.size() == 2);
  CHECK(data[0].profile.size() == 13);

  // Same seed, byte-identical dataset.
  GenDataOptions opts2 = opts;
  opts2.out_dir = (root / "data2").string();
  CHECK(cmd_gen_data(opts2) == 0);
  for (const char* name : {"series_00.csv", "series_01.csv"})
    CHECK(slurp(root / "data" / name) == slurp(root / "data2" / name));

  // Manifest digests recomputable.
  nlohmann::json manifest;
  std::ifstream(root / "data" / "run_manifest.json") >> manifest;
  for (const auto& [path, digest] : manifest["outputs"].items())
    CHECK(file_digest(path) == digest.get<std::string>());

  // Default config (no --config) also runs, producing the full 5x61 dataset.
  GenDataOptions defaults;
  defaults.out_dir = (root / "data_default").string();
  CHECK(cmd_gen_data(defaults) == 0);
  const auto full = load_dataset(defaults.out_dir);
  CHECK(full.size() == 5);
  int points = 0;
  for (const auto& s : full) points += s.profile.size();
  CHECK(points == 305);

  fs::remove_all(root);
}

TEST_CASE("calibrate -> summarize -> predict -> upscale pipeline") {
  const fs::path root = temp_dir("dyndisc_cmd_pipe");
  GenDataOptions gen;
  gen.config_path = write_small_truth(root);
  gen.out_dir = (root / "data").string();
  REQUIRE(cmd_gen_data(gen) == 0);

  CalibrateOptions cal;
  cal.data_dir = gen.out_dir;
  cal.mcmc_config_path = write_small_mcmc(root, 120, 20, 5);
  cal.out_dir = (root / "run").string();
  CHECK(cmd_calibrate(cal) == 0);

  const fs::path chain_path = root / "run" / "chain.ndjson";
  REQUIRE(fs::exists(chain_path));
  CHECK(fs::exists(root / "run" / "kl_basis.json"));
  CHECK(fs::exists(root / "run" / "report.json"));

  // Summary CSV: 5 theta rows + 9 tau2 rows + sigma2.
  const std::string summary = slurp(root / "run" / "summary.csv");
  CHECK(summary.find("parameter,mean,hpd_lo,hpd_hi") == 0);
  CHECK(summary.find("\ndH,") != std::string::npos);
  CHECK(summary.find("\nnv,") != std::string::npos);
  CHECK(summary.find("tau2[E:p]") != std::string::npos);
  CHECK(summary.find("tau2[K:p*T]") != std::string::npos);
  CHECK(summary.find("\nsigma2,") != std::string::npos);
  int lines = 0;
  for (const char c : summary)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 5 + 9 + 1);

  SummarizeOptions sum;
  sum.chain_path = chain_path.string();
  sum.out_path = (root / "summary2.csv").string();
  CHECK(cmd_summarize(sum) == 0);
  CHECK(slurp(sum.out_path) == summary);

  PredictOptions pred;
  pred.chain_path = chain_path.string();
  pred.data_dir = gen.out_dir;
  pred.n_draws = 12;
  pred.out_dir = (root / "pred").string();
  CHECK(cmd_predict(pred) == 0);
  const std::string csv = slurp(root / "pred" / "pred_00.csv");
  CHECK(csv.find("t,y_obs,mean,lo,hi,eta_lo,eta_hi,draw_1,") == 0);
  CHECK(csv.find(",draw_12\n") != std::string::npos);

  UpscaleOptions up;
  up.chain_path = chain_path.string();
  up.n_samples = 20;
  up.truth_config_path = gen.config_path;
  up.out_dir = (root / "up").string();
  CHECK(cmd_upscale(up) == 0);
  nlohmann::json summary_json;
  std::ifstream(root / "up" / "upscale_summary.json") >> summary_json;
  CHECK(summary_json["n_requested"] == 20);
  CHECK(summary_json.contains("reality_capture"));
  CHECK(fs::exists(root / "up" / "captures.csv"));
  CHECK(fs::exists(root / "up" / "condition_bands.csv"));

  fs::remove_all(root);
}

TEST_CASE("CLI binary: exit codes and a gen-data round trip") {
  const fs::path root = temp_dir("dyndisc_cli_smoke");
  const std::string cli = DYNDISC_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int status =
        std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("gen-data --config /nonexistent.json --out " +
            (root / "x").string()) == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("--help") == 0);

  const std::string truth = write_small_truth(root);
  CHECK(run("gen-data --config " + truth + " --out " + (root / "d").string()) == 0);
  CHECK(fs::exists(root / "d" / "dataset_manifest.json"));
  const auto data = load_dataset((root / "d").string());
  CHECK(data.size() == 2);
  fs::remove_all(root);
}

TEST_CASE("usage and config errors raise ConfigError") {
  GenDataOptions gen;
  CHECK_THROWS_AS(cmd_gen_data(gen), ConfigError);  // missing out dir

  const fs::path root = temp_dir("dyndisc_cmd_err");
  GenDataOptions bad;
  bad.out_dir = (root / "x").string();
  bad.config_path = (root / "missing.json").string();
  CHECK_THROWS_AS(cmd_gen_data(bad), ConfigError);

  std::ofstream(root / "broken.json") << "{ not json";
  bad.config_path = (root / "broken.json").string();
  CHECK_THROWS_AS(cmd_gen_data(bad), ConfigError);

  PredictOptions pred;
  CHECK_THROWS_AS(cmd_predict(pred), ConfigError);
  fs::remove_all(root);
}
