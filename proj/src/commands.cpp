#include "dyndisc/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "dyndisc/data_io.hpp"
#include "dyndisc/log.hpp"
#include "dyndisc/mcmc.hpp"
#include "dyndisc/predictive.hpp"
#include "dyndisc/reactor.hpp"
#include "dyndisc/stats.hpp"

namespace dyndisc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_digest: cannot open " + path);
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Manifest for every run: inputs/outputs with recomputable digests, written
// atomically at the end.
class ManifestWriter {
 public:
  ManifestWriter(std::string command, std::string out_dir)
      : command_(std::move(command)),
        out_dir_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {}

  void add_config(const std::string& path) {
    if (!path.empty()) configs_.push_back(path);
  }
  void add_input(const std::string& path) { inputs_[path] = file_digest(path); }
  void add_output(const std::string& path) { outputs_[path] = file_digest(path); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write() const {
    json j;
    j["schema_version"] = 1;
    j["command"] = command_;
    j["version"] = kVersion;
    j["seed"] = seed_;
    j["config_paths"] = configs_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path final_path = fs::path(out_dir_) / "run_manifest.json";
    const fs::path tmp_path = fs::path(out_dir_) / "run_manifest.json.tmp";
    {
      std::ofstream out(tmp_path);
      if (!out) throw std::runtime_error("cannot write manifest in " + out_dir_);
      out << j.dump(2) << "\n";
    }
    fs::rename(tmp_path, final_path);
  }

 private:
  std::string command_;
  std::string out_dir_;
  std::vector<std::string> configs_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::uint64_t seed_ = 0;
  std::chrono::steady_clock::time_point start_;
};

struct TruthConfig {
  Eigen::Matrix<double, 9, 1> theta_star;
  double noise_sd = 1e-4;
  std::uint64_t seed = 20260801;
  GenConfig gen;
  bool weight_includes_z = false;
  int substeps = 4;

  TruthConfig() {
    theta_star << -88671.0, -67.056, 35148.0, 141.22, 2000.0, -32055.0, -87.0,
        53594.0, 25657.0;
  }

  static TruthConfig from_json(const json& j) {
    TruthConfig c;
    if (j.contains("theta_star")) {
      const auto& ts = j["theta_star"];
      if (ts.size() != 9) throw ConfigError("truth config: theta_star must have 9 entries");
      for (int i = 0; i < 9; ++i) c.theta_star[i] = ts[i].get<double>();
    }
    c.noise_sd = j.value("noise_sd", c.noise_sd);
    c.seed = j.value("seed", c.seed);
    c.weight_includes_z = j.value("reality_weight_includes_z", c.weight_includes_z);
    c.substeps = j.value("substeps", c.substeps);
    if (j.contains("p_levels")) c.gen.p_levels = j["p_levels"].get<std::vector<double>>();
    if (j.contains("profile")) {
      const auto& p = j["profile"];
      c.gen.shape.duration = p.value("duration", c.gen.shape.duration);
      c.gen.shape.n_points = p.value("n_points", c.gen.shape.n_points);
      c.gen.shape.T_start = p.value("T_start", c.gen.shape.T_start);
      c.gen.shape.T_end = p.value("T_end", c.gen.shape.T_end);
      c.gen.shape.T_spike = p.value("T_spike", c.gen.shape.T_spike);
      c.gen.p_spike_delta = p.value("p_spike_delta", c.gen.p_spike_delta);
    }
    return c;
  }
};

struct CalibrateConfig {
  McmcConfig mcmc;
  DiscrepancyLayoutConfig layout;
  int kl_grid_size = 512;
  int kl_n_basis = 25;
  SolverConfig solver;

  CalibrateConfig() {
    // Desk-scale defaults; larger runs go through the config file.
    mcmc.n_iter = 10000;
    mcmc.n_burn = 5000;
  }

  static CalibrateConfig from_json(const json& j) {
    CalibrateConfig c;
    if (j.contains("mcmc")) c.mcmc = McmcConfig::from_json(j["mcmc"]);
    if (j.contains("layout")) {
      const auto& l = j["layout"];
      c.layout.n_main = l.value("n_main", c.layout.n_main);
      c.layout.n_interaction = l.value("n_interaction", c.layout.n_interaction);
      c.layout.include_threeway = l.value("include_threeway", c.layout.include_threeway);
      c.layout.n_threeway = l.value("n_threeway", c.layout.n_threeway);
      c.kl_grid_size = l.value("grid_size", c.kl_grid_size);
      c.kl_n_basis = l.value("n_basis", c.kl_n_basis);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      c.solver.substeps = s.value("substeps", c.solver.substeps);
      c.solver.newton_tol = s.value("newton_tol", c.solver.newton_tol);
      c.solver.max_newton = s.value("max_newton", c.solver.max_newton);
    }
    return c;
  }
};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

WorkerPool make_pool(const CommonOptions& common) {
  const int n = common.workers > 0 ? common.workers : WorkerPool::default_workers();
  return WorkerPool(n);
}

// Interval summary used by the table writers: HPD when the sample is large
// enough for it, percentile interval otherwise.
std::pair<double, double> interval_95(const std::vector<double>& samples) {
  if (samples.size() >= 100) return hpd_interval(samples, 0.95);
  return {percentile(samples, 0.025), percentile(samples, 0.975)};
}

std::string summary_csv_string(const Chain& chain,
                               const std::vector<std::string>& components) {
  if (chain.samples.empty()) throw std::runtime_error("summary: empty chain");
  const int n = static_cast<int>(chain.samples.size());
  std::string csv = "parameter,mean,hpd_lo,hpd_hi\n";
  const char* theta_names[5] = {"dH", "dS", "dHk", "gamma", "nv"};
  std::vector<double> buf(n);
  for (int k = 0; k < 5; ++k) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      buf[i] = chain.samples[i].theta[k];
      mean += buf[i];
    }
    mean /= n;
    const auto [lo, hi] = interval_95(buf);
    csv += std::string(theta_names[k]) + "," + format_g(mean) + "," + format_g(lo) +
           "," + format_g(hi) + "\n";
  }
  const int n_comp = static_cast<int>(chain.samples[0].tau2.size());
  for (int j = 0; j < n_comp; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      buf[i] = chain.samples[i].tau2[j];
      mean += buf[i];
    }
    mean /= n;
    const auto [lo, hi] = interval_95(buf);
    const std::string name =
        j < static_cast<int>(components.size()) ? "tau2[" + components[j] + "]"
                                                : "tau2[" + std::to_string(j) + "]";
    csv += name + "," + format_g(mean) + "," + format_g(lo) + "," + format_g(hi) + "\n";
  }
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    buf[i] = chain.samples[i].sigma2;
    mean += buf[i];
  }
  mean /= n;
  const auto [lo, hi] = interval_95(buf);
  csv += std::string("sigma2,") + format_g(mean) + "," + format_g(lo) + "," +
         format_g(hi) + "\n";
  return csv;
}

void write_summary_csv(const Chain& chain, const std::vector<std::string>& components,
                       const std::string& path) {
  write_text_file(path, summary_csv_string(chain, components));
}

DiscrepancyLayoutConfig layout_config_from_json(const json& l) {
  DiscrepancyLayoutConfig cfg;
  cfg.n_main = l.value("n_main", cfg.n_main);
  cfg.n_interaction = l.value("n_interaction", cfg.n_interaction);
  cfg.include_threeway = l.value("include_threeway", cfg.include_threeway);
  cfg.n_threeway = l.value("n_threeway", cfg.n_threeway);
  return cfg;
}

json layout_config_to_json(const DiscrepancyLayoutConfig& cfg, int grid_size,
                           int n_basis) {
  return json{{"n_main", cfg.n_main},
              {"n_interaction", cfg.n_interaction},
              {"include_threeway", cfg.include_threeway},
              {"n_threeway", cfg.n_threeway},
              {"grid_size", grid_size},
              {"n_basis", n_basis}};
}

// Rebuild the discrepancy layout a chain was produced with: prefer the basis
// file referenced by the header (bitwise reproducibility), else reconstruct.
DiscrepancyModel layout_from_chain_header(const json& header,
                                          const std::string& chain_path) {
  if (!header.contains("layout"))
    throw ConfigError("chain header carries no layout section");
  const json& l = header["layout"];
  const int grid_size = l.value("grid_size", 512);
  const int n_basis = l.value("n_basis", 25);
  KLBasis basis;
  bool loaded = false;
  if (header.contains("basis_file")) {
    const fs::path candidate =
        fs::path(chain_path).parent_path() / header["basis_file"].get<std::string>();
    if (fs::exists(candidate)) {
      basis = load_kl_basis(candidate.string());
      loaded = true;
    }
  }
  if (!loaded) basis = build_kl_basis(grid_size, n_basis);
  return build_discrepancy_layout(basis, layout_config_from_json(l));
}

}  // namespace

int cmd_gen_data(const GenDataOptions& opts) {
  if (opts.out_dir.empty()) throw ConfigError("gen-data: --out is required");
  TruthConfig cfg;
  if (!opts.config_path.empty())
    cfg = TruthConfig::from_json(read_json_file(opts.config_path));
  if (opts.common.seed) cfg.seed = *opts.common.seed;

  fs::create_directories(opts.out_dir);
  ManifestWriter manifest("gen-data", opts.out_dir);
  manifest.add_config(opts.config_path);
  manifest.set_seed(cfg.seed);
  if (!opts.config_path.empty()) manifest.add_input(opts.config_path);

  const PhysicalConstants consts;
  SolverConfig solver;
  solver.substeps = cfg.substeps;
  const std::vector<InputProfile> profiles = gen_profiles(cfg.gen);
  const RealityParams reality = RealityParams::from_vector(cfg.theta_star);
  const std::vector<ExperimentSeries> data = gen_synthetic(
      reality, profiles, cfg.noise_sd, cfg.seed, consts, solver, cfg.weight_includes_z);

  DatasetManifest dm;
  dm.theta_star = cfg.theta_star;
  dm.seed = cfg.seed;
  dm.noise_sd = cfg.noise_sd;
  write_dataset(opts.out_dir, data, dm);

  int total_points = 0;
  for (const auto& s : data) total_points += s.profile.size();
  log_info("gen-data: wrote %zu series (%d points) to %s", data.size(), total_points,
           opts.out_dir.c_str());

  for (const auto& entry : fs::directory_iterator(opts.out_dir))
    if (entry.path().extension() == ".csv" ||
        entry.path().filename() == "dataset_manifest.json")
      manifest.add_output(entry.path().string());
  manifest.write();
  return 0;
}

int cmd_calibrate(const CalibrateOptions& opts) {
  if (opts.data_dir.empty()) throw ConfigError("calibrate: data directory is required");
  if (opts.out_dir.empty()) throw ConfigError("calibrate: --out is required");

  CalibrateConfig cfg;
  if (!opts.mcmc_config_path.empty())
    cfg = CalibrateConfig::from_json(read_json_file(opts.mcmc_config_path));
  if (opts.common.seed) cfg.mcmc.seed = *opts.common.seed;
  PriorSpec prior = PriorSpec::defaults();
  if (!opts.prior_config_path.empty())
    prior = PriorSpec::from_json(read_json_file(opts.prior_config_path));

  fs::create_directories(opts.out_dir);
  ManifestWriter manifest("calibrate", opts.out_dir);
  manifest.add_config(opts.mcmc_config_path);
  manifest.add_config(opts.prior_config_path);
  manifest.set_seed(cfg.mcmc.seed);
  if (!opts.mcmc_config_path.empty()) manifest.add_input(opts.mcmc_config_path);
  if (!opts.prior_config_path.empty()) manifest.add_input(opts.prior_config_path);

  const std::vector<ExperimentSeries> data = load_dataset(opts.data_dir);
  manifest.add_input((fs::path(opts.data_dir) / "dataset_manifest.json").string());

  log_info("calibrate: %zu series, building KL basis (G=%d, L=%d)", data.size(),
           cfg.kl_grid_size, cfg.kl_n_basis);
  const KLBasis basis = build_kl_basis(cfg.kl_grid_size, cfg.kl_n_basis);
  const std::string basis_path = (fs::path(opts.out_dir) / "kl_basis.json").string();
  save_kl_basis(basis, basis_path);
  const DiscrepancyModel layout = build_discrepancy_layout(basis, cfg.layout);

  WorkerPool pool = make_pool(opts.common);
  const PhysicalConstants consts;
  log_info("calibrate: running %d iterations (%d burn-in, %d blocks, %d workers)",
           cfg.mcmc.n_iter, cfg.mcmc.n_burn, 3 + layout.n_components(), pool.size());
  const Chain chain =
      run_mcmc(data, prior, layout, cfg.mcmc, consts, cfg.solver, &pool);

  std::vector<std::string> components;
  for (int j = 0; j < layout.n_components(); ++j)
    components.push_back(layout.component_name(j));

  json extra;
  extra["layout"] = layout_config_to_json(cfg.layout, cfg.kl_grid_size, cfg.kl_n_basis);
  extra["basis_file"] = "kl_basis.json";
  extra["prior"] = prior.to_json();
  extra["components"] = components;
  extra["data_digest"] =
      file_digest((fs::path(opts.data_dir) / "dataset_manifest.json").string());
  extra["solver"] = {{"substeps", cfg.solver.substeps},
                     {"newton_tol", cfg.solver.newton_tol},
                     {"max_newton", cfg.solver.max_newton}};

  const std::string chain_path = (fs::path(opts.out_dir) / "chain.ndjson").string();
  save_chain(chain, chain_path, extra);
  const std::string summary_path = (fs::path(opts.out_dir) / "summary.csv").string();
  write_summary_csv(chain, components, summary_path);

  json report;
  report["n_samples"] = chain.samples.size();
  report["solver_failures"] = chain.solver_failures;
  json rates = json::object();
  for (size_t b = 0; b < chain.block_names.size(); ++b)
    rates[chain.block_names[b]] =
        chain.proposals[b] > 0
            ? static_cast<double>(chain.accepts[b]) / chain.proposals[b]
            : 0.0;
  report["acceptance_rates"] = rates;
  const std::string report_path = (fs::path(opts.out_dir) / "report.json").string();
  write_text_file(report_path, report.dump(2) + "\n");

  manifest.add_output(chain_path);
  manifest.add_output(basis_path);
  manifest.add_output(summary_path);
  manifest.add_output(report_path);
  manifest.write();
  log_info("calibrate: %zu samples written to %s", chain.samples.size(),
           chain_path.c_str());
  return 0;
}

int cmd_predict(const PredictOptions& opts) {
  if (opts.chain_path.empty() || opts.data_dir.empty() || opts.out_dir.empty())
    throw ConfigError("predict: chain, data directory and --out are required");
  if (opts.n_draws < 1) throw ConfigError("predict: n_draws must be >= 1");

  fs::create_directories(opts.out_dir);
  ManifestWriter manifest("predict", opts.out_dir);
  manifest.add_input(opts.chain_path);

  json header;
  const Chain chain = load_chain(opts.chain_path, &header);
  if (static_cast<int>(chain.samples.size()) < opts.n_draws)
    throw ConfigError("predict: n_draws exceeds chain length");
  const DiscrepancyModel layout = layout_from_chain_header(header, opts.chain_path);
  const std::vector<ExperimentSeries> data = load_dataset(opts.data_dir);
  manifest.add_input((fs::path(opts.data_dir) / "dataset_manifest.json").string());

  SolverConfig solver;
  if (header.contains("solver")) {
    solver.substeps = header["solver"].value("substeps", solver.substeps);
    solver.newton_tol = header["solver"].value("newton_tol", solver.newton_tol);
    solver.max_newton = header["solver"].value("max_newton", solver.max_newton);
  }

  WorkerPool pool = make_pool(opts.common);
  const PhysicalConstants consts;
  const std::vector<PredictiveBand> bands = posterior_predictive(
      chain, data, layout, opts.n_draws, consts, solver, &pool);

  for (size_t s = 0; s < bands.size(); ++s) {
    const PredictiveBand& band = bands[s];
    std::string csv = "t,y_obs,mean,lo,hi,eta_lo,eta_hi";
    for (int k = 0; k < band.eta_draws.cols(); ++k)
      csv += ",draw_" + std::to_string(k + 1);
    csv += "\n";
    for (int i = 0; i < band.t.size(); ++i) {
      csv += format_g(band.t[i]) + "," + format_g(band.y_obs[i]) + "," +
             format_g(band.mean[i]) + "," + format_g(band.lo[i]) + "," +
             format_g(band.hi[i]) + "," + format_g(band.eta_lo[i]) + "," +
             format_g(band.eta_hi[i]);
      for (int k = 0; k < band.eta_draws.cols(); ++k)
        csv += "," + format_g(band.eta_draws(i, k));
      csv += "\n";
    }
    char name[64];
    std::snprintf(name, sizeof(name), "pred_%02zu.csv", s);
    const std::string path = (fs::path(opts.out_dir) / name).string();
    write_text_file(path, csv);
    manifest.add_output(path);
    if (band.n_dropped > 0)
      log_info("predict: profile %zu dropped %d failed draws", s, band.n_dropped);
  }
  manifest.write();
  return 0;
}

int cmd_upscale(const UpscaleOptions& opts) {
  if (opts.chain_path.empty() || opts.out_dir.empty())
    throw ConfigError("upscale: chain and --out are required");
  if (opts.n_samples < 1) throw ConfigError("upscale: n_samples must be >= 1");

  fs::create_directories(opts.out_dir);
  ManifestWriter manifest("upscale", opts.out_dir);
  manifest.add_input(opts.chain_path);
  manifest.add_config(opts.reactor_config_path);

  ReactorConfig rcfg;
  if (!opts.reactor_config_path.empty()) {
    rcfg = ReactorConfig::load(opts.reactor_config_path);
    manifest.add_input(opts.reactor_config_path);
  }

  json header;
  const Chain chain = load_chain(opts.chain_path, &header);
  if (static_cast<int>(chain.samples.size()) < opts.n_samples)
    throw ConfigError("upscale: n_samples exceeds chain length");
  const DiscrepancyModel layout = layout_from_chain_header(header, opts.chain_path);

  WorkerPool pool = make_pool(opts.common);
  const PhysicalConstants consts;
  const SolverConfig solver;
  log_info("upscale: propagating %d posterior draws through the bed", opts.n_samples);
  const PropagateResult result =
      propagate(chain, opts.n_samples, rcfg, consts, layout, solver, &pool);

  std::string captures_csv = "draw,capture_fraction,clamp_warnings\n";
  for (size_t i = 0; i < result.captures.size(); ++i)
    captures_csv += std::to_string(result.capture_draws[i]) + "," +
                    format_g(result.captures[i]) + "," +
                    std::to_string(result.clamp_warnings[i]) + "\n";
  const std::string captures_path = (fs::path(opts.out_dir) / "captures.csv").string();
  write_text_file(captures_path, captures_csv);

  std::string bands_csv = "z,t,T_lo,T_med,T_hi,p_lo,p_med,p_hi\n";
  for (int i = 0; i < result.z.size(); ++i) {
    bands_csv += format_g(result.z[i]) + "," + format_g(result.t[i]) + "," +
                 format_g(result.T_lo[i]) + "," + format_g(result.T_med[i]) + "," +
                 format_g(result.T_hi[i]) + "," + format_g(result.p_lo[i]) + "," +
                 format_g(result.p_med[i]) + "," + format_g(result.p_hi[i]) + "\n";
  }
  const std::string bands_path =
      (fs::path(opts.out_dir) / "condition_bands.csv").string();
  write_text_file(bands_path, bands_csv);

  json summary;
  summary["schema_version"] = 1;
  summary["n_requested"] = result.n_requested;
  summary["n_converged"] = result.captures.size();
  summary["n_failed"] = result.n_failed;
  summary["capture_mean"] = result.capture_mean;
  summary["interval_lo"] = result.interval_lo;
  summary["interval_hi"] = result.interval_hi;
  if (result.hpd) {
    summary["hpd_lo"] = result.hpd->first;
    summary["hpd_hi"] = result.hpd->second;
  }

  if (!opts.truth_config_path.empty()) {
    const TruthConfig truth =
        TruthConfig::from_json(read_json_file(opts.truth_config_path));
    manifest.add_input(opts.truth_config_path);
    const ReactorSolution reality_sol =
        reality_reactor(RealityParams::from_vector(truth.theta_star), rcfg, consts);
    if (!reality_sol.converged)
      throw std::runtime_error("upscale: reality kinetics failed to converge in the bed");
    summary["reality_capture"] = reality_sol.capture_fraction;
    log_info("upscale: reality capture fraction %.4f", reality_sol.capture_fraction);
  }

  const std::string summary_path =
      (fs::path(opts.out_dir) / "upscale_summary.json").string();
  write_text_file(summary_path, summary.dump(2) + "\n");

  log_info("upscale: %zu converged draws, %d failures, capture mean %.4f [%0.4f, %0.4f]",
           result.captures.size(), result.n_failed, result.capture_mean,
           result.interval_lo, result.interval_hi);

  manifest.add_output(captures_path);
  manifest.add_output(bands_path);
  manifest.add_output(summary_path);
  manifest.write();
  return 0;
}

int cmd_summarize(const SummarizeOptions& opts) {
  if (opts.chain_path.empty()) throw ConfigError("summarize: chain path is required");
  json header;
  const Chain chain = load_chain(opts.chain_path, &header);
  std::vector<std::string> components;
  if (header.contains("components"))
    components = header["components"].get<std::vector<std::string>>();

  const std::string csv = summary_csv_string(chain, components);
  if (opts.out_path.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text_file(opts.out_path, csv);
  return 0;
}

}  // namespace dyndisc
