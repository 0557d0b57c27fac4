#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace dyndisc {

inline constexpr const char* kVersion = "0.1.0";

/// Configuration or usage problems map to exit code 2, numerical aborts to 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  int workers = 0;  // 0 = auto
};

struct GenDataOptions {
  std::string config_path;  // empty = built-in defaults
  std::string out_dir;
  CommonOptions common;
};

struct CalibrateOptions {
  std::string data_dir;
  std::string mcmc_config_path;   // empty = desk-scale defaults
  std::string prior_config_path;  // empty = built-in priors
  std::string out_dir;
  CommonOptions common;
};

struct PredictOptions {
  std::string chain_path;
  std::string data_dir;
  int n_draws = 30;
  std::string out_dir;
  CommonOptions common;
};

struct UpscaleOptions {
  std::string chain_path;
  std::string reactor_config_path;  // empty = built-in defaults
  int n_samples = 200;
  std::string out_dir;
  std::string truth_config_path;  // non-empty: also run the reality kinetics
  CommonOptions common;
};

struct SummarizeOptions {
  std::string chain_path;
  std::string out_path;  // empty = stdout
};

int cmd_gen_data(const GenDataOptions& opts);
int cmd_calibrate(const CalibrateOptions& opts);
int cmd_predict(const PredictOptions& opts);
int cmd_upscale(const UpscaleOptions& opts);
int cmd_summarize(const SummarizeOptions& opts);

/// FNV-1a 64-bit content digest, hex-encoded; recomputable by anyone.
std::string file_digest(const std::string& path);

}  // namespace dyndisc
