#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dyndisc/kinetics.hpp"
#include "dyndisc/ode.hpp"

namespace dyndisc {

/// One calibration series: functional inputs plus observed weight gain.
struct ExperimentSeries {
  InputProfile profile;
  Eigen::VectorXd w_obs;
  std::string label;

  void validate() const;
};

/// Shape parameters of one synthetic input profile. The t=0 node sits at an
/// elevated temperature/pressure spike; afterwards temperature declines
/// linearly from T_start to T_end while pressure holds at p_level.
struct ProfileSpec {
  double duration = 60.0;
  int n_points = 61;
  double T_start = 380.0;
  double T_end = 320.0;
  double T_spike = 390.0;
  double p_level = 0.1;
  double p_spike = 0.12;
};

struct GenConfig {
  std::vector<double> p_levels{0.01, 0.04, 0.075, 0.10, 0.20};
  double p_spike_delta = 0.02;
  ProfileSpec shape;  // p_level/p_spike overridden per level
};

std::vector<InputProfile> gen_profiles(const GenConfig& cfg = {});
std::vector<std::string> profile_labels(const GenConfig& cfg = {});

InputProfile make_profile(const ProfileSpec& spec);

/// Reality trajectories plus iid Gaussian noise; deterministic per seed.
/// Throws std::runtime_error if the truth solve fails.
std::vector<ExperimentSeries> gen_synthetic(const RealityParams& reality,
                                            const std::vector<InputProfile>& profiles,
                                            double noise_sd, std::uint64_t seed,
                                            const PhysicalConstants& consts,
                                            const SolverConfig& solver = {},
                                            bool weight_includes_z = false);

/// CSV persistence; columns time_s, temp_K, pco2_frac, weight_frac at full
/// double precision so round trips are lossless.
void write_series_csv(const ExperimentSeries& series, const std::string& path);
ExperimentSeries read_series_csv(const std::string& path);

/// TGA-style ingest: same four headered columns, with descriptive parse
/// errors naming the offending line.
ExperimentSeries read_tga(const std::string& path);

/// Window [t_lo, t_hi], optional uniform subsampling to max_points (0 keeps
/// all), time re-origined to zero, and initial state estimated from the
/// first weight value via w0 * rho / (M * nv_ref), clamped to [0, 0.49].
ExperimentSeries select_snippet(const ExperimentSeries& series, double t_lo,
                                double t_hi, int max_points, double nv_ref,
                                const PhysicalConstants& consts);

struct DatasetManifest {
  std::vector<std::string> files;
  std::vector<std::string> labels;
  Eigen::Matrix<double, 9, 1> theta_star;
  std::uint64_t seed = 0;
  double noise_sd = 0.0;
};

void write_dataset(const std::string& dir, const std::vector<ExperimentSeries>& data,
                   const DatasetManifest& manifest);
std::vector<ExperimentSeries> load_dataset(const std::string& dir,
                                           DatasetManifest* manifest = nullptr);

}  // namespace dyndisc
