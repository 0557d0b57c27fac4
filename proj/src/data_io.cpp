#include "dyndisc/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dyndisc/rng.hpp"

namespace dyndisc {

namespace fs = std::filesystem;

void ExperimentSeries::validate() const {
  profile.validate();
  if (w_obs.size() != profile.size())
    throw std::invalid_argument("ExperimentSeries: w_obs length mismatch");
  if (!w_obs.allFinite())
    throw std::invalid_argument("ExperimentSeries: non-finite observation");
}

InputProfile make_profile(const ProfileSpec& spec) {
  if (spec.n_points < 2) throw std::invalid_argument("ProfileSpec: n_points < 2");
  InputProfile prof;
  const int n = spec.n_points;
  prof.t.resize(n);
  prof.T.resize(n);
  prof.p.resize(n);
  for (int i = 0; i < n; ++i)
    prof.t[i] = spec.duration * static_cast<double>(i) / (n - 1);
  // Elevated spike at t=0 only; linear decline across the remaining nodes.
  prof.T[0] = spec.T_spike;
  prof.p[0] = spec.p_spike;
  for (int i = 1; i < n; ++i) {
    const double frac = static_cast<double>(i - 1) / (n - 2);
    prof.T[i] = spec.T_start + frac * (spec.T_end - spec.T_start);
    prof.p[i] = spec.p_level;
  }
  prof.validate();
  return prof;
}

std::vector<InputProfile> gen_profiles(const GenConfig& cfg) {
  std::vector<InputProfile> out;
  out.reserve(cfg.p_levels.size());
  for (const double level : cfg.p_levels) {
    ProfileSpec spec = cfg.shape;
    spec.p_level = level;
    spec.p_spike = level + cfg.p_spike_delta;
    out.push_back(make_profile(spec));
  }
  return out;
}

std::vector<std::string> profile_labels(const GenConfig& cfg) {
  std::vector<std::string> labels;
  for (const double level : cfg.p_levels) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p=%g", level);
    labels.emplace_back(buf);
  }
  return labels;
}

std::vector<ExperimentSeries> gen_synthetic(const RealityParams& reality,
                                            const std::vector<InputProfile>& profiles,
                                            double noise_sd, std::uint64_t seed,
                                            const PhysicalConstants& consts,
                                            const SolverConfig& solver,
                                            bool weight_includes_z) {
  if (noise_sd < 0.0) throw std::invalid_argument("gen_synthetic: noise_sd < 0");
  Rng rng(seed);
  std::vector<ExperimentSeries> out;
  out.reserve(profiles.size());
  for (size_t i = 0; i < profiles.size(); ++i) {
    const RealitySolution sol =
        solve_reality(reality, profiles[i], consts, solver, weight_includes_z);
    if (!sol.ok)
      throw std::runtime_error("gen_synthetic: truth solver failed on profile " +
                               std::to_string(i));
    ExperimentSeries series;
    series.profile = profiles[i];
    series.w_obs = sol.w;
    for (int j = 0; j < series.w_obs.size(); ++j)
      series.w_obs[j] += noise_sd * rng.normal();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p=%g", profiles[i].p[profiles[i].size() - 1]);
    series.label = buf;
    out.push_back(std::move(series));
  }
  return out;
}

void write_series_csv(const ExperimentSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_series_csv: cannot open " + path);
  out << "time_s,temp_K,pco2_frac,weight_frac\n";
  char buf[160];
  for (int i = 0; i < series.profile.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", series.profile.t[i],
                  series.profile.T[i], series.profile.p[i], series.w_obs[i]);
    out << buf;
  }
}

namespace {

struct ParsedTable {
  Eigen::VectorXd t, T, p, w;
};

double parse_field(const std::string& field, const std::string& path, int line_no,
                   const char* name) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  double value = 0.0;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} ||
      (res.ptr != end && std::string_view(res.ptr, end - res.ptr)
                                 .find_first_not_of(" \t\r") != std::string_view::npos))
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": cannot parse " + name + " value '" + field + "'");
  return value;
}

ParsedTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "time_s,temp_K,pco2_frac,weight_frac")
    throw std::runtime_error(path + ": line 1: expected header "
                             "'time_s,temp_K,pco2_frac,weight_frac', got '" + header + "'");

  std::vector<double> t, T, p, w;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const size_t comma = line.find(',', start);
      if (f < 3 && comma == std::string::npos)
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": expected 4 comma-separated columns");
      fields[f] = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                : comma - start);
      start = comma + 1;
    }
    t.push_back(parse_field(fields[0], path, line_no, "time_s"));
    T.push_back(parse_field(fields[1], path, line_no, "temp_K"));
    p.push_back(parse_field(fields[2], path, line_no, "pco2_frac"));
    w.push_back(parse_field(fields[3], path, line_no, "weight_frac"));
    if (t.size() > 1 && !(t.back() > t[t.size() - 2]))
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": time_s not strictly increasing");
    if (!(T.back() > 0.0))
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": temp_K must be positive");
    if (p.back() < 0.0 || p.back() > 1.0)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": pco2_frac outside [0,1]");
  }
  if (t.size() < 2) throw std::runtime_error(path + ": fewer than 2 data rows");

  ParsedTable table;
  table.t = Eigen::Map<Eigen::VectorXd>(t.data(), t.size());
  table.T = Eigen::Map<Eigen::VectorXd>(T.data(), T.size());
  table.p = Eigen::Map<Eigen::VectorXd>(p.data(), p.size());
  table.w = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  return table;
}

}  // namespace

ExperimentSeries read_series_csv(const std::string& path) {
  const ParsedTable table = read_table(path);
  ExperimentSeries series;
  series.profile.t = table.t;
  series.profile.T = table.T;
  series.profile.p = table.p;
  series.w_obs = table.w;
  series.label = fs::path(path).stem().string();
  series.validate();
  return series;
}

ExperimentSeries read_tga(const std::string& path) { return read_series_csv(path); }

ExperimentSeries select_snippet(const ExperimentSeries& series, double t_lo, double t_hi,
                                int max_points, double nv_ref,
                                const PhysicalConstants& consts) {
  if (!(t_lo < t_hi)) throw std::invalid_argument("select_snippet: t_lo >= t_hi");
  const int n = series.profile.size();
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (series.profile.t[i] >= t_lo && series.profile.t[i] <= t_hi) idx.push_back(i);
  if (idx.size() < 2) throw std::invalid_argument("select_snippet: empty window");

  if (max_points > 1 && static_cast<int>(idx.size()) > max_points) {
    const int stride =
        (static_cast<int>(idx.size()) + max_points - 1) / max_points;
    std::vector<int> sub;
    for (size_t i = 0; i < idx.size(); i += stride) sub.push_back(idx[i]);
    idx = std::move(sub);
  }

  ExperimentSeries out;
  const int m = static_cast<int>(idx.size());
  out.profile.t.resize(m);
  out.profile.T.resize(m);
  out.profile.p.resize(m);
  out.w_obs.resize(m);
  const double origin = series.profile.t[idx[0]];
  for (int i = 0; i < m; ++i) {
    out.profile.t[i] = series.profile.t[idx[i]] - origin;
    out.profile.T[i] = series.profile.T[idx[i]];
    out.profile.p[i] = series.profile.p[idx[i]];
    out.w_obs[i] = series.w_obs[idx[i]];
  }
  double x0 = out.w_obs[0] * consts.rho / (consts.M * nv_ref);
  if (x0 < 0.0) x0 = 0.0;
  if (x0 > 0.49) x0 = 0.49;
  out.profile.x0 = x0;
  out.label = series.label + "_snippet";
  out.validate();
  return out;
}

void write_dataset(const std::string& dir, const std::vector<ExperimentSeries>& data,
                   const DatasetManifest& manifest) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = manifest.seed;
  j["noise_sd"] = manifest.noise_sd;
  j["theta_star"] = std::vector<double>(manifest.theta_star.data(),
                                        manifest.theta_star.data() + 9);
  nlohmann::json files = nlohmann::json::array();
  for (size_t i = 0; i < data.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "series_%02zu.csv", i);
    write_series_csv(data[i], (fs::path(dir) / buf).string());
    files.push_back({{"file", buf}, {"label", data[i].label}});
  }
  j["series"] = files;
  std::ofstream out(fs::path(dir) / "dataset_manifest.json");
  if (!out) throw std::runtime_error("write_dataset: cannot write manifest");
  out << j.dump(2) << "\n";
}

std::vector<ExperimentSeries> load_dataset(const std::string& dir,
                                           DatasetManifest* manifest) {
  std::ifstream in(fs::path(dir) / "dataset_manifest.json");
  if (!in)
    throw std::runtime_error("load_dataset: missing dataset_manifest.json in " + dir);
  nlohmann::json j;
  in >> j;
  std::vector<ExperimentSeries> data;
  DatasetManifest m;
  for (const auto& entry : j.at("series")) {
    const std::string file = entry.at("file").get<std::string>();
    ExperimentSeries series = read_series_csv((fs::path(dir) / file).string());
    series.label = entry.value("label", series.label);
    m.files.push_back(file);
    m.labels.push_back(series.label);
    data.push_back(std::move(series));
  }
  m.seed = j.value("seed", std::uint64_t{0});
  m.noise_sd = j.value("noise_sd", 0.0);
  if (j.contains("theta_star")) {
    const auto& ts = j["theta_star"];
    for (int i = 0; i < 9 && i < static_cast<int>(ts.size()); ++i)
      m.theta_star[i] = ts[i].get<double>();
  }
  if (manifest) *manifest = m;
  return data;
}

}  // namespace dyndisc
