#include "dyndisc/mcmc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace dyndisc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void McmcConfig::validate() const {
  if (n_iter < 1) throw std::invalid_argument("McmcConfig: n_iter must be >= 1");
  if (n_burn < 0 || n_burn >= n_iter)
    throw std::invalid_argument("McmcConfig: require 0 <= n_burn < n_iter");
  if (thin < 1) throw std::invalid_argument("McmcConfig: thin must be >= 1");
  if (!(std::abs(rho_prop) < 1.0))
    throw std::invalid_argument("McmcConfig: |rho_prop| must be < 1");
  for (const double s : {scale_dH, scale_dS, scale_dHk, scale_gamma, scale_nv, scale_beta})
    if (!(s > 0.0)) throw std::invalid_argument("McmcConfig: proposal scales must be > 0");
}

nlohmann::json McmcConfig::to_json() const {
  return nlohmann::json{{"n_iter", n_iter},
                        {"n_burn", n_burn},
                        {"thin", thin},
                        {"seed", seed},
                        {"rho_prop", rho_prop},
                        {"scale_dH", scale_dH},
                        {"scale_dS", scale_dS},
                        {"scale_dHk", scale_dHk},
                        {"scale_gamma", scale_gamma},
                        {"scale_nv", scale_nv},
                        {"scale_beta", scale_beta},
                        {"adapt", adapt},
                        {"target_accept", target_accept},
                        {"abort_window", abort_window},
                        {"abort_fail_frac", abort_fail_frac}};
}

McmcConfig McmcConfig::from_json(const nlohmann::json& j) {
  McmcConfig c;
  c.n_iter = j.value("n_iter", c.n_iter);
  c.n_burn = j.value("n_burn", c.n_burn);
  c.thin = j.value("thin", c.thin);
  c.seed = j.value("seed", c.seed);
  c.rho_prop = j.value("rho_prop", c.rho_prop);
  c.scale_dH = j.value("scale_dH", c.scale_dH);
  c.scale_dS = j.value("scale_dS", c.scale_dS);
  c.scale_dHk = j.value("scale_dHk", c.scale_dHk);
  c.scale_gamma = j.value("scale_gamma", c.scale_gamma);
  c.scale_nv = j.value("scale_nv", c.scale_nv);
  c.scale_beta = j.value("scale_beta", c.scale_beta);
  c.adapt = j.value("adapt", c.adapt);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.abort_window = j.value("abort_window", c.abort_window);
  c.abort_fail_frac = j.value("abort_fail_frac", c.abort_fail_frac);
  c.validate();
  return c;
}

IgParams tau2_posterior_params(const Eigen::VectorXd& beta_j,
                               const InvGammaPrior& prior) {
  return {prior.shape + 0.5 * beta_j.size(), prior.scale + 0.5 * beta_j.squaredNorm()};
}

IgParams sigma2_posterior_params(double residual_ss, int n, const InvGammaPrior& prior) {
  if (residual_ss < 0.0)
    throw std::invalid_argument("sigma2_posterior_params: negative residual_ss");
  return {prior.shape + 0.5 * n, prior.scale + 0.5 * residual_ss};
}

double gibbs_update_tau2(const Eigen::VectorXd& beta_j, const InvGammaPrior& prior,
                         Rng& rng) {
  const IgParams post = tau2_posterior_params(beta_j, prior);
  return rng.inv_gamma(post.shape, post.scale);
}

double gibbs_update_sigma2(double residual_ss, int n, const InvGammaPrior& prior,
                           Rng& rng) {
  const IgParams post = sigma2_posterior_params(residual_ss, n, prior);
  return rng.inv_gamma(post.shape, post.scale);
}

double mh_step(Eigen::VectorXd& par, double& lp, const std::vector<int>& idx,
               const Eigen::MatrixXd& step_dirs, double scale,
               const std::function<double(const Eigen::VectorXd&)>& log_target,
               Rng& rng, bool& accepted) {
  const int dim = static_cast<int>(idx.size());
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  const Eigen::VectorXd step = step_dirs * (scale * z);

  Eigen::VectorXd proposal = par;
  for (int i = 0; i < dim; ++i) proposal[idx[i]] += step[i];

  const double lp_new = log_target(proposal);
  double alpha = 0.0;
  if (lp_new > kNegInf) {
    const double diff = lp_new - lp;
    alpha = diff >= 0.0 ? 1.0 : std::exp(diff);
  }
  accepted = rng.uniform() < alpha;
  if (accepted) {
    par.swap(proposal);
    lp = lp_new;
  }
  return alpha;
}

void adapt_scale(double& log_scale, double accept_prob, long adapt_count,
                 double target_accept) {
  const double gain = std::pow(static_cast<double>(adapt_count) + 1.0, -0.7);
  log_scale += gain * (accept_prob - target_accept);
  if (log_scale > 12.0) log_scale = 12.0;
  if (log_scale < -12.0) log_scale = -12.0;
}

namespace {

struct Block {
  std::string name;
  std::vector<int> idx;        // coordinates of the flat (theta, beta) state
  Eigen::MatrixXd step_dirs;   // base proposal directions
  double log_scale = 0.0;
  long accepts = 0;
  long proposals = 0;
  long adapt_count = 0;
  int component = -1;          // discrepancy component index for beta blocks
};

SorbentParams params_from_state(const Eigen::VectorXd& state) {
  SorbentParams p;
  p.dH = state[0];
  p.dS = state[1];
  p.dHk = state[2];
  p.gamma = state[3];
  p.nv = state[4];
  return p;
}

}  // namespace

Chain run_mcmc(const std::vector<ExperimentSeries>& data, const PriorSpec& prior,
               const DiscrepancyModel& layout, const McmcConfig& cfg,
               const PhysicalConstants& consts, const SolverConfig& solver,
               WorkerPool* pool) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("run_mcmc: need at least one series");

  const int n_beta = layout.n_beta();
  const int n_comp = layout.n_components();
  const int n_state = 5 + n_beta;

  LikelihoodEvaluator evaluator(data, consts, solver, pool);
  const int n_obs = evaluator.n_points();

  // Working copy of the model whose beta/tau2 the sampler owns.
  DiscrepancyModel model = layout;

  Eigen::VectorXd state(n_state);
  const SorbentParams start = prior_median_params(prior);
  state.head(5) = start.as_vector();
  state.tail(n_beta).setZero();

  Eigen::VectorXd tau2(n_comp);
  const double tau2_median = inv_gamma_median(prior.tau2);
  tau2.setConstant(tau2_median);
  double sigma2 = inv_gamma_median(prior.sigma2);

  // Correlated bivariate proposal directions for the theta pairs.
  const double rho = cfg.rho_prop;
  auto pair_dirs = [&](double s1, double s2) {
    Eigen::MatrixXd dirs(2, 2);
    dirs << s1, 0.0, rho * s2, std::sqrt(1.0 - rho * rho) * s2;
    return dirs;
  };

  std::vector<Block> blocks;
  blocks.push_back({"dH,dS", {0, 1}, pair_dirs(cfg.scale_dH, cfg.scale_dS)});
  blocks.push_back({"dHk,gamma", {2, 3}, pair_dirs(cfg.scale_dHk, cfg.scale_gamma)});
  blocks.push_back({"nv", {4}, Eigen::MatrixXd::Constant(1, 1, cfg.scale_nv)});
  for (int j = 0; j < n_comp; ++j) {
    Block b;
    b.name = "beta[" + layout.component_name(j) + "]";
    const int offset = layout.component_offset(j);
    const int size = layout.component_size(j);
    for (int l = 0; l < size; ++l) b.idx.push_back(5 + offset + l);
    b.step_dirs = Eigen::MatrixXd::Identity(size, size) * cfg.scale_beta;
    b.component = j;
    blocks.push_back(std::move(b));
  }

  Rng rng(cfg.seed);

  long solver_failures = 0;
  bool fail_this_iter = false;

  // Log target over (theta, beta) with tau2/sigma2 held at current values.
  // Side channel: stash the residual SS of the last successful evaluation so
  // Gibbs updates reuse it instead of re-solving.
  double ss_cache = 0.0;
  auto log_target = [&](const Eigen::VectorXd& s) {
    const SorbentParams p = params_from_state(s);
    const double lp_theta = log_prior_theta(p, prior);
    if (lp_theta == kNegInf) return kNegInf;
    model.beta = s.tail(n_beta);
    model.tau2 = tau2;
    const double lp_beta = log_prior_beta(model.beta, model, tau2);
    const auto res = evaluator.residual_ss(p, &model);
    if (!res.ok) {
      fail_this_iter = true;
      ++solver_failures;
      return kNegInf;
    }
    ss_cache = res.ss;
    return gaussian_loglik(res.ss, n_obs, sigma2) + lp_theta + lp_beta;
  };

  double lp = log_target(state);
  double ss = lp > kNegInf ? ss_cache : -1.0;
  if (lp == kNegInf)
    throw McmcAbort("run_mcmc: solver failed at the prior-median starting point");

  Chain chain;
  chain.config = cfg;
  chain.seed = cfg.seed;
  chain.n_beta = n_beta;
  chain.n_components = n_comp;
  for (const Block& b : blocks) chain.block_names.push_back(b.name);
  chain.samples.reserve((cfg.n_iter - cfg.n_burn + cfg.thin - 1) / cfg.thin);

  std::vector<char> fail_window(cfg.abort_window, 0);
  long window_fails = 0;

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    fail_this_iter = false;

    for (Block& block : blocks) {
      bool accepted = false;
      const double alpha =
          mh_step(state, lp, block.idx, block.step_dirs, std::exp(block.log_scale),
                  log_target, rng, accepted);
      if (accepted) {
        ss = ss_cache;
        ++block.accepts;
      }
      ++block.proposals;
      if (cfg.adapt && iter < cfg.n_burn)
        adapt_scale(block.log_scale, alpha, block.adapt_count++, cfg.target_accept);
    }

    // Gibbs sweeps. tau2_j only enters the beta prior; sigma2 only the
    // Gaussian likelihood, so lp is refreshed from the cached SS.
    model.beta = state.tail(n_beta);
    for (int j = 0; j < n_comp; ++j) {
      const Eigen::VectorXd beta_j =
          model.beta.segment(layout.component_offset(j), layout.component_size(j));
      tau2[j] = gibbs_update_tau2(beta_j, prior.tau2, rng);
    }
    model.tau2 = tau2;
    sigma2 = gibbs_update_sigma2(ss, n_obs, prior.sigma2, rng);
    lp = gaussian_loglik(ss, n_obs, sigma2) +
         log_prior_theta(params_from_state(state), prior) +
         log_prior_beta(model.beta, model, tau2);

    // Failure-rate guard over a rolling window.
    const int slot = iter % cfg.abort_window;
    window_fails += (fail_this_iter ? 1 : 0) - fail_window[slot];
    fail_window[slot] = fail_this_iter ? 1 : 0;
    if (iter + 1 >= cfg.abort_window &&
        window_fails > cfg.abort_fail_frac * cfg.abort_window) {
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "run_mcmc: %ld of the last %d iterations hit solver failures "
                    "(iteration %d)",
                    window_fails, cfg.abort_window, iter);
      throw McmcAbort(msg);
    }

    if (iter >= cfg.n_burn && (iter - cfg.n_burn) % cfg.thin == 0) {
      ChainRecord rec;
      rec.theta = state.head(5);
      rec.beta = state.tail(n_beta);
      rec.tau2 = tau2;
      rec.sigma2 = sigma2;
      rec.log_post = lp + [&] {
        double hyper = 0.0;
        for (int j = 0; j < n_comp; ++j) hyper += inv_gamma_logpdf(tau2[j], prior.tau2);
        return hyper + inv_gamma_logpdf(sigma2, prior.sigma2);
      }();
      chain.samples.push_back(std::move(rec));
    }
  }

  chain.accepts.resize(static_cast<int>(blocks.size()));
  chain.proposals.resize(static_cast<int>(blocks.size()));
  for (size_t b = 0; b < blocks.size(); ++b) {
    chain.accepts[static_cast<int>(b)] = static_cast<int>(blocks[b].accepts);
    chain.proposals[static_cast<int>(b)] = static_cast<int>(blocks[b].proposals);
  }
  chain.solver_failures = solver_failures;
  return chain;
}

void save_chain(const Chain& chain, const std::string& path,
                const nlohmann::json& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_chain: cannot open " + path);

  nlohmann::json header;
  header["type"] = "header";
  header["schema_version"] = 1;
  header["seed"] = chain.seed;
  header["config"] = chain.config.to_json();
  header["block_names"] = chain.block_names;
  header["accepts"] = std::vector<int>(chain.accepts.data(),
                                       chain.accepts.data() + chain.accepts.size());
  header["proposals"] = std::vector<int>(
      chain.proposals.data(), chain.proposals.data() + chain.proposals.size());
  header["solver_failures"] = chain.solver_failures;
  header["n_beta"] = chain.n_beta;
  header["n_components"] = chain.n_components;
  header["n_samples"] = chain.samples.size();
  for (auto it = extra_header.begin(); it != extra_header.end(); ++it)
    header[it.key()] = it.value();
  out << header.dump() << "\n";

  for (const ChainRecord& rec : chain.samples) {
    nlohmann::json j;
    j["theta"] = std::vector<double>(rec.theta.data(), rec.theta.data() + 5);
    j["beta"] = std::vector<double>(rec.beta.data(), rec.beta.data() + rec.beta.size());
    j["tau2"] = std::vector<double>(rec.tau2.data(), rec.tau2.data() + rec.tau2.size());
    j["sigma2"] = rec.sigma2;
    j["lp"] = rec.log_post;
    out << j.dump() << "\n";
  }
}

Chain load_chain(const std::string& path, nlohmann::json* header_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_chain: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_chain: empty file");
  const nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("type", "") != "header")
    throw std::runtime_error("load_chain: first line is not a chain header");
  if (header_out) *header_out = header;

  Chain chain;
  chain.seed = header.value("seed", std::uint64_t{0});
  if (header.contains("config")) chain.config = McmcConfig::from_json(header["config"]);
  chain.block_names = header.value("block_names", std::vector<std::string>{});
  chain.solver_failures = header.value("solver_failures", 0L);
  chain.n_beta = header.value("n_beta", 0);
  chain.n_components = header.value("n_components", 0);
  const auto acc = header.value("accepts", std::vector<int>{});
  const auto props = header.value("proposals", std::vector<int>{});
  chain.accepts = Eigen::Map<const Eigen::VectorXi>(acc.data(), acc.size());
  chain.proposals = Eigen::Map<const Eigen::VectorXi>(props.data(), props.size());

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    ChainRecord rec;
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != 5) throw std::runtime_error("load_chain: bad theta record");
    for (int i = 0; i < 5; ++i) rec.theta[i] = theta[i];
    const auto beta = j.at("beta").get<std::vector<double>>();
    rec.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
    const auto tau2 = j.at("tau2").get<std::vector<double>>();
    rec.tau2 = Eigen::Map<const Eigen::VectorXd>(tau2.data(), tau2.size());
    rec.sigma2 = j.at("sigma2").get<double>();
    rec.log_post = j.value("lp", 0.0);
    chain.samples.push_back(std::move(rec));
  }
  return chain;
}

}  // namespace dyndisc
