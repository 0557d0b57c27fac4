#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "dyndisc/kl_basis.hpp"

namespace dyndisc {

/// One functional-ANOVA component: which discrepancy inputs it depends on
/// and how many basis terms it retains.
struct ComponentSpec {
  std::vector<int> input_indices;  // ordered, no duplicates, non-empty
  int n_basis = 0;
};

struct InputRange {
  double lo = 0.0;
  double hi = 1.0;
};

enum class Disc { Equilibrium, Kinetic };

/// Counts inputs that had to be clamped into [0,1] after rescaling
/// (extrapolation audit during upscaling).
struct ClampCounter {
  long count = 0;
};

/// Truncated KL linear model for the two multiplicative discrepancies.
/// The equilibrium block sees zeta^E = (p, T); the kinetic block sees
/// zeta^K = (x, p, T). beta concatenates all equilibrium-component
/// coefficients followed by all kinetic-component coefficients; there is
/// no intercept term. Immutable after construction except for beta/tau2,
/// which samplers overwrite wholesale.
struct DiscrepancyModel {
  KLBasis basis;  // shared by every input dimension

  std::vector<ComponentSpec> specs_e;
  std::vector<ComponentSpec> specs_k;
  std::vector<InputRange> ranges_e;  // per input of zeta^E
  std::vector<InputRange> ranges_k;  // per input of zeta^K

  // Term tables: per component, one entry per retained basis term; each
  // entry lists the basis column used for the corresponding input slot.
  // Main effects store single indices; interactions store the top products
  // ranked by the product of eigenvalues.
  std::vector<std::vector<std::array<int, 3>>> terms_e;
  std::vector<std::vector<std::array<int, 3>>> terms_k;

  Eigen::VectorXd beta;
  Eigen::VectorXd tau2;  // one per component, E components first

  std::vector<int> offsets_e;  // beta offset per E component
  std::vector<int> offsets_k;  // beta offset per K component
  int n_beta_e = 0;
  int n_beta_k = 0;

  int n_components() const {
    return static_cast<int>(specs_e.size() + specs_k.size());
  }
  int n_beta() const { return n_beta_e + n_beta_k; }
  int component_size(int j) const;
  int component_offset(int j) const;
  std::string component_name(int j) const;
};

struct DiscrepancyLayoutConfig {
  int n_main = 25;
  int n_interaction = 25;
  bool include_threeway = false;
  int n_threeway = 25;
  InputRange range_T{310.0, 380.0};
  InputRange range_p{0.0, 1.0};
  InputRange range_x{0.0, 0.5};
};

/// Default layout: main effects plus all two-way interactions for both
/// blocks; three-way terms only when requested.
DiscrepancyModel build_discrepancy_layout(const KLBasis& basis,
                                          const DiscrepancyLayoutConfig& cfg = {});

/// Rescale a raw input into [0,1], clamping (and counting) out-of-range values.
double rescale_input(double value, const InputRange& range, ClampCounter* warn);

/// Evaluate one discrepancy block at raw inputs (p,T) or (x,p,T).
double eval_discrepancy(const DiscrepancyModel& model, Disc which,
                        std::span<const double> zeta, ClampCounter* warn = nullptr);

/// Partial derivative of a block with respect to one raw input.
double eval_discrepancy_dinput(const DiscrepancyModel& model, Disc which,
                               std::span<const double> zeta, int input_slot,
                               ClampCounter* warn = nullptr);

}  // namespace dyndisc
