#include "dyndisc/discrepancy.hpp"

#include <algorithm>
#include <stdexcept>

namespace dyndisc {

namespace {

// Rank index tuples by the product of eigenvalues, largest first; ties are
// broken lexicographically so layouts are reproducible.
std::vector<std::array<int, 3>> top_products(const Eigen::VectorXd& lambda,
                                             int arity, int n_main, int n_keep) {
  struct Entry {
    double weight;
    std::array<int, 3> idx;
  };
  std::vector<Entry> entries;
  if (arity == 2) {
    entries.reserve(static_cast<size_t>(n_main) * n_main);
    for (int a = 0; a < n_main; ++a)
      for (int b = 0; b < n_main; ++b)
        entries.push_back({lambda[a] * lambda[b], {a, b, -1}});
  } else {
    entries.reserve(static_cast<size_t>(n_main) * n_main * n_main);
    for (int a = 0; a < n_main; ++a)
      for (int b = 0; b < n_main; ++b)
        for (int c = 0; c < n_main; ++c)
          entries.push_back({lambda[a] * lambda[b] * lambda[c], {a, b, c}});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    if (l.weight != r.weight) return l.weight > r.weight;
    return l.idx < r.idx;
  });
  const int keep = std::min<int>(n_keep, static_cast<int>(entries.size()));
  std::vector<std::array<int, 3>> out(keep);
  for (int i = 0; i < keep; ++i) out[i] = entries[i].idx;
  return out;
}

void validate_spec(const ComponentSpec& spec, int n_inputs) {
  if (spec.input_indices.empty())
    throw std::invalid_argument("ComponentSpec: input_indices must be non-empty");
  if (spec.n_basis < 1)
    throw std::invalid_argument("ComponentSpec: n_basis must be >= 1");
  std::vector<int> sorted = spec.input_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("ComponentSpec: duplicate input index");
  if (sorted.front() < 0 || sorted.back() >= n_inputs)
    throw std::invalid_argument("ComponentSpec: input index out of range");
}

std::vector<std::array<int, 3>> make_terms(const ComponentSpec& spec,
                                           const KLBasis& basis) {
  const int arity = static_cast<int>(spec.input_indices.size());
  if (arity == 1) {
    std::vector<std::array<int, 3>> t(spec.n_basis);
    if (spec.n_basis > basis.n_basis())
      throw std::invalid_argument("ComponentSpec: n_basis exceeds KL basis size");
    for (int l = 0; l < spec.n_basis; ++l) t[l] = {l, -1, -1};
    return t;
  }
  if (arity > 3)
    throw std::invalid_argument("ComponentSpec: interactions above three-way unsupported");
  return top_products(basis.eigenvalues, arity, basis.n_basis(), spec.n_basis);
}

}  // namespace

int DiscrepancyModel::component_size(int j) const {
  const int je = static_cast<int>(specs_e.size());
  return j < je ? specs_e[j].n_basis : specs_k[j - je].n_basis;
}

int DiscrepancyModel::component_offset(int j) const {
  const int je = static_cast<int>(specs_e.size());
  return j < je ? offsets_e[j] : offsets_k[j - je];
}

std::string DiscrepancyModel::component_name(int j) const {
  static const char* names_e[] = {"p", "T"};
  static const char* names_k[] = {"x", "p", "T"};
  const int je = static_cast<int>(specs_e.size());
  const bool in_e = j < je;
  const ComponentSpec& spec = in_e ? specs_e[j] : specs_k[j - je];
  std::string name = in_e ? "E:" : "K:";
  for (size_t i = 0; i < spec.input_indices.size(); ++i) {
    if (i) name += "*";
    name += (in_e ? names_e : names_k)[spec.input_indices[i]];
  }
  return name;
}

DiscrepancyModel build_discrepancy_layout(const KLBasis& basis,
                                          const DiscrepancyLayoutConfig& cfg) {
  DiscrepancyModel m;
  m.basis = basis;
  m.ranges_e = {cfg.range_p, cfg.range_T};
  m.ranges_k = {cfg.range_x, cfg.range_p, cfg.range_T};

  auto add = [&](std::vector<ComponentSpec>& specs, std::vector<int> idx, int n) {
    specs.push_back({std::move(idx), n});
  };
  add(m.specs_e, {0}, cfg.n_main);
  add(m.specs_e, {1}, cfg.n_main);
  add(m.specs_e, {0, 1}, cfg.n_interaction);

  add(m.specs_k, {0}, cfg.n_main);
  add(m.specs_k, {1}, cfg.n_main);
  add(m.specs_k, {2}, cfg.n_main);
  add(m.specs_k, {0, 1}, cfg.n_interaction);
  add(m.specs_k, {0, 2}, cfg.n_interaction);
  add(m.specs_k, {1, 2}, cfg.n_interaction);
  if (cfg.include_threeway) add(m.specs_k, {0, 1, 2}, cfg.n_threeway);

  int offset = 0;
  for (const ComponentSpec& s : m.specs_e) {
    validate_spec(s, 2);
    m.terms_e.push_back(make_terms(s, m.basis));
    m.offsets_e.push_back(offset);
    offset += s.n_basis;
  }
  m.n_beta_e = offset;
  for (const ComponentSpec& s : m.specs_k) {
    validate_spec(s, 3);
    m.terms_k.push_back(make_terms(s, m.basis));
    m.offsets_k.push_back(offset);
    offset += s.n_basis;
  }
  m.n_beta_k = offset - m.n_beta_e;

  m.beta = Eigen::VectorXd::Zero(offset);
  m.tau2 = Eigen::VectorXd::Ones(m.n_components());
  return m;
}

double rescale_input(double value, const InputRange& range, ClampCounter* warn) {
  double u = (value - range.lo) / (range.hi - range.lo);
  if (u < 0.0 || u > 1.0) {
    if (warn) ++warn->count;
    u = u < 0.0 ? 0.0 : 1.0;
  }
  return u;
}

namespace {

struct BlockView {
  const std::vector<ComponentSpec>* specs;
  const std::vector<std::vector<std::array<int, 3>>>* terms;
  const std::vector<InputRange>* ranges;
  const std::vector<int>* offsets;
  int n_inputs;
};

BlockView view_of(const DiscrepancyModel& m, Disc which) {
  if (which == Disc::Equilibrium)
    return {&m.specs_e, &m.terms_e, &m.ranges_e, &m.offsets_e, 2};
  return {&m.specs_k, &m.terms_k, &m.ranges_k, &m.offsets_k, 3};
}

}  // namespace

double eval_discrepancy(const DiscrepancyModel& model, Disc which,
                        std::span<const double> zeta, ClampCounter* warn) {
  const BlockView block = view_of(model, which);
  if (block.specs->empty())
    throw std::invalid_argument("eval_discrepancy: block has no components");
  if (static_cast<int>(zeta.size()) != block.n_inputs)
    throw std::invalid_argument("eval_discrepancy: wrong input count");

  std::vector<Eigen::VectorXd> rows(block.n_inputs);
  for (int i = 0; i < block.n_inputs; ++i)
    rows[i] = eval_basis(model.basis, rescale_input(zeta[i], (*block.ranges)[i], warn));

  double total = 0.0;
  for (size_t j = 0; j < block.specs->size(); ++j) {
    const ComponentSpec& spec = (*block.specs)[j];
    const auto& terms = (*block.terms)[j];
    const int offset = (*block.offsets)[j];
    const int arity = static_cast<int>(spec.input_indices.size());
    for (int l = 0; l < spec.n_basis; ++l) {
      double prod = rows[spec.input_indices[0]][terms[l][0]];
      if (arity > 1) prod *= rows[spec.input_indices[1]][terms[l][1]];
      if (arity > 2) prod *= rows[spec.input_indices[2]][terms[l][2]];
      total += model.beta[offset + l] * prod;
    }
  }
  return total;
}

double eval_discrepancy_dinput(const DiscrepancyModel& model, Disc which,
                               std::span<const double> zeta, int input_slot,
                               ClampCounter* warn) {
  const BlockView block = view_of(model, which);
  if (block.specs->empty())
    throw std::invalid_argument("eval_discrepancy_dinput: block has no components");
  if (input_slot < 0 || input_slot >= block.n_inputs)
    throw std::invalid_argument("eval_discrepancy_dinput: bad input slot");

  std::vector<Eigen::VectorXd> rows(block.n_inputs);
  Eigen::VectorXd drow;
  for (int i = 0; i < block.n_inputs; ++i) {
    const double u = rescale_input(zeta[i], (*block.ranges)[i], warn);
    rows[i] = eval_basis(model.basis, u);
    if (i == input_slot) drow = eval_basis_deriv(model.basis, u);
  }
  const InputRange& range = (*block.ranges)[input_slot];
  const double du = 1.0 / (range.hi - range.lo);

  double total = 0.0;
  for (size_t j = 0; j < block.specs->size(); ++j) {
    const ComponentSpec& spec = (*block.specs)[j];
    auto slot = std::find(spec.input_indices.begin(), spec.input_indices.end(), input_slot);
    if (slot == spec.input_indices.end()) continue;
    const int pos = static_cast<int>(slot - spec.input_indices.begin());
    const auto& terms = (*block.terms)[j];
    const int offset = (*block.offsets)[j];
    const int arity = static_cast<int>(spec.input_indices.size());
    for (int l = 0; l < spec.n_basis; ++l) {
      double prod = 1.0;
      for (int a = 0; a < arity; ++a) {
        const int input = spec.input_indices[a];
        const int col = terms[l][a];
        prod *= (a == pos) ? drow[col] : rows[input][col];
      }
      total += model.beta[offset + l] * prod;
    }
  }
  return total * du;
}

}  // namespace dyndisc
