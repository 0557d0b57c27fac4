#pragma once

#include <Eigen/Dense>
#include <string>

namespace dyndisc {

/// Tabulated Karhunen-Loeve basis of the K1 kernel on a uniform grid.
/// Column l of phi holds sqrt(lambda_l) times the unit-norm eigenfunction,
/// so that phi * phi^T reproduces the kernel Gram matrix on the grid.
struct KLBasis {
  using PhiMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Eigen::VectorXd grid;         // midpoints (i+0.5)/G, increasing
  Eigen::VectorXd eigenvalues;  // lambda_1..lambda_L, descending
  PhiMatrix phi;                // G x L, eigenvalue-scaled eigenfunctions
                                // (row-major: interpolation blends rows)

  int grid_size() const { return static_cast<int>(grid.size()); }
  int n_basis() const { return static_cast<int>(eigenvalues.size()); }
  double cell_width() const { return grid[1] - grid[0]; }
};

/// Nystrom construction of the KL basis: eigendecompose the kernel Gram
/// matrix with quadrature weight 1/G and keep the leading n_basis pairs.
/// Eigenvector signs are fixed so the first nonzero grid value is positive.
KLBasis build_kl_basis(int grid_size, int n_basis);

/// Piecewise-linear interpolation of every column at u in [0,1]; linear
/// extrapolation over the half-cells beyond the first/last midpoint node.
Eigen::VectorXd eval_basis(const KLBasis& basis, double u);

/// Slope of the linear interpolant (right-hand slope at interior nodes).
Eigen::VectorXd eval_basis_deriv(const KLBasis& basis, double u);

/// Cell lookup shared by the interpolation routines; exposed so hot loops
/// can blend phi rows without allocating.
struct InterpCell {
  int k;     // lower node, column blend is (1-w)*row(k) + w*row(k+1)
  double w;  // in [-0.5, 1.5] at the extrapolated edges
};
InterpCell locate_cell(const KLBasis& basis, double u);

void save_kl_basis(const KLBasis& basis, const std::string& path);
KLBasis load_kl_basis(const std::string& path);

}  // namespace dyndisc
