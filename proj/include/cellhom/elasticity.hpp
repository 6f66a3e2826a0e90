// Elastic tensors: the pair-potential lattice sum, finite-difference
// Hessians of energy densities, and Cauchy-relation residuals.
#ifndef CELLHOM_ELASTICITY_HPP
#define CELLHOM_ELASTICITY_HPP

#include "cellhom/models.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cellhom {

/// c_ijkl stored as a d^2 x d^2 matrix, row i*d+j, column k*d+l.
struct ElasticTensor {
  int d = 2;
  Matrix c;
  Matrix error;  // Richardson error estimate per entry (zero for exact tensors)

  explicit ElasticTensor(int dim = 2);
  double operator()(int i, int j, int k, int l) const { return c(i * d + j, k * d + l); }
  double& operator()(int i, int j, int k, int l) { return c(i * d + j, k * d + l); }

  double max_abs() const { return c.cwiseAbs().maxCoeff(); }
  double major_symmetry_residual() const;  // max |c_ijkl - c_klij|
  double minor_symmetry_residual() const;  // max |c_ijkl - c_jikl|, |c_ijkl - c_ijlk|
  /// 3x3 (2D) or 6x6 (3D) Voigt matrix, order 11,22,[33,23,13,]12.
  Matrix voigt() const;
};

/// (1/|det A|) sum over 0 < |x| <= cutoff of
/// V''(|x|) x_i x_j x_k x_l / |x|^2 + V'(|x|) (x_j x_l delta_ik / |x| - x_i x_j x_k x_l / |x|^3).
ElasticTensor pair_elastic_tensor(const PairPotential& V, const LatticeSpec& spec, double cutoff);

/// Lattice vectors x with 0 < |x| <= cutoff (tolerance 1e-12).
std::vector<Vector> lattice_shell_vectors(const LatticeSpec& spec, double cutoff);

using Density = std::function<double(const Matrix&)>;

/// Central second differences of W at Id, step h, refined by Richardson
/// extrapolation with h/2.
ElasticTensor numeric_elastic_tensor(const Density& W, int d, double h = 1e-3);

struct CauchyReport {
  std::vector<std::pair<std::string, double>> cauchy;  // label, |c_a - c_b|
  double minor_symmetry = 0.0;
  double major_symmetry = 0.0;
  double max_cauchy() const;
};

/// Six relations in 3D; the single residual c_1122 - c_1212 in 2D.
CauchyReport cauchy_residuals(const ElasticTensor& t);

/// max |(1/2) D^2 W_CB(Id) - Q| over the d^2 x d^2 matrix entries for the
/// quadratic-form model built from Q.
double quadratic_model_hessian_check(const QuadraticForm& Q, double kappa, double delta, double h = 1e-3);

/// Lennard-Jones sigma (at epsilon = 1) making the lattice stress free:
/// sum V'(|x|) |x| = 0 over the shells within cutoff. Only meaningful for
/// lattices with cubic symmetry.
double equilibrium_lj_sigma(const LatticeSpec& spec, double cutoff);

/// CSV with header i,j,k,l,c_ijkl (indices from 1).
void write_tensor_csv(const ElasticTensor& t, std::ostream& out);

}  // namespace cellhom

#endif  // CELLHOM_ELASTICITY_HPP
