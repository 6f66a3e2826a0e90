// Cell energies W_cell / W_super-cell with analytic gradients.
//
// A model sees the discrete gradient of one cell: a d x n matrix whose first
// 2^d columns are the corner positions minus their mean (the V_0 block) and
// whose remaining columns are the further stencil sites relative to the same
// mean. Multilattice models additionally take the d x m internal shifts s.
#ifndef CELLHOM_MODELS_HPP
#define CELLHOM_MODELS_HPP

#include "cellhom/lattice.hpp"
#include "cellhom/simplex.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cellhom {

/// c (|F_c|^p + |s|^q) - c_lower <= W(F, s) <= c_upper (|F|^p + |s|^q + 1) on V_0.
struct GrowthBounds {
  double c = 0.0;
  double c_lower = 0.0;
  double c_upper = 0.0;
};

/// Implementation interface. `F` is already centered (corner block in V_0).
/// Gradients are written only when the output pointers are non-null; they are
/// pre-sized by the caller.
class CellEnergy {
 public:
  virtual ~CellEnergy() = default;
  virtual double evaluate(const ConstMatrixRef& F, const ConstMatrixRef& s, Matrix* dF, Matrix* ds) const = 0;
};

class EnergyModel {
 public:
  EnergyModel() = default;
  EnergyModel(std::string name, LatticeSpec spec, std::shared_ptr<const CellEnergy> impl);

  const std::string& name() const { return name_; }
  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int n_cols() const { return spec_.n_cols(); }
  int m() const { return spec_.m; }

  double p = 2.0;  // growth exponent in F
  double q = 2.0;  // growth exponent in s (multilattice only)
  std::optional<GrowthBounds> growth;
  bool frame_indifferent = true;
  bool vanishes_on_rotations = false;  // W(RZ) = 0 for every rotation R
  std::vector<std::pair<std::string, double>> params;

  /// Raw energy on any d x n matrix. The corner block is re-centered first,
  /// so the value is invariant under adding (c,...,c) to every column.
  double energy(const ConstMatrixRef& F, const ConstMatrixRef& s) const;
  double energy(const ConstMatrixRef& F, const ConstMatrixRef& s, Matrix& dF, Matrix& ds) const;

  /// Hot-path variant for callers that already guarantee a centered F and
  /// pre-sized gradient buffers.
  double energy_centered(const ConstMatrixRef& F, const ConstMatrixRef& s, Matrix* dF, Matrix* ds) const {
    return impl_->evaluate(F, s, dF, ds);
  }

  /// Internal shift placeholder of the right shape (d x m, possibly 0 columns).
  Matrix zero_internal() const { return Matrix::Zero(spec_.d, spec_.m); }

 private:
  std::string name_;
  LatticeSpec spec_;
  std::shared_ptr<const CellEnergy> impl_;
};

/// Gated evaluation: rejects non-finite input and matrices outside V_0.
double eval_cell_energy(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s);

struct CellGradient {
  Matrix dF;
  Matrix ds;
};
CellGradient grad_cell_energy(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s);

/// Discrete gradient of the affine map x -> Mx on one cell, including the
/// stencil columns.
Matrix affine_cell_gradient(const LatticeSpec& spec, const Matrix& M);

// ---------------------------------------------------------------------------
// Built-in models

/// Nearest-neighbour springs along the cell edges. An edge is shared by
/// 2^(d-1) bulk cells, so each cell carries k / 2^(d-1) (|edge| - r0)^2 per
/// edge and every bulk bond ends up with k (|bond| - r0)^2.
EnergyModel harmonic_spring_model(const LatticeSpec& spec, double k, double r0);

/// Shell-resolved pair potential V_r(rho): r is the reference bond length,
/// rho the deformed one. Derivatives are with respect to rho.
struct PairPotential {
  std::string name;
  std::function<double(double r, double rho)> value;
  std::function<double(double r, double rho)> d1;
  std::function<double(double r, double rho)> d2;
  bool nonnegative = false;
};

PairPotential lennard_jones(double epsilon, double sigma);
/// k (rho - rest)^2 on the shell |r - shell| < 1e-9, zero elsewhere.
PairPotential harmonic_shell(double k, double rest, double shell);
PairPotential zero_potential();

/// Sums V over all bonds with reference length <= cutoff in the cube stencil
/// that the cutoff requires. Bond b gets weight 2 / mult(b), mult(b) being the
/// number of bulk cells whose stencil contains it, so the bulk energy is
/// sum_{x != x'} V_{|x-x'|}(|y(x) - y(x')|) over ordered pairs.
EnergyModel pair_potential_model(const LatticeSpec& spec, const PairPotential& V, double cutoff);

/// Smallest Chebyshev cell reach whose cube stencil holds every bond of
/// reference length <= cutoff. Throws "empty stencil" if there is none.
int pair_stencil_reach(const LatticeSpec& spec, double cutoff);

/// Matrix -> scalar density with its gradient.
struct MatrixDensity {
  std::string name;
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
  bool frame_indifferent = false;
  // c|M|^2 - c' <= V(M) <= c''(|M|^2 + 1), when known.
  std::optional<GrowthBounds> quadratic_growth;
};

MatrixDensity frobenius_squared_density();
MatrixDensity constant_density(double value);

/// W_cell(F) = sum_S |S| V(G_S(F)), G_S the gradient of the corner
/// interpolation on simplex S.
EnergyModel quasiconvex_wrapper_model(const LatticeSpec& spec, const MatrixDensity& V,
                                      const SimplicialDecomposition& decomp);

/// Quadratic form on d x d matrices, stored as a d^2 x d^2 symmetric matrix
/// acting on the row-major vectorization: Q(M) = vec(M)^T Q vec(M).
struct QuadraticForm {
  Matrix matrix;
  int dim() const;
  double operator()(const Matrix& M) const;
};

/// Q(M) = mu |sym M|^2 + lambda/2 (tr M)^2.
QuadraticForm isotropic_form(int d, double mu, double lambda);

/// Throws "inadmissible Q" unless Q is positive semidefinite, positive
/// definite on symmetric matrices and zero on antisymmetric ones.
void check_admissible(const QuadraticForm& Q);

/// |det A| Q(sqrt(F'^T F') - Id) + |F''|^2 + chi(F), F = F'Z + F'' orthogonal,
/// chi(F) = kappa h(det F') (1 + |F|^2) with h a C^2 step from 1 (t <= delta/2)
/// to 0 (t >= delta). 2D only.
EnergyModel quadratic_form_model(const LatticeSpec& spec, const QuadraticForm& Q, double kappa, double delta);

/// One internal atom per cell, tied to the four corners by springs of rest
/// length r0 (default |z_1|) on top of the corner-edge springs.
EnergyModel multilattice_harmonic_model(const LatticeSpec& spec, double k, std::optional<double> r0 = std::nullopt);

}  // namespace cellhom

#endif  // CELLHOM_MODELS_HPP
