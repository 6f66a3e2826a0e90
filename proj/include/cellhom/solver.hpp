// Energy minimization over the free sites (and internal shifts) of the box
// with affine boundary pinning.
#ifndef CELLHOM_SOLVER_HPP
#define CELLHOM_SOLVER_HPP

#include "cellhom/fields.hpp"
#include "cellhom/models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cellhom {

struct SolveOptions {
  double grad_tol = 1e-8;  // sup norm
  int max_iter = 5000;
  int history = 10;
  int n_random_starts = 8;
  double perturb_amp = 0.1;
  std::uint64_t seed = 0;
  bool use_buckling_starts = true;
  int threads = 1;

  void validate() const;
};

struct SolveResult {
  double energy = 0.0;
  Deformation argmin;
  std::optional<InternalField> internal;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  std::string start_label;
};

/// Internal shifts: none (Bravais), constrained to a prescribed mean, or free.
enum class InternalMode { kNone, kMeanConstrained, kFree };

class Problem {
 public:
  Problem(GridPtr grid, EnergyModel model, Matrix M, std::optional<Matrix> s0);

  const CellGrid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  const EnergyModel& model() const { return model_; }
  const Matrix& M() const { return M_; }
  const std::optional<Matrix>& s0() const { return s0_; }
  InternalMode internal_mode() const { return mode_; }

  int n_site_vars() const { return static_cast<int>(grid_->free_sites().size()) * grid_->dim(); }
  int n_internal_vars() const { return n_internal_; }
  int n_vars() const { return n_site_vars() + n_internal_; }

  /// Sum of the cell energies over interior cells; gradient w.r.t. x.
  double energy_and_gradient(const Vector& x, Vector* grad) const;

  /// d x n_sites gradient of the energy with respect to every site position,
  /// pinned sites included.
  Matrix site_gradient(const Vector& x) const;

  /// Affine boundary datum with the given free-site positions and shifts.
  Deformation deformation(const Vector& x) const;
  std::optional<InternalField> internal_field(const Vector& x) const;

  /// Variables of a deformation that satisfies the pinning. Shifts default
  /// to s0 (or zero in free mode).
  Vector pack(const Deformation& def, const std::optional<InternalField>& internal = std::nullopt) const;
  Vector affine_start() const;

  /// Boundary datum y_M on every site.
  const Deformation& boundary() const { return boundary_; }

 private:
  Matrix cell_shifts(const Vector& x, int interior_index) const;

  GridPtr grid_;
  EnergyModel model_;
  Matrix M_;
  std::optional<Matrix> s0_;
  InternalMode mode_ = InternalMode::kNone;
  int n_internal_ = 0;
  Deformation boundary_;
  std::vector<int> var_of_site_;                // first variable index or -1 for pinned sites
  std::vector<std::vector<int>> interior_sites_;  // cell_sites of each interior cell
};

/// s0 with m = 0 is rejected; m > 0 without s0 leaves the shifts free.
Problem assemble(GridPtr grid, const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s0);

SolveResult minimize(const Problem& problem, const SolveOptions& opts, const Deformation& start,
                     const std::optional<InternalField>& internal = std::nullopt);

/// y = Mx + sigma_1(x_1) + sigma_2(x_2) on free sites with zig-zag fields
/// that bring every compressed bond back to `rest`; pinned sites stay affine.
Deformation buckling_start(GridPtr grid, const Matrix& M, double rest = 1.0);

/// Affine start, buckling start (2D Bravais, some compressed column) and
/// n_random_starts noisy affine starts. Extra user starts run last. Returns
/// the lowest-energy run (first one on ties) with its own converged flag.
struct NamedStart {
  std::string label;
  Deformation def;
};
SolveResult multi_start_minimize(const Problem& problem, const SolveOptions& opts,
                                 const std::vector<NamedStart>& extra_starts = {});

/// Rotation factor of the polar decomposition M = R U.
Matrix polar_rotation(const Matrix& M);

}  // namespace cellhom

#endif  // CELLHOM_SOLVER_HPP
