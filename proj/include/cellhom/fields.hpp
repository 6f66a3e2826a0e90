// Lattice deformations, discrete gradients, boundary data and the
// piecewise-affine cell interpolation.
#ifndef CELLHOM_FIELDS_HPP
#define CELLHOM_FIELDS_HPP

#include "cellhom/lattice.hpp"
#include "cellhom/simplex.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

namespace cellhom {

using GridPtr = std::shared_ptr<const CellGrid>;

struct Deformation {
  GridPtr grid;
  Matrix y;  // d x n_sites
};

/// Per-interior-cell internal shifts. Block c of `s` (columns c*m .. c*m+m-1)
/// belongs to grid->interior_cells()[c].
struct InternalField {
  GridPtr grid;
  Matrix s;
  std::optional<Matrix> mean_target;

  int m() const { return grid->spec().m; }
  Matrix cell(int interior_index) const { return s.middleCols(interior_index * m(), m()); }
  /// Arithmetic mean of the per-cell shifts, d x m.
  Matrix mean() const;
};

struct InterpolationPiece {
  Matrix vertices;  // d x (d+1), absolute positions in the reference box
  Matrix G;         // d x d constant gradient
  double volume = 0.0;
};

Deformation affine_deformation(GridPtr grid, const Matrix& M);

/// Sets every pinned site x to g(x); free sites stay as they are.
Deformation apply_boundary(Deformation def, const std::function<Vector(const Vector&)>& g);

/// Corner values minus their mean, then the remaining stencil sites relative
/// to the same mean. Only defined on interior cells.
Matrix discrete_gradient(const Deformation& def, int cell);

/// Corner block of the discrete gradient for any cell, boundary cells included.
Matrix corner_gradient(const Deformation& def, int cell);

/// Pieces of the recursive barycentric interpolation of the corner values.
std::vector<InterpolationPiece> interpolate_cell(const Deformation& def, int cell);

/// (mean over the cell of |grad y~|^p) / |corner gradient|^p. The value is
/// exact, returned twice as the (lower, upper) pair of this sample.
std::pair<double, double> gradient_equivalence_ratio(const Deformation& def, int cell, double p);

/// Same ratio straight from a corner block (d x 2^d, rows summing to zero).
double interpolation_ratio(const LatticeSpec& spec, const Matrix& corners, double p);

/// Constants c*, C* with c* <= ratio <= C* on all of V_0 \ {0}.
struct InterpolationConstants {
  double p = 2.0;
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;  // eigenvalue bounds (p = 2) rather than search + margin
};
InterpolationConstants interpolation_constants(const LatticeSpec& spec, double p);

/// CSV with header site_x,site_y[,site_z],y_1,y_2[,y_3].
void write_deformation_csv(const Deformation& def, std::ostream& out);

}  // namespace cellhom

#endif  // CELLHOM_FIELDS_HPP
