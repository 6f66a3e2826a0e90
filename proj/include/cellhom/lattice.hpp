// Bravais lattice geometry and the cell/site bookkeeping of the box A(0,N)^d.
//
// Sites are the lattice points A k, k in {0..N}^d. Cell k in {0..N-1}^d spans
// A(k + [0,1]^d) and has center A(k + 1/2). Both are indexed lexicographically
// with coordinate 0 running fastest. Length scale is fixed to one lattice unit.
#ifndef CELLHOM_LATTICE_HPP
#define CELLHOM_LATTICE_HPP

#include "cellhom/types.hpp"

#include <optional>
#include <vector>

namespace cellhom {

struct LatticeSpec {
  int d = 2;
  Matrix A;              // columns are the basis vectors
  double det_abs = 1.0;  // |det A|, the cell volume
  Matrix Z;              // d x 2^d, columns A v for v in {-1/2,1/2}^d, bit i of the column index <-> coordinate i

  // Cell offsets whose corners make up the super-cell stencil. Always starts
  // with the zero offset; a Bravais unit-cell model has only that one.
  std::vector<IntVector> cell_offsets;
  // Integer site offsets relative to the cell index k. The first 2^d are the
  // unit-cell corners {0,1}^d in the column order of Z, the remaining stencil
  // sites follow in lexicographic order (last coordinate most significant).
  std::vector<IntVector> site_offsets;
  int reach = 0;  // max Chebyshev norm over cell_offsets
  int m = 0;      // internal atoms per cell

  int corners() const { return 1 << d; }
  int n_cols() const { return static_cast<int>(site_offsets.size()); }
  /// Width r of the pinned boundary layer, in cells: one for unit-cell models,
  /// widened by the stencil reach for super-cells.
  int boundary_layer() const { return reach + 1; }
  bool is_unit_cell() const { return reach == 0; }

  /// d x n_cols physical offsets of the stencil sites from the cell center.
  /// The first 2^d columns equal Z.
  Matrix stencil_vectors() const;
};

/// Builds a lattice spec. `stencil_offsets` are cell offsets (must contain the
/// zero vector, no duplicates); omitted means the plain unit cell.
LatticeSpec build_lattice(int d, const Matrix& A,
                          const std::optional<std::vector<IntVector>>& stencil_offsets = std::nullopt,
                          int m = 0);

/// All cell offsets with Chebyshev norm <= reach, zero offset first.
std::vector<IntVector> cube_stencil(int d, int reach);

class CellGrid {
 public:
  static constexpr int kOutside = -1;

  CellGrid(LatticeSpec spec, int N);

  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int N() const { return N_; }
  int n_cells() const { return n_cells_; }
  int n_sites() const { return n_sites_; }

  IntVector cell_coords(int cell) const;
  int cell_index(const IntVector& k) const;
  IntVector site_coords(int site) const;
  /// kOutside when k lies outside {0..N}^d.
  int site_index(const IntVector& k) const;

  Vector site_position(int site) const;
  Vector cell_center(int cell) const;

  bool is_interior(int cell) const { return interior_flag_[cell] != 0; }
  bool is_pinned(int site) const { return pinned_flag_[site] != 0; }

  const std::vector<int>& interior_cells() const { return interior_; }
  const std::vector<int>& boundary_cells() const { return boundary_; }
  const std::vector<int>& pinned_sites() const { return pinned_; }
  const std::vector<int>& free_sites() const { return free_; }

  /// Corner sites in Z column order, then the remaining stencil sites.
  /// Stencil sites of boundary cells that fall outside the box are kOutside.
  std::vector<int> cell_sites(int cell) const;

 private:
  LatticeSpec spec_;
  int N_ = 0;
  int n_cells_ = 0;
  int n_sites_ = 0;
  std::vector<char> interior_flag_;
  std::vector<char> pinned_flag_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> pinned_;
  std::vector<int> free_;
};

/// Requires N > 2r with r the boundary-layer width.
CellGrid build_grid(const LatticeSpec& spec, int N);

}  // namespace cellhom

#endif  // CELLHOM_LATTICE_HPP
