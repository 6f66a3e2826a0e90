// Simplicial decompositions of the reference cell A[-1/2,1/2]^d.
//
// Every vertex value of a piecewise-affine cell interpolant is a fixed convex
// combination of the 2^d corner values, so the constant gradient on a simplex
// is a linear map of the corner matrix: G_S = F * gradient_map.
#ifndef CELLHOM_SIMPLEX_HPP
#define CELLHOM_SIMPLEX_HPP

#include "cellhom/lattice.hpp"

#include <vector>

namespace cellhom {

struct CellSimplex {
  Matrix vertices;      // d x (d+1), relative to the cell center
  Matrix weights;       // 2^d x (d+1), vertex value = F * weights.col(v)
  Matrix gradient_map;  // 2^d x d
  double volume = 0.0;
};

struct SimplicialDecomposition {
  int d = 2;
  std::vector<CellSimplex> simplices;

  double total_volume() const;
  std::vector<double> volumes() const;
};

/// Kuhn (Freudenthal) decomposition into d! simplices along the cube diagonal.
SimplicialDecomposition kuhn_decomposition(const LatticeSpec& spec);

/// Recursive barycentric decomposition: every k-face gets its barycenter with
/// the mean of its corner values; 8 triangles in 2D, 48 tetrahedra in 3D.
SimplicialDecomposition barycentric_decomposition(const LatticeSpec& spec);

/// Corner-only decomposition from explicit corner-index lists (d+1 indices
/// into the columns of Z per simplex).
SimplicialDecomposition corner_decomposition(const LatticeSpec& spec,
                                             const std::vector<std::vector<int>>& corner_lists);

/// Throws "bad decomposition" if volumes do not add up to |det A| or two
/// simplices overlap in their interiors.
void validate_decomposition(const LatticeSpec& spec, const SimplicialDecomposition& decomp);

}  // namespace cellhom

#endif  // CELLHOM_SIMPLEX_HPP
