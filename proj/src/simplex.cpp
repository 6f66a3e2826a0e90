#include "cellhom/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cellhom {

namespace {

struct RefVertex {
  Vector u;        // reference coordinates in [0,1]^d
  Vector weights;  // over the 2^d corners
};

using RefSimplex = std::vector<RefVertex>;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

CellSimplex finish(const LatticeSpec& spec, const RefSimplex& ref) {
  const int d = spec.d;
  const int nc = spec.corners();
  CellSimplex s;
  s.vertices.resize(d, d + 1);
  s.weights.resize(nc, d + 1);
  for (int v = 0; v <= d; ++v) {
    s.vertices.col(v) = spec.A * (ref[v].u - Vector::Constant(d, 0.5));
    s.weights.col(v) = ref[v].weights;
  }
  Matrix dx(d, d);
  Matrix dw(nc, d);
  for (int v = 1; v <= d; ++v) {
    dx.col(v - 1) = s.vertices.col(v) - s.vertices.col(0);
    dw.col(v - 1) = s.weights.col(v) - s.weights.col(0);
  }
  const double det = dx.determinant();
  s.volume = std::abs(det) / factorial(d);
  s.gradient_map = dw * dx.inverse();
  return s;
}

// Simplices of the face with free coordinates `free_mask`, other coordinates
// fixed to the bits of `fixed`.
std::vector<RefSimplex> face_simplices(int d, int free_mask, int fixed) {
  const int nc = 1 << d;
  std::vector<int> face_corners;
  for (int j = 0; j < nc; ++j)
    if ((j & ~free_mask) == (fixed & ~free_mask)) face_corners.push_back(j);

  RefVertex bary;
  bary.u = Vector::Zero(d);
  bary.weights = Vector::Zero(nc);
  for (int j : face_corners) {
    for (int i = 0; i < d; ++i) bary.u(i) += (j >> i) & 1;
    bary.weights(j) += 1.0;
  }
  bary.u /= static_cast<double>(face_corners.size());
  bary.weights /= static_cast<double>(face_corners.size());

  if (free_mask == 0) return {RefSimplex{bary}};

  std::vector<RefSimplex> out;
  for (int i = 0; i < d; ++i) {
    if (!((free_mask >> i) & 1)) continue;
    for (int side = 0; side < 2; ++side) {
      const int sub_fixed = (fixed & ~(1 << i)) | (side << i);
      for (auto& simplex : face_simplices(d, free_mask & ~(1 << i), sub_fixed)) {
        simplex.push_back(bary);
        out.push_back(std::move(simplex));
      }
    }
  }
  return out;
}

}  // namespace

double SimplicialDecomposition::total_volume() const {
  double v = 0.0;
  for (const auto& s : simplices) v += s.volume;
  return v;
}

std::vector<double> SimplicialDecomposition::volumes() const {
  std::vector<double> v;
  for (const auto& s : simplices) v.push_back(s.volume);
  return v;
}

SimplicialDecomposition kuhn_decomposition(const LatticeSpec& spec) {
  const int d = spec.d;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> lists;
  do {
    std::vector<int> corners{0};
    int j = 0;
    for (int axis : perm) {
      j |= 1 << axis;
      corners.push_back(j);
    }
    lists.push_back(corners);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return corner_decomposition(spec, lists);
}

SimplicialDecomposition barycentric_decomposition(const LatticeSpec& spec) {
  SimplicialDecomposition out;
  out.d = spec.d;
  for (const auto& ref : face_simplices(spec.d, (1 << spec.d) - 1, 0)) out.simplices.push_back(finish(spec, ref));
  return out;
}

SimplicialDecomposition corner_decomposition(const LatticeSpec& spec,
                                             const std::vector<std::vector<int>>& corner_lists) {
  const int d = spec.d;
  const int nc = spec.corners();
  SimplicialDecomposition out;
  out.d = d;
  for (const auto& list : corner_lists) {
    if (static_cast<int>(list.size()) != d + 1) throw InputError("bad decomposition: simplex needs d+1 corners");
    RefSimplex ref;
    for (int j : list) {
      if (j < 0 || j >= nc) throw InputError("bad decomposition: corner index out of range");
      RefVertex v;
      v.u = Vector::Zero(d);
      for (int i = 0; i < d; ++i) v.u(i) = (j >> i) & 1;
      v.weights = Vector::Unit(nc, j);
      ref.push_back(v);
    }
    CellSimplex s = finish(spec, ref);
    if (!(s.volume > 0.0)) throw InputError("bad decomposition: degenerate simplex");
    out.simplices.push_back(std::move(s));
  }
  return out;
}

void validate_decomposition(const LatticeSpec& spec, const SimplicialDecomposition& decomp) {
  if (decomp.d != spec.d || decomp.simplices.empty()) throw InputError("bad decomposition: dimension mismatch");
  if (std::abs(decomp.total_volume() - spec.det_abs) > 1e-12 * spec.det_abs)
    throw InputError("bad decomposition: volumes do not sum to the cell volume");

  // Pairwise overlap test: the centroid of each simplex and the points half
  // way from it to every vertex must lie outside every other simplex.
  const int d = spec.d;
  const auto& S = decomp.simplices;
  for (std::size_t a = 0; a < S.size(); ++a) {
    const Vector centroid = S[a].vertices.rowwise().mean();
    std::vector<Vector> probes{centroid};
    for (int v = 0; v <= d; ++v) probes.push_back(0.5 * (centroid + S[a].vertices.col(v)));
    for (std::size_t b = 0; b < S.size(); ++b) {
      if (a == b) continue;
      Matrix T(d, d);
      for (int v = 1; v <= d; ++v) T.col(v - 1) = S[b].vertices.col(v) - S[b].vertices.col(0);
      const auto lu = T.partialPivLu();
      for (const Vector& x : probes) {
        const Vector lam = lu.solve(x - S[b].vertices.col(0));
        const double lam0 = 1.0 - lam.sum();
        const double tol = 1e-12;
        if ((lam.array() > tol).all() && lam0 > tol) throw InputError("bad decomposition: overlapping simplices");
      }
    }
  }
}

}  // namespace cellhom
