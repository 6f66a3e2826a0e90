#include "cellhom/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cellhom {

namespace {

int ipow(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Lexicographic key with the last coordinate most significant.
std::vector<int> lex_key(const IntVector& v) {
  std::vector<int> key(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) key[v.size() - 1 - i] = v(i);
  return key;
}

IntVector corner_bits(int d, int j) {
  IntVector w(d);
  for (int i = 0; i < d; ++i) w(i) = (j >> i) & 1;
  return w;
}

}  // namespace

Matrix LatticeSpec::stencil_vectors() const {
  Matrix out(d, n_cols());
  const Vector half = Vector::Constant(d, 0.5);
  for (int c = 0; c < n_cols(); ++c) out.col(c) = A * (site_offsets[c].cast<double>() - half);
  return out;
}

std::vector<IntVector> cube_stencil(int d, int reach) {
  std::vector<IntVector> out;
  out.push_back(IntVector::Zero(d));
  const int side = 2 * reach + 1;
  const int total = ipow(side, d);
  for (int idx = 0; idx < total; ++idx) {
    IntVector o(d);
    int rest = idx;
    for (int i = 0; i < d; ++i) {
      o(i) = rest % side - reach;
      rest /= side;
    }
    if (o.isZero()) continue;
    out.push_back(o);
  }
  return out;
}

LatticeSpec build_lattice(int d, const Matrix& A, const std::optional<std::vector<IntVector>>& stencil_offsets,
                          int m) {
  if (d != 2 && d != 3) throw InputError("unsupported dimension: only d = 2 and d = 3");
  if (A.rows() != d || A.cols() != d) throw InputError("dimension mismatch: basis matrix must be d x d");
  if (!A.allFinite()) throw InputError("degenerate lattice: non-finite basis");
  if (m < 0) throw InputError("negative internal-atom count");

  const double det = A.determinant();
  const double scale = std::pow(A.norm(), d);
  if (!(std::abs(det) > 1e-12 * std::max(scale, 1e-300))) throw InputError("degenerate lattice: singular basis");

  LatticeSpec spec;
  spec.d = d;
  spec.A = A;
  spec.det_abs = std::abs(det);
  spec.m = m;

  const int nc = 1 << d;
  spec.Z.resize(d, nc);
  for (int j = 0; j < nc; ++j) {
    spec.Z.col(j) = A * (corner_bits(d, j).cast<double>() - Vector::Constant(d, 0.5));
  }

  if (stencil_offsets) {
    std::set<std::vector<int>> seen;
    bool has_zero = false;
    for (const auto& o : *stencil_offsets) {
      if (o.size() != d) throw InputError("bad stencil: offset dimension differs from d");
      if (!seen.insert(lex_key(o)).second) throw InputError("bad stencil: duplicate offset");
      has_zero = has_zero || o.isZero();
    }
    if (!has_zero) throw InputError("bad stencil: zero offset missing");
    spec.cell_offsets.push_back(IntVector::Zero(d));
    for (const auto& o : *stencil_offsets)
      if (!o.isZero()) spec.cell_offsets.push_back(o);
  } else {
    spec.cell_offsets.push_back(IntVector::Zero(d));
  }

  spec.reach = 0;
  for (const auto& o : spec.cell_offsets) spec.reach = std::max(spec.reach, o.cwiseAbs().maxCoeff());

  std::set<std::vector<int>> corner_keys;
  for (int j = 0; j < nc; ++j) {
    spec.site_offsets.push_back(corner_bits(d, j));
    corner_keys.insert(lex_key(spec.site_offsets.back()));
  }
  std::set<std::vector<int>> extra;
  for (const auto& o : spec.cell_offsets) {
    for (int j = 0; j < nc; ++j) {
      const IntVector w = o + corner_bits(d, j);
      auto key = lex_key(w);
      if (!corner_keys.count(key)) extra.insert(key);
    }
  }
  for (const auto& key : extra) {
    IntVector w(d);
    for (int i = 0; i < d; ++i) w(i) = key[d - 1 - i];
    spec.site_offsets.push_back(w);
  }
  return spec;
}

CellGrid::CellGrid(LatticeSpec spec, int N) : spec_(std::move(spec)), N_(N) {
  const int d = spec_.d;
  const int r = spec_.boundary_layer();
  if (N <= 2 * r) throw InputError("no interior cells: need N > 2r");

  n_cells_ = ipow(N, d);
  n_sites_ = ipow(N + 1, d);
  interior_flag_.assign(n_cells_, 0);
  pinned_flag_.assign(n_sites_, 0);

  for (int c = 0; c < n_cells_; ++c) {
    const IntVector k = cell_coords(c);
    // Every stencil cell of an interior cell must have its closure inside the
    // open box, i.e. lie in {1..N-2}^d.
    const bool inside = (k.array() >= r).all() && (k.array() <= N - 1 - r).all();
    interior_flag_[c] = inside ? 1 : 0;
    (inside ? interior_ : boundary_).push_back(c);
  }
  const int nc = spec_.corners();
  for (int c : boundary_) {
    const IntVector k = cell_coords(c);
    for (int j = 0; j < nc; ++j) pinned_flag_[site_index(k + spec_.site_offsets[j])] = 1;
  }
  for (int s = 0; s < n_sites_; ++s) (pinned_flag_[s] ? pinned_ : free_).push_back(s);
}

IntVector CellGrid::cell_coords(int cell) const {
  IntVector k(spec_.d);
  int rest = cell;
  for (int i = 0; i < spec_.d; ++i) {
    k(i) = rest % N_;
    rest /= N_;
  }
  return k;
}

int CellGrid::cell_index(const IntVector& k) const {
  int idx = 0;
  for (int i = spec_.d - 1; i >= 0; --i) idx = idx * N_ + k(i);
  return idx;
}

IntVector CellGrid::site_coords(int site) const {
  IntVector k(spec_.d);
  int rest = site;
  for (int i = 0; i < spec_.d; ++i) {
    k(i) = rest % (N_ + 1);
    rest /= (N_ + 1);
  }
  return k;
}

int CellGrid::site_index(const IntVector& k) const {
  if ((k.array() < 0).any() || (k.array() > N_).any()) return kOutside;
  int idx = 0;
  for (int i = spec_.d - 1; i >= 0; --i) idx = idx * (N_ + 1) + k(i);
  return idx;
}

Vector CellGrid::site_position(int site) const { return spec_.A * site_coords(site).cast<double>(); }

Vector CellGrid::cell_center(int cell) const {
  return spec_.A * (cell_coords(cell).cast<double>() + Vector::Constant(spec_.d, 0.5));
}

std::vector<int> CellGrid::cell_sites(int cell) const {
  if (cell < 0 || cell >= n_cells_) throw InputError("cell index out of range");
  const IntVector k = cell_coords(cell);
  std::vector<int> out;
  out.reserve(spec_.site_offsets.size());
  for (const auto& w : spec_.site_offsets) out.push_back(site_index(k + w));
  return out;
}

CellGrid build_grid(const LatticeSpec& spec, int N) { return CellGrid(spec, N); }

}  // namespace cellhom
