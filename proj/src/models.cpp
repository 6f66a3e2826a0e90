#include "cellhom/models.hpp"

#include <cmath>

namespace cellhom {

namespace {

// Center the corner block of F; stencil columns move with the same mean.
Matrix centered(const ConstMatrixRef& F, int corners) {
  Matrix out = F;
  const Vector mean = F.leftCols(corners).rowwise().mean();
  out.colwise() -= mean;
  return out;
}

// Gradient of W(F - mean_corners(F)) from the gradient G of W at the centered
// argument: every column's mean contribution flows back to the corners.
void project_gradient(Matrix& G, int corners) {
  const Vector total = G.rowwise().sum();
  G.leftCols(corners).colwise() -= total / corners;
}

void check_shapes(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s) {
  if (F.rows() != model.dim() || F.cols() != model.n_cols())
    throw InputError("dimension mismatch: F must be d x n_cols");
  if (s.rows() != model.dim() || s.cols() != model.m()) throw InputError("dimension mismatch: s must be d x m");
}

std::vector<std::pair<int, int>> cell_edges(int d) {
  std::vector<std::pair<int, int>> edges;
  for (int j = 0; j < (1 << d); ++j)
    for (int i = 0; i < d; ++i)
      if (!((j >> i) & 1)) edges.emplace_back(j, j | (1 << i));
  return edges;
}

// Extreme nonzero eigenvalues of the graph Laplacian of the cell edges, which
// bound sum_e |f_a - f_b|^2 against |F|^2 on V_0.
std::pair<double, double> edge_laplacian_range(int d) {
  const int nc = 1 << d;
  Matrix L = Matrix::Zero(nc, nc);
  for (auto [a, b] : cell_edges(d)) {
    L(a, a) += 1;
    L(b, b) += 1;
    L(a, b) -= 1;
    L(b, a) -= 1;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
  return {eig.eigenvalues()(1), eig.eigenvalues()(nc - 1)};
}

// ---------------------------------------------------------------------------

class HarmonicSpring final : public CellEnergy {
 public:
  HarmonicSpring(int d, double k, double r0) : edges_(cell_edges(d)), weight_(k / (1 << (d - 1))), r0_(r0) {}

  double evaluate(const ConstMatrixRef& F, const ConstMatrixRef&, Matrix* dF, Matrix*) const override {
    double E = 0.0;
    if (dF) dF->setZero();
    for (auto [a, b] : edges_) {
      const SmallVector e = F.col(b) - F.col(a);
      const double len = e.norm();
      const double stretch = len - r0_;
      E += weight_ * stretch * stretch;
      if (dF && len > 0.0) {
        const SmallVector g = (2.0 * weight_ * stretch / len) * e;
        dF->col(b) += g;
        dF->col(a) -= g;
      }
    }
    return E;
  }

 private:
  std::vector<std::pair<int, int>> edges_;
  double weight_;
  double r0_;
};

class SimplexIntegral final : public CellEnergy {
 public:
  SimplexIntegral(MatrixDensity V, SimplicialDecomposition decomp) : V_(std::move(V)), decomp_(std::move(decomp)) {}

  double evaluate(const ConstMatrixRef& F, const ConstMatrixRef&, Matrix* dF, Matrix*) const override {
    double E = 0.0;
    if (dF) dF->setZero();
    for (const auto& S : decomp_.simplices) {
      const Matrix G = F * S.gradient_map;
      E += S.volume * V_.value(G);
      if (dF) *dF += S.volume * V_.gradient(G) * S.gradient_map.transpose();
    }
    return E;
  }

 private:
  MatrixDensity V_;
  SimplicialDecomposition decomp_;
};

class MultilatticeHarmonic final : public CellEnergy {
 public:
  MultilatticeHarmonic(const LatticeSpec& spec, double k, double r0)
      : edges_(cell_edges(spec.d)), k_(k), r0_(r0), corners_(spec.corners()) {
    for (auto [a, b] : edges_) edge_rest_.push_back((spec.Z.col(b) - spec.Z.col(a)).norm());
  }

  double evaluate(const ConstMatrixRef& F, const ConstMatrixRef& s, Matrix* dF, Matrix* ds) const override {
    double E = 0.0;
    if (dF) dF->setZero();
    if (ds) ds->setZero();
    const SmallVector atom = s.col(0);
    for (int i = 0; i < corners_; ++i) {
      const SmallVector e = F.col(i) - atom;
      const double len = e.norm();
      const double stretch = len - r0_;
      E += 0.5 * k_ * stretch * stretch;
      if (len > 0.0) {
        const SmallVector g = (k_ * stretch / len) * e;
        if (dF) dF->col(i) += g;
        if (ds) ds->col(0) -= g;
      }
    }
    for (std::size_t n = 0; n < edges_.size(); ++n) {
      const auto [a, b] = edges_[n];
      const SmallVector e = F.col(b) - F.col(a);
      const double len = e.norm();
      const double stretch = len - edge_rest_[n];
      E += 0.5 * k_ * stretch * stretch;
      if (dF && len > 0.0) {
        const SmallVector g = (k_ * stretch / len) * e;
        dF->col(b) += g;
        dF->col(a) -= g;
      }
    }
    return E;
  }

 private:
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> edge_rest_;
  double k_;
  double r0_;
  int corners_;
};

}  // namespace

EnergyModel::EnergyModel(std::string name, LatticeSpec spec, std::shared_ptr<const CellEnergy> impl)
    : name_(std::move(name)), spec_(std::move(spec)), impl_(std::move(impl)) {}

double EnergyModel::energy(const ConstMatrixRef& F, const ConstMatrixRef& s) const {
  check_shapes(*this, F, s);
  const Matrix Fc = centered(F, spec_.corners());
  return impl_->evaluate(Fc, s, nullptr, nullptr);
}

double EnergyModel::energy(const ConstMatrixRef& F, const ConstMatrixRef& s, Matrix& dF, Matrix& ds) const {
  check_shapes(*this, F, s);
  const Matrix Fc = centered(F, spec_.corners());
  dF.resize(F.rows(), F.cols());
  ds.resize(s.rows(), s.cols());
  const double E = impl_->evaluate(Fc, s, &dF, &ds);
  project_gradient(dF, spec_.corners());
  return E;
}

namespace {

void gate(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s) {
  check_shapes(model, F, s);
  if (!F.allFinite() || !s.allFinite()) throw InputError("non-finite input");
  const int nc = model.spec().corners();
  const double row_sum = F.leftCols(nc).rowwise().sum().cwiseAbs().maxCoeff();
  if (row_sum > 1e-12 * (1.0 + F.leftCols(nc).norm())) throw InputError("not a discrete gradient: corner rows must sum to zero");
}

}  // namespace

double eval_cell_energy(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s) {
  gate(model, F, s);
  const double E = model.energy(F, s);
  if (!std::isfinite(E)) throw NumericError("non-finite energy");
  return E;
}

CellGradient grad_cell_energy(const EnergyModel& model, const ConstMatrixRef& F, const ConstMatrixRef& s) {
  gate(model, F, s);
  CellGradient g;
  model.energy(F, s, g.dF, g.ds);
  return g;
}

Matrix affine_cell_gradient(const LatticeSpec& spec, const Matrix& M) { return M * spec.stencil_vectors(); }

// ---------------------------------------------------------------------------

EnergyModel harmonic_spring_model(const LatticeSpec& spec, double k, double r0) {
  if (!(k > 0.0) || !(r0 > 0.0)) throw InputError("harmonic spring model needs k > 0 and r0 > 0");
  if (!spec.is_unit_cell() || spec.m != 0) throw InputError("harmonic spring model lives on a Bravais unit cell");

  EnergyModel model("harmonic_spring", spec, std::make_shared<HarmonicSpring>(spec.d, k, r0));
  model.p = 2.0;
  model.params = {{"k", k}, {"r0", r0}};
  model.vanishes_on_rotations = true;
  for (int j = 1; j <= spec.d; ++j) {
    // Rest state needs unit-length edges, i.e. |A e_j| = r0 for every axis.
    if (std::abs(spec.A.col(j - 1).norm() - r0) > 1e-12) model.vanishes_on_rotations = false;
  }

  const double w = k / (1 << (spec.d - 1));
  const double n_edges = static_cast<double>(cell_edges(spec.d).size());
  const auto [lmin, lmax] = edge_laplacian_range(spec.d);
  GrowthBounds g;
  g.c = 0.5 * w * lmin;
  g.c_lower = w * n_edges * r0 * r0;
  g.c_upper = std::max(2.0 * w * lmax, 2.0 * w * n_edges * r0 * r0);
  model.growth = g;
  return model;
}

MatrixDensity frobenius_squared_density() {
  MatrixDensity V;
  V.name = "frobenius_squared";
  V.value = [](const Matrix& M) { return M.squaredNorm(); };
  V.gradient = [](const Matrix& M) -> Matrix { return 2.0 * M; };
  V.frame_indifferent = true;
  V.quadratic_growth = GrowthBounds{1.0, 0.0, 1.0};
  return V;
}

MatrixDensity constant_density(double value) {
  MatrixDensity V;
  V.name = "constant";
  V.value = [value](const Matrix&) { return value; };
  V.gradient = [](const Matrix& M) -> Matrix { return Matrix::Zero(M.rows(), M.cols()); };
  V.frame_indifferent = true;
  return V;
}

EnergyModel quasiconvex_wrapper_model(const LatticeSpec& spec, const MatrixDensity& V,
                                      const SimplicialDecomposition& decomp) {
  if (!spec.is_unit_cell() || spec.m != 0) throw InputError("quasiconvex wrapper lives on a Bravais unit cell");
  validate_decomposition(spec, decomp);
  for (const auto& S : decomp.simplices) {
    // Corner-only: every vertex weight is a unit vector.
    for (int v = 0; v < S.weights.cols(); ++v)
      if (std::abs(S.weights.col(v).maxCoeff() - 1.0) > 1e-15)
        throw InputError("bad decomposition: vertices must be cell corners");
  }

  EnergyModel model("quasiconvex_wrapper", spec, std::make_shared<SimplexIntegral>(V, decomp));
  model.p = 2.0;
  model.frame_indifferent = V.frame_indifferent;
  model.params = {{"density:" + V.name, 1.0}};

  if (V.quadratic_growth) {
    // sum_S |S| |F B_S|^2 = tr(F K F^T); bound K on the complement of constants.
    const int nc = spec.corners();
    Matrix K = Matrix::Zero(nc, nc);
    for (const auto& S : decomp.simplices) K += S.volume * S.gradient_map * S.gradient_map.transpose();
    Matrix ones = Matrix::Ones(nc, 1) / std::sqrt(double(nc));
    Eigen::HouseholderQR<Matrix> qr(ones);
    const Matrix basis = Matrix(qr.householderQ()).rightCols(nc - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(basis.transpose() * K * basis);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    const GrowthBounds& gv = *V.quadratic_growth;
    GrowthBounds g;
    g.c = gv.c * lmin;
    g.c_lower = gv.c_lower * spec.det_abs;
    g.c_upper = std::max(gv.c_upper * lmax, gv.c_upper * spec.det_abs);
    model.growth = g;
  }
  return model;
}

EnergyModel multilattice_harmonic_model(const LatticeSpec& spec, double k, std::optional<double> r0) {
  if (spec.m != 1) throw InputError("unsupported internal count: multilattice harmonic model needs m = 1");
  if (spec.d != 2 || !spec.is_unit_cell()) throw InputError("multilattice harmonic model is 2D unit-cell only");
  if (!(k > 0.0)) throw InputError("multilattice harmonic model needs k > 0");
  const double rest = r0.value_or(spec.Z.col(0).norm());
  if (!(rest > 0.0)) throw InputError("multilattice harmonic model needs r0 > 0");

  auto impl = std::make_shared<MultilatticeHarmonic>(spec, k, rest);
  EnergyModel model("multilattice_harmonic", spec, impl);
  model.p = 2.0;
  model.q = 2.0;
  model.params = {{"k", k}, {"r0", rest}};
  model.vanishes_on_rotations = true;
  for (int i = 0; i < spec.corners(); ++i)
    if (std::abs(spec.Z.col(i).norm() - rest) > 1e-12) model.vanishes_on_rotations = false;

  double edge_rest_sq = 0.0;
  for (auto [a, b] : cell_edges(spec.d)) edge_rest_sq += (spec.Z.col(b) - spec.Z.col(a)).squaredNorm();
  const auto [lmin, lmax] = edge_laplacian_range(spec.d);
  (void)lmin;
  const double nc = spec.corners();
  GrowthBounds g;
  // sum_i |f_i - s|^2 = |F|^2 + 2^d |s|^2 on V_0.
  g.c = 0.25 * k;
  g.c_lower = 0.5 * k * nc * rest * rest;
  g.c_upper = std::max({k * (1.0 + lmax), k * nc, k * nc * rest * rest + k * edge_rest_sq});
  model.growth = g;
  return model;
}

}  // namespace cellhom
