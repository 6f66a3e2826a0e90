#include "cellhom/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace cellhom {

Matrix InternalField::mean() const {
  const int n = static_cast<int>(grid->interior_cells().size());
  Matrix total = Matrix::Zero(grid->dim(), m());
  for (int c = 0; c < n; ++c) total += cell(c);
  return total / n;
}

Deformation affine_deformation(GridPtr grid, const Matrix& M) {
  if (M.rows() != grid->dim() || M.cols() != grid->dim()) throw InputError("dimension mismatch: M must be d x d");
  Deformation def;
  def.y.resize(grid->dim(), grid->n_sites());
  for (int s = 0; s < grid->n_sites(); ++s) def.y.col(s) = M * grid->site_position(s);
  def.grid = std::move(grid);
  return def;
}

Deformation apply_boundary(Deformation def, const std::function<Vector(const Vector&)>& g) {
  for (int s : def.grid->pinned_sites()) {
    const Vector v = g(def.grid->site_position(s));
    if (v.size() != def.grid->dim()) throw InputError("dimension mismatch: boundary datum");
    if (!v.allFinite()) throw InputError("non-finite boundary value");
    def.y.col(s) = v;
  }
  return def;
}

Matrix corner_gradient(const Deformation& def, int cell) {
  const auto sites = def.grid->cell_sites(cell);
  const int nc = def.grid->spec().corners();
  Matrix F(def.grid->dim(), nc);
  for (int j = 0; j < nc; ++j) F.col(j) = def.y.col(sites[j]);
  F.colwise() -= F.rowwise().mean();
  return F;
}

Matrix discrete_gradient(const Deformation& def, int cell) {
  const auto& grid = *def.grid;
  if (cell < 0 || cell >= grid.n_cells()) throw InputError("cell index out of range");
  if (!grid.is_interior(cell)) throw InputError("gradient undefined on boundary layer");
  const auto sites = grid.cell_sites(cell);
  const int nc = grid.spec().corners();
  Matrix F(grid.dim(), sites.size());
  for (std::size_t j = 0; j < sites.size(); ++j) F.col(j) = def.y.col(sites[j]);
  const Vector mean = F.leftCols(nc).rowwise().mean();
  F.colwise() -= mean;
  return F;
}

std::vector<InterpolationPiece> interpolate_cell(const Deformation& def, int cell) {
  const auto& spec = def.grid->spec();
  const auto sites = def.grid->cell_sites(cell);
  Matrix Y(spec.d, spec.corners());
  for (int j = 0; j < spec.corners(); ++j) Y.col(j) = def.y.col(sites[j]);
  const Vector center = def.grid->cell_center(cell);

  std::vector<InterpolationPiece> out;
  for (const auto& S : barycentric_decomposition(spec).simplices) {
    InterpolationPiece piece;
    piece.vertices = S.vertices.colwise() + center;
    piece.G = Y * S.gradient_map;
    piece.volume = S.volume;
    out.push_back(std::move(piece));
  }
  return out;
}

namespace {

struct RatioData {
  std::vector<Matrix> maps;  // gradient maps restricted to an orthonormal basis of 1-perp
  std::vector<double> weights;
  Matrix basis;              // 2^d x (2^d - 1)
};

RatioData ratio_data(const LatticeSpec& spec) {
  const int nc = spec.corners();
  Eigen::HouseholderQR<Matrix> qr(Matrix::Ones(nc, 1));
  RatioData data;
  data.basis = Matrix(qr.householderQ()).rightCols(nc - 1);
  for (const auto& S : barycentric_decomposition(spec).simplices) {
    data.maps.push_back(data.basis.transpose() * S.gradient_map);
    data.weights.push_back(S.volume / spec.det_abs);
  }
  return data;
}

double ratio_value(const RatioData& data, const Matrix& X, double p, Matrix* grad) {
  double total = 0.0;
  if (grad) grad->setZero(X.rows(), X.cols());
  for (std::size_t n = 0; n < data.maps.size(); ++n) {
    const Matrix G = X * data.maps[n];
    const double g2 = G.squaredNorm();
    total += data.weights[n] * std::pow(g2, 0.5 * p);
    if (grad && g2 > 0.0) *grad += data.weights[n] * p * std::pow(g2, 0.5 * p - 1.0) * G * data.maps[n].transpose();
  }
  return total;
}

// Extremum of the p-mean on the unit sphere by projected gradient steps.
double refine_on_sphere(const RatioData& data, Matrix X, double p, double sign) {
  X.normalize();
  Matrix grad;
  double f = ratio_value(data, X, p, &grad);
  double step = 0.1;
  for (int it = 0; it < 500 && step > 1e-14; ++it) {
    Matrix tangent = grad - (grad.cwiseProduct(X).sum()) * X;
    if (tangent.norm() < 1e-15) break;
    Matrix trial = X + sign * step * tangent;
    trial.normalize();
    Matrix trial_grad;
    const double ft = ratio_value(data, trial, p, &trial_grad);
    if (sign * (ft - f) > 0.0) {
      X = trial;
      f = ft;
      grad = trial_grad;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return f;
}

}  // namespace

double interpolation_ratio(const LatticeSpec& spec, const Matrix& corners, double p) {
  if (corners.rows() != spec.d || corners.cols() != spec.corners()) throw InputError("dimension mismatch: corner block");
  const double norm = corners.norm();
  if (!(norm > 0.0)) throw InputError("ratio undefined: zero discrete gradient");
  double mean = 0.0;
  for (const auto& S : barycentric_decomposition(spec).simplices)
    mean += S.volume * std::pow((corners * S.gradient_map).norm(), p);
  mean /= spec.det_abs;
  return mean / std::pow(norm, p);
}

std::pair<double, double> gradient_equivalence_ratio(const Deformation& def, int cell, double p) {
  const double r = interpolation_ratio(def.grid->spec(), corner_gradient(def, cell), p);
  return {r, r};
}

InterpolationConstants interpolation_constants(const LatticeSpec& spec, double p) {
  if (!(p >= 1.0)) throw InputError("interpolation constants need p >= 1");
  const RatioData data = ratio_data(spec);
  const int d = spec.d;
  const int n = static_cast<int>(data.basis.cols());
  InterpolationConstants out;
  out.p = p;

  if (p == 2.0) {
    Matrix K = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < data.maps.size(); ++s) K += data.weights[s] * data.maps[s] * data.maps[s].transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
    // Widened by a few ulps of the ratio's own rounding.
    out.lower = eig.eigenvalues().minCoeff() * (1.0 - 1e-12);
    out.upper = eig.eigenvalues().maxCoeff() * (1.0 + 1e-12);
    out.exact = true;
    return out;
  }

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  struct Sample {
    double value;
    Matrix X;
  };
  std::vector<Sample> samples;
  for (int i = 0; i < 4000; ++i) {
    Matrix X(d, n);
    for (int k = 0; k < X.size(); ++k) X.data()[k] = normal(rng);
    X.normalize();
    samples.push_back({ratio_value(data, X, p, nullptr), X});
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.value < b.value; });
  const int keep = 32;
  out.lower = samples.front().value;
  out.upper = samples.back().value;
  for (int i = 0; i < keep; ++i) {
    out.lower = std::min(out.lower, refine_on_sphere(data, samples[i].X, p, -1.0));
    out.upper = std::max(out.upper, refine_on_sphere(data, samples[samples.size() - 1 - i].X, p, 1.0));
  }
  out.lower *= 1.0 - 1e-9;
  out.upper *= 1.0 + 1e-9;
  return out;
}

void write_deformation_csv(const Deformation& def, std::ostream& out) {
  const int d = def.grid->dim();
  const char* axis[] = {"x", "y", "z"};
  for (int i = 0; i < d; ++i) out << "site_" << axis[i] << ',';
  for (int i = 0; i < d; ++i) out << "y_" << i + 1 << (i + 1 < d ? "," : "\n");
  char buf[32];
  for (int s = 0; s < def.grid->n_sites(); ++s) {
    const Vector x = def.grid->site_position(s);
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i));
      out << buf << ',';
    }
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", def.y(i, s));
      out << buf << (i + 1 < d ? "," : "\n");
    }
  }
}

}  // namespace cellhom
