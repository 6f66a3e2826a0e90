#include "cellhom/elasticity.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace cellhom {

ElasticTensor::ElasticTensor(int dim) : d(dim), c(Matrix::Zero(dim * dim, dim * dim)), error(Matrix::Zero(dim * dim, dim * dim)) {}

double ElasticTensor::major_symmetry_residual() const { return (c - c.transpose()).cwiseAbs().maxCoeff(); }

double ElasticTensor::minor_symmetry_residual() const {
  double r = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          r = std::max(r, std::abs((*this)(i, j, k, l) - (*this)(j, i, k, l)));
          r = std::max(r, std::abs((*this)(i, j, k, l) - (*this)(i, j, l, k)));
        }
  return r;
}

Matrix ElasticTensor::voigt() const {
  std::vector<std::pair<int, int>> pairs;
  if (d == 2) pairs = {{0, 0}, {1, 1}, {0, 1}};
  else pairs = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  const int n = static_cast<int>(pairs.size());
  Matrix v(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) v(a, b) = (*this)(pairs[a].first, pairs[a].second, pairs[b].first, pairs[b].second);
  return v;
}

std::vector<Vector> lattice_shell_vectors(const LatticeSpec& spec, double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InputError("empty shell set: cutoff must be positive and finite");
  const int d = spec.d;
  const Matrix Ainv = spec.A.inverse();
  const int R = static_cast<int>(std::ceil(cutoff * Ainv.jacobiSvd().singularValues()(0)));
  const int side = 2 * R + 1;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  std::vector<Vector> out;
  for (int idx = 0; idx < total; ++idx) {
    Vector k(d);
    int rest = idx;
    for (int i = 0; i < d; ++i) {
      k(i) = rest % side - R;
      rest /= side;
    }
    if (k.isZero()) continue;
    const Vector x = spec.A * k;
    if (x.norm() <= cutoff + 1e-12) out.push_back(x);
  }
  if (out.empty()) throw InputError("empty shell set: no lattice vector within cutoff");
  return out;
}

ElasticTensor pair_elastic_tensor(const PairPotential& V, const LatticeSpec& spec, double cutoff) {
  const int d = spec.d;
  ElasticTensor t(d);
  for (const Vector& x : lattice_shell_vectors(spec, cutoff)) {
    const double r = x.norm();
    const double v1 = V.d1(r, r);
    const double v2 = V.d2(r, r);
    if (!std::isfinite(v1) || !std::isfinite(v2)) throw NumericError("non-finite potential derivative");
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            const double xxxx = x(i) * x(j) * x(k) * x(l);
            t(i, j, k, l) += v2 * xxxx / (r * r) + v1 * ((i == k ? x(j) * x(l) / r : 0.0) - xxxx / (r * r * r));
          }
  }
  t.c /= spec.det_abs;
  return t;
}

namespace {

Matrix fd_hessian(const Density& W, int d, double h) {
  const int n = d * d;
  const Matrix I = Matrix::Identity(d, d);
  auto at = [&](int a, double ha, int b, double hb) {
    Matrix M = I;
    M(a / d, a % d) += ha;
    M(b / d, b % d) += hb;
    const double v = W(M);
    if (!std::isfinite(v)) throw NumericError("non-finite evaluation");
    return v;
  };
  const double w0 = W(I);
  if (!std::isfinite(w0)) throw NumericError("non-finite evaluation");
  Matrix H(n, n);
  for (int a = 0; a < n; ++a) {
    H(a, a) = (at(a, h, a, 0.0) - 2.0 * w0 + at(a, -h, a, 0.0)) / (h * h);
    for (int b = a + 1; b < n; ++b) {
      H(a, b) = (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) / (4.0 * h * h);
      H(b, a) = H(a, b);
    }
  }
  return H;
}

}  // namespace

ElasticTensor numeric_elastic_tensor(const Density& W, int d, double h) {
  if (!(h > 0.0)) throw InputError("finite-difference step must be positive");
  const Matrix coarse = fd_hessian(W, d, h);
  const Matrix fine = fd_hessian(W, d, 0.5 * h);
  ElasticTensor t(d);
  t.c = (4.0 * fine - coarse) / 3.0;
  t.error = (fine - coarse).cwiseAbs() / 3.0;
  return t;
}

double CauchyReport::max_cauchy() const {
  double r = 0.0;
  for (const auto& [label, value] : cauchy) r = std::max(r, value);
  return r;
}

CauchyReport cauchy_residuals(const ElasticTensor& t) {
  CauchyReport rep;
  auto rel = [&](const char* label, int i, int j, int k, int l, int p, int q, int r, int s) {
    rep.cauchy.emplace_back(label, std::abs(t(i, j, k, l) - t(p, q, r, s)));
  };
  if (t.d == 2) {
    rel("c1122-c1212", 0, 0, 1, 1, 0, 1, 0, 1);
  } else {
    rel("c1122-c1212", 0, 0, 1, 1, 0, 1, 0, 1);
    rel("c2233-c2323", 1, 1, 2, 2, 1, 2, 1, 2);
    rel("c3311-c3131", 2, 2, 0, 0, 2, 0, 2, 0);
    rel("c1123-c1213", 0, 0, 1, 2, 0, 1, 0, 2);
    rel("c2231-c2321", 1, 1, 2, 0, 1, 2, 1, 0);
    rel("c3312-c3132", 2, 2, 0, 1, 2, 0, 2, 1);
  }
  rep.minor_symmetry = t.minor_symmetry_residual();
  rep.major_symmetry = t.major_symmetry_residual();
  return rep;
}

double quadratic_model_hessian_check(const QuadraticForm& Q, double kappa, double delta, double h) {
  const int d = Q.dim();
  const LatticeSpec spec = build_lattice(d, Matrix::Identity(d, d));
  const EnergyModel model = quadratic_form_model(spec, Q, kappa, delta);
  const Matrix s = model.zero_internal();
  const Density W = [&](const Matrix& M) { return model.energy(affine_cell_gradient(spec, M), s) / spec.det_abs; };
  const ElasticTensor t = numeric_elastic_tensor(W, d, h);
  const Matrix Qsym = 0.5 * (Q.matrix + Q.matrix.transpose());
  return (0.5 * t.c - Qsym).cwiseAbs().maxCoeff();
}

double equilibrium_lj_sigma(const LatticeSpec& spec, double cutoff) {
  // sum V'(r) r = 4 (-12 sigma^12 S12 + 6 sigma^6 S6), S_n = sum r^-n.
  double s6 = 0.0, s12 = 0.0;
  for (const Vector& x : lattice_shell_vectors(spec, cutoff)) {
    const double r = x.norm();
    s6 += std::pow(r, -6);
    s12 += std::pow(r, -12);
  }
  return std::pow(s6 / (2.0 * s12), 1.0 / 6.0);
}

void write_tensor_csv(const ElasticTensor& t, std::ostream& out) {
  out << "i,j,k,l,c_ijkl\n";
  char buf[32];
  for (int i = 0; i < t.d; ++i)
    for (int j = 0; j < t.d; ++j)
      for (int k = 0; k < t.d; ++k)
        for (int l = 0; l < t.d; ++l) {
          std::snprintf(buf, sizeof buf, "%.17g", t(i, j, k, l));
          out << i + 1 << ',' << j + 1 << ',' << k + 1 << ',' << l + 1 << ',' << buf << '\n';
        }
}

}  // namespace cellhom
