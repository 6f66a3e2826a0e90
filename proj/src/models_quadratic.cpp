#include "cellhom/models.hpp"

#include <algorithm>
#include <cmath>

namespace cellhom {

namespace {

Vector vec_rows(const Matrix& M) {
  Vector v(M.size());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) v(i * M.cols() + j) = M(i, j);
  return v;
}

Matrix unvec_rows(const Vector& v, int d) {
  Matrix M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = v(i * d + j);
  return M;
}

// Orthonormal bases (as vectorized matrices) of symmetric and antisymmetric
// d x d matrices.
std::pair<Matrix, Matrix> sym_skew_bases(int d) {
  std::vector<Vector> sym, skew;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Matrix S = Matrix::Zero(d, d);
      S(i, j) += 1.0;
      S(j, i) += 1.0;
      sym.push_back(vec_rows(S).normalized());
      if (i != j) {
        Matrix K = Matrix::Zero(d, d);
        K(i, j) = 1.0;
        K(j, i) = -1.0;
        skew.push_back(vec_rows(K).normalized());
      }
    }
  }
  Matrix Bs(d * d, sym.size()), Bk(d * d, skew.size());
  for (std::size_t n = 0; n < sym.size(); ++n) Bs.col(n) = sym[n];
  for (std::size_t n = 0; n < skew.size(); ++n) Bk.col(n) = skew[n];
  return {Bs, Bk};
}

struct Smoothstep {
  double delta;
  // h(t) = 1 for t <= delta/2, 0 for t >= delta, quintic C^2 blend between.
  double value(double t) const {
    const double u = std::clamp((delta - t) / (0.5 * delta), 0.0, 1.0);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  }
  double derivative(double t) const {
    const double u = (delta - t) / (0.5 * delta);
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 30.0 * u * u * (u - 1.0) * (u - 1.0) * (-2.0 / delta);
  }
};

class QuadraticEnergy final : public CellEnergy {
 public:
  QuadraticEnergy(const LatticeSpec& spec, QuadraticForm Q, double kappa, double delta)
      : d_(spec.d),
        det_abs_(spec.det_abs),
        Z_(spec.Z),
        P_(spec.Z.transpose() * (spec.Z * spec.Z.transpose()).inverse()),
        Qsym_(0.5 * (Q.matrix + Q.matrix.transpose())),
        kappa_(kappa),
        step_{delta} {}

  double evaluate(const ConstMatrixRef& F, const ConstMatrixRef&, Matrix* dF, Matrix*) const override {
    const Matrix Fp = F * P_;
    const Matrix Fpp = F - Fp * Z_;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(Fp.transpose() * Fp);
    const Vector u = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix& V = eig.eigenvectors();
    const Matrix U = V * u.asDiagonal() * V.transpose();
    const Vector e = vec_rows(U - Matrix::Identity(d_, d_));
    const Vector Qe = Qsym_ * e;

    const double t = Fp.determinant();
    const double h = step_.value(t);
    const double norm_sq = F.squaredNorm();
    const double E = det_abs_ * e.dot(Qe) + Fpp.squaredNorm() + kappa_ * h * (1.0 + norm_sq);

    if (dF) {
      // d/dU of |det A| Q(U - Id), pulled back through U = sqrt(C), C = F'^T F'.
      const Matrix GU = unvec_rows(2.0 * det_abs_ * Qe, d_);
      const Matrix Gs = 0.5 * (GU + GU.transpose());
      Matrix Gt = V.transpose() * Gs * V;
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
          const double denom = u(i) + u(j);
          Gt(i, j) = denom > 0.0 ? Gt(i, j) / denom : 0.0;
        }
      const Matrix H = V * Gt * V.transpose();
      Matrix dFp = 2.0 * Fp * H;
      const double hp = step_.derivative(t);
      if (hp != 0.0) {
        Matrix cof(2, 2);
        cof << Fp(1, 1), -Fp(1, 0), -Fp(0, 1), Fp(0, 0);
        dFp += kappa_ * hp * (1.0 + norm_sq) * cof;
      }
      *dF = dFp * P_.transpose() + 2.0 * Fpp + (2.0 * kappa_ * h) * Matrix(F);
    }
    return E;
  }

 private:
  int d_;
  double det_abs_;
  Matrix Z_;
  Matrix P_;
  Matrix Qsym_;
  double kappa_;
  Smoothstep step_;
};

}  // namespace

int QuadraticForm::dim() const {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.rows()))));
  return d;
}

double QuadraticForm::operator()(const Matrix& M) const {
  const Vector v = vec_rows(M);
  return v.dot(matrix * v);
}

QuadraticForm isotropic_form(int d, double mu, double lambda) {
  QuadraticForm Q;
  Q.matrix = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Q.matrix(i * d + j, i * d + j) += 0.5 * mu;
      Q.matrix(i * d + j, j * d + i) += 0.5 * mu;
    }
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) Q.matrix(i * d + i, k * d + k) += 0.5 * lambda;
  return Q;
}

void check_admissible(const QuadraticForm& Q) {
  const int n = static_cast<int>(Q.matrix.rows());
  const int d = Q.dim();
  if (Q.matrix.cols() != n || d * d != n || (d != 2 && d != 3)) throw InputError("inadmissible Q: not a form on d x d matrices");
  if (!Q.matrix.allFinite()) throw InputError("inadmissible Q: non-finite entries");
  const double scale = std::max(1.0, Q.matrix.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  if ((Q.matrix - Q.matrix.transpose()).cwiseAbs().maxCoeff() > tol) throw InputError("inadmissible Q: not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> all(Q.matrix);
  if (all.eigenvalues().minCoeff() < -tol) throw InputError("inadmissible Q: not positive semidefinite");
  const auto [Bs, Bk] = sym_skew_bases(d);
  Eigen::SelfAdjointEigenSolver<Matrix> on_sym(Bs.transpose() * Q.matrix * Bs);
  if (on_sym.eigenvalues().minCoeff() <= tol) throw InputError("inadmissible Q: not positive definite on symmetric matrices");
  if ((Q.matrix * Bk).cwiseAbs().maxCoeff() > tol) throw InputError("inadmissible Q: nonzero on antisymmetric matrices");
}

EnergyModel quadratic_form_model(const LatticeSpec& spec, const QuadraticForm& Q, double kappa, double delta) {
  if (spec.d != 2) throw InputError("quadratic form model is 2D only");
  if (!spec.is_unit_cell() || spec.m != 0) throw InputError("quadratic form model lives on a Bravais unit cell");
  if (Q.matrix.rows() != 4) throw InputError("dimension mismatch: Q must act on 2 x 2 matrices");
  check_admissible(Q);
  if (!(kappa > 0.0)) throw InputError("quadratic form model needs kappa > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("quadratic form model needs 0 < delta < 1");

  EnergyModel model("quadratic_form", spec, std::make_shared<QuadraticEnergy>(spec, Q, kappa, delta));
  model.p = 2.0;
  model.vanishes_on_rotations = true;
  model.params = {{"kappa", kappa}, {"delta", delta}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) model.params.emplace_back("Q" + std::to_string(i) + std::to_string(j), Q.matrix(i, j));

  // |U - Id|^2 >= |F'|^2 / 2 - d and |F|^2 = |F'Z|^2 + |F''|^2.
  const auto [Bs, Bk] = sym_skew_bases(2);
  (void)Bk;
  Eigen::SelfAdjointEigenSolver<Matrix> on_sym(Bs.transpose() * Q.matrix * Bs);
  const double qmin = on_sym.eigenvalues().minCoeff();
  const double qmax = Eigen::SelfAdjointEigenSolver<Matrix>(Q.matrix).eigenvalues().maxCoeff();
  const Matrix ZZt = spec.Z * spec.Z.transpose();
  const double zmax = Eigen::SelfAdjointEigenSolver<Matrix>(ZZt).eigenvalues().maxCoeff();
  const double zmin = Eigen::SelfAdjointEigenSolver<Matrix>(ZZt).eigenvalues().minCoeff();
  GrowthBounds g;
  g.c = std::min(0.5 * spec.det_abs * qmin / zmax, 1.0);
  g.c_lower = 2.0 * spec.det_abs * qmin;
  // |F'|^2 <= |F|^2 / zmin; Q(U - Id) <= 2 qmax (|F'|^2 + d).
  g.c_upper = std::max(2.0 * spec.det_abs * qmax / zmin + 1.0 + kappa, 4.0 * spec.det_abs * qmax + kappa);
  model.growth = g;
  return model;
}

}  // namespace cellhom
