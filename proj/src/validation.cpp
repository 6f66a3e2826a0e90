#include "cellhom/validation.hpp"

#include "cellhom/elasticity.hpp"
#include "cellhom/homogenize.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>

namespace cellhom {

namespace {

struct NamedModel {
  std::string label;
  EnergyModel model;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

LatticeSpec square(int d, int m = 0) { return build_lattice(d, Matrix::Identity(d, d), std::nullopt, m); }

std::vector<NamedModel> builtin_models() {
  const LatticeSpec s2 = square(2);
  std::vector<NamedModel> out;
  out.push_back({"harmonic_spring 2D", harmonic_spring_model(s2, 1.0, 1.0)});
  out.push_back({"harmonic_spring 3D", harmonic_spring_model(square(3), 1.0, 1.0)});
  out.push_back({"pair harmonic_shell", pair_potential_model(s2, harmonic_shell(1.0, 1.0, 1.0), 1.0)});
  out.push_back({"pair lennard_jones", pair_potential_model(s2, lennard_jones(1.0, equilibrium_lj_sigma(s2, 2.0)), 2.0)});
  out.push_back({"wrapper kuhn", quasiconvex_wrapper_model(s2, frobenius_squared_density(), kuhn_decomposition(s2))});
  out.push_back({"wrapper other diagonal", quasiconvex_wrapper_model(s2, frobenius_squared_density(),
                                                                   corner_decomposition(s2, {{0, 1, 2}, {1, 2, 3}}))});
  out.push_back({"wrapper 3D", quasiconvex_wrapper_model(square(3), frobenius_squared_density(), kuhn_decomposition(square(3)))});
  out.push_back({"quadratic_form", quadratic_form_model(s2, isotropic_form(2, 1.0, 2.0), 1.0, 0.5)});
  out.push_back({"multilattice_harmonic", multilattice_harmonic_model(square(2, 1), 1.0)});
  return out;
}

Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = n(rng);
  return M;
}

Matrix random_rotation(int d, std::mt19937_64& rng) {
  Eigen::JacobiSVD<Matrix> svd(gaussian(d, d, rng, 1.0), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Matrix U = svd.matrixU();
    U.col(d - 1) *= -1.0;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

// Central differences of the cell energy, projected like the analytic
// gradient (corner rows summing to zero).
double cell_gradient_error(const EnergyModel& model, const Matrix& F, const Matrix& s) {
  Matrix dF, ds;
  model.energy(F, s, dF, ds);
  const double h = 1e-6;
  Matrix fd(F.rows(), F.cols());
  for (int i = 0; i < F.rows(); ++i)
    for (int j = 0; j < F.cols(); ++j) {
      Matrix Fp = F, Fm = F;
      Fp(i, j) += h;
      Fm(i, j) -= h;
      fd(i, j) = (model.energy(Fp, s) - model.energy(Fm, s)) / (2.0 * h);
    }
  const int nc = model.spec().corners();
  const Vector total = fd.rowwise().sum();
  fd.leftCols(nc).colwise() -= total / nc;
  Matrix fds(s.rows(), s.cols());
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) {
      Matrix sp = s, sm = s;
      sp(i, j) += h;
      sm(i, j) -= h;
      fds(i, j) = (model.energy(F, sp) - model.energy(F, sm)) / (2.0 * h);
    }
  double scale = std::max(1.0, dF.cwiseAbs().maxCoeff());
  double err = (fd - dF).cwiseAbs().maxCoeff();
  if (s.size() > 0) {
    scale = std::max(scale, ds.cwiseAbs().maxCoeff());
    err = std::max(err, (fds - ds).cwiseAbs().maxCoeff());
  }
  return err / scale;
}

SolveOptions light_solver(int threads) {
  SolveOptions o;
  o.n_random_starts = 2;
  o.threads = threads;
  return o;
}

using Check = std::function<PropertyResult()>;

}  // namespace

std::vector<PropertyResult> run_validation(bool quick, std::ostream& log, int threads) {
  const LatticeSpec s2 = square(2);
  const EnergyModel harmonic = harmonic_spring_model(s2, 1.0, 1.0);
  const int samples = quick ? 20 : 100;
  std::vector<std::pair<std::string, Check>> checks;

  checks.emplace_back("harmonic tension matches the exact box energy", [&] {
    const Matrix M = Eigen::Vector2d(1.2, 1.0).asDiagonal();
    double worst = 0.0;
    for (int N : quick ? std::vector<int>{8, 16} : std::vector<int>{8, 16, 32}) {
      const double exact = 0.04 * (N - 2.0) * (N - 2.0) / (double(N) * N);
      worst = std::max(worst, std::abs(f_N(harmonic, M, N, light_solver(threads)) - exact));
    }
    return PropertyResult{"", worst <= 1e-8, "max |f_N - exact| = " + fmt(worst)};
  });

  checks.emplace_back("rotations carry zero box energy", [&] {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (const auto& nm : builtin_models()) {
      if (!nm.model.vanishes_on_rotations || nm.model.m() > 0) continue;
      for (int t = 0; t < (quick ? 2 : 5); ++t) {
        const Matrix R = random_rotation(nm.model.dim(), rng);
        const int N = 2 * nm.model.spec().boundary_layer() + (nm.model.dim() == 3 ? 2 : 4);
        worst = std::max(worst, f_N(nm.model, R, N, light_solver(threads)));
      }
    }
    return PropertyResult{"", worst <= 1e-12, "max f_N(R) = " + fmt(worst)};
  });

  checks.emplace_back("cell energies are frame indifferent", [&] {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    for (const auto& nm : builtin_models()) {
      if (!nm.model.frame_indifferent) continue;
      const int d = nm.model.dim();
      for (int t = 0; t < samples; ++t) {
        const Matrix M = Matrix::Identity(d, d) + gaussian(d, d, rng, 0.1);
        const Matrix F = affine_cell_gradient(nm.model.spec(), M) + gaussian(d, nm.model.n_cols(), rng, 0.03);
        const Matrix s = gaussian(d, nm.model.m(), rng, 0.1);
        const Matrix R = random_rotation(d, rng);
        const double w = nm.model.energy(F, s);
        const double wr = nm.model.energy(R * F, R * s);
        worst = std::max(worst, std::abs(w - wr) / std::max(1.0, std::abs(w)));
      }
    }
    return PropertyResult{"", worst <= 1e-10, "max relative residual = " + fmt(worst)};
  });

  checks.emplace_back("cell gradients match central differences", [&] {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    std::string where;
    for (const auto& nm : builtin_models()) {
      const int d = nm.model.dim();
      for (int t = 0; t < samples; ++t) {
        const Matrix M = Matrix::Identity(d, d) + gaussian(d, d, rng, 0.1);
        const Matrix F = affine_cell_gradient(nm.model.spec(), M) + gaussian(d, nm.model.n_cols(), rng, 0.03);
        const Matrix s = gaussian(d, nm.model.m(), rng, 0.1);
        const double e = cell_gradient_error(nm.model, F, s);
        if (e > worst) {
          worst = e;
          where = nm.label;
        }
      }
    }
    return PropertyResult{"", worst <= 1e-6, "max relative error = " + fmt(worst) + " (" + where + ")"};
  });

  checks.emplace_back("box gradient matches central differences", [&] {
    std::mt19937_64 rng(14);
    double worst = 0.0;
    for (const auto& nm : builtin_models()) {
      const int N = 2 * nm.model.spec().boundary_layer() + 2;
      const GridPtr grid = std::make_shared<const CellGrid>(nm.model.spec(), N);
      const int d = nm.model.dim();
      const Matrix M = Matrix::Identity(d, d) + gaussian(d, d, rng, 0.05);
      std::optional<Matrix> s0;
      if (nm.model.m() > 0) s0 = gaussian(d, nm.model.m(), rng, 0.05);
      const Problem problem = assemble(grid, nm.model, M, s0);
      const Vector x = problem.affine_start() + gaussian(problem.n_vars(), 1, rng, 0.02);
      Vector g;
      problem.energy_and_gradient(x, &g);
      const Vector dir = gaussian(problem.n_vars(), 1, rng, 1.0);
      const double h = 1e-6;
      const double fd =
          (problem.energy_and_gradient(x + h * dir, nullptr) - problem.energy_and_gradient(x - h * dir, nullptr)) /
          (2.0 * h);
      const double an = g.dot(dir);
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    }
    return PropertyResult{"", worst <= 1e-6, "max relative error = " + fmt(worst)};
  });

  checks.emplace_back("solved box beats the tiled field", [&] {
    double worst = -1e300;
    for (const Matrix& M : {Matrix(Eigen::Vector2d(1.2, 1.0).asDiagonal()), Matrix(Eigen::Vector2d(0.5, 1.0).asDiagonal())}) {
      const TilingCheck t = tiling_upper_bound_check(harmonic, M, 8, 16, light_solver(threads));
      worst = std::max(worst, t.f_k_solved - t.f_k_tiled);
      worst = std::max(worst, t.f_k_tiled - t.tiled_bound);
    }
    return PropertyResult{"", worst <= 1e-9, "max violation = " + fmt(worst)};
  });

  checks.emplace_back("quadratic model Hessian equals its form", [&] {
    const double r = quadratic_model_hessian_check(isotropic_form(2, 1.0, 2.0), 1.0, 0.5);
    return PropertyResult{"", r <= 1e-5, "residual = " + fmt(r)};
  });

  checks.emplace_back("pair tensors obey the Cauchy relations", [&] {
    double worst = 0.0;
    for (int d : {2, 3}) {
      const LatticeSpec spec = square(d);
      for (double cutoff : {1.5, 2.0}) {
        const ElasticTensor t =
            pair_elastic_tensor(lennard_jones(1.0, equilibrium_lj_sigma(spec, cutoff)), spec, cutoff);
        worst = std::max(worst, cauchy_residuals(t).max_cauchy() / t.max_abs());
      }
    }
    return PropertyResult{"", worst <= 1e-10, "max relative residual = " + fmt(worst)};
  });

  checks.emplace_back("interpolated gradients stay within the certified constants", [&] {
    std::mt19937_64 rng(15);
    bool ok = true;
    std::string detail;
    for (double p : {2.0, 4.0}) {
      const InterpolationConstants c = interpolation_constants(s2, p);
      double lo = 1e300, hi = 0.0;
      for (int t = 0; t < (quick ? 1000 : 10000); ++t) {
        Matrix corners = gaussian(2, 4, rng, 1.0);
        const Vector mean = corners.rowwise().mean();
        corners.colwise() -= mean;
        const double r = interpolation_ratio(s2, corners, p);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      ok = ok && lo >= c.lower && hi <= c.upper;
      detail += "p=" + fmt(p) + ": [" + fmt(lo) + ", " + fmt(hi) + "] in [" + fmt(c.lower) + ", " + fmt(c.upper) + "] ";
    }
    return PropertyResult{"", ok, detail};
  });

  checks.emplace_back("simplicial decompositions tile the cell", [&] {
    for (int d : {2, 3}) {
      const LatticeSpec spec = square(d);
      validate_decomposition(spec, kuhn_decomposition(spec));
      validate_decomposition(spec, barycentric_decomposition(spec));
    }
    return PropertyResult{"", true, "kuhn and barycentric, d = 2, 3"};
  });

  checks.emplace_back("multi-start is deterministic across thread counts", [&] {
    const Matrix M = Eigen::Vector2d(0.7, 1.0).asDiagonal();
    const GridPtr grid = std::make_shared<const CellGrid>(s2, 12);
    const Problem problem = assemble(grid, harmonic, M, std::nullopt);
    SolveOptions a = light_solver(1);
    a.seed = 5;
    SolveOptions b = a;
    b.threads = std::max(2, threads);
    const SolveResult ra = multi_start_minimize(problem, a);
    const SolveResult rb = multi_start_minimize(problem, b);
    const bool same = ra.energy == rb.energy && ra.argmin.y == rb.argmin.y && ra.start_label == rb.start_label;
    return PropertyResult{"", same, "energy " + fmt(ra.energy) + " from start " + ra.start_label};
  });

  checks.emplace_back("Cauchy-Born holds at small strain", [&] {
    std::mt19937_64 rng(16);
    double lo = 1e300, hi = -1e300;
    const std::vector<int> schedule = quick ? std::vector<int>{8, 16, 32} : std::vector<int>{8, 16, 32, 64};
    for (int t = 0; t < (quick ? 2 : 5); ++t) {
      const Matrix M = Matrix::Identity(2, 2) + 0.01 * gaussian(2, 2, rng, 1.0).normalized();
      const double gap = cauchy_born_density(harmonic, M) - w_cont_estimate(harmonic, M, schedule, light_solver(threads)).w_cont;
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    return PropertyResult{"", lo >= -1e-6 && hi <= 1e-3, "W_CB - w_cont in [" + fmt(lo) + ", " + fmt(hi) + "]"};
  });

  std::vector<PropertyResult> out;
  for (auto& [name, check] : checks) {
    PropertyResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = PropertyResult{"", false, std::string("error: ") + e.what()};
    }
    r.name = name;
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n' << std::flush;
    out.push_back(r);
  }
  return out;
}

}  // namespace cellhom
