// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include "cellhom/elasticity.hpp"
#include "cellhom/homogenize.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace cellhom;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail, double seconds) {
  std::printf("%s criterion %2d (%s): %s [%.1f s]\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void criterion(int id, const std::string& title, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, title, ok, detail, s);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

LatticeSpec square(int d, int m = 0) { return build_lattice(d, Matrix::Identity(d, d), std::nullopt, m); }

Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = n(rng);
  return M;
}

Matrix random_rotation(int d, std::mt19937_64& rng) {
  Eigen::JacobiSVD<Matrix> svd(gaussian(d, d, rng), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix U = svd.matrixU();
  if ((U * svd.matrixV().transpose()).determinant() < 0.0) U.col(d - 1) *= -1.0;
  return U * svd.matrixV().transpose();
}

// Minimal box energy per N^d with the internal shifts pinned to s0 on
// average (multilattice) or absent (Bravais).
double box_energy(const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s0, int N,
                  const SolveOptions& opts) {
  const GridPtr grid = std::make_shared<const CellGrid>(model.spec(), N);
  const SolveResult r = multi_start_minimize(assemble(grid, model, M, s0), opts);
  return r.energy / std::pow(double(N), model.dim());
}

double cell_fd_error(const EnergyModel& model, const Matrix& F, const Matrix& s) {
  Matrix dF, ds;
  model.energy(F, s, dF, ds);
  const double h = 1e-6;
  Matrix fd(F.rows(), F.cols());
  for (int i = 0; i < F.rows(); ++i)
    for (int j = 0; j < F.cols(); ++j) {
      Matrix Fp = F, Fm = F;
      Fp(i, j) += h;
      Fm(i, j) -= h;
      fd(i, j) = (model.energy(Fp, s) - model.energy(Fm, s)) / (2 * h);
    }
  // The analytic gradient lives in the space of corner blocks with zero row
  // sums; project the raw partials the same way.
  const int nc = model.spec().corners();
  const Vector total = fd.rowwise().sum();
  fd.leftCols(nc).colwise() -= total / nc;
  double err = (fd - dF).cwiseAbs().maxCoeff();
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) {
      Matrix sp = s, sm = s;
      sp(i, j) += h;
      sm(i, j) -= h;
      err = std::max(err, std::abs((model.energy(F, sp) - model.energy(F, sm)) / (2 * h) - ds(i, j)));
    }
  return err / (1.0 + F.norm());
}

struct Named {
  std::string label;
  EnergyModel model;
};

std::vector<Named> builtins() {
  const LatticeSpec s2 = square(2);
  return {
      {"harmonic 2D", harmonic_spring_model(s2, 1.0, 1.0)},
      {"harmonic 3D", harmonic_spring_model(square(3), 1.0, 1.0)},
      {"pair shell", pair_potential_model(s2, harmonic_shell(1.0, 1.0, 1.0), 1.0)},
      {"pair LJ", pair_potential_model(s2, lennard_jones(1.0, equilibrium_lj_sigma(s2, 1.5)), 1.5)},
      {"pair LJ 3D", pair_potential_model(square(3), lennard_jones(1.0, equilibrium_lj_sigma(square(3), 1.5)), 1.5)},
      {"wrapper", quasiconvex_wrapper_model(s2, frobenius_squared_density(), kuhn_decomposition(s2))},
      {"quadratic", quadratic_form_model(s2, isotropic_form(2, 1.0, 2.0), 1.0, 0.5)},
      {"multilattice", multilattice_harmonic_model(square(2, 1), 1.0)},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  const LatticeSpec s2 = square(2);
  const EnergyModel harmonic = harmonic_spring_model(s2, 1.0, 1.0);
  const std::vector<int> schedule{8, 16, 32, 64};

  criterion(1, "harmonic tension benchmark", [&](std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const HomogenizationResult r = w_cont_estimate(harmonic, diag2(1.2, 1.0), schedule, SolveOptions{});
    const double secs = elapsed_since(t0);
    double worst = 0.0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const double N = schedule[i];
      worst = std::max(worst, std::abs(r.f_values[i] - 0.04 * (N - 2) * (N - 2) / (N * N)));
    }
    detail = "w_cont=" + num(r.w_cont) + " max|f_N-exact|=" + num(worst);
    return std::abs(r.w_cont - 0.04) <= 0.002 && worst <= 1e-8 && secs <= 60.0;
  });

  criterion(2, "harmonic compression, Cauchy-Born failure", [&](std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix M = diag2(0.5, 1.0);
    const HomogenizationResult r = w_cont_estimate(harmonic, M, schedule, SolveOptions{});
    const double secs = elapsed_since(t0);
    const double slope = loglog_exponent(schedule, r.f_values);
    // Two compressed x-edges per cell, each 1/2 (0.5)^2.
    const double w_cb = cauchy_born_density(harmonic, M);
    detail = "exponent=" + num(slope) + " w_cont=" + num(r.w_cont) + " W_CB=" + num(w_cb);
    return slope >= -1.3 && slope <= -0.7 && r.w_cont <= 0.005 && std::abs(w_cb - 2 * 0.5 * 0.25) <= 1e-14 &&
           secs <= 180.0;
  });

  criterion(3, "Cauchy-Born validity at small strain", [&](std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> mag(0.0, 0.02);
    SolveOptions opts;
    opts.n_random_starts = 2;
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < 10; ++t) {
      const Matrix M = Matrix::Identity(2, 2) + mag(rng) * gaussian(2, 2, rng).normalized();
      const double gap = cauchy_born_density(harmonic, M) - w_cont_estimate(harmonic, M, schedule, opts).w_cont;
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    const double secs = elapsed_since(t0);
    detail = "W_CB-w_cont in [" + num(lo) + ", " + num(hi) + "]";
    return lo >= -1e-6 && hi <= 1e-3 && secs <= 300.0;
  });

  criterion(4, "zero-energy manifold and frame indifference", [&](std::string& detail) {
    std::mt19937_64 rng(7);
    SolveOptions opts;
    opts.n_random_starts = 2;
    double worst_zero = 0.0, worst_frame = 0.0;
    int zero_models = 0;
    for (const auto& nm : builtins()) {
      const EnergyModel& m = nm.model;
      const int d = m.dim();
      const int N = 2 * m.spec().boundary_layer() + (d == 3 ? 2 : 4);
      const std::optional<Matrix> s0 = m.m() ? std::optional<Matrix>(Matrix::Zero(d, m.m())) : std::nullopt;
      if (m.vanishes_on_rotations) {
        ++zero_models;
        for (int t = 0; t < 10; ++t)
          worst_zero = std::max(worst_zero, box_energy(m, random_rotation(d, rng), s0, N, opts));
      }
      if (m.frame_indifferent) {
        Matrix M = Matrix::Identity(d, d);
        M(0, 0) = 1.05;
        M(1, 1) = 0.98;
        const std::optional<Matrix> s = m.m() ? std::optional<Matrix>(Matrix::Constant(d, m.m(), 0.03)) : std::nullopt;
        const double base = box_energy(m, M, s, N, opts);
        for (int t = 0; t < 3; ++t) {
          const Matrix R = random_rotation(d, rng);
          const std::optional<Matrix> Rs = s ? std::optional<Matrix>(R * *s) : std::nullopt;
          worst_frame = std::max(worst_frame, std::abs(box_energy(m, R * M, Rs, N, opts) - base));
        }
      }
    }
    detail = std::to_string(zero_models) + " models, max f_N(R)=" + num(worst_zero) +
             " max |f_N(RM)-f_N(M)|=" + num(worst_frame);
    return zero_models >= 5 && worst_zero <= 1e-12 && worst_frame <= 1e-7;
  });

  criterion(5, "analytic gradients vs central differences", [&](std::string& detail) {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    std::string where;
    for (const auto& nm : builtins()) {
      const EnergyModel& m = nm.model;
      const int d = m.dim();
      for (int t = 0; t < 100; ++t) {
        const Matrix M = Matrix::Identity(d, d) + gaussian(d, d, rng, 0.1);
        const Matrix F = affine_cell_gradient(m.spec(), M) + gaussian(d, m.n_cols(), rng, 0.03);
        const double e = cell_fd_error(m, F, gaussian(d, m.m(), rng, 0.1));
        if (e > worst) {
          worst = e;
          where = nm.label;
        }
      }
    }
    detail = "max relative error " + num(worst) + " (" + where + ")";
    return worst <= 1e-6;
  });

  criterion(6, "tiling dominance", [&](std::string& detail) {
    double worst = -1e300;
    for (const Matrix& M : {diag2(1.2, 1.0), diag2(0.5, 1.0)})
      for (auto [n, k] : {std::pair{8, 16}, std::pair{8, 32}}) {
        const TilingCheck t = tiling_upper_bound_check(harmonic, M, n, k, SolveOptions{});
        worst = std::max(worst, t.f_k_solved - t.f_k_tiled);
      }
    detail = "max f_k(solved)-f_k(tiled)=" + num(worst);
    return worst <= 1e-9;
  });

  criterion(7, "convex wrapper limit", [&](std::string& detail) {
    const EnergyModel w = quasiconvex_wrapper_model(s2, frobenius_squared_density(), kuhn_decomposition(s2));
    SolveOptions opts;
    opts.n_random_starts = 2;
    opts.use_buckling_starts = false;
    const Matrix M = diag2(1.0, 2.0);
    const double exact = M.squaredNorm();
    const HomogenizationResult coarse = w_cont_estimate(w, M, schedule, opts);
    const HomogenizationResult fine = w_cont_estimate(w, M, {16, 32, 64, 128}, opts);
    detail = "w_cont=" + num(fine.w_cont) + " on {16,32,64,128} (" + num(coarse.w_cont) + " on {8,16,32,64})";
    return std::abs(fine.w_cont - exact) <= 0.05;
  });

  criterion(8, "Hessian identity and Cauchy relations", [&](std::string& detail) {
    const QuadraticForm Q = isotropic_form(2, 1.0, 2.0);
    const double hess = quadratic_model_hessian_check(Q, 1.0, 0.5);
    const EnergyModel qm = quadratic_form_model(s2, Q, 1.0, 0.5);
    const ElasticTensor tq = numeric_elastic_tensor([&](const Matrix& F) { return cauchy_born_density(qm, F); }, 2);
    const double escape = cauchy_residuals(tq).max_cauchy();
    double pair = 0.0;
    for (int d : {2, 3})
      for (double cutoff : {1.5, 2.0, 2.5}) {
        const LatticeSpec spec = square(d);
        const ElasticTensor t = pair_elastic_tensor(lennard_jones(1.0, equilibrium_lj_sigma(spec, cutoff)), spec, cutoff);
        pair = std::max(pair, cauchy_residuals(t).max_cauchy() / t.max_abs());
      }
    const ElasticTensor shell = pair_elastic_tensor(harmonic_shell(1.0, 1.0, 1.0), s2, 1.0);
    pair = std::max(pair, cauchy_residuals(shell).max_cauchy() / shell.max_abs());
    detail = "hessian residual " + num(hess) + ", quadratic Cauchy residual " + num(escape) +
             ", max pair relative residual " + num(pair);
    return hess <= 1e-5 && escape >= 0.1 && pair <= 1e-10;
  });

  criterion(9, "interpolation sandwich", [&](std::string& detail) {
    std::mt19937_64 rng(9);
    bool ok = true;
    for (double p : {2.0, 4.0}) {
      const InterpolationConstants c = interpolation_constants(s2, p);
      double lo = 1e300, hi = 0.0;
      for (int t = 0; t < 10000; ++t) {
        Matrix F = gaussian(2, 4, rng);
        const Vector mean = F.rowwise().mean();
        F.colwise() -= mean;
        const double r = interpolation_ratio(s2, F, p);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      ok = ok && lo >= c.lower && hi <= c.upper;
      detail += "p=" + num(p) + ": [" + num(lo) + "," + num(hi) + "] within [" + num(c.lower) + "," + num(c.upper) + "]; ";
    }
    return ok;
  });

  criterion(10, "relaxed shifts vs grid of prescribed shifts", [&](std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const EnergyModel ml = multilattice_harmonic_model(square(2, 1), 1.0);
    const Matrix M = diag2(1.1, 1.0);
    const std::vector<int> sched{8, 16, 32};
    SolveOptions opts;
    opts.n_random_starts = 1;
    const double relaxed = w_cont_min_over_s(ml, M, sched, opts).w_cont;
    double best = 1e300;
    Matrix arg(2, 1);
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        Matrix s0(2, 1);
        s0 << 0.05 * i, 0.05 * j;
        const double w = w_cont_multilattice(ml, M, s0, sched, opts).w_cont;
        if (w < best) {
          best = w;
          arg = s0;
        }
      }
    const double secs = elapsed_since(t0);
    detail = "min over s " + num(relaxed) + ", grid min " + num(best) + " at s0=(" + num(arg(0, 0)) + "," +
             num(arg(1, 0)) + ")";
    return std::abs(relaxed - best) <= 1e-3 && secs <= 300.0;
  });

  criterion(11, "determinism of the benchmark run", [&](std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "cellhom_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "benchmark.json");
      cfg << R"({"lattice": {"d": 2}, "model": {"name": "harmonic_spring", "params": {"k": 1.0, "r0": 1.0}},
                 "task": "homogenize", "M": [[[1.2, 0.0], [0.0, 1.0]], [[0.5, 0.0], [0.0, 1.0]]],
                 "seed": 3})";
    }
    const std::string cli = CELLHOM_CLI_PATH;
    const std::string base = cli + " run " + (dir / "benchmark.json").string();
    const int a = std::system((base + " --threads 1 --out " + (dir / "a").string() + " 2>/dev/null").c_str());
    const int b = std::system((base + " --threads 2 --out " + (dir / "b").string() + " 2>/dev/null").c_str());
    const std::string ca = slurp(dir / "a" / "results.csv");
    const std::string cb = slurp(dir / "b" / "results.csv");
    const bool same = !ca.empty() && ca == cb;
    detail = "exit codes " + std::to_string(a) + "," + std::to_string(b) + ", results.csv " +
             std::to_string(ca.size()) + " bytes, " + (same ? "identical" : "different");
    fs::remove_all(dir);
    return a == 0 && b == 0 && same;
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
