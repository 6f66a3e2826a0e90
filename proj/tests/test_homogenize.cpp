#include "cellhom/homogenize.hpp"

#include <doctest.h>

#include <cmath>

using namespace cellhom;

namespace {

Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

Matrix rotation(double theta) {
  Matrix R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

LatticeSpec square(int m = 0) { return build_lattice(2, Matrix::Identity(2, 2), std::nullopt, m); }

EnergyModel harmonic() { return harmonic_spring_model(square(), 1.0, 1.0); }
EnergyModel multilattice() { return multilattice_harmonic_model(square(1), 1.0); }

SolveOptions few_starts(int n = 2) {
  SolveOptions o;
  o.n_random_starts = n;
  return o;
}

double exact_tension(int N) { return 0.04 * (N - 2.0) * (N - 2.0) / (double(N) * N); }

}  // namespace

TEST_SUITE("homogenize") {
  TEST_CASE("fit helpers on synthetic data") {
    const std::vector<int> schedule{8, 16, 32, 64};
    std::vector<double> f;
    for (int N : schedule) f.push_back(0.3 - 1.5 / N);
    const InverseNFit fit = fit_inverse_n(schedule, f);
    CHECK(fit.w == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(fit.a == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(fit.residual < 1e-14);
    std::vector<double> g;
    for (int N : schedule) g.push_back(2.0 / N);
    CHECK(loglog_exponent(schedule, g) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  TEST_CASE("f_N on rest, tension and rotation") {
    const EnergyModel h = harmonic();
    CHECK(f_N(h, Matrix::Identity(2, 2), 8, few_starts()) <= 1e-12);
    CHECK(std::abs(f_N(h, diag2(1.2, 1.0), 8, few_starts()) - exact_tension(8)) <= 1e-10);
    CHECK(f_N(h, rotation(M_PI / 6.0), 8, few_starts()) <= 1e-12);
  }

  TEST_CASE("w_cont under tension extrapolates the box energies") {
    const std::vector<int> schedule{8, 16, 32};
    const HomogenizationResult r = w_cont_estimate(harmonic(), diag2(1.2, 1.0), schedule, few_starts());
    for (std::size_t i = 0; i < schedule.size(); ++i)
      CHECK(std::abs(r.f_values[i] - exact_tension(schedule[i])) <= 1e-8);
    // Least squares of 0.04 (1 - 2/N)^2 against {1, 1/N} on this schedule.
    CHECK(r.w_cont == doctest::Approx(0.03921875).epsilon(1e-6));
    CHECK(r.fit_coeff == doctest::Approx(-0.13428571).epsilon(1e-5));
    CHECK(std::abs(r.w_cont - 0.04) <= 0.002);
    CHECK_FALSE(r.clipped);
    CHECK(r.per_N.size() == schedule.size());
    CHECK(w_cont_estimate(harmonic(), Matrix::Identity(2, 2), schedule, few_starts()).w_cont == doctest::Approx(0.0));
  }

  TEST_CASE("Cauchy-Born densities") {
    const EnergyModel h = harmonic();
    CHECK(cauchy_born_density(h, diag2(1.2, 1.0)) == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(cauchy_born_density(h, diag2(0.5, 1.0)) == doctest::Approx(0.25).epsilon(1e-14));
    const EnergyModel q = quadratic_form_model(square(), isotropic_form(2, 1.0, 1.0), 1.0, 0.5);
    for (double th : {0.2, 1.0}) {
      CHECK(cauchy_born_density(h, rotation(th)) <= 1e-15);
      CHECK(cauchy_born_density(q, rotation(th)) <= 1e-15);
    }
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 2.0;
    const EnergyModel w = quasiconvex_wrapper_model(build_lattice(2, A), frobenius_squared_density(),
                                                    kuhn_decomposition(build_lattice(2, A)));
    CHECK(cauchy_born_density(w, diag2(1.0, 2.0)) == doctest::Approx(5.0).epsilon(1e-13));
  }

  TEST_CASE("validity scan separates small strain from compression") {
    const std::vector<int> schedule{8, 16, 32};
    Matrix small = Matrix::Identity(2, 2);
    small(0, 1) = small(1, 0) = 0.01;
    small(0, 0) = 1.01;
    const auto rows =
        cb_validity_scan(harmonic(), {small, diag2(0.5, 1.0), rotation(0.5)}, schedule, few_starts(), 0.01);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].gap <= 1e-3);
    CHECK(rows[0].gap >= -1e-6);
    CHECK_FALSE(rows[0].flagged);
    CHECK(rows[1].gap == doctest::Approx(0.25).epsilon(0.05));
    CHECK(rows[1].flagged);
    CHECK(std::abs(rows[2].gap) <= 1e-10);
    CHECK_FALSE(rows[2].flagged);
  }

  TEST_CASE("tiled fields never beat the solved box") {
    const EnergyModel h = harmonic();
    const TilingCheck rest = tiling_upper_bound_check(h, Matrix::Identity(2, 2), 8, 16, few_starts());
    CHECK(rest.f_k_solved <= 1e-14);
    CHECK(rest.f_k_tiled <= 1e-14);
    const TilingCheck t = tiling_upper_bound_check(h, diag2(1.2, 1.0), 8, 16, few_starts());
    CHECK(t.f_k_solved <= t.f_k_tiled + 1e-9);
    CHECK(t.f_k_tiled <= t.tiled_bound + 1e-12);
    const TilingCheck c = tiling_upper_bound_check(h, diag2(0.5, 1.0), 8, 32, few_starts());
    CHECK(c.f_k_solved <= c.f_k_tiled + 1e-9);
    CHECK(c.f_k_tiled <= c.tiled_bound + 1e-12);
    CHECK(c.k_solve.converged);
    CHECK_THROWS_AS(tiling_upper_bound_check(h, Matrix::Identity(2, 2), 8, 12, few_starts()), InputError);
  }

  TEST_CASE("tiling reproduces the small-box energy per cell") {
    const EnergyModel h = harmonic();
    const Matrix M = diag2(0.7, 1.0);
    SolveResult small;
    f_N(h, M, 8, few_starts(), &small);
    const GridPtr big = std::make_shared<const CellGrid>(h.spec(), 16);
    const Deformation tiled = tile_deformation(big, small.argmin, M);
    // Pinned sites of the big box carry the affine datum.
    for (int s : big->pinned_sites()) CHECK((tiled.y.col(s) - M * big->site_position(s)).norm() < 1e-12);
    const Problem p = assemble(big, h, M, std::nullopt);
    const double tiled_energy = p.energy_and_gradient(p.pack(tiled), nullptr);
    // Four copies of the small box; the remaining interior cells of the big
    // box have all corners on the affine datum.
    const double seams = tiled_energy - 4.0 * small.energy;
    CHECK(seams == doctest::Approx(cauchy_born_density(h, M) * (14.0 * 14.0 - 4.0 * 6.0 * 6.0)).epsilon(1e-10));
  }

  TEST_CASE("multilattice with prescribed mean shift") {
    const EnergyModel ml = multilattice();
    const std::vector<int> schedule{8, 16, 32};
    const HomogenizationResult rest = w_cont_multilattice(ml, Matrix::Identity(2, 2), Matrix::Zero(2, 1), schedule,
                                                          few_starts());
    CHECK(rest.w_cont <= 1e-12);
    Matrix s0(2, 1);
    s0 << 0.2, 0.0;
    const HomogenizationResult shifted = w_cont_multilattice(ml, Matrix::Identity(2, 2), s0, schedule, few_starts());
    const double per_cell = ml.energy(ml.spec().Z, s0);
    CHECK(shifted.w_cont > 0.0);
    CHECK(shifted.w_cont <= per_cell + 1e-9);
    CHECK(shifted.w_cont == doctest::Approx(per_cell).epsilon(0.05));

    const Matrix R = rotation(0.4);
    const Matrix M = diag2(1.05, 0.98);
    SolveOptions o = few_starts();
    const HomogenizationResult b = w_cont_multilattice(ml, R * M, R * s0, schedule, o);
    const HomogenizationResult c = w_cont_multilattice(ml, M, s0, schedule, o);
    for (std::size_t i = 0; i < schedule.size(); ++i)
      CHECK(b.f_values[i] == doctest::Approx(c.f_values[i]).epsilon(1e-7));
    CHECK_THROWS_WITH_AS(w_cont_multilattice(harmonic(), M, s0, schedule, o),
                         doctest::Contains("internal variables undefined for Bravais model"), InputError);
  }

  TEST_CASE("free shifts relax every prescribed mean") {
    const EnergyModel ml = multilattice();
    const std::vector<int> schedule{8, 16, 32};
    const HomogenizationResult rest = w_cont_min_over_s(ml, Matrix::Identity(2, 2), schedule, few_starts());
    CHECK(rest.w_cont <= 1e-12);
    REQUIRE(rest.per_N.back().internal);
    CHECK(rest.per_N.back().internal->s.cwiseAbs().maxCoeff() <= 1e-6);

    const Matrix M = diag2(1.1, 1.0);
    const HomogenizationResult relaxed = w_cont_min_over_s(ml, M, schedule, few_starts());
    for (double sx : {-0.1, 0.0, 0.1}) {
      Matrix s0(2, 1);
      s0 << sx, 0.05;
      const HomogenizationResult fixed = w_cont_multilattice(ml, M, s0, schedule, few_starts());
      for (std::size_t i = 0; i < schedule.size(); ++i) CHECK(relaxed.f_values[i] <= fixed.f_values[i] + 1e-10);
    }
  }

  TEST_CASE("schedule validation") {
    const LatticeSpec spec = square();
    CHECK_THROWS_AS(validate_schedule(spec, {8, 16}), InputError);
    CHECK_THROWS_AS(validate_schedule(spec, {8, 8, 16}), InputError);
    CHECK_THROWS_AS(validate_schedule(spec, {2, 8, 16}), InputError);
    CHECK_NOTHROW(validate_schedule(spec, {3, 8, 16}));
    CHECK_THROWS_AS(f_N(multilattice(), Matrix::Identity(2, 2), 8, few_starts()), InputError);
  }
}
