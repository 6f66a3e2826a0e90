#include "cellhom/fields.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace cellhom;

namespace {

GridPtr grid2(int N, const Matrix& A = Matrix::Identity(2, 2)) {
  return std::make_shared<const CellGrid>(build_lattice(2, A), N);
}

Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

int site_at(const CellGrid& g, int i, int j) {
  IntVector k(2);
  k << i, j;
  return g.site_index(k);
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("affine deformations") {
    const GridPtr g = grid2(5);
    const Deformation id = affine_deformation(g, Matrix::Identity(2, 2));
    for (int s = 0; s < g->n_sites(); ++s) CHECK((id.y.col(s) - g->site_position(s)).norm() == 0.0);
    CHECK(affine_deformation(g, Matrix::Zero(2, 2)).y.norm() == 0.0);
    const Deformation t = affine_deformation(g, diag2(1.2, 1.0));
    const Vector y = t.y.col(site_at(*g, 3, 2));
    CHECK(y(0) == doctest::Approx(3.6));
    CHECK(y(1) == doctest::Approx(2.0));
  }

  TEST_CASE("boundary data") {
    const GridPtr g = grid2(6);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    Deformation def{g, Matrix(2, g->n_sites())};
    for (int i = 0; i < def.y.size(); ++i) def.y.data()[i] = n(rng);
    const Matrix M = diag2(1.2, 0.9);
    const Deformation pinned = apply_boundary(def, [&](const Vector& x) -> Vector { return M * x; });
    for (int s : g->pinned_sites()) CHECK((pinned.y.col(s) - M * g->site_position(s)).norm() < 1e-15);
    for (int s : g->free_sites()) CHECK(pinned.y.col(s) == def.y.col(s));
    const Deformation c = apply_boundary(def, [](const Vector&) -> Vector { return Vector::Constant(2, 4.0); });
    for (int s : g->pinned_sites()) CHECK(c.y.col(s) == Vector::Constant(2, 4.0));
    CHECK(g->free_sites().size() == 9);
    CHECK_THROWS_AS(apply_boundary(def, [](const Vector&) -> Vector { return Vector::Constant(2, NAN); }), InputError);
  }

  TEST_CASE("discrete gradient") {
    const GridPtr g = grid2(5);
    const LatticeSpec& spec = g->spec();
    const Matrix M = diag2(1.2, 0.8);
    const Deformation a = affine_deformation(g, M);
    for (int c : g->interior_cells()) CHECK((discrete_gradient(a, c) - M * spec.Z).norm() < 1e-14);

    Deformation konst{g, Matrix::Constant(2, g->n_sites(), 3.0)};
    CHECK(discrete_gradient(konst, g->interior_cells().front()).norm() == 0.0);

    // Hand arithmetic on the center cell: corner values minus their mean.
    Deformation def = a;
    const int c = g->cell_index(IntVector::Constant(2, 2));
    const auto sites = g->cell_sites(c);
    Matrix vals(2, 4);
    vals << 1.0, 2.0, 4.0, 7.0, 0.5, -1.5, 2.5, 0.5;
    for (int k = 0; k < 4; ++k) def.y.col(sites[k]) = vals.col(k);
    Matrix expected(2, 4);
    expected << -2.5, -1.5, 0.5, 3.5, 0.0, -2.0, 2.0, 0.0;
    CHECK((discrete_gradient(def, c) - expected).norm() < 1e-14);
    CHECK((corner_gradient(def, c) - expected).norm() < 1e-14);
    CHECK_THROWS_WITH_AS(discrete_gradient(def, 0), doctest::Contains("gradient undefined on boundary layer"), InputError);
    CHECK_NOTHROW(corner_gradient(def, 0));
  }

  TEST_CASE("cell interpolation") {
    Matrix A(2, 2);
    A << 1.0, 0.3, 0.0, 1.1;
    const GridPtr g = grid2(4, A);
    const Matrix M = diag2(1.3, 0.7) + 0.2 * Matrix::Ones(2, 2);
    const Deformation a = affine_deformation(g, M);
    const int c = g->interior_cells().front();
    const auto pieces = interpolate_cell(a, c);
    CHECK(pieces.size() == 8);
    double vol = 0.0;
    for (const auto& p : pieces) {
      CHECK((p.G - M).norm() < 1e-13);
      vol += p.volume;
    }
    CHECK(vol == doctest::Approx(g->spec().det_abs));

    // Corner values are reproduced: each triangle joins a corner x, the
    // midpoint of an edge [x, x2] and the center, and along the first leg the
    // interpolant must climb by (y(x2) - y(x)) / 2.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    Deformation def = a;
    const auto sites = g->cell_sites(c);
    for (int s : sites) def.y.col(s) += Vector::NullaryExpr(2, [&] { return n(rng); });
    auto corner_at = [&](const Vector& x) {
      for (int s : sites)
        if ((g->site_position(s) - x).norm() < 1e-12) return s;
      return -1;
    };
    int legs = 0;
    for (const auto& p : interpolate_cell(def, c)) {
      for (int v = 0; v <= 2; ++v) {
        const int s = corner_at(p.vertices.col(v));
        if (s < 0) continue;
        for (int w = 0; w <= 2; ++w) {
          if ((p.vertices.col(w) - g->cell_center(c)).norm() < 1e-12) continue;
          const int s2 = corner_at(2.0 * p.vertices.col(w) - p.vertices.col(v));
          if (w == v || s2 < 0) continue;
          const Vector rise = p.G * (p.vertices.col(w) - p.vertices.col(v));
          CHECK((rise - 0.5 * (def.y.col(s2) - def.y.col(s))).norm() < 1e-12);
          ++legs;
        }
      }
    }
    CHECK(legs == 8);
  }

  TEST_CASE("interpolation ratio") {
    const GridPtr g = grid2(4);
    const LatticeSpec& spec = g->spec();
    const Matrix M = diag2(1.5, 0.5);
    for (double p : {2.0, 4.0}) {
      const double expected = std::pow(M.norm(), p) / std::pow((M * spec.Z).norm(), p);
      CHECK(interpolation_ratio(spec, M * spec.Z, p) == doctest::Approx(expected).epsilon(1e-13));
      const auto [lo, hi] = gradient_equivalence_ratio(affine_deformation(g, M), g->interior_cells().front(), p);
      CHECK(lo == doctest::Approx(expected).epsilon(1e-13));
      CHECK(hi == lo);
    }
    Deformation shifted = affine_deformation(g, M);
    shifted.y.colwise() += Vector::Constant(2, 5.0);
    CHECK(gradient_equivalence_ratio(shifted, g->interior_cells().front(), 3.0).first ==
          doctest::Approx(interpolation_ratio(spec, M * spec.Z, 3.0)).epsilon(1e-13));
    CHECK_THROWS_WITH_AS(interpolation_ratio(spec, Matrix::Zero(2, 4), 2.0), doctest::Contains("ratio undefined"),
                         InputError);
  }

  TEST_CASE("certified interpolation constants hold on random cells") {
    const LatticeSpec spec = build_lattice(2, Matrix::Identity(2, 2));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (double p : {2.0, 4.0}) {
      const InterpolationConstants c = interpolation_constants(spec, p);
      CHECK(c.lower > 0.0);
      CHECK(c.lower <= c.upper);
      CHECK(c.exact == (p == 2.0));
      for (int t = 0; t < 10000; ++t) {
        Matrix F(2, 4);
        for (int i = 0; i < 8; ++i) F.data()[i] = n(rng);
        const Vector mean = F.rowwise().mean();
        F.colwise() -= mean;
        const double r = interpolation_ratio(spec, F, p);
        REQUIRE(r >= c.lower);
        REQUIRE(r <= c.upper);
      }
    }
  }

  TEST_CASE("deformation csv") {
    const GridPtr g = grid2(3);
    std::ostringstream out;
    write_deformation_csv(affine_deformation(g, Matrix::Identity(2, 2)), out);
    const std::string text = out.str();
    CHECK(text.rfind("site_x,site_y,y_1,y_2\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);
  }
}
