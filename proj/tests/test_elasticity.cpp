#include "cellhom/elasticity.hpp"
#include "cellhom/homogenize.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace cellhom;

namespace {

LatticeSpec square(int d) { return build_lattice(d, Matrix::Identity(d, d)); }

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

TEST_SUITE("elasticity") {
  TEST_CASE("pair tensor by hand") {
    CHECK(pair_elastic_tensor(zero_potential(), square(2), 1.5).max_abs() == 0.0);
    // Four nearest neighbours with V'' = 2 and V'(1) = 0.
    const ElasticTensor t = pair_elastic_tensor(harmonic_shell(1.0, 1.0, 1.0), square(2), 1.0);
    CHECK(t(0, 0, 0, 0) == doctest::Approx(4.0));
    CHECK(t(1, 1, 1, 1) == doctest::Approx(4.0));
    CHECK(t(0, 0, 1, 1) == 0.0);
    CHECK(t(0, 1, 0, 1) == 0.0);
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 0) = expected(1, 1) = 4.0;
    CHECK((t.voigt() - expected).norm() == 0.0);
    CHECK_THROWS_WITH_AS(lattice_shell_vectors(square(2), 0.5), doctest::Contains("empty shell set"), InputError);
  }

  TEST_CASE("Cauchy relations at the stress-free Lennard-Jones lattice") {
    for (int d : {2, 3}) {
      const LatticeSpec spec = square(d);
      const double cutoff = 2.5;
      const ElasticTensor t = pair_elastic_tensor(lennard_jones(1.0, equilibrium_lj_sigma(spec, cutoff)), spec, cutoff);
      const CauchyReport rep = cauchy_residuals(t);
      CHECK(rep.cauchy.size() == (d == 2 ? 1u : 6u));
      CHECK(rep.max_cauchy() <= 1e-10 * t.max_abs());
      CHECK(rep.minor_symmetry <= 1e-10 * t.max_abs());
      CHECK(rep.major_symmetry <= 1e-10 * t.max_abs());
    }
  }

  TEST_CASE("prestress breaks the Cauchy relation by the virial") {
    const LatticeSpec spec = square(2);
    const double cutoff = 2.5;
    const PairPotential V = lennard_jones(1.0, 0.95);
    const ElasticTensor t = pair_elastic_tensor(V, spec, cutoff);
    double virial = 0.0;
    for (int i = -3; i <= 3; ++i)
      for (int j = -3; j <= 3; ++j) {
        const double r = std::hypot(i, j);
        if (r == 0.0 || r > cutoff) continue;
        virial += V.d1(r, r) * j * j / r;
      }
    CHECK(t(0, 0, 1, 1) - t(0, 1, 0, 1) == doctest::Approx(-virial).epsilon(1e-12));
  }

  TEST_CASE("finite-difference tensors") {
    const ElasticTensor q = numeric_elastic_tensor(
        [](const Matrix& M) { return sym(M - Matrix::Identity(2, 2)).squaredNorm(); }, 2);
    CHECK(q(0, 0, 0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(q(0, 1, 0, 1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(q(0, 0, 1, 1)) < 1e-8);

    Matrix B(2, 2);
    B << 1.0, -2.0, 0.5, 3.0;
    const ElasticTensor affine = numeric_elastic_tensor([&](const Matrix& M) { return (B.cwiseProduct(M)).sum() + 4.0; }, 2);
    CHECK(affine.max_abs() < 1e-6);
    CHECK_THROWS_AS(numeric_elastic_tensor([](const Matrix&) { return NAN; }, 2), NumericError);
  }

  TEST_CASE("Cauchy-Born tensor of springs equals the pair sum") {
    const LatticeSpec spec = square(2);
    const EnergyModel springs = harmonic_spring_model(spec, 1.0, 1.0);
    const ElasticTensor fd =
        numeric_elastic_tensor([&](const Matrix& M) { return cauchy_born_density(springs, M); }, 2);
    // Springs of stiffness k on each bond equal ordered pairs with k / 2.
    const ElasticTensor exact = pair_elastic_tensor(harmonic_shell(0.5, 1.0, 1.0), spec, 1.0);
    CHECK((fd.c - exact.c).cwiseAbs().maxCoeff() <= 1e-6);

    const double cutoff = 2.0;
    const PairPotential lj = lennard_jones(1.0, equilibrium_lj_sigma(spec, cutoff));
    const EnergyModel pair = pair_potential_model(spec, lj, cutoff);
    const ElasticTensor fd_lj = numeric_elastic_tensor([&](const Matrix& M) { return cauchy_born_density(pair, M); }, 2);
    CHECK((fd_lj.c - pair_elastic_tensor(lj, spec, cutoff).c).cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("quadratic model: Hessian identity and the escape from Cauchy") {
    const QuadraticForm sym_only = isotropic_form(2, 1.0, 0.0);
    CHECK(quadratic_model_hessian_check(sym_only, 1.0, 0.5) <= 1e-5);
    const QuadraticForm Q = isotropic_form(2, 1.0, 2.0);
    CHECK(quadratic_model_hessian_check(Q, 1.0, 0.5) <= 1e-5);

    const LatticeSpec spec = square(2);
    const EnergyModel model = quadratic_form_model(spec, Q, 1.0, 0.5);
    const ElasticTensor t = numeric_elastic_tensor([&](const Matrix& M) { return cauchy_born_density(model, M); }, 2);
    CHECK(t(0, 0, 1, 1) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(t(0, 1, 0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cauchy_residuals(t).max_cauchy() >= 0.1);

    // Infinitesimal rotations cost nothing.
    Matrix W = Matrix::Zero(2, 2);
    W(0, 1) = 1.0;
    W(1, 0) = -1.0;
    Vector wr(4);
    wr << W(0, 0), W(0, 1), W(1, 0), W(1, 1);
    CHECK((t.c * wr).cwiseAbs().maxCoeff() <= 1e-5);

    const QuadraticForm Q2{2.0 * Q.matrix};
    const EnergyModel doubled = quadratic_form_model(spec, Q2, 1.0, 0.5);
    const ElasticTensor t2 =
        numeric_elastic_tensor([&](const Matrix& M) { return cauchy_born_density(doubled, M); }, 2);
    CHECK((t2.c - 2.0 * t.c).cwiseAbs().maxCoeff() <= 1e-5);
  }

  TEST_CASE("tensor csv") {
    std::ostringstream out;
    write_tensor_csv(pair_elastic_tensor(harmonic_shell(1.0, 1.0, 1.0), square(2), 1.0), out);
    const std::string text = out.str();
    CHECK(text.rfind("i,j,k,l,c_ijkl\n1,1,1,1,4\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);
    CHECK(cauchy_residuals(ElasticTensor(3)).max_cauchy() == 0.0);
  }
}
