#include "cellhom/models.hpp"

#include <cmath>
#include <map>

namespace cellhom {

namespace {

constexpr double kShellTol = 1e-12;

struct Bond {
  int a;
  int b;
  double ref;
  double weight;
};

class PairSum final : public CellEnergy {
 public:
  PairSum(PairPotential V, std::vector<Bond> bonds) : V_(std::move(V)), bonds_(std::move(bonds)) {}

  double evaluate(const ConstMatrixRef& F, const ConstMatrixRef&, Matrix* dF, Matrix*) const override {
    double E = 0.0;
    if (dF) dF->setZero();
    for (const auto& bond : bonds_) {
      const SmallVector e = F.col(bond.b) - F.col(bond.a);
      const double len = e.norm();
      E += bond.weight * V_.value(bond.ref, len);
      if (dF && len > 0.0) {
        const SmallVector g = (bond.weight * V_.d1(bond.ref, len) / len) * e;
        dF->col(bond.b) += g;
        dF->col(bond.a) -= g;
      }
    }
    return E;
  }

 private:
  PairPotential V_;
  std::vector<Bond> bonds_;
};

std::vector<int> key_of(const IntVector& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

}  // namespace

PairPotential lennard_jones(double epsilon, double sigma) {
  PairPotential V;
  V.name = "lennard_jones";
  const double s6 = std::pow(sigma, 6);
  const double s12 = s6 * s6;
  V.value = [=](double, double rho) { return 4.0 * epsilon * (s12 / std::pow(rho, 12) - s6 / std::pow(rho, 6)); };
  V.d1 = [=](double, double rho) {
    return 4.0 * epsilon * (-12.0 * s12 / std::pow(rho, 13) + 6.0 * s6 / std::pow(rho, 7));
  };
  V.d2 = [=](double, double rho) {
    return 4.0 * epsilon * (156.0 * s12 / std::pow(rho, 14) - 42.0 * s6 / std::pow(rho, 8));
  };
  return V;
}

PairPotential harmonic_shell(double k, double rest, double shell) {
  PairPotential V;
  V.name = "harmonic_shell";
  auto on = [shell](double r) { return std::abs(r - shell) < 1e-9; };
  V.value = [=](double r, double rho) { return on(r) ? k * (rho - rest) * (rho - rest) : 0.0; };
  V.d1 = [=](double r, double rho) { return on(r) ? 2.0 * k * (rho - rest) : 0.0; };
  V.d2 = [=](double r, double) { return on(r) ? 2.0 * k : 0.0; };
  V.nonnegative = true;
  return V;
}

PairPotential zero_potential() {
  PairPotential V;
  V.name = "zero";
  V.value = [](double, double) { return 0.0; };
  V.d1 = V.value;
  V.d2 = V.value;
  V.nonnegative = true;
  return V;
}

int pair_stencil_reach(const LatticeSpec& spec, double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InputError("empty stencil: cutoff must be positive and finite");
  const int d = spec.d;
  const Matrix Ainv = spec.A.inverse();
  const double inv_norm = Ainv.jacobiSvd().singularValues()(0);
  const int R = static_cast<int>(std::ceil(cutoff * inv_norm));
  int max_cheb = 0;
  const int side = 2 * R + 1;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  for (int idx = 0; idx < total; ++idx) {
    IntVector delta(d);
    int rest = idx;
    for (int i = 0; i < d; ++i) {
      delta(i) = rest % side - R;
      rest /= side;
    }
    if (delta.isZero()) continue;
    if ((spec.A * delta.cast<double>()).norm() <= cutoff + kShellTol)
      max_cheb = std::max(max_cheb, delta.cwiseAbs().maxCoeff());
  }
  if (max_cheb == 0) throw InputError("empty stencil: cutoff below the nearest-neighbour distance");
  // Sites of a cube stencil of reach rho span 2 rho + 1 cells per axis.
  return max_cheb / 2;
}

EnergyModel pair_potential_model(const LatticeSpec& base, const PairPotential& V, double cutoff) {
  if (base.m != 0) throw InputError("pair potential model needs a Bravais lattice (m = 0)");
  const int reach = pair_stencil_reach(base, cutoff);
  LatticeSpec spec = build_lattice(base.d, base.A, cube_stencil(base.d, reach), 0);

  std::map<std::vector<int>, int> site_of;
  for (int i = 0; i < spec.n_cols(); ++i) site_of[key_of(spec.site_offsets[i])] = i;

  std::vector<Bond> bonds;
  for (int a = 0; a < spec.n_cols(); ++a) {
    for (int b = a + 1; b < spec.n_cols(); ++b) {
      const IntVector delta = spec.site_offsets[b] - spec.site_offsets[a];
      const double ref = (spec.A * delta.cast<double>()).norm();
      if (ref > cutoff + kShellTol) continue;
      // Number of bulk cells (stencil translates) holding this bond.
      int mult = 0;
      for (const auto& w : spec.site_offsets) {
        const IntVector shift = w - spec.site_offsets[a];
        if (site_of.count(key_of(spec.site_offsets[b] + shift))) ++mult;
      }
      bonds.push_back({a, b, ref, 2.0 / mult});
    }
  }
  if (bonds.empty()) throw InputError("empty stencil: no bonds within cutoff");

  auto impl = std::make_shared<PairSum>(V, bonds);
  EnergyModel model("pair_potential", spec, impl);
  model.p = 2.0;
  model.params = {{"potential:" + V.name, 1.0}, {"cutoff", cutoff}};
  if (V.nonnegative) {
    const Matrix Z = affine_cell_gradient(spec, Matrix::Identity(spec.d, spec.d));
    model.vanishes_on_rotations = model.energy(Z, model.zero_internal()) == 0.0;
  }
  return model;
}

}  // namespace cellhom
