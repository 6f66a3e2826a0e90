// Run configuration: JSON parsing with a strict schema, and the model
// factory the CLI uses.
#ifndef CELLHOM_CONFIG_HPP
#define CELLHOM_CONFIG_HPP

#include "cellhom/models.hpp"
#include "cellhom/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cellhom {

struct ModelConfig {
  std::string name;  // harmonic_spring | pair_potential | quasiconvex_wrapper | quadratic_form | multilattice_harmonic
  double k = 1.0;
  std::optional<double> r0;
  // pair_potential
  std::string potential = "lennard_jones";  // lennard_jones | harmonic_shell | zero
  double epsilon = 1.0;
  double sigma = 0.8908987181403393;  // 2^(-1/6): minimum at distance 1
  double rest = 1.0;
  double shell = 1.0;
  double cutoff = 1.0;
  // quasiconvex_wrapper
  std::string density = "frobenius_squared";  // frobenius_squared | constant
  double density_value = 0.0;
  std::string decomposition = "kuhn";  // kuhn | antikuhn (2D, other diagonal)
  // quadratic_form
  double mu = 1.0;
  double lambda = 0.0;
  double kappa = 1.0;
  double delta = 0.5;
  std::optional<Matrix> Q;
};

struct RunConfig {
  int d = 2;
  Matrix A;
  std::optional<std::vector<IntVector>> stencil;
  int m = 0;
  ModelConfig model;
  std::string task;  // homogenize | cb_scan | elastic | tiling_check | validate
  std::vector<Matrix> Ms;
  std::vector<Matrix> s0s;  // each d x m
  std::vector<int> schedule;
  SolveOptions solver;
  std::uint64_t seed = 0;
  std::string output_dir = "cellhom_out";
  int tiling_n = 8;
  int tiling_k = 16;
  double cb_threshold = 0.01;
  double elastic_h = 1e-3;
  bool quick = false;       // validate task only
  std::string canonical;    // normalized JSON text of the input
  std::string hash;         // FNV-1a 64 of `canonical`, hex
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Lattice spec as declared in the config (the pair model derives its own
/// stencil from the cutoff).
LatticeSpec config_lattice(const RunConfig& cfg);
EnergyModel build_model(const RunConfig& cfg);
/// The configured pair potential with an "equilibrium" sigma resolved.
PairPotential build_pair_potential(const RunConfig& cfg);

std::string fnv1a_hex(const std::string& text);

}  // namespace cellhom

#endif  // CELLHOM_CONFIG_HPP
