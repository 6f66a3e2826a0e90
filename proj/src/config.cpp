#include "cellhom/config.hpp"

#include "cellhom/elasticity.hpp"
#include "cellhom/homogenize.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cellhom {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError("expected an object: " + where);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw InputError("unknown key: " + where + (where.empty() ? "" : ".") + it.key());
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw InputError("missing field: " + where + (where.empty() ? "" : ".") + key);
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError("expected a number: " + what);
  return v.get<double>();
}

int integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw InputError("expected an integer: " + what);
  return v.get<int>();
}

Matrix matrix(const json& v, int rows, int cols, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows) throw InputError("dimension mismatch: " + what);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != cols) throw InputError("dimension mismatch: " + what);
    for (int j = 0; j < cols; ++j) M(i, j) = number(v[i][j], what);
  }
  return M;
}

double get_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

void parse_model(const json& block, RunConfig& cfg) {
  check_keys(block, {"name", "params"}, "model");
  const json& name = require(block, "name", "model");
  if (!name.is_string()) throw InputError("expected a string: model.name");
  ModelConfig& mc = cfg.model;
  mc.name = name.get<std::string>();
  const json params = block.contains("params") ? block.at("params") : json::object();
  const std::string where = "model.params";

  if (mc.name == "harmonic_spring" || mc.name == "multilattice_harmonic") {
    check_keys(params, {"k", "r0"}, where);
    mc.k = get_or(params, "k", 1.0, where);
    if (params.contains("r0")) mc.r0 = number(params.at("r0"), where + ".r0");
  } else if (mc.name == "pair_potential") {
    check_keys(params, {"potential", "epsilon", "sigma", "k", "rest", "shell", "cutoff"}, where);
    if (params.contains("potential")) {
      if (!params.at("potential").is_string()) throw InputError("expected a string: model.params.potential");
      mc.potential = params.at("potential").get<std::string>();
    }
    if (mc.potential != "lennard_jones" && mc.potential != "harmonic_shell" && mc.potential != "zero")
      throw InputError("unknown potential: " + mc.potential);
    mc.cutoff = number(require(params, "cutoff", where), where + ".cutoff");
    mc.epsilon = get_or(params, "epsilon", 1.0, where);
    if (params.contains("sigma") && params.at("sigma").is_string()) {
      if (params.at("sigma").get<std::string>() != "equilibrium") throw InputError("model.params.sigma: expected a number or \"equilibrium\"");
      mc.sigma = -1.0;  // resolved once the lattice is known
    } else {
      mc.sigma = get_or(params, "sigma", mc.sigma, where);
    }
    mc.k = get_or(params, "k", 1.0, where);
    mc.rest = get_or(params, "rest", 1.0, where);
    mc.shell = get_or(params, "shell", 1.0, where);
  } else if (mc.name == "quasiconvex_wrapper") {
    check_keys(params, {"density", "value", "decomposition"}, where);
    if (params.contains("density")) mc.density = params.at("density").get<std::string>();
    if (mc.density != "frobenius_squared" && mc.density != "constant") throw InputError("unknown density: " + mc.density);
    mc.density_value = get_or(params, "value", 0.0, where);
    if (params.contains("decomposition")) mc.decomposition = params.at("decomposition").get<std::string>();
    if (mc.decomposition != "kuhn" && mc.decomposition != "antikuhn")
      throw InputError("unknown decomposition: " + mc.decomposition);
  } else if (mc.name == "quadratic_form") {
    check_keys(params, {"mu", "lambda", "kappa", "delta", "Q"}, where);
    mc.mu = get_or(params, "mu", 1.0, where);
    mc.lambda = get_or(params, "lambda", 0.0, where);
    mc.kappa = get_or(params, "kappa", 1.0, where);
    mc.delta = get_or(params, "delta", 0.5, where);
    if (params.contains("Q")) mc.Q = matrix(params.at("Q"), cfg.d * cfg.d, cfg.d * cfg.d, "model.params.Q");
  } else {
    throw InputError("unknown model: " + mc.name);
  }
}

void parse_solver(const json& block, SolveOptions& opts) {
  check_keys(block, {"grad_tol", "max_iter", "history", "n_random_starts", "perturb_amp", "use_buckling_starts"}, "solver");
  opts.grad_tol = get_or(block, "grad_tol", opts.grad_tol, "solver");
  if (block.contains("max_iter")) opts.max_iter = integer(block.at("max_iter"), "solver.max_iter");
  if (block.contains("history")) opts.history = integer(block.at("history"), "solver.history");
  if (block.contains("n_random_starts")) opts.n_random_starts = integer(block.at("n_random_starts"), "solver.n_random_starts");
  opts.perturb_amp = get_or(block, "perturb_amp", opts.perturb_amp, "solver");
  if (block.contains("use_buckling_starts")) {
    if (!block.at("use_buckling_starts").is_boolean()) throw InputError("expected a boolean: solver.use_buckling_starts");
    opts.use_buckling_starts = block.at("use_buckling_starts").get<bool>();
  }
  opts.validate();
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  check_keys(root, {"lattice", "model", "task", "M", "s0", "schedule", "solver", "seed", "output", "tiling",
                    "cb_threshold", "elastic", "quick"},
             "");

  RunConfig cfg;
  cfg.canonical = root.dump();
  cfg.hash = fnv1a_hex(cfg.canonical);

  const json& lattice = require(root, "lattice", "");
  check_keys(lattice, {"d", "A", "stencil", "m"}, "lattice");
  cfg.d = integer(require(lattice, "d", "lattice"), "lattice.d");
  if (cfg.d != 2 && cfg.d != 3) throw InputError("unsupported dimension: lattice.d must be 2 or 3");
  cfg.A = lattice.contains("A") ? matrix(lattice.at("A"), cfg.d, cfg.d, "lattice.A") : Matrix::Identity(cfg.d, cfg.d);
  if (lattice.contains("m")) cfg.m = integer(lattice.at("m"), "lattice.m");
  if (lattice.contains("stencil")) {
    const json& st = lattice.at("stencil");
    if (!st.is_array()) throw InputError("expected an array: lattice.stencil");
    std::vector<IntVector> offsets;
    for (const auto& o : st) {
      if (!o.is_array() || static_cast<int>(o.size()) != cfg.d) throw InputError("dimension mismatch: lattice.stencil entry");
      IntVector v(cfg.d);
      for (int i = 0; i < cfg.d; ++i) v(i) = integer(o[i], "lattice.stencil");
      offsets.push_back(v);
    }
    cfg.stencil = offsets;
  }

  parse_model(require(root, "model", ""), cfg);

  const json& task = require(root, "task", "");
  if (!task.is_string()) throw InputError("expected a string: task");
  cfg.task = task.get<std::string>();
  static const std::set<std::string> tasks{"homogenize", "cb_scan", "elastic", "tiling_check", "validate"};
  if (!tasks.count(cfg.task)) throw InputError("unknown task: " + cfg.task);

  if (root.contains("M")) {
    const json& list = root.at("M");
    if (!list.is_array()) throw InputError("expected an array: M");
    for (const auto& entry : list) cfg.Ms.push_back(matrix(entry, cfg.d, cfg.d, "M entry must be d x d"));
  }
  if ((cfg.task == "homogenize" || cfg.task == "cb_scan" || cfg.task == "tiling_check") && cfg.Ms.empty())
    throw InputError("missing field: M");

  if (root.contains("s0")) {
    if (cfg.m == 0) throw InputError("internal variables undefined for Bravais model");
    const json& list = root.at("s0");
    if (!list.is_array()) throw InputError("expected an array: s0");
    for (const auto& entry : list) {
      if (!entry.is_array() || static_cast<int>(entry.size()) != cfg.d * cfg.m) throw InputError("dimension mismatch: s0 entry");
      Matrix s(cfg.d, cfg.m);
      for (int j = 0; j < cfg.m; ++j)
        for (int i = 0; i < cfg.d; ++i) s(i, j) = number(entry[j * cfg.d + i], "s0");
      cfg.s0s.push_back(s);
    }
  }

  if (root.contains("schedule")) {
    const json& list = root.at("schedule");
    if (!list.is_array()) throw InputError("expected an array: schedule");
    for (const auto& n : list) cfg.schedule.push_back(integer(n, "schedule"));
  } else {
    cfg.schedule = cfg.d == 2 ? std::vector<int>{8, 16, 32, 64} : std::vector<int>{4, 6, 8, 12};
  }

  if (root.contains("solver")) parse_solver(root.at("solver"), cfg.solver);
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw InputError("expected a non-negative integer: seed");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (root.contains("output")) {
    check_keys(root.at("output"), {"dir"}, "output");
    if (root.at("output").contains("dir")) cfg.output_dir = root.at("output").at("dir").get<std::string>();
  }
  if (root.contains("tiling")) {
    check_keys(root.at("tiling"), {"n", "k"}, "tiling");
    if (root.at("tiling").contains("n")) cfg.tiling_n = integer(root.at("tiling").at("n"), "tiling.n");
    if (root.at("tiling").contains("k")) cfg.tiling_k = integer(root.at("tiling").at("k"), "tiling.k");
  }
  cfg.cb_threshold = get_or(root, "cb_threshold", cfg.cb_threshold, "");
  if (root.contains("elastic")) {
    check_keys(root.at("elastic"), {"h"}, "elastic");
    cfg.elastic_h = get_or(root.at("elastic"), "h", cfg.elastic_h, "elastic");
  }
  if (root.contains("quick")) cfg.quick = root.at("quick").get<bool>();

  const LatticeSpec spec = config_lattice(cfg);
  if (cfg.task == "homogenize" || cfg.task == "cb_scan") {
    if (cfg.model.name != "pair_potential") validate_schedule(spec, cfg.schedule);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

LatticeSpec config_lattice(const RunConfig& cfg) { return build_lattice(cfg.d, cfg.A, cfg.stencil, cfg.m); }

PairPotential build_pair_potential(const RunConfig& cfg) {
  const ModelConfig& mc = cfg.model;
  if (mc.name != "pair_potential") throw InputError("not a pair-potential model: " + mc.name);
  if (mc.potential == "lennard_jones") {
    const double sigma = mc.sigma > 0.0 ? mc.sigma : equilibrium_lj_sigma(config_lattice(cfg), mc.cutoff);
    return lennard_jones(mc.epsilon, sigma);
  }
  if (mc.potential == "harmonic_shell") return harmonic_shell(mc.k, mc.rest, mc.shell);
  return zero_potential();
}

EnergyModel build_model(const RunConfig& cfg) {
  const LatticeSpec spec = config_lattice(cfg);
  const ModelConfig& mc = cfg.model;
  if (mc.name == "harmonic_spring") return harmonic_spring_model(spec, mc.k, mc.r0.value_or(1.0));
  if (mc.name == "multilattice_harmonic") return multilattice_harmonic_model(spec, mc.k, mc.r0);
  if (mc.name == "pair_potential") return pair_potential_model(spec, build_pair_potential(cfg), mc.cutoff);
  if (mc.name == "quasiconvex_wrapper") {
    const MatrixDensity V = mc.density == "constant" ? constant_density(mc.density_value) : frobenius_squared_density();
    const SimplicialDecomposition decomp = mc.decomposition == "antikuhn" && cfg.d == 2
                                               ? corner_decomposition(spec, {{0, 1, 2}, {1, 2, 3}})
                                               : kuhn_decomposition(spec);
    return quasiconvex_wrapper_model(spec, V, decomp);
  }
  if (mc.name == "quadratic_form") {
    QuadraticForm Q = mc.Q ? QuadraticForm{*mc.Q} : isotropic_form(cfg.d, mc.mu, mc.lambda);
    return quadratic_form_model(spec, Q, mc.kappa, mc.delta);
  }
  throw InputError("unknown model: " + mc.name);
}

}  // namespace cellhom
