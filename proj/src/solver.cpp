#include "cellhom/solver.hpp"

#include "cellhom/lbfgs.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace cellhom {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based uniform stream keyed by (seed, stream): value k depends only
// on the key and k, so streams can be consumed in any order or thread.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream) : key_(splitmix(seed ^ splitmix(stream + 1))) {}
  double operator()() { return static_cast<double>(splitmix(key_ + counter_++) >> 11) * 0x1.0p-53; }
  double symmetric(double amp) { return amp * (2.0 * (*this)() - 1.0); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

constexpr std::uint64_t kTinyBondStream = 0xb0dULL << 32;

double rest_length(const EnergyModel& model) {
  for (const auto& [key, value] : model.params)
    if (key == "r0") return value;
  return 1.0;
}

}  // namespace

void SolveOptions::validate() const {
  if (!(grad_tol > 0.0)) throw InputError("solver option grad_tol must be positive");
  if (max_iter < 1) throw InputError("solver option max_iter must be >= 1");
  if (history < 1) throw InputError("solver option history must be >= 1");
  if (n_random_starts < 0) throw InputError("solver option n_random_starts must be >= 0");
  if (!(perturb_amp >= 0.0)) throw InputError("solver option perturb_amp must be >= 0");
  if (threads < 1) throw InputError("solver option threads must be >= 1");
}

Matrix polar_rotation(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// ---------------------------------------------------------------------------

Problem::Problem(GridPtr grid, EnergyModel model, Matrix M, std::optional<Matrix> s0)
    : grid_(std::move(grid)), model_(std::move(model)), M_(std::move(M)), s0_(std::move(s0)) {
  const auto& gs = grid_->spec();
  const auto& ms = model_.spec();
  if (gs.d != ms.d || gs.m != ms.m || gs.site_offsets.size() != ms.site_offsets.size() || gs.A != ms.A)
    throw InputError("incompatible stencil: grid and model lattices differ");
  for (std::size_t i = 0; i < gs.site_offsets.size(); ++i)
    if (gs.site_offsets[i] != ms.site_offsets[i]) throw InputError("incompatible stencil: grid and model lattices differ");
  if (M_.rows() != gs.d || M_.cols() != gs.d) throw InputError("dimension mismatch: M must be d x d");
  if (!M_.allFinite()) throw InputError("non-finite input");

  const int d = gs.d;
  const int m = gs.m;
  const int n_int = static_cast<int>(grid_->interior_cells().size());
  if (m == 0) {
    if (s0_) throw InputError("internal variables undefined for Bravais model");
    mode_ = InternalMode::kNone;
  } else if (s0_) {
    if (s0_->rows() != d || s0_->cols() != m) throw InputError("dimension mismatch: s0 must be d x m");
    mode_ = InternalMode::kMeanConstrained;
    n_internal_ = d * m * (n_int - 1);
  } else {
    mode_ = InternalMode::kFree;
    n_internal_ = d * m * n_int;
  }

  boundary_ = affine_deformation(grid_, M_);
  var_of_site_.assign(grid_->n_sites(), -1);
  int next = 0;
  for (int s : grid_->free_sites()) {
    var_of_site_[s] = next;
    next += d;
  }
  for (int c : grid_->interior_cells()) interior_sites_.push_back(grid_->cell_sites(c));
}

Problem assemble(GridPtr grid, const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s0) {
  return Problem(std::move(grid), model, M, s0);
}

Matrix Problem::cell_shifts(const Vector& x, int idx) const {
  const int d = grid_->dim();
  const int m = model_.m();
  const int block = d * m;
  const int base = n_site_vars();
  switch (mode_) {
    case InternalMode::kNone:
      return Matrix(d, 0);
    case InternalMode::kFree:
      return Eigen::Map<const Matrix>(x.data() + base + idx * block, d, m);
    case InternalMode::kMeanConstrained: {
      const int last = static_cast<int>(interior_sites_.size()) - 1;
      if (idx < last) return *s0_ + Eigen::Map<const Matrix>(x.data() + base + idx * block, d, m);
      Matrix s = *s0_;
      for (int c = 0; c < last; ++c) s -= Eigen::Map<const Matrix>(x.data() + base + c * block, d, m);
      return s;
    }
  }
  return Matrix(d, 0);
}

double Problem::energy_and_gradient(const Vector& x, Vector* grad) const {
  if (x.size() != n_vars()) throw InputError("dimension mismatch: variable vector");
  const int d = grid_->dim();
  const int nc = model_.spec().corners();
  const int ncols = model_.n_cols();
  const int m = model_.m();
  const int block = d * m;
  const int base = n_site_vars();
  const int last = static_cast<int>(interior_sites_.size()) - 1;

  Matrix F(d, ncols), dF(d, ncols), ds(d, m);
  if (grad) grad->setZero(n_vars());
  Vector last_ds_sum;
  if (grad && mode_ == InternalMode::kMeanConstrained) last_ds_sum = Vector::Zero(block);
  Matrix s = Matrix::Zero(d, m);
  const Matrix s_last = mode_ == InternalMode::kMeanConstrained ? cell_shifts(x, last) : Matrix(d, m);
  SmallVector mean(d);

  double E = 0.0;
  for (int idx = 0; idx <= last; ++idx) {
    const auto& sites = interior_sites_[idx];
    for (int j = 0; j < ncols; ++j) {
      const int v = var_of_site_[sites[j]];
      if (v >= 0) F.col(j) = x.segment(v, d);
      else F.col(j) = boundary_.y.col(sites[j]);
    }
    mean = F.leftCols(nc).rowwise().sum() / nc;
    F.colwise() -= mean;
    if (mode_ == InternalMode::kFree) {
      s = Eigen::Map<const Matrix>(x.data() + base + idx * block, d, m);
    } else if (mode_ == InternalMode::kMeanConstrained) {
      if (idx < last) s = *s0_ + Eigen::Map<const Matrix>(x.data() + base + idx * block, d, m);
      else s = s_last;
    }

    E += model_.energy_centered(F, s, grad ? &dF : nullptr, grad ? &ds : nullptr);
    if (!grad) continue;

    mean = dF.rowwise().sum() / nc;
    dF.leftCols(nc).colwise() -= mean;
    for (int j = 0; j < ncols; ++j) {
      const int v = var_of_site_[sites[j]];
      if (v >= 0) grad->segment(v, d) += dF.col(j);
    }
    if (mode_ == InternalMode::kFree) {
      grad->segment(base + idx * block, block) += Eigen::Map<const Vector>(ds.data(), block);
    } else if (mode_ == InternalMode::kMeanConstrained) {
      if (idx < last) grad->segment(base + idx * block, block) += Eigen::Map<const Vector>(ds.data(), block);
      else last_ds_sum = Eigen::Map<const Vector>(ds.data(), block);
    }
  }
  if (grad && mode_ == InternalMode::kMeanConstrained)
    for (int c = 0; c < last; ++c) grad->segment(base + c * block, block) -= last_ds_sum;

  if (!std::isfinite(E)) throw NumericError("diverged evaluation");
  return E;
}

Matrix Problem::site_gradient(const Vector& x) const {
  const int d = grid_->dim();
  const int nc = model_.spec().corners();
  const int ncols = model_.n_cols();
  const Deformation def = deformation(x);
  Matrix G = Matrix::Zero(d, grid_->n_sites());
  Matrix F(d, ncols), dF(d, ncols), ds(d, model_.m());
  for (std::size_t idx = 0; idx < interior_sites_.size(); ++idx) {
    const auto& sites = interior_sites_[idx];
    for (int j = 0; j < ncols; ++j) F.col(j) = def.y.col(sites[j]);
    const Vector mean = F.leftCols(nc).rowwise().mean();
    F.colwise() -= mean;
    model_.energy_centered(F, cell_shifts(x, static_cast<int>(idx)), &dF, &ds);
    const Vector total = dF.rowwise().sum() / nc;
    dF.leftCols(nc).colwise() -= total;
    for (int j = 0; j < ncols; ++j) G.col(sites[j]) += dF.col(j);
  }
  return G;
}

Deformation Problem::deformation(const Vector& x) const {
  Deformation def = boundary_;
  const int d = grid_->dim();
  for (int s : grid_->free_sites()) def.y.col(s) = x.segment(var_of_site_[s], d);
  return def;
}

std::optional<InternalField> Problem::internal_field(const Vector& x) const {
  if (mode_ == InternalMode::kNone) return std::nullopt;
  InternalField f;
  f.grid = grid_;
  const int n = static_cast<int>(interior_sites_.size());
  const int m = model_.m();
  f.s.resize(grid_->dim(), n * m);
  for (int c = 0; c < n; ++c) f.s.middleCols(c * m, m) = cell_shifts(x, c);
  if (mode_ == InternalMode::kMeanConstrained) f.mean_target = *s0_;
  return f;
}

Vector Problem::pack(const Deformation& def, const std::optional<InternalField>& internal) const {
  if (def.y.rows() != grid_->dim() || def.y.cols() != grid_->n_sites()) throw InputError("dimension mismatch: start deformation");
  Vector x = Vector::Zero(n_vars());
  const int d = grid_->dim();
  for (int s : grid_->free_sites()) x.segment(var_of_site_[s], d) = def.y.col(s);
  if (mode_ == InternalMode::kNone || !internal) return x;

  const int m = model_.m();
  const int block = d * m;
  const int base = n_site_vars();
  const int n = static_cast<int>(interior_sites_.size());
  if (internal->s.rows() != d || internal->s.cols() != n * m) throw InputError("dimension mismatch: start internal field");
  const int count = mode_ == InternalMode::kFree ? n : n - 1;
  for (int c = 0; c < count; ++c) {
    Matrix v = internal->s.middleCols(c * m, m);
    if (mode_ == InternalMode::kMeanConstrained) v -= *s0_;
    x.segment(base + c * block, block) = Eigen::Map<const Vector>(v.data(), block);
  }
  return x;
}

Vector Problem::affine_start() const { return pack(boundary_); }

// ---------------------------------------------------------------------------

namespace {

double min_bond_length(const Problem& problem, const Vector& x) {
  const Deformation def = problem.deformation(x);
  const auto& grid = problem.grid();
  double best = INFINITY;
  for (int c : grid.interior_cells()) {
    const auto sites = grid.cell_sites(c);
    for (std::size_t a = 0; a < sites.size(); ++a)
      for (std::size_t b = a + 1; b < sites.size(); ++b)
        best = std::min(best, (def.y.col(sites[a]) - def.y.col(sites[b])).norm());
  }
  return best;
}

SolveResult minimize_vector(const Problem& problem, const SolveOptions& opts, Vector x0, std::string label) {
  opts.validate();
  if (problem.n_site_vars() > 0 && min_bond_length(problem, x0) < 1e-8) {
    UniformStream noise(opts.seed, kTinyBondStream);
    for (int i = 0; i < problem.n_site_vars(); ++i) x0(i) += noise.symmetric(1e-6);
  }
  LbfgsOptions lo;
  lo.grad_tol = opts.grad_tol;
  lo.max_iter = opts.max_iter;
  lo.history = opts.history;
  const LbfgsResult r =
      lbfgs_minimize([&problem](const Vector& x, Vector* g) { return problem.energy_and_gradient(x, g); }, std::move(x0), lo);

  SolveResult out;
  out.energy = r.f;
  out.argmin = problem.deformation(r.x);
  out.internal = problem.internal_field(r.x);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.grad_norm = r.grad_norm;
  out.start_label = std::move(label);
  return out;
}

}  // namespace

SolveResult minimize(const Problem& problem, const SolveOptions& opts, const Deformation& start,
                     const std::optional<InternalField>& internal) {
  return minimize_vector(problem, opts, problem.pack(start, internal), "user");
}

Deformation buckling_start(GridPtr grid, const Matrix& M, double rest) {
  if (grid->dim() != 2) throw InputError("buckling start is 2D-only");
  if (M.rows() != 2 || M.cols() != 2) throw InputError("dimension mismatch: M must be 2 x 2");
  Deformation def = affine_deformation(grid, M);
  const Matrix bonds = M * grid->spec().A;
  Matrix amp = Matrix::Zero(2, 2);  // column i: amplitude vector of sigma_i
  for (int i = 0; i < 2; ++i) {
    const double len = bonds.col(i).norm();
    if (len >= rest || len == 0.0) continue;
    const double a = 0.5 * std::sqrt(rest * rest / (len * len) - 1.0);
    amp(0, i) = -a * bonds(1, i);
    amp(1, i) = a * bonds(0, i);
  }
  for (int s : grid->free_sites()) {
    const IntVector k = grid->site_coords(s);
    for (int i = 0; i < 2; ++i) def.y.col(s) += (k(i) % 2 == 0 ? 1.0 : -1.0) * amp.col(i);
  }
  return def;
}

SolveResult multi_start_minimize(const Problem& problem, const SolveOptions& opts,
                                 const std::vector<NamedStart>& extra_starts) {
  opts.validate();
  struct Start {
    std::string label;
    Vector x;
  };
  std::vector<Start> starts;
  const Vector affine = problem.affine_start();
  starts.push_back({"affine", affine});

  const auto& grid = problem.grid();
  const int d = grid.dim();
  const double rest = rest_length(problem.model());
  if (opts.use_buckling_starts && d == 2 && problem.model().m() == 0) {
    const Matrix bonds = problem.M() * grid.spec().A;
    if (bonds.col(0).norm() < rest || bonds.col(1).norm() < rest)
      starts.push_back({"buckling", problem.pack(buckling_start(problem.grid_ptr(), problem.M(), rest))});
  }

  const Matrix R = polar_rotation(problem.M());
  for (int i = 0; i < opts.n_random_starts; ++i) {
    UniformStream noise(opts.seed, static_cast<std::uint64_t>(i));
    Vector x = affine;
    Vector xi(d);
    for (int v = 0; v < problem.n_site_vars(); v += d) {
      for (int k = 0; k < d; ++k) xi(k) = noise.symmetric(opts.perturb_amp);
      x.segment(v, d) += R * xi;
    }
    for (int v = problem.n_site_vars(); v < problem.n_vars(); v += d) {
      for (int k = 0; k < d; ++k) xi(k) = noise.symmetric(opts.perturb_amp);
      x.segment(v, d) += R * xi;
    }
    starts.push_back({"random_" + std::to_string(i), std::move(x)});
  }
  for (const auto& s : extra_starts) starts.push_back({s.label, problem.pack(s.def)});

  const int n = static_cast<int>(starts.size());
  std::vector<std::optional<SolveResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        results[i] = minimize_vector(problem, opts, starts[i].x, starts[i].label);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(opts.threads, n);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Lowest energy wins, converged or not: every start yields an admissible
  // field, so the lowest energy is the best available upper bound.
  int best = -1;
  for (int i = 0; i < n; ++i)
    if (results[i] && (best < 0 || results[i]->energy < results[best]->energy)) best = i;
  if (best < 0) std::rethrow_exception(errors.front());
  return std::move(*results[best]);
}

}  // namespace cellhom
