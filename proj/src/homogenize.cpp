#include "cellhom/homogenize.hpp"

#include <cmath>
#include <cstdio>

namespace cellhom {

namespace {

GridPtr make_grid(const EnergyModel& model, int N) { return std::make_shared<const CellGrid>(model.spec(), N); }

double box_f(const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s0, int N,
             const SolveOptions& opts, SolveResult* detail) {
  const Problem problem = assemble(make_grid(model, N), model, M, s0);
  SolveResult r = multi_start_minimize(problem, opts);
  const double f = r.energy / std::pow(static_cast<double>(N), model.dim());
  if (detail) *detail = std::move(r);
  return f;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

HomogenizationResult estimate(const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s0,
                              const std::vector<int>& schedule, const SolveOptions& opts) {
  validate_schedule(model.spec(), schedule);
  HomogenizationResult res;
  res.M = M;
  res.s0 = s0;
  res.schedule = schedule;
  for (int N : schedule) {
    SolveResult detail;
    res.f_values.push_back(box_f(model, M, s0, N, opts, &detail));
    if (!detail.converged)
      res.warnings.push_back("N=" + std::to_string(N) + ": solver did not converge (grad_norm " +
                             format_double(detail.grad_norm) + ")");
    res.per_N.push_back(std::move(detail));
  }

  const InverseNFit fit = fit_inverse_n(schedule, res.f_values);
  res.w_raw = fit.w / model.spec().det_abs;
  res.fit_coeff = fit.a;
  res.fit_residual = fit.residual;
  res.w_cont = std::max(res.w_raw, 0.0);
  if (res.w_raw < 0.0) {
    res.clipped = true;
    res.warnings.push_back("negative intercept " + format_double(res.w_raw) + " clipped to 0");
  }

  // Copies of an n-box minimizer tile every multiple of n, so f at a multiple
  // can exceed f_n by at most the affine energy of the new boundary cells.
  if (model.spec().is_unit_cell()) {
    const double w_cell = cauchy_born_density(model, M, s0) * model.spec().det_abs;
    const int d = model.dim();
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      for (std::size_t j = i + 1; j < schedule.size(); ++j) {
        if (schedule[j] % schedule[i] != 0) continue;
        const double n = schedule[i];
        const double bound = res.f_values[i] + w_cell * (1.0 - std::pow(1.0 - 2.0 / n, d));
        if (res.f_values[j] > bound + 10.0 * opts.grad_tol)
          res.warnings.push_back("non-monotone anomaly: f at N=" + std::to_string(schedule[j]) +
                                 " exceeds the tiling bound from N=" + std::to_string(schedule[i]));
      }
    }
  }
  return res;
}

}  // namespace

void validate_schedule(const LatticeSpec& spec, const std::vector<int>& schedule) {
  if (schedule.size() < 3) throw InputError("schedule needs at least 3 sizes");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] <= 2 * spec.boundary_layer()) throw InputError("no interior cells: schedule entry too small");
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw InputError("schedule must be strictly increasing");
  }
}

InverseNFit fit_inverse_n(const std::vector<int>& schedule, const std::vector<double>& f_values) {
  if (schedule.size() != f_values.size() || schedule.size() < 2) throw InputError("fit needs matching data of size >= 2");
  const int n = static_cast<int>(schedule.size());
  Matrix X(n, 2);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = 1.0 / schedule[i];
    y(i) = f_values[i];
  }
  const Vector coef = X.colPivHouseholderQr().solve(y);
  InverseNFit fit;
  fit.w = coef(0);
  fit.a = coef(1);
  fit.residual = std::sqrt((X * coef - y).squaredNorm() / n);
  return fit;
}

double loglog_exponent(const std::vector<int>& schedule, const std::vector<double>& f_values) {
  if (schedule.size() != f_values.size() || schedule.size() < 2) throw InputError("fit needs matching data of size >= 2");
  const int n = static_cast<int>(schedule.size());
  Matrix X(n, 2);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    if (!(f_values[i] > 0.0)) throw InputError("log-log fit needs positive values");
    X(i, 0) = 1.0;
    X(i, 1) = std::log(static_cast<double>(schedule[i]));
    y(i) = std::log(f_values[i]);
  }
  return X.colPivHouseholderQr().solve(y)(1);
}

double f_N(const EnergyModel& model, const Matrix& M, int N, const SolveOptions& opts, SolveResult* detail) {
  if (model.m() > 0) throw InputError("multilattice model needs w_cont_multilattice or w_cont_min_over_s");
  return box_f(model, M, std::nullopt, N, opts, detail);
}

HomogenizationResult w_cont_estimate(const EnergyModel& model, const Matrix& M, const std::vector<int>& schedule,
                                     const SolveOptions& opts) {
  if (model.m() > 0) throw InputError("multilattice model needs w_cont_multilattice or w_cont_min_over_s");
  return estimate(model, M, std::nullopt, schedule, opts);
}

double cauchy_born_density(const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s) {
  if (M.rows() != model.dim() || M.cols() != model.dim()) throw InputError("dimension mismatch: M must be d x d");
  const Matrix F = affine_cell_gradient(model.spec(), M);
  const Matrix shifts = s ? *s : model.zero_internal();
  return eval_cell_energy(model, F, shifts) / model.spec().det_abs;
}

std::vector<CbScanRow> cb_validity_scan(const EnergyModel& model, const std::vector<Matrix>& Ms,
                                        const std::vector<int>& schedule, const SolveOptions& opts,
                                        double threshold) {
  std::vector<CbScanRow> rows;
  for (const auto& M : Ms) {
    CbScanRow row;
    row.M = M;
    row.w_cb = cauchy_born_density(model, M);
    row.detail = w_cont_estimate(model, M, schedule, opts);
    row.w_cont = row.detail.w_cont;
    row.gap = row.w_cb - row.w_cont;
    row.flagged = row.gap > threshold;
    rows.push_back(std::move(row));
  }
  return rows;
}

Deformation tile_deformation(GridPtr k_grid, const Deformation& v_n, const Matrix& M) {
  const int d = k_grid->dim();
  const int n = v_n.grid->N();
  const int k = k_grid->N();
  if (k % n != 0) throw InputError("tiling needs k to be a multiple of n");
  Deformation u = affine_deformation(k_grid, M);
  const Matrix& A = k_grid->spec().A;
  for (int s = 0; s < k_grid->n_sites(); ++s) {
    const IntVector x = k_grid->site_coords(s);
    // Sub-box index alpha; sites on shared faces see the affine datum from
    // every neighbouring copy, so the lowest copy is as good as any.
    IntVector alpha(d);
    for (int i = 0; i < d; ++i) alpha(i) = std::min(x(i) / n, k / n - 1);
    const IntVector local = x - n * alpha;
    const Vector shift = M * (A * (n * alpha).cast<double>());
    u.y.col(s) = v_n.y.col(v_n.grid->site_index(local)) + shift;
  }
  return u;
}

TilingCheck tiling_upper_bound_check(const EnergyModel& model, const Matrix& M, int n, int k, const SolveOptions& opts) {
  if (model.m() > 0) throw InputError("tiling check is defined for Bravais models");
  if (n <= 2 * model.spec().boundary_layer()) throw InputError("no interior cells: n too small");
  if (k % n != 0 || k <= n) throw InputError("tiling needs k to be a proper multiple of n");

  TilingCheck out;
  out.n = n;
  out.k = k;
  SolveResult small;
  out.f_n = f_N(model, M, n, opts, &small);

  const GridPtr k_grid = make_grid(model, k);
  const Problem problem = assemble(k_grid, model, M, std::nullopt);
  const Deformation tiled = tile_deformation(k_grid, small.argmin, M);
  const double kd = std::pow(static_cast<double>(k), model.dim());
  out.f_k_tiled = problem.energy_and_gradient(problem.pack(tiled), nullptr) / kd;
  const SolveResult solved = multi_start_minimize(problem, opts, {{"tiled", tiled}});
  out.f_k_solved = solved.energy / kd;

  const double w_cell = cauchy_born_density(model, M) * model.spec().det_abs;
  const double r = model.spec().boundary_layer();
  out.tiled_bound = out.f_n + w_cell * (1.0 - std::pow(1.0 - 2.0 * r / n, model.dim()));
  out.n_solve = std::move(small);
  out.k_solve = solved;
  return out;
}

HomogenizationResult w_cont_multilattice(const EnergyModel& model, const Matrix& M, const Matrix& s0,
                                         const std::vector<int>& schedule, const SolveOptions& opts) {
  if (model.m() < 1) throw InputError("internal variables undefined for Bravais model");
  return estimate(model, M, s0, schedule, opts);
}

HomogenizationResult w_cont_min_over_s(const EnergyModel& model, const Matrix& M, const std::vector<int>& schedule,
                                       const SolveOptions& opts) {
  if (model.m() < 1) throw InputError("internal variables undefined for Bravais model");
  return estimate(model, M, std::nullopt, schedule, opts);
}

}  // namespace cellhom
