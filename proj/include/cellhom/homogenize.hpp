// Cell-formula sequence f_N, its 1/N extrapolation, Cauchy-Born densities,
// the tiling construction and the multilattice variants.
#ifndef CELLHOM_HOMOGENIZE_HPP
#define CELLHOM_HOMOGENIZE_HPP

#include "cellhom/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cellhom {

struct HomogenizationResult {
  Matrix M;
  std::optional<Matrix> s0;
  std::vector<int> schedule;
  std::vector<double> f_values;  // minimal energy / N^d (upper bounds)
  double w_raw = 0.0;            // fitted intercept / |det A|, before clipping
  double w_cont = 0.0;           // max(w_raw, 0)
  double fit_coeff = 0.0;        // a in f_N ~ w + a / N
  double fit_residual = 0.0;     // root mean square of the fit residuals
  bool clipped = false;
  std::vector<std::string> warnings;
  std::vector<SolveResult> per_N;
};

/// Least-squares fit f = w + a / N. Returns (w, a, rms residual).
struct InverseNFit {
  double w = 0.0;
  double a = 0.0;
  double residual = 0.0;
};
InverseNFit fit_inverse_n(const std::vector<int>& schedule, const std::vector<double>& f_values);

/// Slope of log f_N against log N by least squares. Requires f_N > 0.
double loglog_exponent(const std::vector<int>& schedule, const std::vector<double>& f_values);

/// multi-start minimum of the box problem divided by N^d.
double f_N(const EnergyModel& model, const Matrix& M, int N, const SolveOptions& opts, SolveResult* detail = nullptr);

HomogenizationResult w_cont_estimate(const EnergyModel& model, const Matrix& M, const std::vector<int>& schedule,
                                     const SolveOptions& opts);

/// W_cell(M * stencil) / |det A|; s defaults to zero shifts.
double cauchy_born_density(const EnergyModel& model, const Matrix& M, const std::optional<Matrix>& s = std::nullopt);

struct CbScanRow {
  Matrix M;
  double w_cb = 0.0;
  double w_cont = 0.0;
  double gap = 0.0;  // w_cb - w_cont
  bool flagged = false;
  HomogenizationResult detail;
};
std::vector<CbScanRow> cb_validity_scan(const EnergyModel& model, const std::vector<Matrix>& Ms,
                                        const std::vector<int>& schedule, const SolveOptions& opts,
                                        double threshold = 0.01);

struct TilingCheck {
  int n = 0;
  int k = 0;
  double f_n = 0.0;
  double f_k_solved = 0.0;
  double f_k_tiled = 0.0;
  /// f_n + W_cell(MZ) (1 - (1 - 2r/n)^d), the bound the tiled field obeys
  /// when the affine field is a competitor at size n.
  double tiled_bound = 0.0;
  SolveResult n_solve;
  SolveResult k_solve;
};

/// The k-box field built from copies of the n-box minimizer v_n,
/// u_k(x) = v_n(x - n a) + n M a on the sub-box n(a + [0,1]^d).
Deformation tile_deformation(GridPtr k_grid, const Deformation& v_n, const Matrix& M);

/// Solves the k-box directly (the tiled field is one of its starts) and
/// compares with the energy of the tiled field.
TilingCheck tiling_upper_bound_check(const EnergyModel& model, const Matrix& M, int n, int k, const SolveOptions& opts);

HomogenizationResult w_cont_multilattice(const EnergyModel& model, const Matrix& M, const Matrix& s0,
                                         const std::vector<int>& schedule, const SolveOptions& opts);

/// Shifts free per cell, no mean constraint.
HomogenizationResult w_cont_min_over_s(const EnergyModel& model, const Matrix& M, const std::vector<int>& schedule,
                                       const SolveOptions& opts);

void validate_schedule(const LatticeSpec& spec, const std::vector<int>& schedule);

}  // namespace cellhom

#endif  // CELLHOM_HOMOGENIZE_HPP
