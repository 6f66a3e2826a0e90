#include "cellhom/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace cellhom {

namespace {

double sup_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& fun, Vector x0, const LbfgsOptions& opts) {
  if (!(opts.grad_tol > 0.0) || opts.max_iter < 1 || opts.history < 1) throw InputError("bad solver options");

  LbfgsResult res;
  res.x = std::move(x0);
  Vector g(res.x.size());
  res.f = fun(res.x, &g);
  if (!std::isfinite(res.f) || !g.allFinite()) throw NumericError("diverged evaluation");
  res.grad_norm = sup_norm(g);

  std::deque<Vector> S, Y;
  std::deque<double> rho;
  Vector x_new(res.x.size()), g_new(res.x.size()), dir(res.x.size());
  // Progress window: stop when neither f nor the gradient norm moved beyond
  // rounding level over the last kWindow iterations.
  constexpr int kWindow = 100;
  double window_f = res.f;
  double window_grad = res.grad_norm;
  double best_grad = res.grad_norm;

  while (res.grad_norm > opts.grad_tol) {
    if (res.iterations >= opts.max_iter) return res;

    // Two-loop recursion.
    dir = -g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(dir);
      dir -= alpha[i] * Y[i];
    }
    if (!S.empty()) dir *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    else dir /= std::max(1.0, sup_norm(g));
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(dir);
      dir += (alpha[i] - beta) * S[i];
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      dir = -g / std::max(1.0, sup_norm(g));
      slope = g.dot(dir);
    }

    // Below the rounding level of f the energy test cannot resolve a decrease;
    // there the change of f is estimated by the trapezoidal rule from the
    // directional derivatives at both ends of the step.
    const double noise = opts.f_noise * std::max(1.0, std::abs(res.f));
    double step = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int k = 0; k <= opts.max_backtracks; ++k, step *= opts.backtrack) {
      x_new = res.x + step * dir;
      f_new = fun(x_new, &g_new);
      if (!std::isfinite(f_new) || !g_new.allFinite()) continue;
      if (f_new <= res.f + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
      if (f_new <= res.f + noise && 0.5 * step * (slope + g_new.dot(dir)) <= opts.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.line_search_failed = true;
      return res;
    }
    if (f_new > res.f + noise) throw std::logic_error("energy increased along accepted step");

    Vector s = x_new - res.x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    res.x.swap(x_new);
    g.swap(g_new);
    res.f = f_new;
    res.grad_norm = sup_norm(g);
    ++res.iterations;
    best_grad = std::min(best_grad, res.grad_norm);
    if (res.iterations % kWindow == 0) {
      if (window_f - res.f <= opts.f_noise * std::max(1.0, std::abs(res.f)) && best_grad > 0.9 * window_grad) {
        res.line_search_failed = true;
        return res;
      }
      window_f = res.f;
      window_grad = best_grad;
    }
  }
  res.converged = true;
  return res;
}

}  // namespace cellhom
