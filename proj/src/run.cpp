#include "cellhom/run.hpp"

#include "cellhom/elasticity.hpp"
#include "cellhom/homogenize.hpp"
#include "cellhom/validation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

namespace cellhom {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const Matrix& M) {
  std::string out;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) out += (out.empty() ? "" : ";") + fmt(M(i, j));
  return out;
}

// Atom-major, matching the config layout.
std::string join_shifts(const std::optional<Matrix>& s) {
  if (!s) return "";
  std::string out;
  for (int j = 0; j < s->cols(); ++j)
    for (int i = 0; i < s->rows(); ++i) out += (out.empty() ? "" : ";") + fmt((*s)(i, j));
  return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(number(M(i, j)));
    rows.push_back(row);
  }
  return rows;
}

struct Row {
  std::optional<Matrix> s0;
  Matrix M;
  int N = 0;
  double f = 0.0;
  SolveResult* solve = nullptr;
};

struct Job {
  Matrix M;
  std::optional<Matrix> s0;
  std::string plot_name;
  HomogenizationResult hom;
  std::optional<CbScanRow> scan;
  std::optional<TilingCheck> tiling;
  json extra;
};

void run_pool(std::vector<Job>& jobs, int threads, const std::function<void(Job&)>& work) {
  const int n = static_cast<int>(jobs.size());
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        work(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int pool = std::max(1, std::min(threads, n));
  std::vector<std::thread> workers;
  for (int t = 1; t < pool; ++t) workers.emplace_back(worker);
  worker();
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json hom_json(const HomogenizationResult& h) {
  json j;
  j["schedule"] = h.schedule;
  json f = json::array();
  for (double v : h.f_values) f.push_back(number(v));
  j["f_values"] = f;
  j["w_cont"] = number(h.w_cont);
  j["w_raw"] = number(h.w_raw);
  j["fit_coeff"] = number(h.fit_coeff);
  j["fit_residual"] = number(h.fit_residual);
  j["clipped"] = h.clipped;
  std::vector<bool> conv;
  for (const auto& r : h.per_N) conv.push_back(r.converged);
  j["converged"] = conv;
  return j;
}

}  // namespace

void apply_seed_override(RunConfig& cfg) {
  const char* env = std::getenv("CELLHOM_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') throw InputError(std::string("CELLHOM_SEED is not a non-negative integer: ") + env);
  cfg.seed = v;
}

int run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  namespace fs = std::filesystem;
  const int threads = opts.threads > 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  const fs::path out_dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(cfg.output_dir);
  fs::create_directories(out_dir);

  json summary;
  summary["config_hash"] = cfg.hash;
  summary["task"] = cfg.task;
  summary["version"] = kArtifactVersion;
  summary["seed"] = cfg.seed;
  summary["results"] = json::array();
  json warnings = json::array();

  std::vector<Job> jobs;
  std::vector<Row> rows;
  int exit_code = 0;

  if (cfg.task == "validate") {
    const auto props = run_validation(cfg.quick, log, threads);
    bool ok = true;
    for (const auto& p : props) {
      summary["results"].push_back({{"property", p.name}, {"passed", p.passed}, {"detail", p.detail}});
      ok = ok && p.passed;
    }
    if (!ok) exit_code = 2;
  } else {
    const EnergyModel model = build_model(cfg);
    SolveOptions solver = cfg.solver;
    solver.seed = cfg.seed;

    std::vector<Matrix> Ms = cfg.Ms;
    if (Ms.empty()) Ms.push_back(Matrix::Identity(cfg.d, cfg.d));
    for (std::size_t i = 0; i < Ms.size(); ++i) {
      if (cfg.task == "homogenize" && model.m() > 0 && !cfg.s0s.empty()) {
        for (std::size_t j = 0; j < cfg.s0s.size(); ++j)
          jobs.push_back({Ms[i], cfg.s0s[j], "M" + std::to_string(i) + "_s" + std::to_string(j), {}, {}, {}, {}});
      } else {
        jobs.push_back({Ms[i], std::nullopt, "M" + std::to_string(i), {}, {}, {}, {}});
      }
    }
    solver.threads = std::max(1, threads / static_cast<int>(jobs.size()));
    const int pool = std::min(threads, static_cast<int>(jobs.size()));
    log << "task " << cfg.task << ": " << jobs.size() << " job(s), " << pool << " worker(s)\n";

    std::function<void(Job&)> work;
    if (cfg.task == "homogenize") {
      validate_schedule(model.spec(), cfg.schedule);
      work = [&](Job& job) {
        if (model.m() == 0)
          job.hom = w_cont_estimate(model, job.M, cfg.schedule, solver);
        else if (job.s0)
          job.hom = w_cont_multilattice(model, job.M, *job.s0, cfg.schedule, solver);
        else
          job.hom = w_cont_min_over_s(model, job.M, cfg.schedule, solver);
      };
    } else if (cfg.task == "cb_scan") {
      validate_schedule(model.spec(), cfg.schedule);
      work = [&](Job& job) {
        job.scan = cb_validity_scan(model, {job.M}, cfg.schedule, solver, cfg.cb_threshold).front();
        job.hom = job.scan->detail;
      };
    } else if (cfg.task == "tiling_check") {
      work = [&](Job& job) { job.tiling = tiling_upper_bound_check(model, job.M, cfg.tiling_n, cfg.tiling_k, solver); };
    } else if (cfg.task == "elastic") {
      work = [&](Job& job) {
        const Matrix M = job.M;
        const Matrix I = Matrix::Identity(cfg.d, cfg.d);
        const ElasticTensor t = numeric_elastic_tensor(
            [&](const Matrix& G) { return cauchy_born_density(model, G + M - I); }, cfg.d, cfg.elastic_h);
        const CauchyReport rep = cauchy_residuals(t);
        json e;
        e["tensor"] = to_json(t.c);
        e["voigt"] = to_json(t.voigt());
        e["richardson_error"] = number(t.error.cwiseAbs().maxCoeff());
        json cauchy = json::object();
        for (const auto& [label, v] : rep.cauchy) cauchy[label] = number(v);
        e["cauchy"] = cauchy;
        e["max_cauchy"] = number(rep.max_cauchy());
        e["minor_symmetry"] = number(rep.minor_symmetry);
        e["major_symmetry"] = number(rep.major_symmetry);
        if (cfg.model.name == "pair_potential" && (M - I).norm() == 0.0) {
          const ElasticTensor exact = pair_elastic_tensor(build_pair_potential(cfg), config_lattice(cfg), cfg.model.cutoff);
          e["pair_tensor"] = to_json(exact.c);
          e["pair_tensor_deviation"] = number((exact.c - t.c).cwiseAbs().maxCoeff());
        }
        if (cfg.model.name == "quadratic_form" && (M - I).norm() == 0.0) {
          const QuadraticForm Q =
              cfg.model.Q ? QuadraticForm{*cfg.model.Q} : isotropic_form(cfg.d, cfg.model.mu, cfg.model.lambda);
          e["hessian_residual"] =
              number(quadratic_model_hessian_check(Q, cfg.model.kappa, cfg.model.delta, cfg.elastic_h));
        }
        job.extra = e;
        std::ostringstream csv;
        write_tensor_csv(t, csv);
        job.extra["csv"] = csv.str();
      };
    } else {
      throw InputError("unknown task: " + cfg.task);
    }
    run_pool(jobs, pool, work);

    const fs::path plot_dir = out_dir / "plotdata";
    bool any_solve = false;
    bool any_converged = false;
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
      Job& job = jobs[idx];
      json entry;
      entry["M"] = to_json(job.M);
      if (job.s0) entry["s0"] = to_json(*job.s0);
      if (cfg.task == "homogenize" || cfg.task == "cb_scan") {
        entry.update(hom_json(job.hom));
        const std::optional<Matrix> s_cb = job.s0;
        const double w_cb = cauchy_born_density(model, job.M, s_cb);
        entry["w_cb"] = number(w_cb);
        entry["gap"] = number(w_cb - job.hom.w_cont);
        if (job.scan) entry["flagged"] = job.scan->flagged;
        for (const auto& w : job.hom.warnings) warnings.push_back(job.plot_name + ": " + w);
        for (std::size_t k = 0; k < job.hom.schedule.size(); ++k)
          rows.push_back({job.s0, job.M, job.hom.schedule[k], job.hom.f_values[k], &job.hom.per_N[k]});

        fs::create_directories(plot_dir);
        std::ofstream plot = open_out(plot_dir / (job.plot_name + ".csv"));
        plot << "inv_N,f_N\n";
        for (std::size_t k = 0; k < job.hom.schedule.size(); ++k)
          plot << fmt(1.0 / job.hom.schedule[k]) << ',' << fmt(job.hom.f_values[k]) << '\n';
      } else if (cfg.task == "tiling_check") {
        TilingCheck& t = *job.tiling;
        entry["n"] = t.n;
        entry["k"] = t.k;
        entry["f_n"] = number(t.f_n);
        entry["f_k_solved"] = number(t.f_k_solved);
        entry["f_k_tiled"] = number(t.f_k_tiled);
        entry["tiled_bound"] = number(t.tiled_bound);
        entry["dominance"] = t.f_k_solved <= t.f_k_tiled + 1e-9;
        rows.push_back({std::nullopt, job.M, t.n, t.f_n, &t.n_solve});
        rows.push_back({std::nullopt, job.M, t.k, t.f_k_solved, &t.k_solve});
      } else {
        std::ofstream csv = open_out(out_dir / ("tensor_" + job.plot_name + ".csv"));
        csv << job.extra["csv"].get<std::string>();
        if (idx == 0) {
          std::ofstream first = open_out(out_dir / "tensor.csv");
          first << job.extra["csv"].get<std::string>();
        }
        job.extra.erase("csv");
        entry.update(job.extra);
      }
      summary["results"].push_back(entry);
    }

    for (const Row& r : rows) {
      any_solve = true;
      any_converged = any_converged || r.solve->converged;
      if (!r.solve->converged)
        log << "warning: N=" << r.N << " did not converge (grad_norm " << fmt(r.solve->grad_norm) << ")\n";
    }
    if (any_solve && !any_converged) exit_code = 2;
  }

  std::ofstream csv = open_out(out_dir / "results.csv");
  csv << kResultsHeader << '\n';
  for (const Row& r : rows) {
    csv << cfg.task << ',' << cfg.model.name << ',' << join(r.M) << ',' << join_shifts(r.s0) << ',' << r.N << ','
        << fmt(r.f) << ',' << fmt(r.solve->energy) << ',' << r.solve->iterations << ','
        << (r.solve->converged ? "true" : "false") << ',' << fmt(r.solve->grad_norm) << ',' << r.solve->start_label
        << '\n';
  }
  if (!csv) throw std::runtime_error("write failed: results.csv");

  summary["warnings"] = warnings;
  summary["exit_code"] = exit_code;
  summary["solver"] = {{"grad_tol", cfg.solver.grad_tol},
                       {"max_iter", cfg.solver.max_iter},
                       {"history", cfg.solver.history},
                       {"n_random_starts", cfg.solver.n_random_starts},
                       {"perturb_amp", cfg.solver.perturb_amp},
                       {"use_buckling_starts", cfg.solver.use_buckling_starts}};
  summary["timestamp"] = utc_timestamp();
  std::ofstream js = open_out(out_dir / "summary.json");
  js << summary.dump(2) << '\n';
  if (!js) throw std::runtime_error("write failed: summary.json");

  log << "wrote " << (out_dir / "results.csv").string() << " and " << (out_dir / "summary.json").string() << '\n';
  return exit_code;
}

}  // namespace cellhom
