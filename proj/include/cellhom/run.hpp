// Batch driver: executes a parsed run configuration and writes
// results.csv, summary.json and plotdata/ under the output directory.
#ifndef CELLHOM_RUN_HPP
#define CELLHOM_RUN_HPP

#include "cellhom/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace cellhom {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunOptions {
  int threads = 0;  // 0: hardware concurrency
  std::optional<std::string> out_dir;
};

/// Exit codes: 0 success, 2 when every solve failed to converge or a
/// validation property failed. Input and I/O errors throw.
int run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);

/// Replaces cfg.seed by CELLHOM_SEED when that variable is set.
void apply_seed_override(RunConfig& cfg);

/// Header of results.csv.
inline constexpr const char* kResultsHeader = "task,model,M,s0,N,f_N,energy,iters,converged,grad_norm,start_label";

}  // namespace cellhom

#endif  // CELLHOM_RUN_HPP
