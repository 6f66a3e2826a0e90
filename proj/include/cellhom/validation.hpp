// Property suite over the built-in models: exact benchmarks, invariances,
// gradient checks and the structural bounds of the cell problem.
#ifndef CELLHOM_VALIDATION_HPP
#define CELLHOM_VALIDATION_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace cellhom {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs every property and prints one PASS/FAIL line each to `log`. Quick
/// mode uses smaller boxes and fewer samples.
std::vector<PropertyResult> run_validation(bool quick, std::ostream& log, int threads = 1);

}  // namespace cellhom

#endif  // CELLHOM_VALIDATION_HPP
