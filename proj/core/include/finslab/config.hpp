#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finslab/comparison.hpp"
#include "finslab/estimates.hpp"
#include "finslab/grid.hpp"
#include "finslab/measure.hpp"
#include "finslab/metric.hpp"
#include "finslab/pde.hpp"
#include "finslab/region.hpp"

namespace finslab {

// INI-style run configuration: [section] key = value lines, # or ; comments.
// Unknown sections or keys are rejected; --set section.key=value overrides.
class RunConfig {
 public:
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
  static RunConfig from_text(const std::string& text,
                             const std::vector<std::string>& overrides = {});

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_num(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("run", "seed", 1)); }
  std::string output_dir() const { return get("run", "output", "out"); }

  MetricSpec build_metric() const;
  MeasureSpec build_measure() const;
  Region build_region() const;
  FieldGrid build_grid() const;       // [grid] + [initial] u0
  PotentialSpec build_potential() const;
  SolverConfig build_solver() const;
  CompareConfig build_compare() const;
  EstimateParams build_estimate() const;
  std::string estimate_variant() const;  // compact-n / compact-inf / noncompact-n / noncompact-inf

 private:
  void validate_schema() const;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace finslab
