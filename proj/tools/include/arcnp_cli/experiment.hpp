#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arcnp/eval.hpp"
#include "arcnp_cli/config.hpp"

namespace arcnp::cli {

struct ExperimentResult {
  std::vector<eval::MetricReport> reports;
  nlohmann::json training = nlohmann::json::array();  // per-epoch metrics
  std::vector<nlohmann::json> samples;                // samples.jsonl lines
};

/// Raised from inside an experiment; `phase` names the stage that failed.
class PhaseError : public std::runtime_error {
 public:
  PhaseError(std::string phase, const std::string& what)
      : std::runtime_error(what), phase_(std::move(phase)) {}
  const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

/// Computes the experiment without writing anything. Progress lines go to
/// `log`. Throws PhaseError.
ExperimentResult execute(const ExperimentConfig& config, std::ostream& log);

/// Runs the experiment and writes metrics.csv, metrics.json, samples.jsonl
/// and manifest.json into the configured output directory. The manifest is
/// written even when a phase fails. Returns 0 on success.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Resolved plan as text.
std::string describe(const ExperimentConfig& config);

nlohmann::json manifest_json(const ExperimentConfig& config,
                             const std::string& status,
                             const std::string& phase,
                             const std::string& error);

}  // namespace arcnp::cli
