#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "arcnp/cnp.hpp"

namespace arcnp::nn {

inline constexpr const char* kCheckpointFormat = "arcnp-cnp-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMetadata {
  int epochs_trained = 0;
  int best_epoch = -1;
  double validation_lcb = 0.0;
  std::uint64_t seed = 0;
  /// Largest context size seen in training (0 = unknown).
  int max_training_context = 0;
  std::string process;
};

struct Checkpoint {
  CnpModel model;
  CheckpointMetadata metadata;
};

/// JSON document:
///   {"format": "arcnp-cnp-checkpoint", "version": 1, "config": {...},
///    "tensors": [{"name", "shape": [out, in], "data": [row-major]}...],
///    "metadata": {...}}
nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws std::runtime_error on a wrong format tag, an unsupported version
/// or mismatched tensor shapes.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace arcnp::nn
