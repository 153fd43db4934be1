#pragma once

// Checkpoint files: one JSON document holding the model config (vocabulary
// included), named parameter tensors, optional optimizer state and trainer
// metadata, plus an FNV-1a digest of everything else.

#include <optional>
#include <string>

#include "json.hpp"
#include "motionlm/model/motion_lm.hpp"
#include "motionlm/numeric/optim.hpp"

namespace motionlm {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  numeric::ParameterList<float> parameters;  // detached copies
  std::optional<numeric::AdamWState> optimizer;
  nlohmann::json metadata = nlohmann::json::object();
  std::string digest;  // filled on save and verified on load
};

Checkpoint make_checkpoint(const MotionLM& model,
                           const numeric::AdamWState* optimizer = nullptr,
                           nlohmann::json metadata = nlohmann::json::object());

// Serialized document and its digest.
nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& document);

// Returns the digest written into the file.
std::string save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Builds a model from the checkpoint config and copies its parameters in.
MotionLM restore_model(const Checkpoint& checkpoint);

}  // namespace motionlm
