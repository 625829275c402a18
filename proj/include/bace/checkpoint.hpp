#pragma once

#include <filesystem>

#include "bace/model.hpp"

namespace bace {

// Versioned plain-text checkpoint: header line `BACE-RUL v1`, dimensions,
// normalizer vectors, then each network's layer specs followed by row-major
// weights and biases with 17 significant digits. Round-trips value-exactly.
void save_checkpoint(const BaceRulModel& model, const std::filesystem::path& path);
BaceRulModel load_checkpoint(const std::filesystem::path& path);

}  // namespace bace
