#pragma once

#include <filesystem>

#include "ocgs/config.hpp"
#include "ocgs/trainer.hpp"

namespace ocgs {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, version, the config it was trained with, and the complete
/// TrainState. Written to a temporary file first and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const TrainConfig& config);

/// Throws ErrorKind::checkpoint on bad magic, version mismatch or truncation; nothing
/// is returned unless the whole file parsed.
TrainState load_checkpoint(const std::filesystem::path& path, TrainConfig* stored_config = nullptr);

}  // namespace ocgs
