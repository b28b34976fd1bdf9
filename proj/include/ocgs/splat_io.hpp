#pragma once

#include <filesystem>

#include "ocgs/scene_model.hpp"

namespace ocgs {

/// Binary little-endian point-cloud PLY using the common splat property names
/// (x y z nx ny nz f_dc_* f_rest_* opacity scale_0 scale_1 rot_0..3). Values are stored
/// as doubles so a save/load round trip is bit-exact. Training statistics are not stored.
void save_splats(const std::filesystem::path& path, const SplatSet& splats);

/// Accepts float or double properties. The SH degree follows from the f_rest count.
SplatSet load_splats(const std::filesystem::path& path);

}  // namespace ocgs
