#pragma once

// Binary checkpoint: magic "EVSCHKPT", u32 format version, u32 network
// count, then per network its name and layer-size manifest, followed by every
// parameter array in declared order as little-endian IEEE-754 doubles.

#include <filesystem>
#include <vector>

#include "evsched/agent.hpp"

namespace evsched {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedNet>& nets);
std::vector<NamedNet> load_checkpoint(const std::filesystem::path& path);

}  // namespace evsched
