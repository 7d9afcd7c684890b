#pragma once

#include <filesystem>
#include <iosfwd>

#include "scevae/model.hpp"

namespace scevae {

inline constexpr int kCheckpointVersion = 1;

// Text checkpoint; layout documented in docs/checkpoint_format.md.
void write_checkpoint(std::ostream& out, const ScevaeParams& params);
ScevaeParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ScevaeParams& params);
ScevaeParams load_checkpoint(const std::filesystem::path& path);

}  // namespace scevae
