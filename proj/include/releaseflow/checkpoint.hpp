#pragma once

#include <filesystem>
#include <iosfwd>

#include "releaseflow/nn.hpp"

namespace releaseflow::nn {

// Binary layout: 8-byte magic "RFLOWMLP", 8-byte little-endian architecture
// digest, then the flat parameter vector as little-endian IEEE-754 doubles.
void write_checkpoint(std::ostream& out, const MlpParams& params);
MlpParams read_checkpoint(std::istream& in, const MlpArchitecture& arch);

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_checkpoint(const std::filesystem::path& path, const MlpArchitecture& arch);

}  // namespace releaseflow::nn
