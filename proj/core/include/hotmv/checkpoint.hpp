#pragma once

// Binary checkpoint: "HOTMVCKP", u32 version, u64 tensor count, then per
// tensor u32 name length, name bytes, u64 rows, u64 cols and rows*cols
// doubles in row-major order. All integers and floats little-endian.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hotmv/ot.hpp"

namespace hotmv {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedMatrix {
  std::string name;
  Matrix value;
};

void write_checkpoint(std::ostream& out, const std::vector<NamedMatrix>& tensors);
std::vector<NamedMatrix> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& tensors);
std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path);

}  // namespace hotmv
