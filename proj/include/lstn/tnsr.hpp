#pragma once

#include <filesystem>
#include <iosfwd>

#include "lstn/tensor.hpp"

namespace lstn {

// Binary tensor container:
//   magic "TNSR"
//   u32 little-endian rank
//   rank x u32 little-endian extents
//   row-major float32 little-endian payload
// On-disk element type is always float32; double tensors are narrowed on
// write and widened on read.

void save_tensor(const Tensor& t, const std::filesystem::path& path);
void write_tensor(const Tensor& t, std::ostream& out);

Tensor load_tensor(const std::filesystem::path& path);
Tensor read_tensor(std::istream& in, const std::string& origin);

}  // namespace lstn
