#include "lstn/tnsr.hpp"

#include <cstring>
#include <fstream>

namespace lstn {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in, const std::string& origin) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw ParseError(origin + ": truncated tensor header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(const Tensor& t, std::ostream& out) {
  out.write("TNSR", 4);
  put_u32(out, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) put_u32(out, static_cast<uint32_t>(t.dim(i)));
  for (float v : t.values()) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
}

Tensor read_tensor(std::istream& in, const std::string& origin) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TNSR", 4) != 0)
    throw ParseError(origin + ": bad magic, expected TNSR");
  const uint32_t rank = get_u32(in, origin);
  if (rank > 8) throw ParseError(origin + ": implausible rank " + std::to_string(rank));
  std::vector<int> shape(rank);
  size_t n = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    const uint32_t d = get_u32(in, origin);
    if (d == 0) throw ParseError(origin + ": zero extent on axis " + std::to_string(i));
    shape[i] = static_cast<int>(d);
    n *= d;
  }
  std::vector<float> values(n);
  for (size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw ParseError(origin + ": truncated payload, expected " + std::to_string(n) + " floats");
    const uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                          (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    std::memcpy(&values[i], &bits, 4);
  }
  return Tensor::from_values(shape, std::move(values));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(t, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Tensor t = read_tensor(in, path.string());
  // Trailing bytes mean the file is not a plain tensor dump.
  char extra;
  if (in.read(&extra, 1)) throw ParseError(path.string() + ": trailing bytes after payload");
  return t;
}

}  // namespace lstn
