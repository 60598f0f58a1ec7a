#include "pbpa/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace pbpa {

namespace {

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

// this codebase targets little-endian hosts; serialize via memcpy
void put_u16(std::ostream& os, std::uint16_t v) { put_bytes(os, &v, 2); }
void put_u32(std::ostream& os, std::uint32_t v) { put_bytes(os, &v, 4); }
void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

void need(std::istream& is, void* p, std::size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw IoError(std::string("checkpoint: truncated ") + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
  put_bytes(os, "PBPA", 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw IoError("checkpoint: tensor name too long");
    put_u16(os, static_cast<std::uint16_t>(name.size()));
    put_bytes(os, name.data(), name.size());
    put_u8(os, static_cast<std::uint8_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) put_u32(os, static_cast<std::uint32_t>(t.dim(d)));
    put_bytes(os, t.data(), t.size() * sizeof(double));
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  need(is, magic, 4, "magic");
  if (std::memcmp(magic, "PBPA", 4) != 0) throw IoError("checkpoint: bad magic in " + path);
  std::uint32_t version = 0, count = 0;
  need(is, &version, 4, "version");
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  need(is, &count, 4, "tensor count");

  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t name_len = 0;
    need(is, &name_len, 2, "name length");
    std::string name(name_len, '\0');
    if (name_len) need(is, name.data(), name_len, "name");
    std::uint8_t rank = 0;
    need(is, &rank, 1, "rank");
    std::vector<int> shape(rank);
    for (int d = 0; d < rank; ++d) {
      std::uint32_t dim = 0;
      need(is, &dim, 4, "dim");
      shape[static_cast<size_t>(d)] = static_cast<int>(dim);
    }
    Tensor t(shape);
    need(is, t.data(), t.size() * sizeof(double), "payload");
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace pbpa
