#pragma once

// Versioned binary parameter file: magic, entry count, then per parameter its
// name, shape and little-endian float32 payload. Values round-trip bit-exact
// at float32 precision.

#include <cstdint>
#include <cstring>
#include <string>

#include "graspdet/errors.hpp"
#include "graspdet/netpbm.hpp"  // read_file / write_file
#include "graspdet/params.hpp"

namespace graspdet {

inline constexpr char kCheckpointMagic[8] = {'G', 'D', 'E', 'T', 'C', 'K', 'P', '1'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IncompatibleCheckpoint("truncated file");
  const std::uint32_t v = static_cast<std::uint8_t>(in[pos]) |
                          (static_cast<std::uint8_t>(in[pos + 1]) << 8) |
                          (static_cast<std::uint8_t>(in[pos + 2]) << 16) |
                          (static_cast<std::uint8_t>(in[pos + 3]) << 24);
  pos += 4;
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const ParamStore& store) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, static_cast<std::uint32_t>(store.all().size()));
  for (const Param& p : store.all()) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    detail::put_u32(out, static_cast<std::uint32_t>(p.value.shape().size()));
    for (const int d : p.value.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const float f = static_cast<float>(p.value[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      detail::put_u32(out, bits);
    }
  }
  return out;
}

// Load into an existing store; every file entry must match a parameter of the
// same name and shape and every parameter must be covered.
inline void decode_checkpoint(const std::string& bytes, ParamStore& store) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IncompatibleCheckpoint("bad magic");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const std::uint32_t count = detail::get_u32(bytes, pos);
  if (count != store.all().size()) {
    throw IncompatibleCheckpoint("file has " + std::to_string(count) +
                                 " parameters, network has " +
                                 std::to_string(store.all().size()));
  }
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = detail::get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw IncompatibleCheckpoint("truncated name");
    const std::string name = bytes.substr(pos, name_len);
    pos += name_len;
    Param* p = store.find(name);
    if (!p) throw IncompatibleCheckpoint("unknown parameter '" + name + "'");
    const std::uint32_t ndim = detail::get_u32(bytes, pos);
    std::vector<int> shape(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) {
      shape[i] = static_cast<int>(detail::get_u32(bytes, pos));
    }
    if (shape != p->value.shape()) {
      throw IncompatibleCheckpoint("shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const std::uint32_t bits = detail::get_u32(bytes, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      p->value[i] = f;
    }
  }
}

inline void save_checkpoint(const std::string& path, const ParamStore& store) {
  write_file(path, encode_checkpoint(store));
}

inline void load_checkpoint(const std::string& path, ParamStore& store) {
  decode_checkpoint(read_file(path), store);
}

}  // namespace graspdet
