#pragma once

// Binary netpbm reader/writer: P6 (RGB, maxval 255) and P5 (gray, maxval 255
// or 65535, big-endian 16-bit). The ASCII variants P1-P3 are rejected.

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/image.hpp"

namespace graspdet {

using NetpbmImage = std::variant<RgbImage, DepthImage>;

namespace detail {

struct PbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

// Header tokens are separated by whitespace; '#' starts a comment that runs
// to end of line.
inline PbmHeader parse_pbm_header(std::string_view bytes, const std::string& origin) {
  PbmHeader h;
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  auto next_int = [&](const char* what) {
    const std::string tok = next_token();
    if (tok.empty()) throw ShortPayload(origin + ": missing " + what);
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::exception&) {
      throw BadMagic(origin + ": non-numeric " + what + " '" + tok + "'");
    }
    if (used != tok.size()) throw BadMagic(origin + ": non-numeric " + what + " '" + tok + "'");
    return static_cast<int>(v);
  };

  h.magic = next_token();
  if (h.magic != "P5" && h.magic != "P6") {
    throw BadMagic(origin + ": '" + h.magic + "' (only binary P5/P6 supported)");
  }
  h.width = next_int("width");
  h.height = next_int("height");
  h.maxval = next_int("maxval");
  if (h.width <= 0 || h.height <= 0) throw ShortPayload(origin + ": non-positive dimensions");
  // exactly one whitespace byte separates maxval from the payload
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ShortPayload(origin + ": missing payload separator");
  }
  h.payload_offset = pos + 1;
  return h;
}

}  // namespace detail

// Decode a P6 image into RgbImage or a P5 image into DepthImage (raw values,
// every pixel valid unless its value is 0).
inline NetpbmImage parse_netpbm(std::string_view bytes, const std::string& origin = "netpbm") {
  const detail::PbmHeader h = detail::parse_pbm_header(bytes, origin);
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  const std::string_view payload = bytes.substr(h.payload_offset);

  if (h.magic == "P6") {
    if (h.maxval != 255) throw BadMaxval(origin + ": P6 requires maxval 255, got " + std::to_string(h.maxval));
    if (payload.size() < 3 * n) throw ShortPayload(origin + ": P6 payload truncated");
    RgbImage img;
    img.width = h.width;
    img.height = h.height;
    img.pixels.assign(payload.begin(), payload.begin() + 3 * n);
    return img;
  }

  if (h.maxval != 255 && h.maxval != 65535) {
    throw BadMaxval(origin + ": P5 requires maxval 255 or 65535, got " + std::to_string(h.maxval));
  }
  DepthImage img = DepthImage::invalid_filled(h.width, h.height);
  if (h.maxval == 255) {
    if (payload.size() < n) throw ShortPayload(origin + ": P5 payload truncated");
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t v = static_cast<std::uint8_t>(payload[i]);
      img.depth[i] = v;
      img.valid[i] = v != 0;
    }
  } else {
    if (payload.size() < 2 * n) throw ShortPayload(origin + ": P5 payload truncated");
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint16_t hi = static_cast<std::uint8_t>(payload[2 * i]);
      const std::uint16_t lo = static_cast<std::uint8_t>(payload[2 * i + 1]);
      const std::uint16_t v = static_cast<std::uint16_t>((hi << 8) | lo);
      img.depth[i] = v;
      img.valid[i] = v != 0;
    }
  }
  return img;
}

inline std::string encode_p6(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

// 16-bit P5, big-endian samples. Values must already fit in [0, 65535].
inline std::string encode_p5_16(int width, int height, const std::vector<std::uint16_t>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionMismatch("encode_p5_16: value count does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n65535\n";
  out.reserve(out.size() + 2 * values.size());
  for (const std::uint16_t v : values) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("short write to " + path);
}

inline NetpbmImage read_netpbm_file(const std::string& path) {
  return parse_netpbm(read_file(path), path);
}

}  // namespace graspdet
