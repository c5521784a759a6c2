#pragma once

// Binary PGM (P5) input/output, 8-bit (maxval <= 255) or 16-bit big-endian
// (maxval <= 65535). Pixel values are read as raw integers without scaling.

#include <cstddef>
#include <string>

#include "bswtv/image.hpp"

namespace bswtv {

struct PgmWriteReport {
  std::size_t clamped = 0;  // values outside [0, maxval] that were clamped
};

// Parses a P5 PGM from memory. Throws IoError naming the byte offset of the
// first malformed element.
GrayImage parse_pgm(const std::string& bytes);
GrayImage read_pgm(const std::string& path);

// Rounds to the nearest integer and clamps into [0, 2^bit_depth - 1].
std::string encode_pgm(const GrayImage& img, int bit_depth, PgmWriteReport* report = nullptr);
PgmWriteReport write_pgm(const std::string& path, const GrayImage& img, int bit_depth);

}  // namespace bswtv
