#include "bswtv/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

[[noreturn]] void fail(std::size_t offset, const std::string& msg) {
  throw IoError("PGM parse error at byte " + std::to_string(offset) + ": " + msg);
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class HeaderCursor {
 public:
  HeaderCursor(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  bool at_space() const { return pos_ < bytes_.size() && is_space(bytes_[pos_]); }
  void advance() { ++pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (is_space(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) fail(start, std::string("oversized ") + what);
      ++pos_;
    }
    if (pos_ == start) fail(start, std::string("expected ") + what);
    return value;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(0, "bad magic number, expected \"P5\"");
  }
  HeaderCursor cur(bytes, 2);
  if (!cur.at_space()) fail(cur.pos(), "expected whitespace after magic number");
  const long width = cur.read_uint("width");
  const long height = cur.read_uint("height");
  const std::size_t maxval_at = cur.pos();
  const long maxval = cur.read_uint("maxval");
  if (width < 1 || height < 1) fail(maxval_at, "image dimensions must be positive");
  if (maxval < 1 || maxval > 65535) fail(maxval_at, "maxval must be in [1, 65535]");
  if (!cur.at_space()) fail(cur.pos(), "expected single whitespace after maxval");
  cur.advance();
  const std::size_t pos = cur.pos();

  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < n * bpp) {
    fail(bytes.size(), "truncated pixel data: need " + std::to_string(n * bpp) +
                           " bytes, have " + std::to_string(bytes.size() - pos));
  }
  std::vector<double> data(n);
  for (std::size_t k = 0; k < n; ++k) {
    unsigned v = static_cast<unsigned char>(bytes[pos + k * bpp]);
    if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[pos + k * bpp + 1]);
    if (v > static_cast<unsigned>(maxval)) {
      fail(pos + k * bpp, "pixel value " + std::to_string(v) + " exceeds maxval");
    }
    data[k] = static_cast<double>(v);
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_pgm(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string encode_pgm(const GrayImage& img, int bit_depth, PgmWriteReport* report) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("PGM bit depth must be 8 or 16");
  const long maxval = bit_depth == 8 ? 255 : 65535;
  std::ostringstream os(std::ios::binary);
  os << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::string out = os.str();
  out.reserve(out.size() + img.size() * (bit_depth / 8));
  std::size_t clamped = 0;
  for (double v : img.data()) {
    double r = std::round(v);
    if (!(r >= 0.0)) {
      r = 0.0;
      ++clamped;
    } else if (r > static_cast<double>(maxval)) {
      r = static_cast<double>(maxval);
      ++clamped;
    }
    const auto u = static_cast<unsigned>(r);
    if (bit_depth == 16) out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>(u & 0xff));
  }
  if (report) report->clamped = clamped;
  return out;
}

PgmWriteReport write_pgm(const std::string& path, const GrayImage& img, int bit_depth) {
  PgmWriteReport rep;
  const std::string bytes = encode_pgm(img, bit_depth, &rep);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
  return rep;
}

}  // namespace bswtv
