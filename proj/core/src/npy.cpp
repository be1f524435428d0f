#include "bfwi/npy.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <regex>

#include "bfwi/errors.hpp"

namespace bfwi {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

std::size_t NpyArray::count() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) s += ",";
    if (i + 1 < shape.size()) s += " ";
  }
  return s + ")";
}

namespace {

std::string make_header(const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape_string(shape) + ", }";
  // magic(6) + version(2) + length(2) + dict + padding + '\n' is a multiple of 64.
  const std::size_t unpadded = 10 + dict.size() + 1;
  const std::size_t padded = (unpadded + 63) / 64 * 64;
  dict.append(padded - unpadded, ' ');
  dict.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  return out + dict;
}

void check_count(const std::vector<std::size_t>& shape, std::size_t n) {
  const std::size_t expect =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (expect != n) {
    throw ShapeError("npy: shape " + shape_string(shape) + " holds " + std::to_string(expect) +
                     " values, got " + std::to_string(n));
  }
}

}  // namespace

void write_npy_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
                   std::span<const float> values) {
  check_count(shape, values.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string header = make_header(shape);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_npy_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
                   std::span<const double> values) {
  std::vector<float> f(values.begin(), values.end());
  write_npy_f32(path, shape, std::span<const float>(f));
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
    throw FormatError(path.string() + " is not an NPY file");
  }
  const int major = static_cast<unsigned char>(magic[6]);
  std::size_t header_len = 0;
  if (major == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (static_cast<std::size_t>(b[1]) << 8);
  } else if (major == 2 || major == 3) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (static_cast<std::size_t>(b[1]) << 8) |
                 (static_cast<std::size_t>(b[2]) << 16) | (static_cast<std::size_t>(b[3]) << 24);
  } else {
    throw FormatError(path.string() + ": unsupported NPY version " + std::to_string(major));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError(path.string() + ": truncated header");

  std::smatch m;
  NpyArray arr;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([^']+)')"))) {
    throw FormatError(path.string() + ": header lacks descr");
  }
  arr.descr = m[1];
  if (std::regex_search(header, m, std::regex(R"('fortran_order'\s*:\s*True)"))) {
    throw FormatError(path.string() + ": Fortran-ordered arrays are not supported");
  }
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(([^)]*)\))"))) {
    throw FormatError(path.string() + ": header lacks shape");
  }
  const std::string dims = m[1];
  const std::regex digits(R"(\d+)");
  for (std::sregex_iterator it(dims.begin(), dims.end(), digits), end; it != end; ++it) {
    arr.shape.push_back(static_cast<std::size_t>(std::stoull(it->str())));
  }

  const std::size_t n = arr.count();
  arr.data.resize(n);
  if (arr.descr == "<f4" || arr.descr == "|f4") {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    std::copy(buf.begin(), buf.end(), arr.data.begin());
  } else if (arr.descr == "<f8") {
    in.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    throw FormatError(path.string() + ": unsupported dtype " + arr.descr + " (need <f4 or <f8)");
  }
  if (!in) throw FormatError(path.string() + ": truncated data");
  return arr;
}

}  // namespace bfwi
