#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bfwi {

/// In-memory view of a .npy file. Values are widened to double on load.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::string descr;  ///< dtype as stored, e.g. "<f4"

  std::size_t count() const noexcept;
};

/// Write a little-endian float32 C-order NPY v1.0 file.
void write_npy_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
                   std::span<const double> values);
void write_npy_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
                   std::span<const float> values);

/// Read an NPY v1.x/2.x file holding little-endian f4 or f8 data in C order.
NpyArray read_npy(const std::filesystem::path& path);

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace bfwi
