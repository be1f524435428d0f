#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bfwi {

/// Shape of a channel-major image stack.
struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
  std::size_t plane() const noexcept { return height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

/// Dense C x H x W array of doubles in C order.
///
/// This is the value type for velocity models (one channel), seismogram stacks
/// (one channel per shot) and every intermediate state of the samplers.
class Field {
 public:
  Field() = default;
  Field(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  explicit Field(Shape shape, double fill = 0.0);
  Field(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return values_[(c * shape_.height + i) * shape_.width + j];
  }
  double operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return values_[(c * shape_.height + i) * shape_.width + j];
  }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  /// Copy of a single channel as a 1-channel field.
  Field channel_field(std::size_t c) const;

  double min() const;
  double max() const;
  double sum() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double scale);

  friend bool operator==(const Field&, const Field&) = default;

 private:
  Shape shape_{};
  std::vector<double> values_;
};

Field operator+(Field lhs, const Field& rhs);
Field operator-(Field lhs, const Field& rhs);
Field operator*(double scale, Field rhs);

/// a * x + b * y, elementwise.
Field lincomb(double a, const Field& x, double b, const Field& y);

/// Stack fields along the channel axis; all must share height and width.
Field concat_channels(const Field& a, const Field& b);

void require_same_shape(const Field& a, const Field& b, const char* context);

/// Round every value to the nearest float.
void round_to_float(Field& f);

}  // namespace bfwi
