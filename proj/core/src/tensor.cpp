#include "bfwi/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "bfwi/errors.hpp"

namespace bfwi {

std::string Shape::str() const {
  return "[" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
         std::to_string(width) + "]";
}

Field::Field(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : Field(Shape{channels, height, width}, fill) {}

Field::Field(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

Field::Field(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw ShapeError("field value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_.str());
  }
}

std::span<double> Field::channel(std::size_t c) {
  if (c >= shape_.channels) throw IndexError("channel out of range");
  return std::span<double>(values_).subspan(c * shape_.plane(), shape_.plane());
}

std::span<const double> Field::channel(std::size_t c) const {
  if (c >= shape_.channels) throw IndexError("channel out of range");
  return std::span<const double>(values_).subspan(c * shape_.plane(), shape_.plane());
}

Field Field::channel_field(std::size_t c) const {
  auto src = channel(c);
  return Field(Shape{1, shape_.height, shape_.width},
               std::vector<double>(src.begin(), src.end()));
}

double Field::min() const {
  if (values_.empty()) throw ShapeError("min of empty field");
  return *std::min_element(values_.begin(), values_.end());
}

double Field::max() const {
  if (values_.empty()) throw ShapeError("max of empty field");
  return *std::max_element(values_.begin(), values_.end());
}

double Field::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Field& Field::operator+=(const Field& other) {
  require_same_shape(*this, other, "field +=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_shape(*this, other, "field -=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double scale) {
  for (auto& v : values_) v *= scale;
  return *this;
}

Field operator+(Field lhs, const Field& rhs) { return lhs += rhs; }
Field operator-(Field lhs, const Field& rhs) { return lhs -= rhs; }
Field operator*(double scale, Field rhs) { return rhs *= scale; }

Field lincomb(double a, const Field& x, double b, const Field& y) {
  require_same_shape(x, y, "lincomb");
  Field out(x.shape());
  auto o = out.values();
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = a * xv[k] + b * yv[k];
  return out;
}

Field concat_channels(const Field& a, const Field& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat_channels: spatial shapes " + a.shape().str() + " and " +
                     b.shape().str() + " differ");
  }
  std::vector<double> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Field(Shape{a.channels() + b.channels(), a.height(), a.width()}, std::move(v));
}

void require_same_shape(const Field& a, const Field& b, const char* context) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(context) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

void round_to_float(Field& f) {
  for (auto& v : f.values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace bfwi
