#include "jsi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jsi {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << 'x' << c << 'x' << h << 'x' << w << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
    throw std::invalid_argument("negative tensor extent " + shape.str());
  data_.assign(shape.numel(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape.numel())
    throw std::invalid_argument("tensor " + shape.str() + " given " +
                                std::to_string(data_.size()) + " values");
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.numel() != data_.size())
    throw std::invalid_argument("cannot reshape " + shape_.str() + " to " +
                                shape.str());
  return Tensor(shape, data_);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.str() + " vs " + b.str());
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace jsi
