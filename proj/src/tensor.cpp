#include "ikami/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ikami/errors.hpp"

namespace ikami {

namespace {
std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) throw ConfigError("tensor shape must be nonempty");
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d <= 0) throw ConfigError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(checked_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
        throw ConfigError("tensor data length does not match shape " + shape_str());
}

std::int64_t Tensor::rows() const { return shape_.empty() ? 0 : shape_[0]; }

std::int64_t Tensor::cols() const {
    if (shape_.size() == 1) return 1;
    std::int64_t c = 1;
    for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
    return c;
}

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

void Tensor::ensure_finite(const std::string& what) const {
    if (!all_finite()) throw NonFiniteError("non-finite values in " + what);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

}  // namespace ikami
