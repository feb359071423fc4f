#include "stdc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stdc {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
        throw std::invalid_argument("tensor data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
    if (other.shape_ != shape_) {
        throw std::invalid_argument("tensor += shape mismatch " + shape_str(shape_) + " vs " +
                                    shape_str(other.shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("max_abs_diff shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
    if (t.rank() == 0 || begin > end || end > t.dim(0)) {
        throw std::out_of_range("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") out of range for " + shape_str(t.shape()));
    }
    Shape s = t.shape();
    const std::size_t stride = t.size() / t.dim(0);
    s[0] = end - begin;
    std::vector<double> out(t.data() + begin * stride, t.data() + end * stride);
    return Tensor(std::move(s), std::move(out));
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
    Shape s = t.shape();
    const std::size_t stride = t.size() / t.dim(0);
    s[0] = rows.size();
    Tensor out(s);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= t.dim(0)) {
            throw std::out_of_range("gather_rows index " + std::to_string(rows[r]) + " >= " +
                                    std::to_string(t.dim(0)));
        }
        std::copy_n(t.data() + rows[r] * stride, stride, out.data() + r * stride);
    }
    return out;
}

void require_shape(const Tensor& t, const Shape& expected, const std::string& what) {
    if (t.shape() != expected) {
        throw std::invalid_argument(what + ": expected shape " + shape_str(expected) + ", got " +
                                    shape_str(t.shape()));
    }
}

}  // namespace stdc
