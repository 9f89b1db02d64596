#include "ldif/nn/array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ldif/error.hpp"

namespace ldif::nn {

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

NumArray::NumArray(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("array dimensions must be positive, got " + shape_string(shape_));
    }
}

NumArray::NumArray(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("array dimensions must be positive, got " + shape_string(shape_));
    }
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError("shape " + shape_string(shape_) + " does not match " + std::to_string(data_.size()) +
                         " values");
    }
}

NumArray NumArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(n * m);
    for (const auto& r : rows) {
        if (r.size() != m) throw ShapeError("ragged rows in NumArray::from_rows");
        values.insert(values.end(), r.begin(), r.end());
    }
    return NumArray({n, m}, std::move(values));
}

NumArray NumArray::vector(std::initializer_list<double> values) {
    return NumArray({values.size()}, std::vector<double>(values));
}

NumArray NumArray::slice_rows(std::size_t begin, std::size_t count) const {
    if (begin + count > rows()) {
        throw IndexError("row slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") exceeds " + std::to_string(rows()) + " rows");
    }
    const std::size_t c = cols();
    std::vector<double> values(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                               data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
    return NumArray({count, c}, std::move(values));
}

NumArray NumArray::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    NumArray out = *this;
    out.shape_ = std::move(shape);
    return out;
}

void NumArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool NumArray::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool operator==(const NumArray& a, const NumArray& b) {
    return a.shape_ == b.shape_ &&
           (a.data_.empty() || std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0);
}

double max_abs_diff(const NumArray& a, const NumArray& b) {
    if (a.size() != b.size()) {
        throw ShapeError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace ldif::nn
