#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace ldif::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Allocator with a fixed 64-byte alignment. Vectorised kernels choose their
/// peeling from the buffer address, so a fixed alignment keeps floating-point
/// summation order, and hence results, independent of where the heap puts
/// each array.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major array of doubles. Rank-1 arrays are treated as single-row
/// matrices by the matrix-oriented accessors.
class NumArray {
   public:
    NumArray() = default;
    explicit NumArray(Shape shape, double fill = 0.0);
    NumArray(Shape shape, std::vector<double> values);

    /// Builds a rank-2 array from nested rows, e.g. `NumArray::rows({{1, 2}, {3, 4}})`.
    static NumArray from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static NumArray vector(std::initializer_list<double> values);
    static NumArray scalar(double value) { return NumArray({1}, {value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const noexcept { return shape_.size() >= 2 ? shape_[0] : 1; }
    std::size_t cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    /// Rows [begin, begin + count) as a new rank-2 array.
    NumArray slice_rows(std::size_t begin, std::size_t count) const;
    /// Same data, new shape of equal element count.
    NumArray reshaped(Shape shape) const;

    void fill(double value);
    bool all_finite() const noexcept;

    /// Bitwise equality of shape and contents.
    friend bool operator==(const NumArray& a, const NumArray& b);

   private:
    Shape shape_;
    AlignedVector data_;
};

/// Largest absolute elementwise difference; shapes must agree.
double max_abs_diff(const NumArray& a, const NumArray& b);

}  // namespace ldif::nn
