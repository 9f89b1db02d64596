#pragma once

// Internal dense kernels. Eigen only does the GEMM; the surrounding ops own
// shapes and gradients.

#include <Eigen/Core>
#include <cstddef>

namespace ldif::nn::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using MatView = Eigen::Map<RowMat, 0, Strided>;
using ConstMatView = Eigen::Map<const RowMat, 0, Strided>;

inline ConstMatView view(const double* p, std::size_t rows, std::size_t cols, std::size_t stride) {
    return ConstMatView(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                        Strided(static_cast<Eigen::Index>(stride)));
}
inline MatView view(double* p, std::size_t rows, std::size_t cols, std::size_t stride) {
    return MatView(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                   Strided(static_cast<Eigen::Index>(stride)));
}
inline ConstMatView view(const double* p, std::size_t rows, std::size_t cols) { return view(p, rows, cols, cols); }
inline MatView view(double* p, std::size_t rows, std::size_t cols) { return view(p, rows, cols, cols); }

}  // namespace ldif::nn::detail
