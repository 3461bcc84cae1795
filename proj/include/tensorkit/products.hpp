#pragma once

#include <Eigen/Dense>

#include "tensorkit/errors.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

/// Column-wise Kronecker product: column r is kron(a_r, b_r), with a's
/// index varying slowest.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw dimension_error("khatri-rao factors must share a column count");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.cols(); ++r)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), r, b.rows(), 1) = a(i, r) * b.col(r);
    return out;
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw dimension_error("hadamard product requires equal shapes");
    return a.cwiseProduct(b);
}

namespace detail {

// Khatri-Rao chain over all factors but `skip`, highest mode first, so the
// row enumeration matches the column ordering of the mode-`skip` unfolding.
inline Matrix khatri_rao_skip(const std::vector<Matrix>& factors, std::size_t skip) {
    const Eigen::Index rank = factors.at(skip == 0 && factors.size() > 1 ? 1 : 0).cols();
    Matrix acc = Matrix::Ones(1, rank);
    for (std::size_t m = factors.size(); m-- > 0;) {
        if (m == skip) continue;
        acc = khatri_rao(acc, factors[m]);
    }
    return acc;
}

// Hadamard product of the Gram matrices of all factors but `skip`.
inline Matrix gram_hadamard_skip(const std::vector<Matrix>& factors, std::size_t skip) {
    const Eigen::Index rank = factors.at(skip == 0 && factors.size() > 1 ? 1 : 0).cols();
    Matrix acc = Matrix::Ones(rank, rank);
    for (std::size_t m = 0; m < factors.size(); ++m) {
        if (m == skip) continue;
        acc = acc.cwiseProduct((factors[m].transpose() * factors[m]).eval());
    }
    return acc;
}

} // namespace detail

} // namespace tensorkit
