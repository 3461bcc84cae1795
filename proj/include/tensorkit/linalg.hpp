#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "tensorkit/errors.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

/// Thin SVD m = u * diag(s) * vt with s non-increasing and non-negative.
struct SvdResult {
    Matrix u;
    Vector s;
    Matrix vt;
};

struct QrResult {
    Matrix q;
    Matrix r;
};

namespace detail {

// Deterministic sign choice: the largest-magnitude entry of each left
// singular vector is made non-negative (first occurrence wins on ties).
inline void fix_svd_signs(Matrix& u, Matrix& v) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double a = std::abs(u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            u.col(j) = -u.col(j);
            v.col(j) = -v.col(j);
        }
    }
}

} // namespace detail

inline SvdResult svd(const Matrix& m) {
    if (!m.allFinite()) throw numeric_error("svd: input contains non-finite values");
    Matrix u, v;
    Vector s;
    if (std::min(m.rows(), m.cols()) <= 16) {
        Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u = dec.matrixU();
        v = dec.matrixV();
        s = dec.singularValues();
    } else {
        Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u = dec.matrixU();
        v = dec.matrixV();
        s = dec.singularValues();
    }
    detail::fix_svd_signs(u, v);
    return SvdResult{std::move(u), std::move(s), v.transpose()};
}

/// Leading rank-k factorisation; 1 <= k <= min(rows, cols).
inline SvdResult svd_truncated(const Matrix& m, std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (kk < 1 || kk > std::min(m.rows(), m.cols()))
        throw argument_error("truncation rank " + std::to_string(k) + " out of range");
    SvdResult full = svd(m);
    return SvdResult{full.u.leftCols(kk), full.s.head(kk), full.vt.topRows(kk)};
}

/// Lower Cholesky factor of a symmetric positive-definite matrix. Only the
/// lower triangle of `a` is referenced.
inline Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw dimension_error("cholesky requires a square matrix");
    const Eigen::Index n = a.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d))
            throw numeric_error("cholesky: matrix is not positive definite (pivot " +
                                std::to_string(j) + ")");
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return l;
}

/// Solve a * x = b for symmetric positive-definite a.
inline Matrix chol_solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw dimension_error("chol_solve: incompatible right-hand side");
    const Matrix l = cholesky(a);
    Matrix x = l.triangularView<Eigen::Lower>().solve(b);
    return l.transpose().triangularView<Eigen::Upper>().solve(x);
}

/// Moore-Penrose pseudo-inverse; singular values below rcond * max(s) are
/// treated as zero.
inline Matrix pinv(const Matrix& m, double rcond = 1e-12) {
    const SvdResult dec = svd(m);
    const double cutoff = dec.s.size() > 0 ? rcond * dec.s(0) : 0.0;
    Vector inv = Vector::Zero(dec.s.size());
    for (Eigen::Index i = 0; i < dec.s.size(); ++i)
        if (dec.s(i) > cutoff && dec.s(i) > 0.0) inv(i) = 1.0 / dec.s(i);
    return dec.vt.transpose() * inv.asDiagonal() * dec.u.transpose();
}

/// Thin QR with the diagonal of R made non-negative.
inline QrResult qr(const Matrix& m) {
    if (!m.allFinite()) throw numeric_error("qr: input contains non-finite values");
    const Eigen::Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Matrix> dec(m);
    Matrix q = dec.householderQ() * Matrix::Identity(m.rows(), k);
    Matrix r = dec.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (r(i, i) < 0.0) {
            r.row(i) = -r.row(i);
            q.col(i) = -q.col(i);
        }
    }
    return QrResult{std::move(q), std::move(r)};
}

} // namespace tensorkit
