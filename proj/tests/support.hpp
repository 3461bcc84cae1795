#pragma once

// Shared generators and independent oracles for the test suites. Oracles
// are written directly from the mathematical definitions and stay clear of
// the library code paths they are used to check.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "tensorkit/rng.hpp"
#include "tensorkit/tensor.hpp"

namespace testsupport {

using tensorkit::Matrix;
using tensorkit::Rng;
using tensorkit::Shape;
using tensorkit::Tensor;
using tensorkit::Vector;

inline std::vector<double> random_values(std::size_t count, Rng& rng) {
    std::vector<double> v(count);
    for (double& x : v) x = rng.normal();
    return v;
}

inline Tensor random_tensor(const Shape& shape, Rng& rng) {
    return Tensor(shape, random_values(tensorkit::detail::element_count(shape), rng));
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

// Random symmetric positive-definite matrix A A^T + d I.
inline Matrix random_spd(Eigen::Index dim, Rng& rng, double diag = 0.5) {
    const Matrix a = random_matrix(dim, dim, rng);
    return a * a.transpose() + diag * Matrix::Identity(dim, dim);
}

// Random matrix with orthonormal columns; basis for well-conditioned
// exact-recovery instances.
inline Matrix orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const Matrix m = random_matrix(rows, cols, rng);
    const Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Sum of rank-one terms built by explicit outer-product loops.
inline Tensor cpd_tensor_naive(const std::vector<Matrix>& factors, const Vector& weights) {
    Shape shape;
    for (const auto& f : factors) shape.push_back(static_cast<std::size_t>(f.rows()));
    std::vector<double> values(tensorkit::detail::element_count(shape), 0.0);
    tensorkit::detail::for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t lin) {
        for (Eigen::Index r = 0; r < weights.size(); ++r) {
            double term = weights(r);
            for (std::size_t n = 0; n < factors.size(); ++n)
                term *= factors[n](static_cast<Eigen::Index>(idx[n]), r);
            values[lin] += term;
        }
    });
    return Tensor(shape, std::move(values));
}

inline Tensor random_cpd_tensor(const Shape& shape, std::size_t rank, Rng& rng) {
    std::vector<Matrix> factors;
    for (std::size_t d : shape)
        factors.push_back(random_matrix(static_cast<Eigen::Index>(d),
                                        static_cast<Eigen::Index>(rank), rng));
    return cpd_tensor_naive(factors, Vector::Ones(static_cast<Eigen::Index>(rank)));
}

// Tucker tensor built by explicit summation over the core indices.
inline Tensor tucker_tensor_naive(const Tensor& core, const std::vector<Matrix>& factors) {
    Shape shape;
    for (const auto& f : factors) shape.push_back(static_cast<std::size_t>(f.rows()));
    std::vector<double> values(tensorkit::detail::element_count(shape), 0.0);
    tensorkit::detail::for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t lin) {
        double sum = 0.0;
        tensorkit::detail::for_each_index(
            core.shape(), [&](const std::vector<std::size_t>& cidx, std::size_t clin) {
                double term = core.values()[clin];
                for (std::size_t n = 0; n < factors.size(); ++n)
                    term *= factors[n](static_cast<Eigen::Index>(idx[n]),
                                       static_cast<Eigen::Index>(cidx[n]));
                sum += term;
            });
        values[lin] = sum;
    });
    return Tensor(shape, std::move(values));
}

inline Tensor random_tucker_tensor(const Shape& shape, const Shape& ranks, Rng& rng) {
    std::vector<Matrix> factors;
    for (std::size_t n = 0; n < shape.size(); ++n)
        factors.push_back(random_matrix(static_cast<Eigen::Index>(shape[n]),
                                        static_cast<Eigen::Index>(ranks[n]), rng));
    return tucker_tensor_naive(random_tensor(ranks, rng), factors);
}

// Mode-n unfolding oracle: decode every (row, col) of the expected matrix
// back to a multi-index, reversing the column enumeration (remaining modes
// ascending, earliest fastest) digit by digit.
inline Matrix unfold_oracle(const Tensor& t, std::size_t mode) {
    const Shape& shape = t.shape();
    const std::size_t rows = shape[mode];
    const std::size_t cols = t.size() / rows;
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::vector<std::size_t> idx(shape.size());
            idx[mode] = r;
            std::size_t rest = c;
            for (std::size_t m = 0; m < shape.size(); ++m) {
                if (m == mode) continue;
                idx[m] = rest % shape[m];
                rest /= shape[m];
            }
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.at(idx);
        }
    }
    return out;
}

// Mode-n product oracle: elementwise contraction by definition.
inline Tensor mode_product_oracle(const Tensor& t, const Matrix& m, std::size_t mode) {
    Shape shape = t.shape();
    shape[mode] = static_cast<std::size_t>(m.rows());
    std::vector<double> values(tensorkit::detail::element_count(shape), 0.0);
    tensorkit::detail::for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t lin) {
        double sum = 0.0;
        std::vector<std::size_t> src = idx;
        for (std::size_t k = 0; k < t.shape()[mode]; ++k) {
            src[mode] = k;
            sum += m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(k)) * t.at(src);
        }
        values[lin] = sum;
    });
    return Tensor(shape, std::move(values));
}

// Dense multivariate-normal log density oracle for the separable Gaussian:
// the full covariance is materialised entry by entry as the product of the
// per-mode factors over the row-major index decomposition.
inline double dense_logpdf_oracle(const Tensor& mean, const std::vector<Matrix>& factors,
                                  const Tensor& x) {
    const Shape& shape = mean.shape();
    const auto total = static_cast<Eigen::Index>(mean.size());

    auto decode = [&](std::size_t lin) {
        std::vector<std::size_t> idx(shape.size());
        for (std::size_t n = shape.size(); n-- > 0;) {
            idx[n] = lin % shape[n];
            lin /= shape[n];
        }
        return idx;
    };

    Matrix cov(total, total);
    for (Eigen::Index v = 0; v < total; ++v) {
        const auto iv = decode(static_cast<std::size_t>(v));
        for (Eigen::Index w = 0; w < total; ++w) {
            const auto iw = decode(static_cast<std::size_t>(w));
            double entry = 1.0;
            for (std::size_t n = 0; n < shape.size(); ++n)
                entry *= factors[n](static_cast<Eigen::Index>(iv[n]),
                                    static_cast<Eigen::Index>(iw[n]));
            cov(v, w) = entry;
        }
    }

    Vector diff(total);
    for (Eigen::Index i = 0; i < total; ++i)
        diff(i) = x.values()[static_cast<std::size_t>(i)] -
                  mean.values()[static_cast<std::size_t>(i)];

    const Eigen::LLT<Matrix> llt(cov);
    double logdet = 0.0;
    const Matrix l = llt.matrixL();
    for (Eigen::Index i = 0; i < total; ++i) logdet += 2.0 * std::log(l(i, i));
    const double maha = diff.dot(llt.solve(diff));
    constexpr double log_two_pi = 1.8378770664093454836;
    return -0.5 * (static_cast<double>(total) * log_two_pi + logdet + maha);
}

// Direct LS-SVM solve used as the reference for the order-1 tensor machine:
// the KKT system is assembled from the textbook definition and solved with
// a rank-revealing QR.
inline std::pair<Vector, double> ls_svm_oracle(const Matrix& x, const Vector& y, double c) {
    const Eigen::Index m = x.rows();
    Matrix system = Matrix::Zero(m + 1, m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        system(0, i + 1) = y(i);
        system(i + 1, 0) = y(i);
        for (Eigen::Index j = 0; j < m; ++j)
            system(i + 1, j + 1) = y(i) * y(j) * x.row(i).dot(x.row(j));
        system(i + 1, i + 1) += 1.0 / c;
    }
    Vector rhs = Vector::Ones(m + 1);
    rhs(0) = 0.0;
    const Vector sol = system.colPivHouseholderQr().solve(rhs);
    Vector w = Vector::Zero(x.cols());
    for (Eigen::Index i = 0; i < m; ++i) w += sol(i + 1) * y(i) * x.row(i).transpose();
    return {w, sol(0)};
}

// Noisy rank-one binary classification set: X_i = s_i * u o v + noise.
struct SeparableDataset {
    std::vector<Tensor> samples;
    std::vector<int> labels;
};

inline SeparableDataset rank1_separable_dataset(std::size_t count, std::size_t rows,
                                                std::size_t cols, double noise,
                                                std::uint64_t seed) {
    Rng rng(seed);
    Vector u = random_matrix(static_cast<Eigen::Index>(rows), 1, rng).col(0);
    Vector v = random_matrix(static_cast<Eigen::Index>(cols), 1, rng).col(0);
    u /= u.norm();
    v /= v.norm();
    SeparableDataset out;
    for (std::size_t i = 0; i < count; ++i) {
        // slight negative majority keeps class-blind learners off the fence
        const double sign = (i % 2 == 0 && i + 2 < count) ? 1.0 : -1.0;
        const double s = sign * (0.5 + rng.uniform());
        std::vector<double> values(rows * cols);
        for (std::size_t a = 0; a < rows; ++a)
            for (std::size_t b = 0; b < cols; ++b)
                values[a * cols + b] = s * u(static_cast<Eigen::Index>(a)) *
                                           v(static_cast<Eigen::Index>(b)) +
                                       noise * rng.normal();
        out.samples.emplace_back(Shape{rows, cols}, std::move(values));
        out.labels.push_back(sign > 0 ? 1 : -1);
    }
    return out;
}

} // namespace testsupport
