#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tensorkit/decompositions.hpp"
#include "tensorkit/errors.hpp"
#include "tensorkit/forms.hpp"
#include "tensorkit/linalg.hpp"
#include "tensorkit/products.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

/// An order-3 tensor coupled with a side matrix along mode 0.
struct CoupledData {
    Tensor tensor;     // I x J x K
    Matrix side;       // I x M, rows shared with mode 0 of the tensor
};

/// A collection of matrix slices sharing their column dimension.
struct Parafac2Data {
    std::vector<Matrix> slices; // X_k of shape J_k x I
};

/// CPD of the tensor plus the side factor V; Y ~ cpd.factor(0) * V^T.
struct CmtfResult {
    TensorCPD cpd;
    Matrix side_factor;
    int iterations = 0;
    std::vector<double> error_trace;
    bool converged = false;
};

/// PARAFAC2 model X_k ~ u[k] * diag(s.row(k)) * v^T with u[k]^T u[k]
/// identical across slices.
struct Parafac2Result {
    std::vector<Matrix> u;
    Matrix s; // K x R
    Matrix v; // I x R
    int iterations = 0;
    std::vector<double> error_trace;
    bool converged = false;
};

/// Coupled matrix-tensor factorisation: minimises
/// ||X - [[A,B,C]]||_F^2 + ||Y - A V^T||_F^2 by alternating least squares,
/// both residuals weighted equally. With an empty side matrix it reduces
/// exactly to cpd_als.
inline CmtfResult cmtf(const CoupledData& d, std::size_t rank, const FitOptions& opts = {}) {
    detail::validate(opts);
    if (rank < 1) throw argument_error("cmtf rank must be >= 1");
    if (d.tensor.order() != 3) throw dimension_error("cmtf expects an order-3 tensor");
    if (static_cast<std::size_t>(d.side.rows()) != d.tensor.shape()[0])
        throw dimension_error("side matrix has " + std::to_string(d.side.rows()) +
                              " rows but the coupled mode has dimension " +
                              std::to_string(d.tensor.shape()[0]));

    std::vector<Matrix> unfoldings;
    for (std::size_t n = 0; n < 3; ++n)
        unfoldings.push_back(detail::unfold_vals(d.tensor.values(), d.tensor.shape(), n));

    Rng rng(opts.seed);
    std::vector<Matrix> factors = detail::cpd_init(unfoldings, rank, rng);
    // V starts at zero so the first sweep is a plain CP update; seeding V by
    // least squares from the SVD init lets ||V|| blow up against the not yet
    // scaled A and stalls the alternation.
    Matrix v = Matrix::Zero(d.side.cols(), static_cast<Eigen::Index>(rank));

    const double xnorm = frobenius_norm(d.tensor);
    const double ynorm = d.side.norm();
    auto eval = [&]() {
        const double rx =
            (unfoldings[0] - factors[0] * detail::khatri_rao_skip(factors, 0).transpose()).norm();
        const double ry = (d.side - factors[0] * v.transpose()).norm();
        const double den = std::hypot(xnorm, ynorm);
        return den > 0.0 ? std::hypot(rx, ry) / den : std::hypot(rx, ry);
    };

    CmtfResult res;
    double prev = eval();
    for (int it = 1; it <= opts.max_iter; ++it) {
        // Mode 0 solves the system stacking the tensor unfolding and the
        // side matrix; the other blocks are plain CP updates.
        const Matrix kr0 = detail::khatri_rao_skip(factors, 0);
        const Matrix gram0 = detail::gram_hadamard_skip(factors, 0) + v.transpose() * v;
        factors[0] = (unfoldings[0] * kr0 + d.side * v) * pinv(gram0, detail::kAlsRcond);
        factors[1] = detail::cpd_mode_update(unfoldings[1], factors, 1);
        factors[2] = detail::cpd_mode_update(unfoldings[2], factors, 2);
        v = d.side.transpose() * factors[0] *
            pinv(factors[0].transpose() * factors[0], detail::kAlsRcond);

        const double err = eval();
        res.error_trace.push_back(err);
        res.iterations = it;
        if (opts.verbose) std::cerr << "cmtf sweep " << it << ": rel_error " << err << "\n";
        const bool done = std::abs(err - prev) < opts.tol;
        prev = err;
        if (done) {
            res.converged = true;
            break;
        }
    }

    // Keep Y ~ A V^T consistent while the CPD is normalised: scale and sign
    // changes applied to A's columns are pushed into V.
    const Matrix raw_a = factors[0];
    res.cpd = detail::finalise_cpd(std::move(factors), d.tensor.modes());
    const Matrix& unit_a = res.cpd.factor(0);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rank); ++r) {
        const double norm = raw_a.col(r).norm();
        double scale = norm;
        if (norm > 0.0 && unit_a.col(r).dot(raw_a.col(r)) < 0.0) scale = -norm;
        v.col(r) *= scale;
    }
    res.side_factor = std::move(v);
    return res;
}

/// PARAFAC2 by direct fitting: per-slice orthogonal Procrustes rotations
/// followed by one CP-ALS sweep on the rotated slices. The cross-product
/// constraint u_k^T u_k = H^T H holds at every iterate by construction.
inline Parafac2Result parafac2(const Parafac2Data& d, std::size_t rank, const FitOptions& opts = {}) {
    detail::validate(opts);
    if (rank < 1) throw argument_error("parafac2 rank must be >= 1");
    if (d.slices.empty()) throw dimension_error("parafac2 needs at least one slice");
    const std::size_t n_slices = d.slices.size();
    const auto n_cols = d.slices[0].cols();
    std::size_t min_rows = static_cast<std::size_t>(d.slices[0].rows());
    for (const auto& x : d.slices) {
        if (x.cols() != n_cols) throw dimension_error("parafac2 slices must share their column count");
        min_rows = std::min(min_rows, static_cast<std::size_t>(x.rows()));
    }
    if (rank > std::min(static_cast<std::size_t>(n_cols), min_rows))
        throw argument_error("parafac2 rank exceeds the smallest slice dimension");

    // Init: CP-ALS on the stacked cross-products X_k^T X_k, which the model
    // writes as V diag(s_k)^2 V^T, so the third factor carries squared
    // scales.
    const auto rank_i = static_cast<Eigen::Index>(rank);
    Matrix v(n_cols, rank_i);
    Matrix s(static_cast<Eigen::Index>(n_slices), rank_i);
    {
        Shape cross_shape{static_cast<std::size_t>(n_cols), static_cast<std::size_t>(n_cols), n_slices};
        std::vector<double> vals(detail::element_count(cross_shape));
        for (std::size_t k = 0; k < n_slices; ++k) {
            const Matrix cross = d.slices[k].transpose() * d.slices[k];
            for (Eigen::Index i = 0; i < n_cols; ++i)
                for (Eigen::Index j = 0; j < n_cols; ++j)
                    vals[detail::linear_index(cross_shape,
                                              {static_cast<std::size_t>(i),
                                               static_cast<std::size_t>(j), k})] = cross(i, j);
        }
        FitOptions init_opts;
        init_opts.max_iter = 10;
        init_opts.tol = opts.tol;
        init_opts.seed = opts.seed;
        const CpdResult init = cpd_als(Tensor(cross_shape, std::move(vals)), rank, init_opts);
        v = init.form.factor(0);
        for (Eigen::Index k = 0; k < s.rows(); ++k)
            for (Eigen::Index r = 0; r < rank_i; ++r)
                s(k, r) = std::sqrt(std::max(init.form.weights()(r) * init.form.factor(2)(k, r), 0.0));
    }
    Matrix h = Matrix::Identity(rank_i, rank_i);

    double total_sq = 0.0;
    for (const auto& x : d.slices) total_sq += x.squaredNorm();

    std::vector<Matrix> p(n_slices);
    auto procrustes_sweep = [&]() {
        for (std::size_t k = 0; k < n_slices; ++k) {
            const Matrix target =
                d.slices[k] * v * s.row(static_cast<Eigen::Index>(k)).asDiagonal() * h.transpose();
            const SvdResult dec = svd(target);
            p[k] = dec.u * dec.vt;
        }
    };
    auto eval = [&]() {
        double resid_sq = 0.0;
        for (std::size_t k = 0; k < n_slices; ++k)
            resid_sq += (d.slices[k] -
                         p[k] * h * s.row(static_cast<Eigen::Index>(k)).asDiagonal() * v.transpose())
                            .squaredNorm();
        return total_sq > 0.0 ? std::sqrt(resid_sq / total_sq) : std::sqrt(resid_sq);
    };

    procrustes_sweep();
    Parafac2Result res;
    double prev = eval();
    const Shape y_shape{rank, static_cast<std::size_t>(n_cols), n_slices};
    for (int it = 1; it <= opts.max_iter; ++it) {
        if (it > 1) procrustes_sweep();

        std::vector<double> y_vals(detail::element_count(y_shape));
        for (std::size_t k = 0; k < n_slices; ++k) {
            const Matrix y = p[k].transpose() * d.slices[k]; // R x I
            for (Eigen::Index a = 0; a < rank_i; ++a)
                for (Eigen::Index i = 0; i < n_cols; ++i)
                    y_vals[detail::linear_index(y_shape, {static_cast<std::size_t>(a),
                                                          static_cast<std::size_t>(i), k})] = y(a, i);
        }
        std::vector<Matrix> cp{h, v, s};
        for (std::size_t n = 0; n < 3; ++n)
            cp[n] = detail::cpd_mode_update(detail::unfold_vals(y_vals, y_shape, n), cp, n);
        h = cp[0];
        v = cp[1];
        s = cp[2];

        const double err = eval();
        res.error_trace.push_back(err);
        res.iterations = it;
        if (opts.verbose) std::cerr << "parafac2 sweep " << it << ": rel_error " << err << "\n";
        const bool done = std::abs(err - prev) < opts.tol;
        prev = err;
        if (done) {
            res.converged = true;
            break;
        }
    }

    res.u.reserve(n_slices);
    for (std::size_t k = 0; k < n_slices; ++k) res.u.push_back(p[k] * h);
    res.s = std::move(s);
    res.v = std::move(v);
    return res;
}

} // namespace tensorkit
