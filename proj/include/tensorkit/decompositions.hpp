#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "tensorkit/errors.hpp"
#include "tensorkit/forms.hpp"
#include "tensorkit/linalg.hpp"
#include "tensorkit/products.hpp"
#include "tensorkit/rng.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

struct FitOptions {
    int max_iter = 50;
    double tol = 1e-8; // absolute change of relative error between sweeps
    std::uint64_t seed = 0;
    bool verbose = false;
};

/// Fitted form plus convergence diagnostics. error_trace holds the relative
/// error after each sweep.
template <class Form>
struct DecompositionResult {
    Form form;
    int iterations = 0;
    std::vector<double> error_trace;
    bool converged = false;
};

using CpdResult = DecompositionResult<TensorCPD>;
using TkdResult = DecompositionResult<TensorTKD>;
using TtResult = DecompositionResult<TensorTT>;

namespace detail {

inline void validate(const FitOptions& opts) {
    if (opts.max_iter < 1) throw argument_error("max_iter must be >= 1");
    if (!(opts.tol > 0.0)) throw argument_error("tol must be positive");
}

// Rank-deficient normal equations occur legitimately in early sweeps; a
// pseudo-inverse with this cutoff keeps the updates well defined.
constexpr double kAlsRcond = 1e-12;

// SVD-seeded factors; columns beyond the unfolding's singular vectors are
// filled with seeded Gaussian entries.
inline std::vector<Matrix> cpd_init(const std::vector<Matrix>& unfoldings, std::size_t rank, Rng& rng) {
    std::vector<Matrix> factors;
    factors.reserve(unfoldings.size());
    for (const auto& xn : unfoldings) {
        const Matrix u = svd(xn).u;
        Matrix a(xn.rows(), static_cast<Eigen::Index>(rank));
        for (Eigen::Index r = 0; r < a.cols(); ++r) {
            if (r < u.cols()) {
                a.col(r) = u.col(r);
            } else {
                for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, r) = rng.normal();
            }
        }
        factors.push_back(std::move(a));
    }
    return factors;
}

// One ALS least-squares update of factor `mode`.
inline Matrix cpd_mode_update(const Matrix& unfolding, const std::vector<Matrix>& factors,
                              std::size_t mode) {
    const Matrix kr = khatri_rao_skip(factors, mode);
    const Matrix gram = gram_hadamard_skip(factors, mode);
    return unfolding * kr * pinv(gram, kAlsRcond);
}

// Same update solved on `sample_size` uniformly sampled rows (with
// replacement) of the Khatri-Rao system.
inline Matrix cpd_sampled_update(const Matrix& unfolding, const std::vector<Matrix>& factors,
                                 std::size_t mode, const Shape& shape, std::size_t sample_size,
                                 Rng& rng) {
    const auto rank = factors[mode == 0 ? 1 : 0].cols();
    const std::size_t total_rows = element_count(shape) / shape[mode];
    Matrix zs(static_cast<Eigen::Index>(sample_size), rank);
    Matrix xs(unfolding.rows(), static_cast<Eigen::Index>(sample_size));
    for (std::size_t t = 0; t < sample_size; ++t) {
        std::size_t s = rng.uniform_index(total_rows);
        xs.col(static_cast<Eigen::Index>(t)) = unfolding.col(static_cast<Eigen::Index>(s));
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(rank);
        for (std::size_t m = 0; m < shape.size(); ++m) {
            if (m == mode) continue;
            const std::size_t im = s % shape[m];
            s /= shape[m];
            row = row.cwiseProduct(factors[m].row(static_cast<Eigen::Index>(im)));
        }
        zs.row(static_cast<Eigen::Index>(t)) = row;
    }
    return xs * zs * pinv(zs.transpose() * zs, kAlsRcond);
}

inline double cpd_rel_error(const Matrix& unfolding0, const std::vector<Matrix>& factors,
                            double xnorm) {
    const Matrix approx = factors[0] * khatri_rao_skip(factors, 0).transpose();
    const double resid = (unfolding0 - approx).norm();
    return xnorm > 0.0 ? resid / xnorm : resid;
}

// Normalise factor columns to unit norm, absorbing magnitudes into the
// weights and flipping signs so the largest-magnitude entry of every column
// is non-negative.
inline TensorCPD finalise_cpd(std::vector<Matrix> factors, std::vector<Mode> modes) {
    const Eigen::Index rank = factors[0].cols();
    Vector weights = Vector::Ones(rank);
    for (auto& a : factors) {
        for (Eigen::Index r = 0; r < rank; ++r) {
            const double norm = a.col(r).norm();
            if (norm > 0.0) {
                a.col(r) /= norm;
                weights(r) *= norm;
            } else {
                weights(r) = 0.0;
            }
        }
    }
    for (auto& a : factors) {
        for (Eigen::Index r = 0; r < rank; ++r) {
            Eigen::Index arg = 0;
            double best = -1.0;
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                if (std::abs(a(i, r)) > best) {
                    best = std::abs(a(i, r));
                    arg = i;
                }
            }
            if (a(arg, r) < 0.0) {
                a.col(r) = -a.col(r);
                weights(r) = -weights(r);
            }
        }
    }
    return TensorCPD(std::move(weights), std::move(factors), std::move(modes));
}

template <class ModeUpdate>
CpdResult cpd_loop(const Tensor& x, std::size_t rank, const FitOptions& opts, ModeUpdate&& update) {
    const std::size_t order = x.order();
    std::vector<Matrix> unfoldings;
    unfoldings.reserve(order);
    for (std::size_t n = 0; n < order; ++n)
        unfoldings.push_back(unfold_vals(x.values(), x.shape(), n));

    Rng rng(opts.seed);
    std::vector<Matrix> factors = cpd_init(unfoldings, rank, rng);
    const double xnorm = frobenius_norm(x);

    CpdResult res;
    double prev = cpd_rel_error(unfoldings[0], factors, xnorm);
    for (int it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t n = 0; n < order; ++n)
            factors[n] = update(unfoldings[n], factors, n, rng);
        const double err = cpd_rel_error(unfoldings[0], factors, xnorm);
        res.error_trace.push_back(err);
        res.iterations = it;
        if (opts.verbose)
            std::cerr << "cpd sweep " << it << ": rel_error " << err << "\n";
        const bool done = std::abs(err - prev) < opts.tol;
        prev = err;
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.form = finalise_cpd(std::move(factors), x.modes());
    return res;
}

} // namespace detail

/// Canonical polyadic decomposition by alternating least squares.
inline CpdResult cpd_als(const Tensor& x, std::size_t rank, const FitOptions& opts = {}) {
    detail::validate(opts);
    if (rank < 1) throw argument_error("cpd rank must be >= 1");
    if (x.order() < 2) throw dimension_error("cpd requires a tensor of order >= 2");
    return detail::cpd_loop(x, rank, opts,
                            [](const Matrix& unfolding, const std::vector<Matrix>& factors,
                               std::size_t mode, Rng&) {
                                return detail::cpd_mode_update(unfolding, factors, mode);
                            });
}

/// CPD-ALS with each mode update solved on a uniform row sample of the
/// Khatri-Rao system. When sample_size covers all rows of a system the
/// exact update is used, so full sampling reproduces cpd_als.
inline CpdResult cpd_randomized(const Tensor& x, std::size_t rank, std::size_t sample_size,
                                const FitOptions& opts = {}) {
    detail::validate(opts);
    if (rank < 1) throw argument_error("cpd rank must be >= 1");
    if (sample_size < rank) throw argument_error("sample_size must be >= rank");
    if (x.order() < 2) throw dimension_error("cpd requires a tensor of order >= 2");
    const Shape shape = x.shape();
    const std::size_t total = detail::element_count(shape);
    return detail::cpd_loop(x, rank, opts,
                            [&](const Matrix& unfolding, const std::vector<Matrix>& factors,
                                std::size_t mode, Rng& rng) {
                                if (sample_size >= total / shape[mode])
                                    return detail::cpd_mode_update(unfolding, factors, mode);
                                return detail::cpd_sampled_update(unfolding, factors, mode, shape,
                                                                  sample_size, rng);
                            });
}

namespace detail {

inline void validate_multilinear_ranks(const Tensor& x, const std::vector<std::size_t>& ranks) {
    if (ranks.size() != x.order())
        throw argument_error("ranks list length must equal the tensor order");
    for (std::size_t n = 0; n < ranks.size(); ++n)
        if (ranks[n] < 1 || ranks[n] > x.shape()[n])
            throw argument_error("mode-" + std::to_string(n) + " rank " + std::to_string(ranks[n]) +
                                 " out of range [1, " + std::to_string(x.shape()[n]) + "]");
}

// Core of the projection X x_1 A1^T ... x_N AN^T.
inline Tensor project_core(const Tensor& x, const std::vector<Matrix>& factors) {
    std::vector<double> values = x.values();
    Shape shape = x.shape();
    for (std::size_t n = 0; n < factors.size(); ++n) {
        auto [next, next_shape] = mode_apply(values, shape, n, factors[n].transpose());
        values = std::move(next);
        shape = std::move(next_shape);
    }
    std::vector<Mode> core_modes;
    core_modes.reserve(x.order());
    for (const auto& m : x.modes()) core_modes.push_back(Mode{m.name, std::nullopt});
    return Tensor(std::move(shape), std::move(values), std::move(core_modes));
}

} // namespace detail

/// Higher-order SVD: factor n holds the leading R_n left singular vectors
/// of the mode-n unfolding.
inline TkdResult hosvd(const Tensor& x, const std::vector<std::size_t>& ranks) {
    detail::validate_multilinear_ranks(x, ranks);
    std::vector<Matrix> factors;
    factors.reserve(x.order());
    for (std::size_t n = 0; n < x.order(); ++n)
        factors.push_back(svd_truncated(detail::unfold_vals(x.values(), x.shape(), n), ranks[n]).u);
    Tensor core = detail::project_core(x, factors);
    TkdResult res;
    res.form = TensorTKD(std::move(core), std::move(factors), x.modes());
    res.iterations = 1;
    res.error_trace = {rel_error(x, res.form)};
    res.converged = true;
    return res;
}

/// Higher-order orthogonal iteration, initialised from the HOSVD.
inline TkdResult hooi(const Tensor& x, const std::vector<std::size_t>& ranks,
                      const FitOptions& opts = {}) {
    detail::validate(opts);
    detail::validate_multilinear_ranks(x, ranks);
    TkdResult base = hosvd(x, ranks);
    std::vector<Matrix> factors = base.form.factors();

    TkdResult res;
    double prev = base.error_trace[0];
    for (int it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t n = 0; n < x.order(); ++n) {
            // Project every mode but n, then refresh factor n from the
            // leading singular vectors of the projected unfolding.
            std::vector<double> values = x.values();
            Shape shape = x.shape();
            for (std::size_t m = 0; m < x.order(); ++m) {
                if (m == n) continue;
                auto [next, next_shape] = detail::mode_apply(values, shape, m, factors[m].transpose());
                values = std::move(next);
                shape = std::move(next_shape);
            }
            factors[n] = svd_truncated(detail::unfold_vals(values, shape, n), ranks[n]).u;
        }
        Tensor core = detail::project_core(x, factors);
        res.form = TensorTKD(std::move(core), factors, x.modes());
        const double err = rel_error(x, res.form);
        res.error_trace.push_back(err);
        res.iterations = it;
        if (opts.verbose) std::cerr << "hooi sweep " << it << ": rel_error " << err << "\n";
        const bool done = std::abs(err - prev) < opts.tol;
        prev = err;
        if (done) {
            res.converged = true;
            break;
        }
    }
    return res;
}

namespace detail {

// Smallest leading rank whose discarded tail energy fits the budget.
inline Eigen::Index tt_choose_rank(const Vector& s, double budget_sq) {
    Eigen::Index k = s.size();
    double tail = 0.0;
    while (k > 1) {
        const double cand = tail + s(k - 1) * s(k - 1);
        if (cand > budget_sq) break;
        tail = cand;
        --k;
    }
    return k;
}

inline TtResult tt_svd_impl(const Tensor& x, double per_step_budget_sq,
                            const std::vector<std::size_t>* bond_ranks) {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Shape& shape = x.shape();
    const std::size_t order = x.order();

    std::vector<Tensor> cores;
    cores.reserve(order);
    std::vector<double> cur = x.values();
    std::size_t left_rank = 1;
    std::size_t remaining = x.size();

    for (std::size_t n = 0; n + 1 < order; ++n) {
        const std::size_t rows = left_rank * shape[n];
        const std::size_t cols = remaining / shape[n];
        const Eigen::Map<const RowMatrix> m(cur.data(), static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(cols));
        const SvdResult dec = svd(m);
        Eigen::Index rank = bond_ranks
                                ? std::min<Eigen::Index>(
                                      static_cast<Eigen::Index>((*bond_ranks)[n]), dec.s.size())
                                : tt_choose_rank(dec.s, per_step_budget_sq);

        const RowMatrix u = dec.u.leftCols(rank);
        cores.emplace_back(Shape{left_rank, shape[n], static_cast<std::size_t>(rank)},
                           std::vector<double>(u.data(), u.data() + u.size()));
        const RowMatrix rest = dec.s.head(rank).asDiagonal() * dec.vt.topRows(rank);
        cur.assign(rest.data(), rest.data() + rest.size());
        left_rank = static_cast<std::size_t>(rank);
        remaining = cols;
    }
    cores.emplace_back(Shape{left_rank, shape[order - 1], 1}, cur);

    TtResult res;
    res.form = TensorTT(std::move(cores), x.modes());
    res.iterations = 1;
    res.error_trace = {rel_error(x, res.form)};
    res.converged = true;
    return res;
}

} // namespace detail

/// Sequential-SVD tensor-train decomposition with a relative-error budget:
/// each truncation may discard at most (eps/sqrt(N-1)) * ||X||_F of energy,
/// which guarantees a total relative error <= eps.
inline TtResult tt_svd(const Tensor& x, double eps) {
    if (!(eps > 0.0)) throw argument_error("tt eps must be positive");
    if (x.order() == 1) return detail::tt_svd_impl(x, 0.0, nullptr);
    const double xnorm = frobenius_norm(x);
    const double per_step = eps / std::sqrt(static_cast<double>(x.order() - 1)) * xnorm;
    return detail::tt_svd_impl(x, per_step * per_step, nullptr);
}

/// Tensor-train decomposition with explicit bond dimensions (length N-1);
/// entries larger than the feasible rank are clamped.
inline TtResult tt_svd(const Tensor& x, const std::vector<std::size_t>& bond_ranks) {
    if (bond_ranks.size() + 1 != x.order())
        throw argument_error("bond rank list must have length order - 1");
    for (std::size_t r : bond_ranks)
        if (r < 1) throw argument_error("bond ranks must be >= 1");
    return detail::tt_svd_impl(x, 0.0, &bond_ranks);
}

} // namespace tensorkit
