#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "tensorkit/errors.hpp"
#include "tensorkit/products.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

namespace detail {

inline std::vector<Mode> form_modes(std::vector<Mode> modes, const Shape& shape) {
    if (modes.empty()) return default_modes(shape.size());
    if (modes.size() != shape.size()) throw form_error("mode count does not match form order");
    for (std::size_t n = 0; n < shape.size(); ++n)
        if (modes[n].features && modes[n].features->size() != shape[n])
            throw form_error("feature labels of mode " + std::to_string(n) +
                             " do not match its dimension");
    return modes;
}

} // namespace detail

/// Kruskal form: X = sum_r weights[r] * outer(factors[0].col(r), ...,
/// factors[N-1].col(r)). In normalised form every factor column has unit
/// norm, magnitudes and signs live in the weights.
class TensorCPD {
public:
    TensorCPD() = default;

    TensorCPD(Vector weights, std::vector<Matrix> factors, std::vector<Mode> modes = {})
        : weights_(std::move(weights)), factors_(std::move(factors)) {
        if (factors_.empty()) throw form_error("kruskal form needs at least one factor matrix");
        const Eigen::Index rank = factors_[0].cols();
        if (rank < 1) throw form_error("kruskal rank must be >= 1");
        for (const auto& f : factors_)
            if (f.cols() != rank) throw form_error("factor matrices must share a column count");
        if (weights_.size() != rank) throw form_error("weight count does not match rank");
        modes_ = detail::form_modes(std::move(modes), shape());
    }

    std::size_t order() const { return factors_.size(); }
    std::size_t rank() const { return static_cast<std::size_t>(factors_[0].cols()); }
    Shape shape() const {
        Shape s(factors_.size());
        for (std::size_t n = 0; n < factors_.size(); ++n)
            s[n] = static_cast<std::size_t>(factors_[n].rows());
        return s;
    }
    const Vector& weights() const { return weights_; }
    const std::vector<Matrix>& factors() const { return factors_; }
    const Matrix& factor(std::size_t n) const { return factors_.at(n); }
    const std::vector<Mode>& modes() const { return modes_; }

private:
    Vector weights_;
    std::vector<Matrix> factors_;
    std::vector<Mode> modes_;
};

/// Tucker form: a core tensor multiplied along each mode by a factor matrix.
class TensorTKD {
public:
    TensorTKD() = default;

    TensorTKD(Tensor core, std::vector<Matrix> factors, std::vector<Mode> modes = {})
        : core_(std::move(core)), factors_(std::move(factors)) {
        if (core_.order() != factors_.size())
            throw form_error("core order does not match the number of factor matrices");
        for (std::size_t n = 0; n < factors_.size(); ++n)
            if (static_cast<std::size_t>(factors_[n].cols()) != core_.shape()[n])
                throw form_error("factor " + std::to_string(n) +
                                 " column count does not match the core dimension");
        modes_ = detail::form_modes(std::move(modes), shape());
    }

    std::size_t order() const { return factors_.size(); }
    Shape ranks() const { return core_.shape(); }
    Shape shape() const {
        Shape s(factors_.size());
        for (std::size_t n = 0; n < factors_.size(); ++n)
            s[n] = static_cast<std::size_t>(factors_[n].rows());
        return s;
    }
    const Tensor& core() const { return core_; }
    const std::vector<Matrix>& factors() const { return factors_; }
    const Matrix& factor(std::size_t n) const { return factors_.at(n); }
    const std::vector<Mode>& modes() const { return modes_; }

private:
    Tensor core_;
    std::vector<Matrix> factors_;
    std::vector<Mode> modes_;
};

/// Tensor-Train form: a chain of order-3 cores of shape
/// (r_{n-1}, I_n, r_n) with boundary ranks 1.
class TensorTT {
public:
    TensorTT() = default;

    explicit TensorTT(std::vector<Tensor> cores, std::vector<Mode> modes = {})
        : cores_(std::move(cores)) {
        if (cores_.empty()) throw form_error("tensor train needs at least one core");
        for (const auto& c : cores_)
            if (c.order() != 3) throw form_error("tensor-train cores must be order-3");
        if (cores_.front().shape()[0] != 1 || cores_.back().shape()[2] != 1)
            throw form_error("tensor-train boundary ranks must be 1");
        for (std::size_t n = 0; n + 1 < cores_.size(); ++n)
            if (cores_[n].shape()[2] != cores_[n + 1].shape()[0])
                throw form_error("bond dimension mismatch between cores " + std::to_string(n) +
                                 " and " + std::to_string(n + 1));
        modes_ = detail::form_modes(std::move(modes), shape());
    }

    std::size_t order() const { return cores_.size(); }
    Shape shape() const {
        Shape s(cores_.size());
        for (std::size_t n = 0; n < cores_.size(); ++n) s[n] = cores_[n].shape()[1];
        return s;
    }
    /// Interior bond dimensions r_1..r_{N-1}.
    Shape bond_ranks() const {
        Shape r;
        for (std::size_t n = 0; n + 1 < cores_.size(); ++n) r.push_back(cores_[n].shape()[2]);
        return r;
    }
    const std::vector<Tensor>& cores() const { return cores_; }
    const Tensor& core(std::size_t n) const { return cores_.at(n); }
    const std::vector<Mode>& modes() const { return modes_; }

private:
    std::vector<Tensor> cores_;
    std::vector<Mode> modes_;
};

inline Tensor reconstruct(const TensorCPD& form) {
    const Shape shape = form.shape();
    if (form.order() == 1) {
        const Vector v = form.factor(0) * form.weights();
        return Tensor(shape, std::vector<double>(v.data(), v.data() + v.size()), form.modes());
    }
    const Matrix m0 =
        form.factor(0) * form.weights().asDiagonal() * detail::khatri_rao_skip(form.factors(), 0).transpose();
    return Tensor(shape, detail::fold_vals(m0, shape, 0), form.modes());
}

inline Tensor reconstruct(const TensorTKD& form) {
    std::vector<double> values = form.core().values();
    Shape shape = form.core().shape();
    for (std::size_t n = 0; n < form.order(); ++n) {
        auto [next, next_shape] = detail::mode_apply(values, shape, n, form.factor(n));
        values = std::move(next);
        shape = std::move(next_shape);
    }
    return Tensor(std::move(shape), std::move(values), form.modes());
}

inline Tensor reconstruct(const TensorTT& form) {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Shape shape = form.shape();

    // Sweep left to right, keeping a (prefix-size x bond) row-major matrix.
    const Tensor& first = form.core(0);
    RowMatrix cur = Eigen::Map<const RowMatrix>(first.values().data(),
                                                static_cast<Eigen::Index>(shape[0]),
                                                static_cast<Eigen::Index>(first.shape()[2]));
    for (std::size_t n = 1; n < form.order(); ++n) {
        const Tensor& core = form.core(n);
        const auto left = static_cast<Eigen::Index>(core.shape()[0]);
        const auto dim = static_cast<Eigen::Index>(core.shape()[1]);
        const auto right = static_cast<Eigen::Index>(core.shape()[2]);
        Eigen::Map<const RowMatrix> core_mat(core.values().data(), left, dim * right);
        RowMatrix next = cur * core_mat; // (prefix, dim * right)
        cur = Eigen::Map<const RowMatrix>(next.data(), next.rows() * dim, right);
    }
    std::vector<double> values(cur.data(), cur.data() + cur.size());
    return Tensor(shape, std::move(values), form.modes());
}

/// Expand a Kruskal form into the equivalent Tucker form with a
/// superdiagonal core holding the weights.
inline TensorTKD cpd_to_tkd(const TensorCPD& form) {
    const std::size_t order = form.order();
    const std::size_t rank = form.rank();
    Shape core_shape(order, rank);
    std::vector<double> core_values(detail::element_count(core_shape), 0.0);
    for (std::size_t r = 0; r < rank; ++r)
        core_values[detail::linear_index(core_shape, std::vector<std::size_t>(order, r))] =
            form.weights()(static_cast<Eigen::Index>(r));
    std::vector<Mode> core_modes;
    core_modes.reserve(order);
    for (const auto& m : form.modes()) core_modes.push_back(Mode{m.name, std::nullopt});
    return TensorTKD(Tensor(std::move(core_shape), std::move(core_values), std::move(core_modes)),
                     form.factors(), form.modes());
}

namespace detail {

inline double residual_norm(const Tensor& x, const Tensor& approx) {
    const auto n = static_cast<Eigen::Index>(x.size());
    return (Eigen::Map<const Vector>(x.values().data(), n) -
            Eigen::Map<const Vector>(approx.values().data(), n))
        .norm();
}

} // namespace detail

/// ||x - reconstruct(form)||_F / ||x||_F; falls back to the absolute
/// residual when x is the zero tensor.
template <class Form>
double rel_error(const Tensor& x, const Form& form) {
    if (x.shape() != form.shape())
        throw dimension_error("tensor and form shapes do not match");
    const double resid = detail::residual_norm(x, reconstruct(form));
    const double norm = frobenius_norm(x);
    return norm > 0.0 ? resid / norm : resid;
}

} // namespace tensorkit
