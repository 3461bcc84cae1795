#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tensorkit/errors.hpp"

namespace tensorkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

/// One dimension of a tensor: the property it represents plus optional
/// per-index feature labels.
struct Mode {
    std::string name;
    std::optional<std::vector<std::string>> features;

    bool operator==(const Mode&) const = default;
};

enum class StateKind { unfold, vectorise, mode_product };

inline std::string to_string(StateKind k) {
    switch (k) {
    case StateKind::unfold: return "unfold";
    case StateKind::vectorise: return "vectorise";
    case StateKind::mode_product: return "mode-n-product";
    }
    return "unknown";
}

/// One entry of the transformation log. `params` holds {mode} for unfold,
/// {} for vectorise and {mode, new_dim} for a mode-n product; `ordering`
/// names the index-enumeration convention of the rearrangement;
/// `stashed_modes` keeps the Mode metadata displaced by a rearrangement so
/// fold can restore it exactly.
struct StateRecord {
    StateKind kind = StateKind::unfold;
    std::vector<std::size_t> params;
    Shape prior_shape;
    std::string ordering;
    std::vector<Mode> stashed_modes;

    bool operator==(const StateRecord&) const = default;
};

/// Column enumeration of unfoldings: remaining modes ascending, the earliest
/// varying fastest.
inline constexpr const char* kKoldaOrdering = "kolda";
/// Vectorisation order: storage order, last index fastest.
inline constexpr const char* kRowMajorOrdering = "row-major";

namespace detail {

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::vector<Mode> default_modes(std::size_t order) {
    std::vector<Mode> modes(order);
    for (std::size_t n = 0; n < order; ++n) modes[n].name = "mode-" + std::to_string(n);
    return modes;
}

// Row-major linear index (last index varies fastest).
inline std::size_t linear_index(const Shape& shape, const std::vector<std::size_t>& idx) {
    std::size_t lin = 0;
    for (std::size_t n = 0; n < shape.size(); ++n) lin = lin * shape[n] + idx[n];
    return lin;
}

// Visit every multi-index of `shape` in row-major order.
template <class F>
void for_each_index(const Shape& shape, F&& f) {
    std::vector<std::size_t> idx(shape.size(), 0);
    const std::size_t total = element_count(shape);
    for (std::size_t lin = 0; lin < total; ++lin) {
        f(idx, lin);
        for (std::size_t k = shape.size(); k-- > 0;) {
            if (++idx[k] < shape[k]) break;
            idx[k] = 0;
        }
    }
}

// Column strides of the mode-n unfolding: remaining modes in ascending
// order, the earliest one varying fastest (Kolda-Bader convention).
inline std::vector<std::size_t> unfold_col_strides(const Shape& shape, std::size_t mode) {
    std::vector<std::size_t> strides(shape.size(), 0);
    std::size_t stride = 1;
    for (std::size_t m = 0; m < shape.size(); ++m) {
        if (m == mode) continue;
        strides[m] = stride;
        stride *= shape[m];
    }
    return strides;
}

// Mode-n matricisation of a row-major value buffer.
inline Matrix unfold_vals(const std::vector<double>& values, const Shape& shape, std::size_t mode) {
    const std::size_t rows = shape[mode];
    const std::size_t cols = element_count(shape) / rows;
    const auto strides = unfold_col_strides(shape, mode);
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t lin) {
        std::size_t col = 0;
        for (std::size_t m = 0; m < shape.size(); ++m)
            if (m != mode) col += idx[m] * strides[m];
        out(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col)) = values[lin];
    });
    return out;
}

// Inverse of unfold_vals: scatter a mode-n matricisation back into a
// row-major buffer of `shape` (shape[mode] == m.rows()).
inline std::vector<double> fold_vals(const Matrix& m, const Shape& shape, std::size_t mode) {
    std::vector<double> values(element_count(shape));
    const auto strides = unfold_col_strides(shape, mode);
    for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t lin) {
        std::size_t col = 0;
        for (std::size_t n = 0; n < shape.size(); ++n)
            if (n != mode) col += idx[n] * strides[n];
        values[lin] = m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col));
    });
    return values;
}

// Contract `a` (J x I_mode) with the given mode of a value buffer.
inline std::pair<std::vector<double>, Shape> mode_apply(const std::vector<double>& values,
                                                        const Shape& shape, std::size_t mode,
                                                        const Matrix& a) {
    Shape out_shape = shape;
    out_shape[mode] = static_cast<std::size_t>(a.rows());
    const Matrix product = a * unfold_vals(values, shape, mode);
    return {fold_vals(product, out_shape, mode), out_shape};
}

inline std::string joined_mode_names(const std::vector<Mode>& modes, std::size_t skip) {
    std::string name;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        if (m == skip) continue;
        if (!name.empty()) name += "*";
        name += modes[m].name;
    }
    return name.empty() ? std::string("unit") : name;
}

} // namespace detail

/// Dense N-dimensional array with per-mode metadata and a log of the
/// rearrangements applied since construction. Values are stored row-major
/// (last index fastest) and are immutable; every operation returns a new
/// tensor.
class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<double> values, std::vector<Mode> modes = {},
           std::vector<StateRecord> state = {})
        : shape_(std::move(shape)), values_(std::move(values)), modes_(std::move(modes)),
          state_(std::move(state)) {
        if (shape_.empty()) throw dimension_error("tensor shape must have at least one mode");
        for (std::size_t d : shape_)
            if (d < 1) throw dimension_error("tensor dimensions must be >= 1");
        if (values_.size() != detail::element_count(shape_))
            throw dimension_error("value count " + std::to_string(values_.size()) +
                                  " does not match shape product " +
                                  std::to_string(detail::element_count(shape_)));
        if (modes_.empty()) modes_ = detail::default_modes(shape_.size());
        if (modes_.size() != shape_.size())
            throw dimension_error("mode count does not match tensor order");
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            if (modes_[n].name.empty()) throw argument_error("mode names must be non-empty");
            if (modes_[n].features && modes_[n].features->size() != shape_[n])
                throw dimension_error("feature labels of mode " + std::to_string(n) +
                                      " do not match its dimension");
        }
    }

    static Tensor zeros(Shape shape, std::vector<Mode> modes = {}) {
        std::vector<double> values(detail::element_count(shape), 0.0);
        return Tensor(std::move(shape), std::move(values), std::move(modes));
    }

    std::size_t order() const { return shape_.size(); }
    const Shape& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Mode>& modes() const { return modes_; }
    const std::vector<StateRecord>& state() const { return state_; }
    bool is_raw() const { return state_.empty(); }

    double at(const std::vector<std::size_t>& idx) const {
        if (idx.size() != order()) throw index_error("index order mismatch");
        for (std::size_t n = 0; n < idx.size(); ++n)
            if (idx[n] >= shape_[n]) throw index_error("index out of range in mode " + std::to_string(n));
        return values_[detail::linear_index(shape_, idx)];
    }

    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::vector<std::size_t>(idx));
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<double> values_;
    std::vector<Mode> modes_;
    std::vector<StateRecord> state_;
};

/// Build a raw tensor from row-major values; mode names default to
/// "mode-0".."mode-(N-1)".
inline Tensor tensor_new(Shape shape, std::vector<double> values,
                         const std::vector<std::string>& mode_names = {}) {
    std::vector<Mode> modes;
    if (!mode_names.empty()) {
        if (mode_names.size() != shape.size())
            throw dimension_error("mode name count does not match tensor order");
        modes.reserve(mode_names.size());
        for (const auto& name : mode_names) modes.push_back(Mode{name, std::nullopt});
    }
    return Tensor(std::move(shape), std::move(values), std::move(modes));
}

/// Mode-n matricisation. Rows follow mode `mode`; columns enumerate the
/// remaining modes in ascending order with the earliest varying fastest.
/// The displaced modes are stashed in the appended StateRecord so fold can
/// restore them bit-exactly.
inline Tensor unfold(const Tensor& t, std::size_t mode) {
    if (mode >= t.order()) throw index_error("unfold mode " + std::to_string(mode) + " out of range");
    const std::size_t rows = t.shape()[mode];
    const std::size_t cols = t.size() / rows;

    const Matrix m = detail::unfold_vals(t.values(), t.shape(), mode);
    std::vector<double> values(t.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            values[i * cols + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    std::vector<Mode> stashed;
    for (std::size_t n = 0; n < t.order(); ++n)
        if (n != mode) stashed.push_back(t.modes()[n]);

    std::vector<Mode> modes{t.modes()[mode], Mode{detail::joined_mode_names(t.modes(), mode), std::nullopt}};
    std::vector<StateRecord> state = t.state();
    state.push_back(StateRecord{StateKind::unfold, {mode}, t.shape(), kKoldaOrdering, std::move(stashed)});
    return Tensor({rows, cols}, std::move(values), std::move(modes), std::move(state));
}

/// Flatten to a vector in storage (row-major) order.
inline Tensor vectorise(const Tensor& t) {
    std::vector<StateRecord> state = t.state();
    state.push_back(StateRecord{StateKind::vectorise, {}, t.shape(), kRowMajorOrdering, t.modes()});
    std::vector<Mode> modes{Mode{detail::joined_mode_names(t.modes(), t.order()), std::nullopt}};
    return Tensor({t.size()}, t.values(), std::move(modes), std::move(state));
}

/// Reverse the most recent unfold or vectorise, restoring shape and modes.
inline Tensor fold(const Tensor& t) {
    if (t.state().empty()) throw state_error("tensor already in raw state");
    const StateRecord rec = t.state().back();
    std::vector<StateRecord> state = t.state();
    state.pop_back();

    if (rec.kind == StateKind::vectorise) {
        if (t.shape() != Shape{detail::element_count(rec.prior_shape)})
            throw state_error("tensor shape no longer matches the vectorise record");
        return Tensor(rec.prior_shape, t.values(), rec.stashed_modes, std::move(state));
    }
    if (rec.kind == StateKind::unfold) {
        const std::size_t mode = rec.params.at(0);
        const std::size_t rows = rec.prior_shape[mode];
        const std::size_t cols = detail::element_count(rec.prior_shape) / rows;
        if (t.shape() != Shape{rows, cols})
            throw state_error("tensor shape no longer matches the unfold record");

        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.values()[i * cols + j];

        std::vector<Mode> modes(rec.prior_shape.size());
        std::size_t k = 0;
        for (std::size_t n = 0; n < modes.size(); ++n)
            modes[n] = (n == mode) ? t.modes()[0] : rec.stashed_modes[k++];
        return Tensor(rec.prior_shape, detail::fold_vals(m, rec.prior_shape, mode), std::move(modes),
                      std::move(state));
    }
    throw state_error("last transformation (" + to_string(rec.kind) + ") is not invertible");
}

/// Contract matrix `m` (J x I_mode) with the given mode; the result replaces
/// dimension I_mode by J. Feature labels of the multiplied mode are dropped
/// since they no longer describe the new axis.
inline Tensor mode_n_product(const Tensor& t, const Matrix& m, std::size_t mode) {
    if (mode >= t.order()) throw index_error("mode " + std::to_string(mode) + " out of range");
    if (static_cast<std::size_t>(m.cols()) != t.shape()[mode])
        throw dimension_error("matrix has " + std::to_string(m.cols()) +
                              " columns but mode " + std::to_string(mode) + " has dimension " +
                              std::to_string(t.shape()[mode]));
    auto [values, shape] = detail::mode_apply(t.values(), t.shape(), mode, m);
    std::vector<Mode> modes = t.modes();
    modes[mode].features.reset();
    std::vector<StateRecord> state = t.state();
    state.push_back(StateRecord{StateKind::mode_product,
                                {mode, static_cast<std::size_t>(m.rows())},
                                t.shape(),
                                {},
                                {}});
    return Tensor(std::move(shape), std::move(values), std::move(modes), std::move(state));
}

inline Tensor mode_n_product(const Tensor& t, const Tensor& m, std::size_t mode) {
    if (m.order() != 2) throw dimension_error("mode-n product expects an order-2 tensor as the matrix");
    return mode_n_product(t, detail::unfold_vals(m.values(), m.shape(), 0), mode);
}

inline double frobenius_norm(const Tensor& t) {
    return Eigen::Map<const Vector>(t.values().data(), static_cast<Eigen::Index>(t.size())).norm();
}

inline double inner(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw dimension_error("inner product requires identical shapes");
    const auto n = static_cast<Eigen::Index>(a.size());
    return Eigen::Map<const Vector>(a.values().data(), n).dot(Eigen::Map<const Vector>(b.values().data(), n));
}

} // namespace tensorkit
