#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace scz {

// Shape or grid mismatch between arguments.
struct structural_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int ilog2(std::size_t n) {
    int k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

// Uniform grid on (0,T)^dim, dim in {1,2}, with a power-of-two number of
// cells per axis. Cells are half-open (a,b] in each axis.
class Grid {
public:
    Grid() = default;
    Grid(int dim, double T, std::size_t cells) : dim_(dim), T_(T), n_(cells) {
        if (dim != 1 && dim != 2) throw std::domain_error("grid dimension must be 1 or 2");
        if (!(T > 0) || !std::isfinite(T)) throw std::domain_error("grid side length must be positive and finite");
        if (!is_pow2(cells)) throw std::domain_error("cells per axis must be a power of two");
    }

    int dim() const { return dim_; }
    double T() const { return T_; }
    std::size_t cells() const { return n_; }
    std::size_t size() const { return dim_ == 1 ? n_ : n_ * n_; }
    int levels() const { return ilog2(n_); }
    double width() const { return T_ / static_cast<double>(n_); }
    double cell_measure() const { return dim_ == 1 ? width() : width() * width(); }
    double measure() const { return dim_ == 1 ? T_ : T_ * T_; }

    double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * width(); }
    double left(std::size_t i) const { return static_cast<double>(i) * width(); }
    std::array<double, 2> center2(std::size_t idx) const {
        return {center(idx % n_), center(idx / n_)};
    }

    // Cell containing s under the (a,b] convention, clamped to the grid.
    std::size_t locate(double s) const {
        double x = std::ceil(s / width()) - 1.0;
        if (x < 0) x = 0;
        if (x > static_cast<double>(n_ - 1)) x = static_cast<double>(n_ - 1);
        return static_cast<std::size_t>(x);
    }

    Grid refined() const { return Grid(dim_, T_, 2 * n_); }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.T_ == b.T_ && a.n_ == b.n_;
    }

private:
    int dim_ = 1;
    double T_ = 1.0;
    std::size_t n_ = 1;
};

inline void require_same(const Grid& a, const Grid& b) {
    if (!(a == b)) throw structural_error("grids differ");
}

enum class NormKind { euclidean, lq };

// R^n with the euclidean or an l^q norm, q in [2, inf].
class FiniteDimSpace {
public:
    FiniteDimSpace() = default;

    static FiniteDimSpace euclidean(std::size_t n) {
        if (n == 0) throw std::domain_error("space dimension must be positive");
        FiniteDimSpace X;
        X.dim_ = n;
        X.kind_ = NormKind::euclidean;
        X.q_ = 2.0;
        X.tau_ = 1.0;
        return X;
    }

    // tau is the type-2 constant; see estimate_type2_constant in gamma.hpp.
    static FiniteDimSpace lq(std::size_t n, double q, double tau) {
        if (n == 0) throw std::domain_error("space dimension must be positive");
        if (!(q >= 2.0)) throw std::domain_error("l^q model spaces need q >= 2");
        if (!(tau >= 1.0)) throw std::domain_error("type-2 constant is at least 1");
        FiniteDimSpace X;
        X.dim_ = n;
        X.kind_ = NormKind::lq;
        X.q_ = q;
        X.tau_ = tau;
        return X;
    }

    std::size_t dim() const { return dim_; }
    NormKind kind() const { return kind_; }
    bool is_euclidean() const { return kind_ == NormKind::euclidean; }
    double q() const { return q_; }
    double type2_constant() const { return tau_; }

    double norm(std::span<const double> x) const {
        if (x.size() != dim_) throw structural_error("vector length does not match space dimension");
        return norm_unchecked(x.data());
    }

    double norm_unchecked(const double* x) const {
        if (kind_ == NormKind::euclidean || q_ == 2.0) {
            double s = 0;
            for (std::size_t i = 0; i < dim_; ++i) s += x[i] * x[i];
            return std::sqrt(s);
        }
        if (std::isinf(q_)) {
            double m = 0;
            for (std::size_t i = 0; i < dim_; ++i) m = std::max(m, std::abs(x[i]));
            return m;
        }
        double m = 0;
        for (std::size_t i = 0; i < dim_; ++i) m = std::max(m, std::abs(x[i]));
        if (m == 0) return 0;
        double s = 0;
        for (std::size_t i = 0; i < dim_; ++i) s += std::pow(std::abs(x[i]) / m, q_);
        return m * std::pow(s, 1.0 / q_);
    }

    friend bool operator==(const FiniteDimSpace& a, const FiniteDimSpace& b) {
        return a.dim_ == b.dim_ && a.kind_ == b.kind_ && a.q_ == b.q_;
    }

private:
    std::size_t dim_ = 1;
    NormKind kind_ = NormKind::euclidean;
    double q_ = 2.0;
    double tau_ = 1.0;
};

// Piecewise-constant X-valued function, one vector per cell (row-major in 2-D).
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Grid g, FiniteDimSpace X) : grid_(g), space_(X), v_(g.size() * X.dim(), 0.0) {}
    GridFunction(Grid g, FiniteDimSpace X, std::vector<double> values)
        : grid_(g), space_(X), v_(std::move(values)) {
        if (v_.size() != grid_.size() * space_.dim())
            throw structural_error("values array length must equal cells times space dimension");
    }

    static GridFunction scalar(Grid g, std::vector<double> values) {
        return GridFunction(g, FiniteDimSpace::euclidean(1), std::move(values));
    }

    template <class F>
    static GridFunction sample_scalar(Grid g, F&& f) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            if constexpr (std::is_invocable_v<F, double, double>) {
                if (g.dim() != 2) throw structural_error("two-argument sampler needs a 2-D grid");
                auto c = g.center2(i);
                v[i] = f(c[0], c[1]);
            } else {
                if (g.dim() != 1) throw structural_error("one-argument sampler needs a 1-D grid");
                v[i] = f(g.center(i));
            }
        }
        return scalar(g, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const FiniteDimSpace& space() const { return space_; }
    std::size_t dim() const { return space_.dim(); }
    std::size_t size() const { return grid_.size(); }

    std::span<const double> at(std::size_t i) const { return {v_.data() + i * dim(), dim()}; }
    std::span<double> at(std::size_t i) { return {v_.data() + i * dim(), dim()}; }
    double& operator()(std::size_t i, std::size_t k = 0) { return v_[i * dim() + k]; }
    double operator()(std::size_t i, std::size_t k = 0) const { return v_[i * dim() + k]; }

    double cell_norm(std::size_t i) const { return space_.norm_unchecked(v_.data() + i * dim()); }
    std::vector<double> norms() const {
        std::vector<double> n(size());
        for (std::size_t i = 0; i < size(); ++i) n[i] = cell_norm(i);
        return n;
    }

    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

private:
    Grid grid_;
    FiniteDimSpace space_ = FiniteDimSpace::euclidean(1);
    std::vector<double> v_;
};

// Strictly positive weight, one value per cell.
class Weight {
public:
    Weight() = default;
    Weight(Grid g, std::vector<double> values) : grid_(g), v_(std::move(values)) {
        if (v_.size() != grid_.size()) throw structural_error("weight length must equal cell count");
        for (double x : v_)
            if (!(x > 0) || !std::isfinite(x)) throw std::domain_error("weight values must be positive and finite");
    }

    static Weight ones(Grid g) { return Weight(g, std::vector<double>(g.size(), 1.0)); }

    // t^alpha sampled at cell centers (1-D).
    static Weight power(Grid g, double alpha) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::pow(g.center(i), alpha);
        return Weight(g, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }

    Weight pow(double e) const {
        std::vector<double> v(v_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(v_[i], e);
        return Weight(grid_, std::move(v));
    }

private:
    Grid grid_;
    std::vector<double> v_;
};

}  // namespace scz
