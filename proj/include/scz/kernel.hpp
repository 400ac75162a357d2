#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "scz/grid.hpp"

namespace scz {

// Kernel values are small dense matrices (target_dim x source_dim, both <= 8),
// kept on the stack.
inline constexpr int kMaxDim = 8;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// Induced norm ||A||_{X -> Y}.
//  euclidean -> euclidean: largest singular value (symmetric eigensolver on A^T A);
//  l^inf source: exact vertex search over {-1,1}^n;
//  otherwise: best over vertex directions, basis vectors and a coordinate ascent.
inline double operator_norm(const Mat& A, const FiniteDimSpace& X, const FiniteDimSpace& Y) {
    if (A.rows() == 0 || A.cols() == 0) return 0;
    bool diag = A.rows() == A.cols();
    if (diag)
        for (Eigen::Index i = 0; i < A.rows() && diag; ++i)
            for (Eigen::Index j = 0; j < A.cols(); ++j)
                if (i != j && A(i, j) != 0) {
                    diag = false;
                    break;
                }
    if (X.is_euclidean() && Y.is_euclidean()) {
        if (diag) return A.diagonal().cwiseAbs().maxCoeff();
        if (A.rows() == 1 || A.cols() == 1) return A.norm();
        Mat AtA = A.transpose() * A;
        Eigen::SelfAdjointEigenSolver<Mat> es(AtA, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    const auto n = static_cast<std::size_t>(A.cols());
    Vec x(A.cols()), y(A.rows());
    auto ratio = [&](const Vec& v) {
        double nx = X.norm_unchecked(v.data());
        if (nx == 0) return 0.0;
        y = A * v;
        return Y.norm_unchecked(y.data()) / nx;
    };
    double best = 0;
    Vec arg = Vec::Zero(A.cols());
    for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
        for (std::size_t k = 0; k < n; ++k) x(k) = (k == 0 || !((mask >> (k - 1)) & 1u)) ? 1.0 : -1.0;
        double r = ratio(x);
        if (r > best) best = r, arg = x;
    }
    if (std::isinf(X.q())) return best;
    for (std::size_t k = 0; k < n; ++k) {
        x.setZero();
        x(k) = 1;
        double r = ratio(x);
        if (r > best) best = r, arg = x;
    }
    double step = 0.25;
    for (int it = 0; it < 200 && step > 1e-9; ++it) {
        bool improved = false;
        for (std::size_t k = 0; k < n; ++k)
            for (double sgn : {1.0, -1.0}) {
                x = arg;
                x(k) += sgn * step;
                double r = ratio(x);
                if (r > best) best = r, arg = x, improved = true;
            }
        if (!improved) step *= 0.5;
    }
    return best;
}

// Two-point kernel (s,t) -> L(X,Y). Causality is enforced here, not by the
// callback: a causal kernel returns the zero matrix for s <= t.
class Kernel {
public:
    using Fn = std::function<Mat(double, double)>;

    Kernel() = default;
    Kernel(std::string name, FiniteDimSpace X, FiniteDimSpace Y, Fn fn)
        : name_(std::move(name)), X_(X), Y_(Y), fn_(std::move(fn)) {
        if (X.dim() > kMaxDim || Y.dim() > kMaxDim) throw std::domain_error("kernel spaces limited to dimension 8");
    }

    Kernel& convolution(bool v = true) { conv_ = v; return *this; }
    Kernel& causal(bool v = true) { causal_ = v; return *this; }
    Kernel& singular_diagonal(bool v = true) { sing_ = v; return *this; }
    Kernel& diagonal_values(bool v = true) { diag_ = v; return *this; }

    const std::string& name() const { return name_; }
    const FiniteDimSpace& source() const { return X_; }
    const FiniteDimSpace& target() const { return Y_; }
    bool is_convolution() const { return conv_; }
    bool is_causal() const { return causal_; }
    bool has_singular_diagonal() const { return sing_; }
    bool has_diagonal_values() const { return diag_; }
    bool is_scalar() const { return X_.dim() == 1 && Y_.dim() == 1; }

    Mat operator()(double s, double t) const {
        if (causal_ && s <= t) return Mat::Zero(Y_.dim(), X_.dim());
        return fn_(s, t);
    }

    double norm(double s, double t) const { return operator_norm((*this)(s, t), X_, Y_); }

    Mat zero() const { return Mat::Zero(Y_.dim(), X_.dim()); }

    // Same kernel with eval multiplied by c.
    Kernel scaled(double c) const {
        Kernel k = *this;
        auto f = fn_;
        k.fn_ = [f, c](double s, double t) -> Mat { return c * f(s, t); };
        k.name_ = name_ + "*c";
        return k;
    }

    // Replace the evaluation map, keeping metadata.
    Kernel with_fn(std::string name, Fn fn) const {
        Kernel k = *this;
        k.name_ = std::move(name);
        k.fn_ = std::move(fn);
        return k;
    }

private:
    std::string name_;
    FiniteDimSpace X_ = FiniteDimSpace::euclidean(1);
    FiniteDimSpace Y_ = FiniteDimSpace::euclidean(1);
    Fn fn_;
    bool conv_ = false;
    bool causal_ = false;
    bool sing_ = false;
    bool diag_ = false;
};

inline Mat scalar_mat(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

// Convolution kernel built from a matrix-valued profile k(u), u = s - t.
inline Kernel convolution_kernel(std::string name, FiniteDimSpace X, FiniteDimSpace Y,
                                 std::function<Mat(double)> k, bool causal) {
    Kernel K(std::move(name), X, Y, [k = std::move(k)](double s, double t) { return k(s - t); });
    K.convolution().causal(causal);
    return K;
}

// ---- zoo ----

inline Kernel zero_kernel(std::size_t n = 1) {
    auto X = FiniteDimSpace::euclidean(n);
    Kernel K("zero", X, X, [n](double, double) -> Mat { return Mat::Zero(n, n); });
    K.convolution().diagonal_values();
    return K;
}

// k = 1_{(0,1)} tensor identity.
inline Kernel indicator_kernel(std::size_t n = 1) {
    auto X = FiniteDimSpace::euclidean(n);
    auto K = convolution_kernel(
        "indicator", X, X,
        [n](double u) -> Mat {
            Mat m = Mat::Zero(n, n);
            if (u > 0 && u < 1) m.diagonal().setOnes();
            return m;
        },
        true);
    K.diagonal_values();
    return K;
}

// k(u) = lambda^{1/2} e^{-lambda u}, u > 0.
inline Kernel exponential_kernel(double lambda) {
    if (!(lambda > 0)) throw std::domain_error("exponential kernel needs lambda > 0");
    auto X = FiniteDimSpace::euclidean(1);
    double a = std::sqrt(lambda);
    auto K = convolution_kernel(
        "exponential", X, X, [a, lambda](double u) { return scalar_mat(a * std::exp(-lambda * u)); }, true);
    K.diagonal_values();
    return K;
}

// A^{1/2} e^{-(s-t)A} 1_{t<s} for diagonal A.
inline Kernel make_semigroup_kernel(const std::vector<double>& eigenvalues) {
    if (eigenvalues.empty()) throw std::domain_error("semigroup kernel needs at least one eigenvalue");
    for (double l : eigenvalues)
        if (!(l > 0) || !std::isfinite(l)) throw std::domain_error("semigroup eigenvalues must be positive");
    auto n = eigenvalues.size();
    auto X = FiniteDimSpace::euclidean(n);
    auto K = convolution_kernel(
        "semigroup", X, X,
        [eigenvalues, n](double u) -> Mat {
            Mat m = Mat::Zero(n, n);
            for (std::size_t k = 0; k < n; ++k) m(k, k) = std::sqrt(eigenvalues[k]) * std::exp(-eigenvalues[k] * u);
            return m;
        },
        true);
    K.diagonal_values();
    return K;
}

// (s+t)^{-1/2}: |K|^2 is the Hilbert-Hankel kernel.
inline Kernel hilbert_hankel_kernel(double c = 1.0) {
    auto X = FiniteDimSpace::euclidean(1);
    Kernel K("hilbert_hankel", X, X, [c](double s, double t) { return scalar_mat(c / std::sqrt(s + t)); });
    K.diagonal_values();
    return K;
}

// |s-t|^{-1/2}: smooth off the diagonal, no cancellation.
inline Kernel abs_power_kernel() {
    auto X = FiniteDimSpace::euclidean(1);
    auto K = convolution_kernel(
        "abs_power", X, X, [](double u) { return scalar_mat(1.0 / std::sqrt(std::abs(u))); }, false);
    K.singular_diagonal().diagonal_values();
    return K;
}

// u^{-1} 1_{(0,1)}(u): not square integrable at the origin.
inline Kernel inverse_kernel() {
    auto X = FiniteDimSpace::euclidean(1);
    auto K = convolution_kernel(
        "inverse", X, X, [](double u) { return scalar_mat(u < 1 ? 1.0 / u : 0.0); }, true);
    K.singular_diagonal().diagonal_values();
    return K;
}

// K_eps = K 1_{eps <= |s-t| < 1/eps}.
inline Kernel truncate_kernel(const Kernel& K, double eps) {
    if (!(eps > 0 && eps < 1)) throw std::domain_error("truncation_eps must lie in (0,1)");
    Kernel T = K.with_fn(K.name() + "_trunc", [K, eps](double s, double t) -> Mat {
        double d = std::abs(s - t);
        if (d < eps || d >= 1.0 / eps) return K.zero();
        return K(s, t);
    });
    return T;
}

}  // namespace scz
