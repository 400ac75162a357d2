#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scz/grid.hpp"
#include "scz/kernel.hpp"
#include "scz/norms.hpp"
#include "scz/rng.hpp"

namespace scz {

enum class Method { quadrature, gaussian_mc, power_iteration, probes };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::quadrature: return "quadrature";
        case Method::gaussian_mc: return "gaussian_mc";
        case Method::power_iteration: return "power_iteration";
        case Method::probes: return "probes";
    }
    return "?";
}

struct NormEstimate {
    double value = 0;
    double stderr_ = 0;
    Method method = Method::quadrature;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::string probe;  // best probe for lower-bound estimates
};

// Batched mean with stderr from 32 batch means.
struct BatchStats {
    double mean = 0;
    double stderr_ = 0;
};

inline BatchStats batch_stats(const std::vector<double>& x, std::size_t batches = 32) {
    BatchStats r;
    if (x.empty()) return r;
    batches = std::min(batches, x.size());
    std::vector<double> bm(batches, 0.0);
    std::vector<std::size_t> bc(batches, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t b = i * batches / x.size();
        bm[b] += x[i];
        ++bc[b];
    }
    double tot = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        tot += bm[b];
        bm[b] /= static_cast<double>(bc[b]);
    }
    r.mean = tot / static_cast<double>(x.size());
    if (batches < 2) return r;
    double v = 0;
    for (double m : bm) v += (m - r.mean) * (m - r.mean);
    v /= static_cast<double>(batches - 1);
    r.stderr_ = std::sqrt(v / static_cast<double>(batches));
    return r;
}

// A function t -> Y on the grid, possibly with m columns per cell (t -> L(R^m, Y)).
struct GammaElement {
    Grid grid;
    FiniteDimSpace space = FiniteDimSpace::euclidean(1);
    std::size_t columns = 1;  // per cell
    std::vector<double> values;  // cell-major, then column, then Y component

    GammaElement() = default;
    GammaElement(Grid g, FiniteDimSpace Y, std::size_t m = 1)
        : grid(g), space(Y), columns(m), values(g.size() * m * Y.dim(), 0.0) {}

    double* col(std::size_t cell, std::size_t c = 0) { return values.data() + (cell * columns + c) * space.dim(); }
    const double* col(std::size_t cell, std::size_t c = 0) const {
        return values.data() + (cell * columns + c) * space.dim();
    }
    std::size_t total_columns() const { return grid.size() * columns; }
};

// Gaussian Monte Carlo estimate of (E||sum_k g_k v_k sqrt(h)||^2)^{1/2}.
inline NormEstimate gamma_norm_mc(const GammaElement& g, std::size_t samples, std::uint64_t seed) {
    std::size_t d = g.space.dim(), n = g.total_columns();
    double sh = std::sqrt(g.grid.cell_measure());
    std::vector<double> sq(samples), y(d);
    for (std::size_t k = 0; k < samples; ++k) {
        RngStream rng(seed, k);
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            double z = rng.normal() * sh;
            const double* v = g.values.data() + c * d;
            for (std::size_t i = 0; i < d; ++i) y[i] += z * v[i];
        }
        double nv = g.space.norm_unchecked(y.data());
        sq[k] = nv * nv;
    }
    auto st = batch_stats(sq);
    NormEstimate e;
    e.value = std::sqrt(std::max(0.0, st.mean));
    e.stderr_ = e.value > 0 ? st.stderr_ / (2 * e.value) : 0.0;
    e.method = Method::gaussian_mc;
    e.samples = samples;
    e.seed = seed;
    return e;
}

// Euclidean Y: exact L^2 value. Otherwise Gaussian Monte Carlo.
inline NormEstimate gamma_norm(const GammaElement& g, std::size_t samples = 4096, std::uint64_t seed = 1) {
    if (!g.space.is_euclidean()) return gamma_norm_mc(g, samples, seed);
    double s = 0;
    for (double v : g.values) s += v * v;
    NormEstimate e;
    e.value = std::sqrt(s * g.grid.cell_measure());
    e.method = Method::quadrature;
    return e;
}

// Cell excluded from the t-integration when evaluating at s (none if regular).
inline std::optional<std::size_t> excluded_cell(const Kernel& K, const Grid& g, double s) {
    if (!K.has_singular_diagonal()) return std::nullopt;
    if (s <= 0 || s > g.T()) return std::nullopt;
    return g.locate(s);
}

// t -> K(s,t) f(t), evaluated at cell centers.
inline GammaElement apply_TK(const Kernel& K, const GridFunction& f, double s) {
    const Grid& g = f.grid();
    if (g.dim() != 1) throw structural_error("kernel operators act on 1-D grids");
    if (!(f.space() == K.source())) throw structural_error("function space does not match kernel source");
    GammaElement out(g, K.target());
    auto skip = excluded_cell(K, g, s);
    Vec x(K.source().dim());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (skip && *skip == j) continue;
        for (std::size_t k = 0; k < f.dim(); ++k) x(k) = f(j, k);
        Vec y = K(s, g.center(j)) * x;
        std::copy(y.data(), y.data() + y.size(), out.col(j));
    }
    return out;
}

// Dense table of K(s_i, t_j) on grid centers, with excluded diagonal cells zeroed.
// Diagonal-valued kernels store only the diagonal.
class KernelTable {
public:
    KernelTable(const Kernel& K, const Grid& g) : g_(g), X_(K.source()), Y_(K.target()) {
        if (g.dim() != 1) throw structural_error("kernel tables live on 1-D grids");
        n_ = g.size();
        diag_ = K.has_diagonal_values() && X_.dim() == Y_.dim();
        bs_ = diag_ ? X_.dim() : X_.dim() * Y_.dim();
        data_.assign(n_ * n_ * bs_, 0.0);
        // convolution kernels: one evaluation per offset i - j
        std::vector<Mat> by_offset;
        if (K.is_convolution()) {
            by_offset.resize(2 * n_ - 1);
            for (std::size_t d = 0; d < n_; ++d) {
                by_offset[n_ - 1 + d] = K(g.center(d), g.center(0));
                if (d > 0) by_offset[n_ - 1 - d] = K(g.center(0), g.center(d));
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            double s = g.center(i);
            for (std::size_t j = 0; j < n_; ++j) {
                if (K.has_singular_diagonal() && i == j) continue;
                Mat m = K.is_convolution() ? by_offset[n_ - 1 + i - j] : K(s, g.center(j));
                double* b = block(i, j);
                if (diag_)
                    for (std::size_t k = 0; k < bs_; ++k) b[k] = m(k, k);
                else
                    for (std::size_t c = 0; c < X_.dim(); ++c)
                        for (std::size_t r = 0; r < Y_.dim(); ++r) b[c * Y_.dim() + r] = m(r, c);
            }
        }
    }

    const Grid& grid() const { return g_; }
    std::size_t n() const { return n_; }
    std::size_t xdim() const { return X_.dim(); }
    std::size_t ydim() const { return Y_.dim(); }
    const FiniteDimSpace& source() const { return X_; }
    const FiniteDimSpace& target() const { return Y_; }
    bool diagonal() const { return diag_; }

    // y += K_ij x
    void apply_add(std::size_t i, std::size_t j, const double* x, double* y, double scale = 1.0) const {
        const double* b = block(i, j);
        if (diag_) {
            for (std::size_t k = 0; k < bs_; ++k) y[k] += scale * b[k] * x[k];
            return;
        }
        std::size_t dy = Y_.dim();
        for (std::size_t c = 0; c < X_.dim(); ++c) {
            double xc = scale * x[c];
            if (xc == 0) continue;
            for (std::size_t r = 0; r < dy; ++r) y[r] += b[c * dy + r] * xc;
        }
    }

    // Square of the Hilbert-Schmidt norm of the block.
    double hs2(std::size_t i, std::size_t j) const {
        const double* b = block(i, j);
        double s = 0;
        for (std::size_t k = 0; k < bs_; ++k) s += b[k] * b[k];
        return s;
    }

    double entry(std::size_t i, std::size_t j, std::size_t r, std::size_t c) const {
        const double* b = block(i, j);
        if (diag_) return r == c ? b[r] : 0.0;
        return b[c * Y_.dim() + r];
    }

    const double* block(std::size_t i, std::size_t j) const { return data_.data() + (i * n_ + j) * bs_; }

private:
    double* block(std::size_t i, std::size_t j) { return data_.data() + (i * n_ + j) * bs_; }

    Grid g_;
    FiniteDimSpace X_, Y_;
    std::size_t n_ = 0, bs_ = 1;
    bool diag_ = false;
    std::vector<double> data_;
};

// s_i -> ||T_K f(s_i)||_gamma on all cell centers.
inline std::vector<double> square_function(const KernelTable& T, const GridFunction& f,
                                           std::size_t mc_samples = 256, std::uint64_t seed = 1) {
    std::size_t n = T.n(), dy = T.ydim();
    std::vector<double> out(n);
    GammaElement ge(T.grid(), T.target());
    for (std::size_t i = 0; i < n; ++i) {
        if (T.target().is_euclidean()) {
            double s = 0;
            std::vector<double> y(dy);
            for (std::size_t j = 0; j < n; ++j) {
                std::fill(y.begin(), y.end(), 0.0);
                T.apply_add(i, j, f.at(j).data(), y.data());
                for (double v : y) s += v * v;
            }
            out[i] = std::sqrt(s * T.grid().cell_measure());
        } else {
            std::fill(ge.values.begin(), ge.values.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) T.apply_add(i, j, f.at(j).data(), ge.col(j));
            out[i] = gamma_norm_mc(ge, mc_samples, seed + i).value;
        }
    }
    return out;
}

inline std::vector<double> square_function(const Kernel& K, const GridFunction& f) {
    return square_function(KernelTable(K, f.grid()), f);
}

// ---- scalar Schur reduction ----

struct SchurResult {
    double value = 0;  // norm of |K|^2 on L^q(w)
    std::size_t iterations = 0;
    std::vector<double> optimizer;  // nonnegative g (per cell) attaining it
};

// Operator norm of a nonnegative matrix on l^q, q >= 1 (Boyd's nonlinear power
// method, which converges to the global maximizer for nonnegative matrices).
inline SchurResult nonnegative_lq_norm(const Eigen::MatrixXd& A, double q, double tol = 1e-13,
                                       std::size_t max_iter = 20000) {
    SchurResult r;
    const Eigen::Index n = A.cols();
    if (A.size() == 0 || A.maxCoeff() <= 0) {
        r.optimizer.assign(n, 0.0);
        return r;
    }
    if (q == 1.0) {
        Eigen::Index jmax = 0;
        r.value = A.colwise().sum().maxCoeff(&jmax);
        r.optimizer.assign(n, 0.0);
        r.optimizer[jmax] = 1.0;
        return r;
    }
    auto qnorm = [q](const Eigen::VectorXd& v) {
        double m = v.cwiseAbs().maxCoeff();
        if (m == 0) return 0.0;
        return m * std::pow((v.cwiseAbs() / m).array().pow(q).sum(), 1.0 / q);
    };
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    x /= qnorm(x);
    double prev = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = A * x;
        double val = qnorm(y);
        r.iterations = it + 1;
        if (std::abs(val - prev) <= tol * val) {
            prev = val;
            break;
        }
        prev = val;
        Eigen::VectorXd z = A.transpose() * y.array().pow(q - 1.0).matrix();
        x = z.array().pow(1.0 / (q - 1.0)).matrix();
        double nx = qnorm(x);
        if (nx == 0) break;
        x /= nx;
    }
    r.value = prev;
    r.optimizer.assign(x.data(), x.data() + n);
    return r;
}

// Matrix of |K(s_i,t_j)|^2 * h, conjugated by w^{1/q} for the weighted norm.
inline Eigen::MatrixXd schur_matrix(const Kernel& K, const Grid& g, double q, const Weight* w = nullptr) {
    if (!K.is_scalar()) throw std::domain_error("Schur reduction needs a scalar kernel");
    if (g.dim() != 1) throw structural_error("Schur reduction lives on 1-D grids");
    if (w) require_same(g, w->grid());
    std::size_t n = g.size();
    double h = g.width();
    Eigen::MatrixXd A(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            if (K.has_singular_diagonal() && i == j) {
                A(i, j) = 0;
                continue;
            }
            double v = K(g.center(i), g.center(j))(0, 0);
            double a = v * v * h;
            if (w) a *= std::pow((*w)[i] / (*w)[j], 1.0 / q);
            A(i, j) = a;
        }
    return A;
}

// ||K||_{K_gamma(L^p)}^2 = norm of |K|^2 on L^{p/2}.
inline NormEstimate schur_norm_scalar(const Kernel& K, const Grid& g, double q, const Weight* w = nullptr,
                                      SchurResult* detail = nullptr) {
    if (!(q >= 1.0)) throw std::domain_error("Schur exponent q = p/2 must be >= 1");
    auto A = schur_matrix(K, g, q, w);
    auto r = nonnegative_lq_norm(A, q);
    NormEstimate e;
    e.value = r.value;
    e.method = Method::power_iteration;
    e.samples = r.iterations;
    e.probe = "schur";
    if (detail) {
        if (w)
            for (std::size_t i = 0; i < r.optimizer.size(); ++i) r.optimizer[i] *= std::pow((*w)[i], -1.0 / q);
        *detail = std::move(r);
    }
    return e;
}

// Three-point fit v(N) = a - c / (ln N + b)^2 and its limit a.
struct LogRefinementFit {
    double limit = 0, b = 0, c = 0;
    bool ok = false;
};

inline LogRefinementFit extrapolate_log_refinement(const std::array<double, 3>& N, const std::array<double, 3>& v) {
    std::array<double, 3> x{std::log(N[0]), std::log(N[1]), std::log(N[2])};
    auto resid = [&](double b) {
        double u0 = 1 / ((x[0] + b) * (x[0] + b)), u1 = 1 / ((x[1] + b) * (x[1] + b)),
               u2 = 1 / ((x[2] + b) * (x[2] + b));
        return (v[1] - v[0]) / (u0 - u1) - (v[2] - v[1]) / (u1 - u2);
    };
    LogRefinementFit f;
    double lo = -x[0] + 0.05, step = 0.05;
    double rlo = resid(lo);
    for (double b = lo + step; b < 200; b += step) {
        double rb = resid(b);
        if ((rlo < 0) != (rb < 0)) {
            double a = b - step, c = b;
            for (int it = 0; it < 200; ++it) {
                double m = 0.5 * (a + c);
                if ((resid(a) < 0) != (resid(m) < 0)) c = m;
                else a = m;
            }
            f.b = 0.5 * (a + c);
            double u0 = 1 / ((x[0] + f.b) * (x[0] + f.b)), u1 = 1 / ((x[1] + f.b) * (x[1] + f.b));
            f.c = (v[1] - v[0]) / (u0 - u1);
            f.limit = v[0] + f.c * u0;
            f.ok = true;
            return f;
        }
        rlo = rb;
    }
    return f;
}

// ---- probe-based operator norm ----

inline double square_function_ratio(const KernelTable& T, const GridFunction& f, double p, const Weight* w) {
    double nf = lp_norm(f, p, w);
    if (nf == 0) return 0;
    auto sq = square_function(T, f);
    return lp_norm_of(T.grid(), sq, p, w) / nf;
}

// Lower bound for ||T_K||: L^p(w;X) -> L^p(w;gamma(Y)) by maximizing over probes.
inline NormEstimate kgamma_norm(const Kernel& K, const Grid& g, double p, const Weight* w = nullptr,
                                std::size_t probes = 8, std::uint64_t seed = 1) {
    if (!(p >= 2.0)) throw std::domain_error("K_gamma(L^p) needs p >= 2; for p < 2 only K = 0 is bounded");
    NormEstimate best;
    best.method = Method::probes;
    best.seed = seed;
    std::size_t count = 0;
    auto consider = [&](double v, const std::string& name) {
        ++count;
        if (v > best.value) {
            best.value = v;
            best.probe = name;
        }
    };
    if (K.is_scalar()) {
        SchurResult sr;
        auto e = schur_norm_scalar(K, g, p / 2.0, w, &sr);
        consider(std::sqrt(e.value), "schur");
        best.samples = ++count;
        return best;
    }
    KernelTable T(K, g);
    std::size_t dx = K.source().dim();
    FiniteDimSpace X = K.source();
    for (std::size_t r = 0; r < probes; ++r) {
        RngStream rng(seed, r);
        GridFunction f(g, X);
        for (double& v : f.values()) v = (r % 2 == 0) ? rng.normal() : rng.sign();
        consider(square_function_ratio(T, f, p, w), r % 2 == 0 ? "gaussian_field" : "sign_field");
    }
    // graded indicator atoms 1_B (x) e_k and 1_B (x) (1,...,1)
    for (int lev = 0; lev <= g.levels(); ++lev) {
        std::size_t nc = cubes_per_axis(lev);
        std::size_t stride = std::max<std::size_t>(1, nc / 8);
        for (std::size_t q = 0; q < nc; q += stride) {
            auto cells = cube_cells(g, {lev, q});
            for (std::size_t k = 0; k <= dx; ++k) {
                if (k == dx && dx == 1) break;
                GridFunction f(g, X);
                for (auto c : cells)
                    for (std::size_t m = 0; m < dx; ++m) f(c, m) = (k == dx || k == m) ? 1.0 : 0.0;
                consider(square_function_ratio(T, f, p, w), "atom");
            }
        }
    }
    // diagonal kernels: lift the per-mode Schur optimizers
    if (K.has_diagonal_values() && X.dim() == K.target().dim() && X.is_euclidean()) {
        for (std::size_t k = 0; k < dx; ++k) {
            Kernel Kk("mode", FiniteDimSpace::euclidean(1), FiniteDimSpace::euclidean(1),
                      [K, k](double s, double t) { return scalar_mat(K(s, t)(k, k)); });
            Kk.singular_diagonal(K.has_singular_diagonal());
            SchurResult sr;
            schur_norm_scalar(Kk, g, p / 2.0, w, &sr);
            GridFunction f(g, X);
            for (std::size_t c = 0; c < g.size(); ++c) f(c, k) = std::sqrt(std::max(0.0, sr.optimizer[c]));
            consider(square_function_ratio(T, f, p, w), "mode_schur");
        }
    }
    best.samples = count;
    return best;
}

// Weak-type ratio ||s -> ||T_K f(s)||_gamma||_{L^{p,inf}} / ||f||_{L^p}.
inline double weak_square_function_ratio(const KernelTable& T, const GridFunction& f, double p) {
    double nf = lp_norm(f, p);
    if (nf == 0) return 0;
    auto sq = square_function(T, f);
    return weak_lp_norm_of(T.grid(), sq, p) / nf;
}

struct ConvolutionNecessary {
    double lhs = 0, rhs = 0, ratio = 0;
    bool pass = true;
};

// ||t -> k(t)x||_gamma over the profile lattice u = j h, |u| < T/2 (causal) or
// T/3 (two-sided), against the weak-type probe bound with the constant
// 2 * 2^{1/p} (causal) or 2 * 3^{1/p} obtained from the indicator probe.
inline ConvolutionNecessary check_convolution_necessary(const Kernel& K, const Grid& g, double p,
                                                        double tol = 1e-9) {
    if (!K.is_convolution()) throw std::domain_error("necessary condition applies to convolution kernels");
    if (!(p >= 2.0)) throw std::domain_error("p must be >= 2");
    ConvolutionNecessary r;
    double h = g.width();
    bool causal = K.is_causal();
    double reach = causal ? g.T() / 2 : g.T() / 3;
    std::size_t J = static_cast<std::size_t>(std::floor(reach / h + 1e-9));
    std::size_t dx = K.source().dim();
    KernelTable T(K, g);
    for (std::size_t k = 0; k < dx; ++k) {
        Vec x = Vec::Zero(dx);
        x(k) = 1;
        GammaElement ge(Grid(1, 2 * g.T(), 2 * g.cells()), K.target());
        std::size_t col = 0;
        for (std::size_t j = 1; j < J; ++j) {
            for (double sgn : {1.0, -1.0}) {
                if (causal && sgn < 0) continue;
                Vec y = K(sgn * static_cast<double>(j) * h, 0.0) * x;
                std::copy(y.data(), y.data() + y.size(), ge.col(col++));
            }
        }
        double lhs = gamma_norm(ge).value;
        r.lhs = std::max(r.lhs, lhs);
    }
    // indicator probe 1_{(0,2r)} (causal) or 1_{(0,3r)} with r = reach / 2 or reach
    double C = causal ? 2.0 * std::pow(2.0, 1.0 / p) : 2.0 * std::pow(3.0, 1.0 / p);
    double weak = 0;
    for (std::size_t k = 0; k < dx; ++k) {
        GridFunction f(g, K.source());
        for (std::size_t c = 0; c < g.size(); ++c)
            if (g.center(c) < (causal ? 2 * reach : 3 * reach)) f(c, k) = 1.0;
        weak = std::max(weak, weak_square_function_ratio(T, f, p));
    }
    r.rhs = C * weak;
    r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
    r.pass = r.lhs <= r.rhs * (1 + tol);
    return r;
}

// Type-2 constant of l^q_n estimated from random sign sequences (lower bound, >= 1).
inline double estimate_type2_constant(std::size_t n, double q, std::size_t samples = 2000,
                                      std::uint64_t seed = 20240901) {
    auto X = FiniteDimSpace::lq(n, q, 1.0);
    double best = 1.0;
    std::vector<double> y(n), xk(n);
    for (std::size_t K : {2u, 4u, 8u, 16u}) {
        RngStream pick(seed, 1000 + K);
        std::vector<std::vector<double>> xs(K, std::vector<double>(n));
        double den = 0;
        for (auto& x : xs) {
            for (double& v : x) v = pick.sign();
            double nx = X.norm_unchecked(x.data());
            den += nx * nx;
        }
        double acc = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            RngStream rng(seed, K * 1000003 + s);
            std::fill(y.begin(), y.end(), 0.0);
            for (auto& x : xs) {
                double g = rng.normal();
                for (std::size_t i = 0; i < n; ++i) y[i] += g * x[i];
            }
            double ny = X.norm_unchecked(y.data());
            acc += ny * ny;
        }
        best = std::max(best, std::sqrt(acc / static_cast<double>(samples) / den));
    }
    return best;
}

inline FiniteDimSpace lq_space(std::size_t n, double q) {
    return FiniteDimSpace::lq(n, q, estimate_type2_constant(n, q));
}

}  // namespace scz
