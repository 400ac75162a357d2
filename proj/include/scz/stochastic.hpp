#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "scz/gamma.hpp"
#include "scz/grid.hpp"
#include "scz/kernel.hpp"
#include "scz/norms.hpp"
#include "scz/rng.hpp"

namespace scz {

struct adaptedness_error : std::logic_error {
    using std::logic_error::logic_error;
};

struct McConfig {
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    double p = 2.0;
    double confidence = 3.0;
};

// m-dimensional Brownian increments on a 1-D time grid.
class BrownianPath {
public:
    static BrownianPath sample(const Grid& g, std::size_t m, std::uint64_t seed, std::uint64_t path) {
        if (g.dim() != 1) throw structural_error("Brownian paths live on 1-D time grids");
        if (m == 0) throw std::domain_error("H dimension must be positive");
        BrownianPath W;
        W.grid_ = g;
        W.m_ = m;
        W.seed_ = seed;
        W.path_ = path;
        W.dW_.resize(g.size() * m);
        RngStream rng(seed, path);
        double sh = std::sqrt(g.width());
        for (double& x : W.dW_) x = sh * rng.normal();
        return W;
    }

    const Grid& grid() const { return grid_; }
    std::size_t h_dim() const { return m_; }
    std::uint64_t seed() const { return seed_; }
    double dW(std::size_t cell, std::size_t k = 0) const { return dW_[cell * m_ + k]; }
    const double* increments(std::size_t cell) const { return dW_.data() + cell * m_; }

    // W at the right endpoint of cell i.
    double value(std::size_t cell, std::size_t k = 0) const {
        double s = 0;
        for (std::size_t i = 0; i <= cell; ++i) s += dW(i, k);
        return s;
    }

private:
    Grid grid_;
    std::size_t m_ = 1;
    std::uint64_t seed_ = 0, path_ = 0;
    std::vector<double> dW_;
};

// Read access to increments of cells strictly before `now`.
class PastView {
public:
    PastView(const BrownianPath& W, std::size_t now) : W_(W), now_(now) {}
    std::size_t now() const { return now_; }
    double dW(std::size_t cell, std::size_t k = 0) const {
        if (cell >= now_) throw adaptedness_error("integrand at a cell read a current or future increment");
        return W_.dW(cell, k);
    }
    // W at the left endpoint of the current cell.
    double W(std::size_t k = 0) const {
        double s = 0;
        for (std::size_t i = 0; i < now_; ++i) s += W_.dW(i, k);
        return s;
    }

private:
    const BrownianPath& W_;
    std::size_t now_;
};

// Step process with values in L(R^m, X), constant on each cell and predictable.
class AdaptedProcess {
public:
    using Functional = std::function<Mat(std::size_t, const PastView&)>;

    static AdaptedProcess deterministic(const Grid& g, FiniteDimSpace X, std::size_t m,
                                        std::function<Mat(double)> G) {
        AdaptedProcess P(g, X, m);
        P.det_ = true;
        P.values_.resize(g.size() * X.dim() * m);
        for (std::size_t i = 0; i < g.size(); ++i) {
            Mat v = G(g.center(i));
            if (static_cast<std::size_t>(v.rows()) != X.dim() || static_cast<std::size_t>(v.cols()) != m)
                throw structural_error("integrand value has wrong shape");
            std::copy(v.data(), v.data() + v.size(), P.values_.data() + i * X.dim() * m);
        }
        return P;
    }

    // m = 1 integrand from an X-valued grid function.
    static AdaptedProcess from_function(const GridFunction& f) {
        AdaptedProcess P(f.grid(), f.space(), 1);
        P.det_ = true;
        P.values_ = f.values();
        return P;
    }

    static AdaptedProcess path_functional(const Grid& g, FiniteDimSpace X, std::size_t m, Functional F) {
        AdaptedProcess P(g, X, m);
        P.det_ = false;
        P.fn_ = std::move(F);
        return P;
    }

    const Grid& grid() const { return grid_; }
    const FiniteDimSpace& space() const { return X_; }
    std::size_t h_dim() const { return m_; }
    bool is_deterministic() const { return det_; }
    std::size_t block() const { return X_.dim() * m_; }

    // Per-cell column-major X x m blocks along the given path.
    std::vector<double> realize(const BrownianPath& W) const {
        if (det_) return values_;
        if (!(W.grid() == grid_) || W.h_dim() != m_) throw structural_error("path does not match integrand");
        std::vector<double> out(grid_.size() * block());
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            Mat v = fn_(i, PastView(W, i));
            if (static_cast<std::size_t>(v.rows()) != X_.dim() || static_cast<std::size_t>(v.cols()) != m_)
                throw structural_error("integrand value has wrong shape");
            std::copy(v.data(), v.data() + v.size(), out.data() + i * block());
        }
        return out;
    }

    const std::vector<double>& values() const {
        if (!det_) throw std::logic_error("random integrand has no fixed values");
        return values_;
    }

    // Same process with every value multiplied by c (linearity checks).
    AdaptedProcess scaled(double c) const {
        AdaptedProcess P = *this;
        if (det_) {
            for (double& v : P.values_) v *= c;
        } else {
            auto f = fn_;
            P.fn_ = [f, c](std::size_t i, const PastView& pv) -> Mat { return c * f(i, pv); };
        }
        return P;
    }

private:
    AdaptedProcess(Grid g, FiniteDimSpace X, std::size_t m) : grid_(g), X_(X), m_(m) {
        if (g.dim() != 1) throw structural_error("integrands live on 1-D time grids");
        if (m == 0 || m > static_cast<std::size_t>(kMaxDim)) throw std::domain_error("H dimension must be in 1..8");
    }

    Grid grid_;
    FiniteDimSpace X_;
    std::size_t m_ = 1;
    bool det_ = true;
    std::vector<double> values_;
    Functional fn_;
};

// Per-cell G(t_i) dW_i in X.
inline std::vector<double> integrand_increments(const std::vector<double>& G, std::size_t xdim, std::size_t m,
                                                const BrownianPath& W) {
    std::size_t n = W.grid().size();
    std::vector<double> v(n * xdim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* g = G.data() + i * xdim * m;
        const double* dw = W.increments(i);
        for (std::size_t c = 0; c < m; ++c)
            for (std::size_t r = 0; r < xdim; ++r) v[i * xdim + r] += g[c * xdim + r] * dw[c];
    }
    return v;
}

// Left-point sum over cells lying in (0, upto]. upto must be a cell boundary.
inline std::vector<double> ito_integral(const AdaptedProcess& G, const BrownianPath& W, double upto) {
    const Grid& g = W.grid();
    if (!(G.grid() == g)) throw structural_error("integrand and path use different grids");
    double k = upto / g.width();
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) throw std::domain_error("upto must be a cell boundary");
    auto cells = static_cast<std::size_t>(std::min<double>(std::round(k), static_cast<double>(g.size())));
    auto vals = G.realize(W);
    auto inc = integrand_increments(vals, G.space().dim(), G.h_dim(), W);
    std::vector<double> out(G.space().dim(), 0.0);
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += inc[i * out.size() + r];
    return out;
}

// Left-point sum of raw per-cell values (X x m blocks) with no adaptedness check.
inline std::vector<double> riemann_sum_unchecked(const std::vector<double>& G, std::size_t xdim, std::size_t m,
                                                 const BrownianPath& W) {
    auto inc = integrand_increments(G, xdim, m, W);
    std::vector<double> out(xdim, 0.0);
    for (std::size_t i = 0; i < W.grid().size(); ++i)
        for (std::size_t r = 0; r < xdim; ++r) out[r] += inc[i * xdim + r];
    return out;
}

// s_i -> sum_{j} K(s_i,t_j) G(t_j) dW_j with the same diagonal-cell rule as apply_TK.
inline GridFunction apply_SK(const KernelTable& T, const AdaptedProcess& G, const BrownianPath& W) {
    if (!(G.space() == T.source())) throw structural_error("integrand space does not match kernel source");
    auto vals = G.realize(W);
    auto inc = integrand_increments(vals, T.xdim(), G.h_dim(), W);
    GridFunction u(T.grid(), T.target());
    for (std::size_t i = 0; i < T.n(); ++i) {
        double* y = u.at(i).data();
        for (std::size_t j = 0; j < T.n(); ++j) T.apply_add(i, j, inc.data() + j * T.xdim(), y);
    }
    return u;
}

inline GridFunction apply_SK(const Kernel& K, const AdaptedProcess& G, const BrownianPath& W) {
    return apply_SK(KernelTable(K, G.grid()), G, W);
}

// E int ||S_K G||^p w, with stderr from 32 batches.
struct McMoment {
    double mean = 0;
    double stderr_ = 0;
    std::size_t paths = 0;
};

inline McMoment mc_moment(const KernelTable& T, const AdaptedProcess& G, double p, const Weight* w,
                          const McConfig& cfg) {
    if (cfg.paths < 2) throw std::domain_error("Monte Carlo needs at least two paths");
    const Grid& g = G.grid();
    std::vector<double> vals(cfg.paths);
    for (std::size_t r = 0; r < cfg.paths; ++r) {
        auto W = BrownianPath::sample(g, G.h_dim(), cfg.seed, r);
        auto u = apply_SK(T, G, W);
        double s = 0;
        for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(u.cell_norm(i), p) * (w ? (*w)[i] : 1.0);
        vals[r] = s * g.cell_measure();
    }
    auto st = batch_stats(vals);
    return {st.mean, st.stderr_, cfg.paths};
}

inline NormEstimate moment_to_norm(const McMoment& m, double p, std::uint64_t seed) {
    NormEstimate e;
    e.method = Method::gaussian_mc;
    e.samples = m.paths;
    e.seed = seed;
    if (m.mean <= 0) return e;
    e.value = std::pow(m.mean, 1.0 / p);
    e.stderr_ = e.value * m.stderr_ / (p * m.mean);
    return e;
}

inline NormEstimate mc_lp_norm(const Kernel& K, const AdaptedProcess& G, double p, const Weight* w,
                               const McConfig& cfg) {
    if (!(p >= 2.0)) throw std::domain_error("stochastic integral operators are studied for p >= 2");
    KernelTable T(K, G.grid());
    return moment_to_norm(mc_moment(T, G, p, w, cfg), p, cfg.seed);
}

// Deterministic side: int ||s -> ||T_K G(s)||_gamma||^p w for deterministic G.
inline double gamma_side_moment(const KernelTable& T, const AdaptedProcess& G, double p, const Weight* w) {
    if (!G.is_deterministic()) throw std::domain_error("gamma side needs a deterministic integrand");
    if (!T.target().is_euclidean()) throw std::domain_error("gamma side quadrature needs a euclidean target");
    const Grid& g = G.grid();
    const auto& vals = G.values();
    std::size_t dx = T.xdim(), dy = T.ydim(), m = G.h_dim(), n = T.n();
    std::vector<double> y(dy);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double s2 = 0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < m; ++c) {
                std::fill(y.begin(), y.end(), 0.0);
                T.apply_add(i, j, vals.data() + j * dx * m + c * dx, y.data());
                for (double v : y) s2 += v * v;
            }
        total += std::pow(s2 * g.width(), p / 2.0) * (w ? (*w)[i] : 1.0);
    }
    return total * g.width();
}

// ||G||_{L^p(w; gamma(H,X))} for deterministic G with euclidean X (Hilbert-Schmidt per cell).
inline double integrand_norm(const AdaptedProcess& G, double p, const Weight* w) {
    const auto& vals = G.values();
    std::size_t b = G.block();
    std::vector<double> n(G.grid().size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        double s = 0;
        for (std::size_t k = 0; k < b; ++k) s += vals[i * b + k] * vals[i * b + k];
        n[i] = std::sqrt(s);
    }
    return lp_norm_of(G.grid(), n, p, w);
}

struct DoobResult {
    double lhs = 0, lhs_stderr = 0;
    double rhs = 0, rhs_stderr = 0;
    double constant = 0;
    bool pass = true;
};

// sup over a truncation lattice vs 4p/(p-1) times the untruncated operator.
// Non-causal kernels are split into causal and anticausal parts.
inline DoobResult doob_maximal_check(const Kernel& K, const AdaptedProcess& G, double p, const McConfig& cfg,
                                     const std::vector<double>& eps_lattice) {
    if (!(p > 1.0)) throw std::domain_error("Doob bound needs p > 1");
    const Grid& g = G.grid();
    std::vector<KernelTable> trunc;
    for (double e : eps_lattice) trunc.emplace_back(truncate_kernel(K, e), g);
    std::vector<KernelTable> parts;
    if (K.is_causal()) {
        parts.emplace_back(K, g);
    } else {
        Kernel Kp = K.with_fn(K.name() + "+", [K](double s, double t) { return s > t ? K(s, t) : K.zero(); });
        Kernel Km = K.with_fn(K.name() + "-", [K](double s, double t) { return s < t ? K(s, t) : K.zero(); });
        parts.emplace_back(Kp, g);
        parts.emplace_back(Km, g);
    }
    std::vector<double> L(cfg.paths);
    std::vector<std::vector<double>> R(parts.size(), std::vector<double>(cfg.paths));
    for (std::size_t r = 0; r < cfg.paths; ++r) {
        auto W = BrownianPath::sample(g, G.h_dim(), cfg.seed, r);
        std::vector<double> sup(g.size(), 0.0);
        for (const auto& T : trunc) {
            auto u = apply_SK(T, G, W);
            for (std::size_t i = 0; i < g.size(); ++i) sup[i] = std::max(sup[i], u.cell_norm(i));
        }
        double s = 0;
        for (double v : sup) s += std::pow(v, p);
        L[r] = s * g.width();
        for (std::size_t k = 0; k < parts.size(); ++k) {
            auto u = apply_SK(parts[k], G, W);
            double t = 0;
            for (std::size_t i = 0; i < g.size(); ++i) t += std::pow(u.cell_norm(i), p);
            R[k][r] = t * g.width();
        }
    }
    DoobResult d;
    d.constant = 4.0 * p / (p - 1.0);
    auto l = moment_to_norm({batch_stats(L).mean, batch_stats(L).stderr_, cfg.paths}, p, cfg.seed);
    d.lhs = l.value;
    d.lhs_stderr = l.stderr_;
    double se2 = 0;
    for (auto& Rk : R) {
        auto st = batch_stats(Rk);
        auto e = moment_to_norm({st.mean, st.stderr_, cfg.paths}, p, cfg.seed);
        d.rhs += d.constant * e.value;
        se2 += d.constant * d.constant * e.stderr_ * e.stderr_;
    }
    d.rhs_stderr = std::sqrt(se2);
    d.pass = d.lhs <= d.rhs + cfg.confidence * std::sqrt(d.lhs_stderr * d.lhs_stderr + se2);
    return d;
}

// ---- stochastic maximal regularity for diagonal generators ----

// int_0^T lambda e^{-2 lambda t} dt by 10-point Gauss-Legendre per cell, plus the
// analytic tail e^{-2 lambda T}/2.
inline double heat_mode_square_integral(double lambda, const Grid& g) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a = g.left(i), b = a + g.width();
        s += boost::math::quadrature::gauss<double, 10>::integrate(
            [lambda](double t) { return lambda * std::exp(-2.0 * lambda * t); }, a, b);
    }
    return s + 0.5 * std::exp(-2.0 * lambda * g.T());
}

struct SmrCheck {
    std::string name;
    double measured = 0, reference = 0, tolerance = 0;
    bool pass = true;
};

struct SmrReport {
    std::vector<double> mode_values;
    double max_identity_error = 0;
    std::vector<SmrCheck> checks;
    double weight_characteristic = 1;
    std::vector<double> empirical_constants;
};

// (a) per-mode identity, (b) Monte Carlo SMR ratios on constant and switched
// integrands, (c) the D_A(theta,2) weighted-mode variant.
inline SmrReport smr_heat_experiment(const std::vector<double>& eigenvalues, double p, const Weight* w,
                                     const McConfig& cfg, const Grid& g) {
    if (!(p >= 2.0)) throw std::domain_error("stochastic maximal regularity is studied for p >= 2");
    SmrReport rep;
    for (double l : eigenvalues) {
        double v = heat_mode_square_integral(l, g);
        rep.mode_values.push_back(v);
        rep.max_identity_error = std::max(rep.max_identity_error, std::abs(v - 0.5));
    }
    rep.checks.push_back({"mode_identity_max_error", rep.max_identity_error, 0.0, 1e-9,
                          rep.max_identity_error <= 1e-9});
    for (double theta : {0.25, 0.5, 0.75}) {
        double lhs = 0, rhs = 0;
        for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
            double xk = 1.0 / static_cast<double>(k + 1);
            double wt = std::pow(eigenvalues[k], 2 * theta) * xk * xk;
            lhs += wt * rep.mode_values[k];
            rhs += wt;
        }
        double r = lhs / rhs;
        rep.checks.push_back({"interpolation_scale_theta_" + std::to_string(theta).substr(0, 4), r, 0.5, 1e-9,
                              std::abs(r - 0.5) <= 1e-9});
    }
    Kernel K = make_semigroup_kernel(eigenvalues);
    KernelTable T(K, g);
    auto X = K.source();
    std::size_t n = eigenvalues.size();
    std::vector<AdaptedProcess> Gs;
    Gs.push_back(AdaptedProcess::deterministic(g, X, 1, [n](double) -> Mat { return Mat::Ones(n, 1); }));
    double half = g.T() / 2;
    Gs.push_back(AdaptedProcess::deterministic(g, X, 1, [n, half](double t) -> Mat {
        return t < half ? Mat(Mat::Ones(n, 1)) : Mat(Mat::Zero(n, 1));
    }));
    if (w) rep.weight_characteristic = ap_characteristic(*w, p / 2.0);
    for (std::size_t k = 0; k < Gs.size(); ++k) {
        auto m = mc_moment(T, Gs[k], p, w, cfg);
        auto e = moment_to_norm(m, p, cfg.seed);
        double gn = integrand_norm(Gs[k], p, w);
        double C = e.value / gn;
        rep.empirical_constants.push_back(C);
        if (p == 2.0) {
            double q = gamma_side_moment(T, Gs[k], p, w);
            bool ok = std::abs(m.mean - q) <= cfg.confidence * m.stderr_;
            rep.checks.push_back({"isometry_G" + std::to_string(k), m.mean, q, cfg.confidence * m.stderr_, ok});
            if (!w) {
                double bound = std::sqrt(0.5);
                rep.checks.push_back({"smr_bound_G" + std::to_string(k), C, bound,
                                      cfg.confidence * e.stderr_ / gn, C <= bound + cfg.confidence * e.stderr_ / gn});
            }
        } else {
            rep.checks.push_back({"smr_finite_G" + std::to_string(k), C, 0.0, 0.0, std::isfinite(C) && C > 0});
        }
    }
    return rep;
}

struct HIndependence {
    std::vector<std::size_t> m;
    std::vector<NormEstimate> estimates;
    bool pass = true;
};

// G_m = G_1 (x) (1,...,1)/sqrt(m) has the same Hilbert-Schmidt norm for every m.
inline HIndependence h_independence_check(const Kernel& K, const GridFunction& G1, double p,
                                          const std::vector<std::size_t>& m_list, const McConfig& cfg,
                                          double rho = 1.0) {
    HIndependence r;
    KernelTable T(K, G1.grid());
    std::size_t dx = G1.dim();
    for (std::size_t m : m_list) {
        auto G = AdaptedProcess::deterministic(G1.grid(), G1.space(), m, [&](double t) -> Mat {
            std::size_t i = G1.grid().locate(t);
            Mat v(dx, m);
            for (std::size_t c = 0; c < m; ++c)
                for (std::size_t k = 0; k < dx; ++k) v(k, c) = G1(i, k) / std::sqrt(static_cast<double>(m));
            return v;
        });
        r.m.push_back(m);
        r.estimates.push_back(moment_to_norm(mc_moment(T, G, p, nullptr, cfg), p, cfg.seed));
    }
    for (std::size_t a = 0; a < r.estimates.size(); ++a)
        for (std::size_t b = a + 1; b < r.estimates.size(); ++b) {
            const auto& x = r.estimates[a];
            const auto& y = r.estimates[b];
            double band = cfg.confidence * std::sqrt(x.stderr_ * x.stderr_ + y.stderr_ * y.stderr_);
            if (x.value == 0 && y.value == 0) continue;
            bool ok = (x.value <= rho * y.value + band) && (y.value <= rho * x.value + band);
            r.pass = r.pass && ok;
        }
    return r;
}

}  // namespace scz
