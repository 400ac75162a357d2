#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scz/dyadic.hpp"
#include "scz/gamma.hpp"
#include "scz/grid.hpp"
#include "scz/maximal.hpp"

namespace scz {

// ---- grand maximal truncation ----

struct TruncationOptions {
    double alpha = 6;
    std::size_t points_per_ball = 5;  // s', s'' range over this many cell centers of B
    std::size_t mc_samples = 256;     // only for non-euclidean targets
    std::uint64_t seed = 1;
};

// sup over balls B containing s of max_{s',s'' in B} ||T(1_{outside alpha B} f)(s') - T(...)(s'')||_gamma.
// Balls: centers at cell centers, radii 2^k h, k = 0..levels.
inline GridFunction grand_maximal_truncation(const KernelTable& T, const GridFunction& f, TruncationOptions opt = {}) {
    if (!(opt.alpha >= 6)) throw std::domain_error("grand maximal truncation needs alpha >= 6");
    const Grid& g = f.grid();
    require_same(g, T.grid());
    if (g.dim() != 1) throw structural_error("kernel operators act on 1-D grids");
    const std::size_t N = g.size(), dy = T.ydim();
    const double h = g.width();
    std::vector<double> out(N, 0.0), diff(dy);
    GammaElement ge(g, T.target());
    for (int k = 0; (std::size_t{1} << k) <= N; ++k) {
        double r = std::ldexp(h, k);
        for (std::size_t c = 0; c < N; ++c) {
            double cen = g.center(c);
            // cells with centers in B, and the ball's far field
            auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil((cen - r) / h - 0.5 - 1e-9)));
            auto hi = static_cast<std::size_t>(std::min(double(N - 1), std::floor((cen + r) / h - 0.5 + 1e-9)));
            std::vector<std::size_t> pts;
            std::size_t m = std::min(opt.points_per_ball, hi - lo + 1);
            for (std::size_t a = 0; a < m; ++a)
                pts.push_back(m == 1 ? lo : lo + (a * (hi - lo) + (m - 1) / 2) / (m - 1));
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            double best = 0;
            for (std::size_t a = 0; a < pts.size(); ++a)
                for (std::size_t b = a + 1; b < pts.size(); ++b) {
                    double s2 = 0;
                    if (T.target().is_euclidean()) {
                        for (std::size_t j = 0; j < N; ++j) {
                            if (std::abs(g.center(j) - cen) < opt.alpha * r) continue;
                            std::fill(diff.begin(), diff.end(), 0.0);
                            T.apply_add(pts[a], j, f.at(j).data(), diff.data());
                            T.apply_add(pts[b], j, f.at(j).data(), diff.data(), -1.0);
                            for (double v : diff) s2 += v * v;
                        }
                        best = std::max(best, std::sqrt(s2 * h));
                    } else {
                        std::fill(ge.values.begin(), ge.values.end(), 0.0);
                        for (std::size_t j = 0; j < N; ++j) {
                            if (std::abs(g.center(j) - cen) < opt.alpha * r) continue;
                            T.apply_add(pts[a], j, f.at(j).data(), ge.col(j));
                            T.apply_add(pts[b], j, f.at(j).data(), ge.col(j), -1.0);
                        }
                        best = std::max(best, gamma_norm_mc(ge, opt.mc_samples, opt.seed).value);
                    }
                }
            if (best == 0) continue;
            for (std::size_t i = lo; i <= hi; ++i) out[i] = std::max(out[i], best);
        }
    }
    return GridFunction::scalar(g, std::move(out));
}

inline GridFunction grand_maximal_truncation(const Kernel& K, const GridFunction& f, TruncationOptions opt = {}) {
    return grand_maximal_truncation(KernelTable(K, f.grid()), f, opt);
}

// Best C with M#_{T,alpha} f <= C tau ||K||_Dini M_2(|f|) at every cell.
struct TruncationDomination {
    double constant = 0;
    std::vector<double> lhs, rhs;  // M#(s) and tau ||K||_Dini M_2 f(s)
    bool holds = true;             // lhs <= constant * rhs everywhere (false only if rhs = 0 < lhs)
};

inline TruncationDomination truncation_domination(const KernelTable& T, const GridFunction& f, double dini,
                                                  double tau = 1.0, TruncationOptions opt = {}) {
    TruncationDomination r;
    r.lhs = grand_maximal_truncation(T, f, opt).values();
    auto m2 = hl_maximal(f, 2.0, CubeFamily::shifted).values();
    r.rhs.resize(m2.size());
    for (std::size_t i = 0; i < m2.size(); ++i) {
        r.rhs[i] = tau * dini * m2[i];
        if (r.lhs[i] == 0) continue;
        if (r.rhs[i] == 0) {
            r.holds = false;
            r.constant = std::numeric_limits<double>::infinity();
            continue;
        }
        r.constant = std::max(r.constant, r.lhs[i] / r.rhs[i]);
    }
    return r;
}

// ---- sparse collections ----

struct SparseCollection {
    Grid grid;
    std::vector<Cube> cubes;
    std::vector<std::vector<std::size_t>> exceptional;  // E_Q as sorted cell lists
    double eta = 0.5;

    // E_Q inside Q, |E_Q| >= eta |Q|, E_Q pairwise disjoint. Exact (cell counts).
    bool verify(std::string* why = nullptr) const {
        auto fail = [&](std::string m) {
            if (why) *why = std::move(m);
            return false;
        };
        if (cubes.size() != exceptional.size()) return fail("cube and exceptional-set counts differ");
        std::vector<char> used(grid.size(), 0);
        for (std::size_t k = 0; k < cubes.size(); ++k) {
            const Cube& Q = cubes[k];
            if (Q.level < 0 || Q.level > grid.levels() || Q.index >= cube_count(grid, Q.level))
                return fail("cube outside the grid");
            std::size_t n = cells_in_cube(grid, Q.level);
            for (std::size_t c : exceptional[k]) {
                if (c >= grid.size() || !cube_contains(grid, Q, c)) return fail("E_Q not contained in Q");
                if (used[c]) return fail("exceptional sets overlap");
                used[c] = 1;
            }
            if (static_cast<double>(exceptional[k].size()) < eta * static_cast<double>(n))
                return fail("|E_Q| < eta |Q| for cube (" + std::to_string(Q.level) + "," + std::to_string(Q.index) +
                            ")");
        }
        return true;
    }
};

inline double default_sparse_eta(int dim) { return dim == 1 ? 0.5 : 0.25; }

// (sum_{Q in S} <|f|^2>_Q 1_Q)^{1/2}
inline GridFunction sparse_operator_apply(const SparseCollection& S, const GridFunction& f) {
    const Grid& g = f.grid();
    require_same(g, S.grid);
    std::vector<double> f2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a = f.cell_norm(i);
        f2[i] = a * a;
    }
    auto P = pyramid_sums(g, f2);
    std::vector<double> acc(g.size(), 0.0);
    for (const Cube& Q : S.cubes) {
        double avg = P[Q.level][Q.index] / static_cast<double>(cells_in_cube(g, Q.level));
        for (std::size_t c : cube_cells(g, Q)) acc[c] += avg;
    }
    for (double& v : acc) v = std::sqrt(v);
    return GridFunction::scalar(g, std::move(acc));
}

// Norm of the sparse square operator on L^q(w), q > 2. Its square is the norm
// of the positive averaging operator g -> sum_Q <g>_Q 1_Q on L^{q/2}(w), found by
// nonnegative power iteration.
inline NormEstimate sparse_weighted_norm(const SparseCollection& S, double q, const Weight* w = nullptr) {
    if (!(q > 2)) throw std::domain_error("sparse weighted norm needs q > 2");
    const Grid& g = S.grid;
    if (w) require_same(g, w->grid());
    const std::size_t N = g.size();
    const double r = q / 2;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (const Cube& Q : S.cubes) {
        auto cells = cube_cells(g, Q);
        double v = 1.0 / static_cast<double>(cells.size());
        for (std::size_t j : cells)
            for (std::size_t i : cells) A(i, j) += v;
    }
    if (w)
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t i = 0; i < N; ++i) A(i, j) *= std::pow((*w)[i] / (*w)[j], 1.0 / r);
    auto res = nonnegative_lq_norm(A, r);
    NormEstimate e;
    e.value = std::sqrt(res.value);
    e.method = Method::power_iteration;
    e.samples = res.iterations;
    e.probe = "positive-operator";
    return e;
}

// Chain of anchored dyadic intervals (0, 2^{-j} T], j = 0..depth, with E_Q the
// right half of each one.
inline SparseCollection anchored_chain(const Grid& g, int depth = -1) {
    if (g.dim() != 1) throw structural_error("anchored chain is 1-D");
    if (depth < 0 || depth > g.levels()) depth = g.levels();
    SparseCollection S{g, {}, {}, 0.5};
    for (int j = 0; j <= depth; ++j) {
        S.cubes.push_back({j, 0});
        auto cells = cube_cells(g, {j, 0});
        std::vector<std::size_t> E;
        if (j == depth) E = cells;
        else E.assign(cells.begin() + static_cast<std::ptrdiff_t>(cells.size() / 2), cells.end());
        S.exceptional.push_back(std::move(E));
    }
    return S;
}

// ---- sparse domination by stopping times ----

struct SparseOptions {
    double eta = 0.5;
    double C1 = 2, C2 = 2;  // maximal-function and truncation thresholds
    TruncationOptions truncation;
    int max_doublings = 200;
};

struct SparseResult {
    SparseCollection collection;
    double constant = 0;           // max_s ||T_K f(s)|| / A_S f(s)
    std::vector<double> lhs, rhs;  // ||T_K f(s)||_gamma and A_S f(s)
    std::size_t doublings = 0;     // threshold doublings needed to meet the sparsity budget
    bool holds = true;             // false only if A_S f(s) = 0 < ||T_K f(s)||
};

inline SparseResult sparse_dominate(const KernelTable& T, const GridFunction& f, SparseOptions opt = {}) {
    const Grid& g = f.grid();
    require_same(g, T.grid());
    if (!(opt.eta > 0 && opt.eta < 1)) throw std::domain_error("eta must lie in (0,1)");
    const std::size_t N = g.size();
    const int L = g.levels();

    SparseResult res;
    res.collection = SparseCollection{g, {}, {}, opt.eta};

    std::vector<double> f2(N);
    for (std::size_t i = 0; i < N; ++i) {
        double a = f.cell_norm(i);
        f2[i] = a * a;
    }
    auto P = pyramid_sums(g, f2);
    // best[c][k] = max over dyadic cubes of level >= k containing c of <|f|^2>
    std::vector<std::vector<double>> best(N, std::vector<double>(L + 1, 0.0));
    for (std::size_t c = 0; c < N; ++c) {
        double m = 0;
        for (int k = L; k >= 0; --k) {
            m = std::max(m, P[k][cube_of_cell(g, k, c).index] / static_cast<double>(cells_in_cube(g, k)));
            best[c][k] = m;
        }
    }
    auto G = grand_maximal_truncation(T, f, opt.truncation).values();

    std::deque<Cube> work{Cube{0, 0}};
    std::vector<double> omega(N, 0.0);
    while (!work.empty()) {
        Cube Q = work.front();
        work.pop_front();
        auto cells = cube_cells(g, Q);
        const std::size_t n = cells.size();
        std::vector<Cube> kids;
        if (Q.level < L) {
            double avg = P[Q.level][Q.index] / static_cast<double>(n);
            std::vector<double> gq;
            for (std::size_t c : cells) gq.push_back(G[c]);
            std::nth_element(gq.begin(), gq.begin() + static_cast<std::ptrdiff_t>(n / 2), gq.end());
            double med = gq[n / 2];
            if (med == 0) {
                for (std::size_t c : cells) med += G[c];
                med /= static_cast<double>(n);
            }
            double C1 = opt.C1, C2 = opt.C2;
            for (int attempt = 0;; ++attempt) {
                std::fill(omega.begin(), omega.end(), 0.0);
                for (std::size_t c : cells) {
                    bool a = best[c][Q.level] > C1 * C1 * avg;
                    bool b = med > 0 && G[c] > C2 * med;
                    omega[c] = (a || b) ? 1.0 : 0.0;
                }
                auto cnt = pyramid_sums(g, omega);
                kids.clear();
                std::size_t covered = 0;
                std::vector<Cube> stack = children(Q, g.dim());
                while (!stack.empty()) {
                    Cube R = stack.back();
                    stack.pop_back();
                    std::size_t nr = cells_in_cube(g, R.level);
                    if (2 * cnt[R.level][R.index] >= static_cast<double>(nr) && cnt[R.level][R.index] > 0) {
                        kids.push_back(R);
                        covered += nr;
                    } else if (R.level < L && cnt[R.level][R.index] > 0) {
                        for (const Cube& ch : children(R, g.dim())) stack.push_back(ch);
                    }
                }
                if (static_cast<double>(n - covered) >= opt.eta * static_cast<double>(n)) break;
                if (attempt >= opt.max_doublings)
                    throw std::runtime_error("sparse construction could not meet eta on cube (" +
                                             std::to_string(Q.level) + "," + std::to_string(Q.index) + ")");
                C1 *= 2;
                C2 *= 2;
                ++res.doublings;
            }
        }
        std::vector<char> in_kid(n, 0);
        std::vector<std::size_t> E;
        {
            std::vector<char> mark(N, 0);
            for (const Cube& R : kids)
                for (std::size_t c : cube_cells(g, R)) mark[c] = 1;
            for (std::size_t c : cells)
                if (!mark[c]) E.push_back(c);
        }
        res.collection.cubes.push_back(Q);
        res.collection.exceptional.push_back(std::move(E));
        std::sort(kids.begin(), kids.end());
        for (const Cube& R : kids) work.push_back(R);
    }
    std::string why;
    if (!res.collection.verify(&why)) throw std::logic_error("sparse collection invalid: " + why);

    res.lhs = square_function(T, f);
    res.rhs = sparse_operator_apply(res.collection, f).values();
    for (std::size_t i = 0; i < N; ++i) {
        if (res.lhs[i] == 0) continue;
        if (res.rhs[i] == 0) {
            res.holds = false;
            res.constant = std::numeric_limits<double>::infinity();
            continue;
        }
        res.constant = std::max(res.constant, res.lhs[i] / res.rhs[i]);
    }
    return res;
}

inline SparseResult sparse_dominate(const Kernel& K, const GridFunction& f, SparseOptions opt = {}) {
    return sparse_dominate(KernelTable(K, f.grid()), f, opt);
}

// ---- weighted bound for the anchored chain, summed shell by shell ----
//
// Weight t^alpha on (0,1), probe |f|^2 = t^{-gamma}. On the shell (2^{-j-1}, 2^{-j}]
// the squared sparse operator equals A_j = sum_{i<=j} 2^{i gamma}/(1-gamma).

struct ChainWeightPoint {
    double alpha = 0;
    double characteristic = 0;  // anchored A_r characteristic of t^alpha, r = q/2
    double norm = 0;            // best probe ratio for the sparse square operator
    double best_gap = 0;        // relative gap of the best probe exponent below its limit
};

inline double anchored_power_characteristic(double alpha, double r) {
    if (!(r > 1) || !(alpha > -1) || !(alpha < r - 1)) throw std::domain_error("t^alpha must lie in A_r");
    return (1 / (1 + alpha)) * std::pow(1 / (1 - alpha / (r - 1)), r - 1);
}

// Probe ratio for one exponent gamma < (1+alpha)/r, with `depth` shells.
inline double anchored_chain_ratio(double alpha, double r, double gamma, std::size_t depth) {
    const double c = std::exp2(-gamma);
    const double decay = gamma * r - 1 - alpha;  // log2 of the shell-to-shell factor, negative
    if (!(decay < 0)) return std::numeric_limits<double>::infinity();
    // A_j = 2^{j gamma} B_j / (1-gamma) with B_j = (1 - c^{j+1})/(1-c); W_j 2^{j(...)} normalised
    const double wj = (1 - std::exp2(-(1 + alpha))) / (1 + alpha);
    double sum = 0, cpow = c;
    for (std::size_t j = 0; j < depth; ++j) {
        double B = (1 - cpow) / ((1 - c) * (1 - gamma));
        sum += std::pow(B, r) * wj * std::exp2(static_cast<double>(j) * decay);
        cpow *= c;
    }
    double gnorm = 1 / (1 + alpha - gamma * r);
    return std::pow(sum / gnorm, 1 / (2 * r));
}

inline ChainWeightPoint anchored_chain_point(double q, double delta, std::size_t depth = 400000,
                                             std::vector<double> gaps = {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double r = q / 2, alpha = (r - 1) * (1 - delta), gstar = (1 + alpha) / r;
    ChainWeightPoint p;
    p.alpha = alpha;
    p.characteristic = anchored_power_characteristic(alpha, r);
    for (double e : gaps) {
        double gamma = gstar * (1 - e);
        if (!(gamma < 1)) continue;  // the probe must be locally integrable
        double v = anchored_chain_ratio(alpha, r, gamma, depth);
        if (v > p.norm) p.norm = v, p.best_gap = e;
    }
    return p;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += std::log(x[i]), my += std::log(y[i]);
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace scz
