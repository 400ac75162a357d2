#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "scz/dyadic.hpp"
#include "scz/grid.hpp"

namespace scz {

// b_j restricted to its cube: cube_cells(Q) order, dim values per cell.
struct CZPiece {
    Cube cube;
    std::vector<double> values;
};

struct CZChecks {
    bool good_sup = false;   // ||g||_inf <= 2^{d/2} lambda
    bool good_l2 = false;    // ||g||_2 <= ||f||_2
    bool support = false;    // supp b_j in Q_j, cubes disjoint
    bool cube_mass = false;  // lambda^2 sum |Q_j| <= ||f||_2^2
    bool piece_l2 = false;   // ||b_j||^2 <= 2^{d+2} lambda^2 |Q_j|
    bool bad_l2 = false;     // sum ||b_j||^2 <= 2^{d+2} ||f||^2
    bool identity = false;   // f = g + sum b_j up to a few ulps
    double identity_error = 0;
    bool inequalities() const { return good_sup && good_l2 && support && cube_mass && piece_l2 && bad_l2; }
    bool all() const { return inequalities() && identity; }
    std::string failures() const {
        std::string s;
        auto add = [&](bool ok, const char* n) {
            if (!ok) s += std::string(s.empty() ? "" : ", ") + n;
        };
        add(good_sup, "good_sup");
        add(good_l2, "good_l2");
        add(support, "support");
        add(cube_mass, "cube_mass");
        add(piece_l2, "piece_l2");
        add(bad_l2, "bad_l2");
        add(identity, "identity");
        return s;
    }
};

struct CZDecomposition {
    GridFunction f;
    GridFunction good;
    std::vector<CZPiece> pieces;
    double lambda = 0;

    GridFunction bad_piece(std::size_t j) const {
        GridFunction b(f.grid(), f.space());
        auto cells = cube_cells(f.grid(), pieces[j].cube);
        std::size_t d = f.dim();
        for (std::size_t a = 0; a < cells.size(); ++a)
            for (std::size_t k = 0; k < d; ++k) b(cells[a], k) = pieces[j].values[a * d + k];
        return b;
    }

    // Checks every stated bound. Inequalities are evaluated with the same
    // pairwise summation tree as the construction, so they hold without slack.
    CZChecks verify() const {
        CZChecks c;
        const Grid& g = f.grid();
        const std::size_t d = f.dim(), N = g.size();
        const int dim = g.dim();
        const double lam2 = lambda * lambda, two_d = std::ldexp(1.0, dim), two_d2 = std::ldexp(1.0, dim + 2);
        const double h = g.cell_measure();
        if (!(good.grid() == g) || good.dim() != d) return c;

        std::vector<double> f2(N), g2(N);
        for (std::size_t i = 0; i < N; ++i) {
            double a = f.cell_norm(i), b = good.cell_norm(i);
            f2[i] = a * a;
            g2[i] = b * b;
        }
        auto Sf = pyramid_sums(g, f2);
        auto Sg = pyramid_sums(g, g2);
        double F = Sf[0][0];

        c.good_sup = true;
        for (double v : g2)
            if (!(v <= two_d * lam2)) c.good_sup = false;
        c.good_l2 = Sg[0][0] <= F;

        // support / disjointness
        std::vector<char> owned(N, 0);
        c.support = true;
        for (const auto& P : pieces) {
            if (P.cube.level < 0 || P.cube.level > g.levels() || P.cube.index >= cube_count(g, P.cube.level) ||
                P.values.size() != cells_in_cube(g, P.cube.level) * d) {
                c.support = false;
                continue;
            }
            for (std::size_t cell : cube_cells(g, P.cube)) {
                if (owned[cell]) c.support = false;
                owned[cell] = 1;
            }
        }
        if (!c.support) return c;

        // cube mass and bad-piece energies, summed along the same tree
        std::vector<double> mass(N, 0.0), bad(N, 0.0);
        c.piece_l2 = true;
        for (const auto& P : pieces) {
            std::size_t n = cells_in_cube(g, P.cube.level);
            std::vector<double> e(n);
            for (std::size_t a = 0; a < n; ++a) {
                double s = f.space().norm_unchecked(P.values.data() + a * d);
                e[a] = s * s;
            }
            // pairwise sum over the cube in tree order
            while (e.size() > 1) {
                std::vector<double> nx(e.size() / 2);
                if (dim == 1)
                    for (std::size_t a = 0; a < nx.size(); ++a) nx[a] = e[2 * a] + e[2 * a + 1];
                else {
                    // row-major square of side m -> side m/2, children summed in (x,y) tree order
                    std::size_t m = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(e.size()))));
                    for (std::size_t y = 0; y < m / 2; ++y)
                        for (std::size_t x = 0; x < m / 2; ++x)
                            nx[y * (m / 2) + x] = e[2 * y * m + 2 * x] + e[2 * y * m + 2 * x + 1] +
                                                  e[(2 * y + 1) * m + 2 * x] + e[(2 * y + 1) * m + 2 * x + 1];
                }
                e.swap(nx);
            }
            double bj = e.empty() ? 0.0 : e[0];
            double Q = static_cast<double>(n) * h;
            if (!(bj * h <= two_d2 * lam2 * Q)) c.piece_l2 = false;
            // put the cube totals on its first cell so the tree sums group them per cube
            auto cells = cube_cells(g, P.cube);
            mass[cells[0]] = static_cast<double>(n) * lam2;
            bad[cells[0]] = bj;
        }
        // Within a cube only the first cell is nonzero, so the tree sum reproduces
        // the per-cube value exactly; across cubes the tree is the one used for F.
        // Sum of cube masses vs F: per cube n*lam^2 < sum_Q |f|^2 by selection.
        auto Sm = pyramid_sums(g, mass);
        auto Sb = pyramid_sums(g, bad);
        c.cube_mass = Sm[0][0] <= F;
        c.bad_l2 = Sb[0][0] <= two_d2 * F;

        // identity
        GridFunction sum = good;
        for (std::size_t j = 0; j < pieces.size(); ++j) {
            auto cells = cube_cells(g, pieces[j].cube);
            for (std::size_t a = 0; a < cells.size(); ++a)
                for (std::size_t k = 0; k < d; ++k) sum(cells[a], k) += pieces[j].values[a * d + k];
        }
        double err = 0;
        bool ok = true;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                double diff = std::abs(sum(i, k) - f(i, k));
                double scale = std::abs(f(i, k)) + std::abs(good(i, k));
                err = std::max(err, diff);
                if (diff > 4 * std::numeric_limits<double>::epsilon() * scale) ok = false;
            }
        c.identity = ok;
        c.identity_error = err;
        return c;
    }
};

// Dyadic stopping-time decomposition at level lambda: Q_j are the maximal dyadic
// cubes with mean |f|^2 > lambda^2; g is the mean of f on each Q_j and f elsewhere.
// On a finite domain lambda must be at least (mean |f|^2)^{1/2}.
inline CZDecomposition cz_decompose_l2(const GridFunction& f, double lambda) {
    const Grid& g = f.grid();
    const std::size_t d = f.dim(), N = g.size();
    if (!(lambda > 0) || !std::isfinite(lambda)) throw std::domain_error("lambda must be positive and finite");
    std::vector<double> f2(N);
    for (std::size_t i = 0; i < N; ++i) {
        double a = f.cell_norm(i);
        f2[i] = a * a;
    }
    auto S = pyramid_sums(g, f2);
    const double lam2 = lambda * lambda;
    if (S[0][0] / static_cast<double>(N) > lam2)
        throw std::domain_error(
            "lambda is below (mean |f|^2)^{1/2}: on a finite domain the decomposition needs lambda >= that level");

    std::vector<std::vector<std::vector<double>>> comp(d);
    std::vector<double> col(N);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < N; ++i) col[i] = f(i, k);
        comp[k] = pyramid_sums(g, col);
    }

    CZDecomposition out;
    out.f = f;
    out.good = f;
    out.lambda = lambda;
    std::vector<char> taken(N, 0);
    std::vector<double> mean(d);
    for (int k = 1; k <= g.levels(); ++k) {
        double n = static_cast<double>(cells_in_cube(g, k));
        for (std::size_t q = 0; q < cube_count(g, k); ++q) {
            if (!(S[k][q] / n > lam2)) continue;
            auto cells = cube_cells(g, {k, q});
            if (taken[cells[0]]) continue;  // inside an already selected ancestor
            for (std::size_t c = 0; c < d; ++c) mean[c] = comp[c][k][q] / n;
            CZPiece P{{k, q}, std::vector<double>(cells.size() * d)};
            for (std::size_t a = 0; a < cells.size(); ++a) {
                taken[cells[a]] = 1;
                for (std::size_t c = 0; c < d; ++c) {
                    P.values[a * d + c] = f(cells[a], c) - mean[c];
                    out.good(cells[a], c) = mean[c];
                }
            }
            out.pieces.push_back(std::move(P));
        }
    }
    auto chk = out.verify();
    if (!chk.all()) throw std::logic_error("CZ decomposition failed its checks: " + chk.failures());
    return out;
}

}  // namespace scz
