#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "scz/cz.hpp"
#include "scz/io.hpp"
#include "scz/kernel.hpp"
#include "scz/kernel_checks.hpp"
#include "scz/maximal.hpp"
#include "scz/rng.hpp"
#include "scz/sparse.hpp"

using namespace scz;

namespace {

GridFunction random_field(const Grid& g, std::size_t d, std::uint64_t seed) {
    RngStream rng(seed, 0);
    GridFunction f(g, FiniteDimSpace::euclidean(d));
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k = 0; k < d; ++k) {
            double v = rng.normal();
            // heavy tails so that several levels get selected
            f(i, k) = v * std::exp(1.5 * rng.normal());
        }
    return f;
}

double rms(const GridFunction& f) {
    double s = 0;
    for (std::size_t i = 0; i < f.grid().size(); ++i) s += f.cell_norm(i) * f.cell_norm(i);
    return std::sqrt(s / double(f.grid().size()));
}

double sup_norm(const GridFunction& f) {
    double m = 0;
    for (std::size_t i = 0; i < f.grid().size(); ++i) m = std::max(m, f.cell_norm(i));
    return m;
}

}  // namespace

TEST(Maximal, ConstantFunction) {
    for (int dim : {1, 2}) {
        Grid g(dim, 1.0, dim == 1 ? 64 : 16);
        auto f = GridFunction::scalar(g, std::vector<double>(g.size(), -2.5));
        for (auto fam : {CubeFamily::dyadic, CubeFamily::shifted}) {
            auto M = hl_maximal(f, 1.0, fam);
            for (double v : M.values()) EXPECT_NEAR(v, 2.5, 1e-12);
        }
        auto S = sharp_maximal(f);
        for (double v : S.values()) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(Maximal, IndicatorAtTwo) {
    // 1_(0,1) on (0,4): the best interval containing s = 2 is (0,2], average 1/2
    Grid g(1, 4.0, 64);
    auto f = GridFunction::sample_scalar(g, [](double t) { return t < 1 ? 1.0 : 0.0; });
    std::size_t i = g.locate(2.0);
    EXPECT_NEAR(brute_force_maximal_1d(f, i), 0.5, 1e-12);
    EXPECT_NEAR(hl_maximal(f, 1.0, CubeFamily::dyadic)(i), 0.5, 1e-12);
    EXPECT_LE(hl_maximal(f, 1.0, CubeFamily::shifted)(i), 0.5 + 1e-12);
}

TEST(Maximal, FamiliesAndExponentsOrdered) {
    Grid g(1, 1.0, 128);
    auto f = random_field(g, 1, 3);
    auto dy = hl_maximal(f, 1.0, CubeFamily::dyadic), sh = hl_maximal(f, 1.0, CubeFamily::shifted);
    auto m2 = hl_maximal(f, 2.0), m3 = hl_maximal(f, 3.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double bf = brute_force_maximal_1d(f, i);
        EXPECT_LE(dy(i), sh(i) * (1 + 1e-12));
        EXPECT_LE(sh(i), bf * (1 + 1e-12));
        EXPECT_GE(dy(i), f.cell_norm(i) * (1 - 1e-12));
        EXPECT_LE(sh(i), m2(i) * (1 + 1e-12));
        EXPECT_LE(m2(i), m3(i) * (1 + 1e-12));
    }
    EXPECT_THROW(hl_maximal(f, 0.0), std::domain_error);
}

TEST(Maximal, DyadicWeakType) {
    // |{M_r f > lambda}| <= ||f||_r^r / lambda^r, constant 1 for the dyadic family, every seed
    for (int dim : {1, 2})
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            Grid g(dim, 1.0, dim == 1 ? 256 : 16);
            auto f = random_field(g, 2, seed);
            for (double r : {1.0, 2.0}) {
                double lr = 0;
                for (std::size_t i = 0; i < g.size(); ++i) lr += std::pow(f.cell_norm(i), r) * g.cell_measure();
                auto M = hl_maximal(f, r, CubeFamily::dyadic);
                for (double lam : {0.5, 1.0, 2.0, 8.0}) {
                    double meas = 0;
                    for (double v : M.values())
                        if (v > lam) meas += g.cell_measure();
                    EXPECT_LE(std::pow(lam, r) * meas, lr * (1 + 1e-12)) << dim << " " << seed << " " << r;
                }
            }
        }
}

TEST(Maximal, SharpBelowTwiceMaximal) {
    for (int dim : {1, 2}) {
        Grid g(dim, 1.0, dim == 1 ? 128 : 16);
        auto f = random_field(g, 2, 11);
        auto S = sharp_maximal(f), M = hl_maximal(f, 1.0, CubeFamily::dyadic);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(S(i), 2 * M(i) * (1 + 1e-12));
        auto Ss = sharp_maximal(f, CubeFamily::shifted);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(Ss(i), S(i) * (1 - 1e-12));
    }
}

TEST(CZ, AboveSupNoCubes) {
    Grid g(1, 1.0, 64);
    auto f = random_field(g, 1, 2);
    auto d = cz_decompose_l2(f, sup_norm(f));
    EXPECT_TRUE(d.pieces.empty());
    EXPECT_EQ(d.good.values(), f.values());
}

TEST(CZ, BelowMeanLevelThrows) {
    Grid g(1, 1.0, 64);
    auto f = random_field(g, 1, 2);
    EXPECT_THROW(cz_decompose_l2(f, 0.9 * rms(f)), std::domain_error);
    EXPECT_THROW(cz_decompose_l2(f, 0.0), std::domain_error);
    EXPECT_NO_THROW(cz_decompose_l2(f, rms(f) * 1.0000001));
}

TEST(CZ, SpikeSaturatesSmallestCube) {
    // one tall cell: the selected cube is the smallest dyadic one with average above lambda^2
    Grid g(1, 1.0, 64);
    std::vector<double> v(64, 0.0);
    v[21] = 8.0;
    auto f = GridFunction::scalar(g, v);
    double lambda = 2.0;  // 64/n > 4 holds for n <= 8, the selected cube has 8 cells
    auto d = cz_decompose_l2(f, lambda);
    ASSERT_EQ(d.pieces.size(), 1u);
    EXPECT_EQ(cells_in_cube(g, d.pieces[0].cube.level), 8u);
    EXPECT_TRUE(cube_contains(g, d.pieces[0].cube, 21));
    EXPECT_NEAR(d.good(21), 1.0, 1e-15);
    auto b = d.bad_piece(0);
    double mean = 0;
    for (double x : b.values()) mean += x;
    EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(CZ, IndicatorOnFourAgainstEnumeration) {
    // f = 1_(0,1) on (0,4). Mean |f|^2 is 1/4, so levels below 1/2 are rejected on this finite domain.
    Grid g(1, 4.0, 64);
    auto f = GridFunction::sample_scalar(g, [](double t) { return t < 1 ? 1.0 : 0.0; });
    EXPECT_THROW(cz_decompose_l2(f, 0.25), std::domain_error);
    for (double lambda : {0.5 + 1e-9, 0.6, 0.9, 1.0}) {
        auto d = cz_decompose_l2(f, lambda);
        // enumerate all dyadic cubes below the root, keep maximal ones with average |f|^2 > lambda^2
        std::vector<Cube> expect;
        std::vector<char> covered(g.size(), 0);
        for (int k = 1; k <= g.levels(); ++k)
            for (std::size_t q = 0; q < cube_count(g, k); ++q) {
                auto cells = cube_cells(g, {k, q});
                double s = 0;
                for (auto c : cells) s += f(c) * f(c);
                if (s / double(cells.size()) > lambda * lambda && !covered[cells[0]]) {
                    expect.push_back({k, q});
                    for (auto c : cells) covered[c] = 1;
                }
            }
        ASSERT_EQ(d.pieces.size(), expect.size()) << lambda;
        for (std::size_t j = 0; j < expect.size(); ++j) {
            EXPECT_EQ(d.pieces[j].cube.level, expect[j].level);
            EXPECT_EQ(d.pieces[j].cube.index, expect[j].index);
        }
        EXPECT_TRUE(d.verify().all());
    }
    // at lambda = 0.6 the selected cube is (0,2] and g = 1/2 there
    auto d = cz_decompose_l2(f, 0.6);
    ASSERT_EQ(d.pieces.size(), 1u);
    EXPECT_EQ(cells_in_cube(g, d.pieces[0].cube.level), 32u);
    EXPECT_DOUBLE_EQ(d.good(0), 0.5);
    EXPECT_DOUBLE_EQ(d.good(40), 0.0);
}

TEST(CZ, RandomFieldsAllChecks) {
    for (int dim : {1, 2})
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            Grid g(dim, 1.0, dim == 1 ? 512 : 32);
            auto f = random_field(g, dim == 1 ? 1 : 3, seed);
            double lo = rms(f);
            for (double factor : {1.5, 3.0, 10.0}) {
                auto d = cz_decompose_l2(f, factor * lo);
                auto c = d.verify();
                EXPECT_TRUE(c.all()) << c.failures() << " dim " << dim << " seed " << seed;
                if (factor == 1.5) EXPECT_FALSE(d.pieces.empty());
                // pieces have mean zero componentwise
                for (std::size_t j = 0; j < d.pieces.size(); ++j) {
                    auto b = d.bad_piece(j);
                    for (std::size_t k = 0; k < b.dim(); ++k) {
                        double s = 0, a = 0;
                        for (std::size_t i = 0; i < g.size(); ++i) s += b(i, k), a += std::abs(b(i, k));
                        EXPECT_LE(std::abs(s), 1e-12 * std::max(1.0, a));
                    }
                }
            }
        }
}

TEST(CZ, VerifyCatchesCorruption) {
    Grid g(1, 1.0, 128);
    auto f = random_field(g, 1, 4);
    auto d = cz_decompose_l2(f, 1.5 * rms(f));
    ASSERT_FALSE(d.pieces.empty());
    auto bad = d;
    bad.good(bad.pieces[0].values.size() > 0 ? cube_cells(g, bad.pieces[0].cube)[0] : 0) += 1e-3;
    EXPECT_FALSE(bad.verify().identity);
    auto overlap = d;
    overlap.pieces.push_back(overlap.pieces[0]);
    EXPECT_FALSE(overlap.verify().support);
}

TEST(CZ, JsonRoundTrip) {
    Grid g(2, 1.0, 16);
    auto f = random_field(g, 2, 6);
    auto d = cz_decompose_l2(f, 2 * rms(f));
    auto e = cz_from_json(json::parse(to_json(d).dump()));
    EXPECT_EQ(e.lambda, d.lambda);
    EXPECT_EQ(e.good.values(), d.good.values());
    ASSERT_EQ(e.pieces.size(), d.pieces.size());
    for (std::size_t j = 0; j < d.pieces.size(); ++j) {
        EXPECT_EQ(e.pieces[j].cube.level, d.pieces[j].cube.level);
        EXPECT_EQ(e.pieces[j].cube.index, d.pieces[j].cube.index);
        EXPECT_EQ(e.pieces[j].values, d.pieces[j].values);
    }
    EXPECT_TRUE(e.verify().all());
}

TEST(Truncation, DominationStableUnderRefinement) {
    auto K = exponential_kernel(1.0);
    double dini = dini_norm(DiniModulus::power(1.0, 1.0));
    std::vector<double> C;
    for (std::size_t n : {64, 128}) {
        Grid g(1, 4.0, n);
        auto f = GridFunction::sample_scalar(g, [](double t) { return std::sin(3 * t) + (t > 1 && t < 2 ? 1.0 : 0.0); });
        auto r = truncation_domination(KernelTable(K, g), f, dini);
        EXPECT_TRUE(r.holds);
        EXPECT_TRUE(std::isfinite(r.constant));
        EXPECT_GT(r.constant, 0);
        C.push_back(r.constant);
    }
    EXPECT_NEAR(C[1] / C[0], 1.0, 0.2);
}

TEST(Truncation, ZeroKernelAndAlpha) {
    Grid g(1, 1.0, 32);
    auto f = GridFunction::sample_scalar(g, [](double t) { return t; });
    auto Z = grand_maximal_truncation(zero_kernel(), f);
    for (double v : Z.values()) EXPECT_EQ(v, 0.0);
    TruncationOptions o;
    o.alpha = 3;
    EXPECT_THROW(grand_maximal_truncation(exponential_kernel(1), f, o), std::domain_error);
}

TEST(Sparse, VerifyInvariants) {
    Grid g(1, 1.0, 64);
    auto S = anchored_chain(g, 4);
    std::string why;
    EXPECT_TRUE(S.verify(&why)) << why;
    auto small = S;
    small.exceptional[0].resize(3);
    EXPECT_FALSE(small.verify(&why));
    EXPECT_NE(why.find("eta"), std::string::npos);
    auto overlap = S;
    overlap.exceptional[1].push_back(overlap.exceptional[0][0]);
    EXPECT_FALSE(overlap.verify());
    auto outside = S;
    outside.exceptional[2][0] = 63;
    EXPECT_FALSE(outside.verify());
    EXPECT_EQ(default_sparse_eta(1), 0.5);
    EXPECT_EQ(default_sparse_eta(2), 0.25);
}

TEST(Sparse, SingleCubeOperator) {
    Grid g(1, 1.0, 32);
    std::vector<std::size_t> all(32);
    for (std::size_t i = 0; i < 32; ++i) all[i] = i;
    SparseCollection S{g, {Cube{0, 0}}, {all}, 0.5};
    ASSERT_TRUE(S.verify());
    auto one = GridFunction::scalar(g, std::vector<double>(32, 1.0));
    auto A = sparse_operator_apply(S, one);
    for (double v : A.values()) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Sparse, WeightedNorm) {
    Grid g(1, 1.0, 64);
    auto S = anchored_chain(g);
    auto w = Weight::power(g, 0.3);
    for (double q : {3.0, 4.0, 6.0}) {
        auto e = sparse_weighted_norm(S, q);
        EXPECT_TRUE(std::isfinite(e.value));
        EXPECT_GE(e.value, 1.0 - 1e-9);  // the top cube alone gives 1 on constants
        EXPECT_TRUE(std::isfinite(sparse_weighted_norm(S, q, &w).value));
    }
    EXPECT_THROW(sparse_weighted_norm(S, 2.0), std::domain_error);
}

TEST(Sparse, JsonRoundTrip) {
    Grid g(1, 1.0, 64);
    auto S = anchored_chain(g, 5);
    auto T = sparse_collection_from_json(json::parse(to_json(S).dump()));
    EXPECT_EQ(to_json(T).dump(), to_json(S).dump());
    EXPECT_TRUE(T.verify());
}

TEST(Sparse, DominateZeroAndHeat) {
    Grid g(1, 4.0, 128);
    auto f = GridFunction::sample_scalar(g, [](double t) { return std::cos(2 * t) + (t < 0.5 ? 3.0 : 0.0); });
    auto z = sparse_dominate(zero_kernel(), f);
    EXPECT_TRUE(z.holds);
    EXPECT_EQ(z.constant, 0.0);
    EXPECT_TRUE(z.collection.verify());

    auto h = sparse_dominate(exponential_kernel(2.0), f);
    std::string why;
    EXPECT_TRUE(h.collection.verify(&why)) << why;
    EXPECT_TRUE(h.holds);
    EXPECT_TRUE(std::isfinite(h.constant));
    EXPECT_GT(h.constant, 0);
    for (std::size_t k = 0; k < h.collection.cubes.size(); ++k)
        EXPECT_GE(double(h.collection.exceptional[k].size()),
                  0.5 * double(cells_in_cube(g, h.collection.cubes[k].level)));

    SparseOptions bad;
    bad.eta = 1.0;
    EXPECT_THROW(sparse_dominate(zero_kernel(), f, bad), std::domain_error);
}
