#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scz/experiments.hpp"

using namespace scz;

namespace {

ExperimentConfig cfg_for(const std::string& name, std::uint64_t seed = 1) {
    ExperimentConfig c;
    c.scenario = name;
    c.seed = seed;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

class ScenarioRun : public ::testing::TestWithParam<std::string> {};

TEST_P(ScenarioRun, FastTierPasses) {
    auto r = run(cfg_for(GetParam()));
    EXPECT_EQ(r.scenario, GetParam());
    EXPECT_FALSE(r.checks.empty());
    for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.measured << " vs " << c.reference;
    auto j = to_json(r);
    EXPECT_FALSE(j.contains("wall_clock"));
    for (const auto& c : j.at("checks")) {
        auto p = c.at("provenance").get<std::string>();
        EXPECT_TRUE(p == "published" || p == "analytic" || p == "oracle") << p;
    }
}

INSTANTIATE_TEST_SUITE_P(All, ScenarioRun, ::testing::Values("scalar_characterization", "hilbert_counterexample",
                                                             "no_cancellation", "extrapolation_ladder",
                                                             "weighted_sharpness", "smr_heat", "sparse_pipeline",
                                                             "wedge_appendix", "parabolic_appendix"));

TEST(Experiments, RegistryMatchesList) {
    EXPECT_EQ(scenarios().size(), 9u);
    for (const auto& s : scenarios()) {
        EXPECT_EQ(&find_scenario(s.name), &s);
        EXPECT_FALSE(s.summary.empty());
    }
    EXPECT_THROW(find_scenario("no_such_scenario"), config_error);
    EXPECT_THROW(run(cfg_for("no_such_scenario")), config_error);
}

TEST(Experiments, SameSeedSameBytes) {
    for (const char* name : {"wedge_appendix", "smr_heat", "sparse_pipeline"}) {
        auto a = to_json(run(cfg_for(name, 5))).dump(2);
        auto b = to_json(run(cfg_for(name, 5))).dump(2);
        EXPECT_EQ(a, b) << name;
    }
}

TEST(Experiments, WriteOutputs) {
    auto dir = std::filesystem::temp_directory_path() / "scz_experiments_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto r = run(cfg_for("scalar_characterization"));
    write_outputs(r, dir.string());
    auto j = json::parse(slurp(dir / "scalar_characterization.json"));
    EXPECT_EQ(j.at("scenario"), "scalar_characterization");
    EXPECT_EQ(j.dump(), to_json(r).dump());
    auto txt = slurp(dir / "scalar_characterization.txt");
    EXPECT_NE(txt.find("PASS"), std::string::npos);
    if (!r.series.empty()) EXPECT_NE(slurp(dir / "scalar_characterization.svg").find("<svg"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Config, Validation) {
    auto c = config_from_json(json::parse(R"({"scenario":"smr_heat","tier":"full","seed":7,"params":{"p":4}})"));
    EXPECT_EQ(c.scenario, "smr_heat");
    EXPECT_TRUE(c.full());
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.get<double>("p", 2.0), 4.0);
    EXPECT_EQ(c.get<double>("missing", 2.5), 2.5);
    EXPECT_EQ(to_json(c).dump(), to_json(config_from_json(to_json(c))).dump());

    EXPECT_THROW(config_from_json(json::parse(R"({"scenario":"smr_heat","sede":3})")), config_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"tier":"medium"})")), config_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"seed":"x"})")), config_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"params":[1,2]})")), config_error);
    EXPECT_THROW(config_from_json(json::parse("[1]")), config_error);

    auto bad = cfg_for("wedge_appendix");
    bad.tier = "slow";
    EXPECT_THROW(run(bad), config_error);
}

TEST(Config, MakeKernel) {
    for (const auto& kind : kernel_kinds()) {
        json spec{{"kind", kind}};
        if (kind == "semigroup") spec["eigenvalues"] = {1.0, 4.0};
        if (kind == "truncated") spec["base"] = {{"kind", "exponential"}}, spec["truncation_eps"] = 0.1;
        auto K = make_kernel(spec);
        EXPECT_FALSE(K.name().empty()) << kind;
        EXPECT_TRUE(std::isfinite(K.norm(1.5, 0.5))) << kind;
    }
    EXPECT_EQ(make_kernel({{"kind", "semigroup"}, {"eigenvalues", {1, 2, 3}}}).source().dim(), 3u);
    EXPECT_DOUBLE_EQ(make_kernel({{"kind", "exponential"}, {"lambda", 4.0}}).norm(1.0, 0.0), 2 * std::exp(-4.0));
    auto T = make_kernel({{"kind", "truncated"}, {"base", {{"kind", "exponential"}}}, {"truncation_eps", 0.5}});
    EXPECT_EQ(T.norm(1.2, 1.0), 0.0);
    EXPECT_GT(T.norm(2.0, 1.0), 0.0);

    EXPECT_THROW(make_kernel({{"kind", "nope"}}), config_error);
    EXPECT_THROW(make_kernel({{"lambda", 1}}), config_error);
    EXPECT_THROW(make_kernel({{"kind", "semigroup"}}), config_error);
    EXPECT_THROW(make_kernel({{"kind", "exponential"}, {"lambda", "fast"}}), config_error);
    EXPECT_THROW(make_kernel({{"kind", "exponential"}, {"lambda", -1.0}}), std::domain_error);
}

TEST(Io, CsvRoundTrip) {
    Grid g(1, 2.0, 16);
    auto X = FiniteDimSpace::euclidean(2);
    GridFunction f(g, X);
    for (std::size_t i = 0; i < g.size(); ++i) f(i, 0) = 0.1 * double(i), f(i, 1) = std::sin(double(i));
    auto back = grid_function_from_csv(to_csv(f), g, X);
    EXPECT_EQ(back.values(), f.values());
    auto w = Weight::power(g, 0.5);
    EXPECT_EQ(weight_from_csv(to_csv(w), g).values(), w.values());
    EXPECT_THROW(grid_function_from_csv("index,v0,v1\n0,1\n", g, X), structural_error);
}
