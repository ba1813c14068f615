#include <gtest/gtest.h>

#include "qpm/recipes.hpp"
#include "qpm/scenario.hpp"

using namespace qpm;

namespace {

std::string error_of(std::string const& text)
{
    try {
        parse_scenario(text);
    } catch (ConfigError const& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ParseScenario, EmptyObjectGivesDefaults)
{
    auto const c = parse_scenario("{}");
    EXPECT_EQ(c.dispersion_model, "kato2002-ktp");
    EXPECT_EQ(c.process.mismatch.pump.wavelength_um, 0.532);
    EXPECT_EQ(c.process.mismatch.sense, Propagation::forward);
    EXPECT_EQ(c.grating.period_um, 2.132);
    EXPECT_EQ(c.grating.duty_cycle, 0.5);
    EXPECT_EQ(c.grating.length_um, 11000.0);
    EXPECT_EQ(c.spectrum.method, Method::numeric);
    EXPECT_EQ(c.ensemble.realizations, 200u);
    ASSERT_EQ(c.grid.windows.size(), 1u);
    EXPECT_EQ(c.grid.windows[0].center_on, "qpm");
}

TEST(ParseScenario, ReadsEverySection)
{
    auto const c = parse_scenario(R"({
  "process": {"pump_um": 0.405, "sense": "backward", "kappa": 2.0},
  "grating": {"period_um": 8.9, "duty_cycle": 0.6, "length_um": 2000, "sigma_um": 0.9,
              "sigma_convention": "boundary", "seed": 4},
  "grid": {"first_um": 0.9, "last_um": 0.95, "points": 11},
  "phasematch": {"mode": "nbpm", "window_um": [0.5, 0.7], "order_min": 1, "order_max": 3},
  "spectrum": {"method": "analytic", "truncation": 20, "resolution_nm": 1, "kernel": "gaussian"},
  "ensemble": {"realizations": 8, "master_seed": 3, "first_index": 5, "qpm_window_um": [0.9, 0.95]},
  "fit": {"measured": "m.csv", "duty_cycle_bounds": [0.5, 0.7], "sigma_bounds_um": [0, 0.9], "starts": 2},
  "output": {"path": "out.csv"}
})");
    EXPECT_EQ(c.process.mismatch.pump.wavelength_um, 0.405);
    EXPECT_EQ(c.process.mismatch.sense, Propagation::backward);
    EXPECT_EQ(c.process.kappa, 2.0);
    EXPECT_EQ(c.grating.convention, DisorderConvention::boundary);
    EXPECT_EQ(c.grating.seed, 4u);
    EXPECT_EQ(resolve_grid(c).size(), 11u);
    EXPECT_EQ(c.phasematch.mode, "nbpm");
    EXPECT_EQ(c.phasematch.orders.max_abs, 3);
    EXPECT_EQ(c.spectrum.method, Method::analytic);
    EXPECT_EQ(c.spectrum.kernel, ResolutionKernel::gaussian);
    EXPECT_EQ(c.ensemble.first_index, 5u);
    ASSERT_TRUE(c.ensemble.qpm_window);
    EXPECT_FALSE(c.ensemble.nbpm_window);
    EXPECT_EQ(c.fit.options.starts, 2u);
    EXPECT_EQ(c.output.path, "out.csv");
}

TEST(ParseScenario, UnknownKeyReportsLineAndAllowedKeys)
{
    std::string const msg = error_of("{\n  \"grating\": {\n    \"period_um\": 2.1,\n    \"duty\": 0.5\n  }\n}");
    EXPECT_NE(msg.find("config line 4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/grating/duty"), std::string::npos) << msg;
    EXPECT_NE(msg.find("duty_cycle"), std::string::npos) << msg;
}

TEST(ParseScenario, SyntaxErrorReportsLine)
{
    std::string const msg = error_of("{\n  \"grating\": {\n    \"period_um\": ,\n  }\n}");
    EXPECT_NE(msg.find("config line 3"), std::string::npos) << msg;
}

TEST(ParseScenario, InvalidValuesPointAtField)
{
    auto expect = [](std::string const& text, std::string const& fragment) {
        std::string const msg = error_of(text);
        EXPECT_NE(msg.find(fragment), std::string::npos) << text << " -> " << msg;
    };
    expect(R"({"grating": {"duty_cycle": 1.5}})", "/grating/duty_cycle");
    expect(R"({"grating": {"period_um": -1}})", "/grating/period_um");
    expect(R"({"process": {"sense": "sideways"}})", "/process/sense");
    expect(R"({"process": {"pump_um": 5.0}})", "/process/pump_um");
    expect(R"({"process": {"pump_axis": "w"}})", "/process/pump_axis");
    expect(R"({"grid": {"first_um": 1.0, "last_um": 1.1, "points": 3, "center": "qpm"}})", "/grid");
    expect(R"({"grid": {"wavelengths_um": [1.0, 0.9]}})", "/grid/wavelengths_um");
    expect(R"({"grating": {"period_um": "2.1"}})", "/grating/period_um");
    expect(R"({"ensemble": {"realizations": 0}})", "/ensemble/realizations");
    expect(R"({"fit": {"starts": 0}})", "/fit/starts");
    expect(R"({"dispersion": {"model": "other"}})", "/dispersion");
    expect(R"([1, 2])", "object");
}

TEST(ParseScenario, RoundTripThroughEffectiveConfig)
{
    auto const c = parse_scenario(R"({"grating": {"sigma_um": 0.3, "seed": 9},
        "grid": {"windows": [{"center": "nbpm", "span_um": 0.01, "points": 11},
                              {"center_um": 1.1, "span_um": 0.01, "points": 5}]},
        "ensemble": {"nbpm_window_um": [1.03, 1.05]}})");
    auto const j = to_json(c);
    auto const again = parse_scenario(j.dump(2));
    EXPECT_EQ(to_json(again), j);
    EXPECT_EQ(effective_config_line(again), j.dump());
}

TEST(ParseScenario, LoadMissingFileIsConfigError)
{
    EXPECT_THROW(load_scenario("/nonexistent/config.json"), ConfigError);
}

TEST(ResolveGrid, WindowForms)
{
    auto c = parse_scenario(R"({"process": {"sense": "backward"},
        "grid": {"center": "qpm", "span_um": 0.002, "points": 21}})");
    auto const grid = resolve_grid(c);
    ASSERT_EQ(grid.size(), 21u);
    EXPECT_NEAR(grid[10], 1.064071, 2e-6);
    EXPECT_NEAR(grid.back() - grid.front(), 0.002, 1e-12);

    c = parse_scenario(R"({"phasematch": {"window_um": [1.0, 1.08]},
        "grid": {"windows": [{"center": "nbpm", "span_um": 0.001, "points": 3},
                              {"center_um": 1.1, "span_um": 0.002, "points": 5}]}})");
    auto const two = resolve_grid(c);
    ASSERT_EQ(two.size(), 8u);
    EXPECT_NEAR(two[1], 1.039799765, 1e-8);
    EXPECT_NEAR(two[3], 1.099, 1e-15);
}

TEST(ResolveGrid, OverlappingWindowsRejected)
{
    auto const c = parse_scenario(R"({"grid": {"windows": [{"center_um": 1.0, "span_um": 0.01, "points": 3},
                                                            {"center_um": 1.005, "span_um": 0.01, "points": 3}]}})");
    EXPECT_THROW(resolve_grid(c), ConfigError);
}

TEST(SincHalfWidth, MatchesFirstZeroOfLine)
{
    ProcessConfig p;
    p.mismatch.sense = Propagation::backward;
    double const root = find_qpm(2.132, p, {1.0, 1.1}).solution.signal_um;
    double const h = sinc_half_width_um(p, root, 11000.0);
    EXPECT_NEAR(h, 2.8e-5, 0.1e-5);
    GratingSpec g{2.132, 0.5, 11000.0, 0.0};
    double const grid[] = {root, root + h};
    auto const s = compute_spectrum(grid, g, p);
    EXPECT_LT(s.density[1] / s.density[0], 1e-3);
}

TEST(Recipes, AllBuild)
{
    auto const names = recipe_names();
    EXPECT_EQ(names.size(), 7u);
    for (auto const& n : names) {
        auto const r = make_recipe(n);
        EXPECT_EQ(r.name, n);
        EXPECT_FALSE(r.description.empty());
        ASSERT_FALSE(r.runs.empty()) << n;
        for (auto const& run : r.runs) {
            if (run.kind == RunKind::nbpm_curve) {
                EXPECT_FALSE(run.pumps_um.empty());
                continue;
            }
            auto const grid = resolve_grid(run.config);
            EXPECT_GT(grid.size(), 100u) << n << '/' << run.label;
        }
    }
}

TEST(Recipes, PinnedParameters)
{
    auto const b = make_recipe("fig1b");
    ASSERT_EQ(b.runs.size(), 3u);
    EXPECT_EQ(b.runs[1].label, "sigma175nm");
    EXPECT_EQ(b.runs[2].config.grating.sigma_um, 0.3);
    EXPECT_EQ(b.runs[0].config.ensemble.realizations, 200u);
    auto const d = make_recipe("fig5d");
    auto const& c = d.runs[0].config;
    EXPECT_EQ(c.process.mismatch.pump.wavelength_um, 0.405);
    EXPECT_EQ(c.grating.period_um, 8.9);
    EXPECT_EQ(c.grating.duty_cycle, 0.6);
    EXPECT_EQ(c.grating.sigma_um, 0.9);
    EXPECT_TRUE(c.ensemble.nbpm_window && c.ensemble.qpm_window);
    EXPECT_EQ(make_recipe("fig5c").runs[0].config.spectrum.resolution_nm, 1.0);
}

TEST(Recipes, UnknownNameListsAvailable)
{
    try {
        make_recipe("fig9");
        FAIL();
    } catch (ConfigError const& e) {
        EXPECT_NE(std::string(e.what()).find("fig5d"), std::string::npos);
    }
}
