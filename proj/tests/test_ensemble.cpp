#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "qpm/analysis.hpp"
#include "qpm/ensemble.hpp"

using namespace qpm;

namespace {

ProcessConfig backward()
{
    ProcessConfig p;
    p.mismatch.sense = Propagation::backward;
    return p;
}

double qpm_center()
{
    static double const root = find_qpm(2.132, backward(), {1.0, 1.1}).solution.signal_um;
    return root;
}

EnsembleConfig small_config(double sigma, std::size_t n, std::uint64_t seed = 5)
{
    GratingSpec g{2.132, 0.5, 2000.0, sigma};
    double const c = qpm_center();
    return {g, backward(), linear_grid(c - 0.0004, c + 0.0004, 41), n, seed, 0};
}

}  // namespace

TEST(RunEnsemble, SingleIdealRealizationMatchesSpectrum)
{
    auto const cfg = small_config(0.0, 1);
    auto const stats = run_ensemble(cfg);
    auto const ideal = compute_spectrum(cfg.grid, cfg.grating, cfg.process);
    ASSERT_EQ(stats.count(), 1u);
    EXPECT_EQ(stats.mean, ideal.density);
    for (double s : stats.stddev)
        EXPECT_EQ(s, 0.0);
}

TEST(RunEnsemble, ZeroSigmaHasNoSpread)
{
    auto const stats = run_ensemble(small_config(0.0, 20));
    auto const ideal = compute_spectrum(stats.grid, small_config(0.0, 1).grating, backward());
    for (std::size_t i = 0; i < stats.grid.size(); ++i) {
        EXPECT_EQ(stats.mean[i], ideal.density[i]);
        EXPECT_EQ(stats.stddev[i], 0.0);
    }
}

TEST(RunEnsemble, RepeatableAndThreadIndependent)
{
    auto const cfg = small_config(0.3, 37);
    auto const a = run_ensemble(cfg, 1);
    auto const b = run_ensemble(cfg, 1);
    auto const c = run_ensemble(cfg, 3);
    for (auto const* other : {&b, &c}) {
        EXPECT_EQ(a.mean, other->mean);
        EXPECT_EQ(a.stddev, other->stddev);
        EXPECT_EQ(a.sem, other->sem);
        EXPECT_EQ(a.seeds, other->seeds);
    }
}

TEST(RunEnsemble, StatisticsMatchDirectReduction)
{
    auto const cfg = small_config(0.3, 25);
    auto const stats = run_ensemble(cfg);
    ASSERT_EQ(stats.peaks.size(), 25u);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 25; ++r) {
        auto const s = single_realization(cfg, r);
        EXPECT_EQ(stats.seeds[r], child_seed(cfg.master_seed, r));
        ASSERT_TRUE(stats.peaks[r]);
        EXPECT_EQ(stats.peaks[r]->density, peak_metrics(s)->density);
        rows.push_back(s.density);
    }
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        double mean = 0.0;
        for (auto const& r : rows)
            mean += r[i];
        mean /= 25.0;
        double var = 0.0;
        for (auto const& r : rows)
            var += (r[i] - mean) * (r[i] - mean);
        var /= 24.0;
        EXPECT_NEAR(stats.mean[i], mean, 1e-12 * mean);
        EXPECT_NEAR(stats.stddev[i], std::sqrt(var), 1e-9 * std::sqrt(var) + 1e-300);
        EXPECT_NEAR(stats.sem[i], std::sqrt(var / 25.0), 1e-9 * std::sqrt(var));
        EXPECT_GE(stats.mean[i], 0.0);
    }
}

TEST(RunEnsemble, DisjointHalvesAverageToUnion)
{
    auto full = small_config(0.3, 32);
    auto first = full;
    first.realizations = 16;
    auto second = first;
    second.first_index = 16;
    auto const a = run_ensemble(first);
    auto const b = run_ensemble(second);
    auto const u = run_ensemble(full);
    for (std::size_t i = 0; i < u.grid.size(); ++i)
        EXPECT_NEAR(0.5 * (a.mean[i] + b.mean[i]), u.mean[i], 1e-13 * u.mean[i]);
    EXPECT_EQ(b.seeds.front(), u.seeds[16]);
}

TEST(RunEnsemble, RelativeSpreadStabilizes)
{
    auto cfg = small_config(0.3, 50);
    std::vector<double> rel;
    for (std::size_t n : {50u, 100u, 200u}) {
        cfg.realizations = n;
        auto const s = run_ensemble(cfg);
        std::size_t const i = argmax_in(s.grid, s.mean, {0.0, 10.0});
        rel.push_back(s.stddev[i] / s.mean[i]);
    }
    for (double r : rel) {
        EXPECT_TRUE(std::isfinite(r));
        EXPECT_NEAR(r / rel.back(), 1.0, 0.35);
    }
}

TEST(RunEnsemble, RejectsInvalidConfig)
{
    auto cfg = small_config(0.3, 0);
    EXPECT_THROW(run_ensemble(cfg), InvalidArgument);
    cfg.realizations = 3;
    cfg.grid.clear();
    EXPECT_THROW(run_ensemble(cfg), InvalidArgument);
    EXPECT_THROW(single_realization(small_config(0.3, 3), 3), InvalidArgument);
}

TEST(SingleRealization, Deterministic)
{
    auto const cfg = small_config(0.45, 4);
    auto const a = single_realization(cfg, 0);
    auto const b = single_realization(cfg, 0);
    EXPECT_EQ(a.density, b.density);
    EXPECT_EQ(a.get("seed"), std::to_string(child_seed(cfg.master_seed, 0)));
    EXPECT_NE(a.density, single_realization(cfg, 1).density);
}

TEST(SingleRealization, DisorderBroadensNbpmLine)
{
    ProcessConfig f;
    double const root = find_nbpm(f, {1.0, 1.08}).signal_um;
    GratingSpec g{2.112, 0.5, 11000.0, 0.45};
    EnsembleConfig cfg{g, f, linear_grid(root - 0.01, root + 0.01, 1001), 1, 3, 0};
    auto const disordered = single_realization(cfg, 0);
    GratingSpec ideal = g;
    ideal.sigma_um = 0.0;
    auto const clean = compute_spectrum(cfg.grid, ideal, f);
    double const peak_d = *std::max_element(disordered.density.begin(), disordered.density.end());
    double const peak_c = *std::max_element(clean.density.begin(), clean.density.end());
    // an ideal D = 0.5 grating has no NBPM line; disorder creates one
    EXPECT_GT(peak_d, 100.0 * peak_c);
    auto const pm = peak_metrics(disordered);
    ASSERT_TRUE(pm);
    EXPECT_FALSE(pm->side_peaks.empty());
}

TEST(ReductionSummary, IdealEnsembleIsUnity)
{
    auto const cfg = small_config(0.0, 3);
    auto const stats = run_ensemble(cfg);
    auto const ref = compute_spectrum(cfg.grid, cfg.grating, cfg.process);
    auto const r = reduction_summary(stats, ref, {cfg.grid.front(), cfg.grid.back()});
    EXPECT_EQ(r.peak_ratio, 1.0);
    EXPECT_EQ(r.peak_ratio_sem, 0.0);
    EXPECT_FALSE(r.nbpm_to_qpm);
}

TEST(ReductionSummary, GridMismatchRejected)
{
    auto const cfg = small_config(0.0, 1);
    auto const stats = run_ensemble(cfg);
    auto ref = compute_spectrum(cfg.grid, cfg.grating, cfg.process);
    ref.wavelength_um[0] -= 1e-6;
    EXPECT_THROW(reduction_summary(stats, ref, {cfg.grid.front(), cfg.grid.back()}), InvalidArgument);
}

TEST(ReductionSummary, DisorderReducesQpmPeak)
{
    auto const cfg = small_config(0.3, 32);
    auto const stats = run_ensemble(cfg);
    GratingSpec ideal = cfg.grating;
    ideal.sigma_um = 0.0;
    auto const ref = compute_spectrum(cfg.grid, ideal, cfg.process);
    auto const r = reduction_summary(stats, ref, {cfg.grid.front(), cfg.grid.back()},
                                     WavelengthInterval{cfg.grid.front(), cfg.grid[5]});
    EXPECT_LT(r.peak_ratio, 1.0);
    EXPECT_GT(r.peak_ratio_sem, 0.0);
    ASSERT_TRUE(r.nbpm_to_qpm);
    EXPECT_GT(*r.nbpm_to_qpm_sem, 0.0);
}

TEST(EnsembleCsv, LayoutAndSidecar)
{
    auto const cfg = small_config(0.3, 3);
    auto const stats = run_ensemble(cfg);
    std::ostringstream csv, seeds;
    write_ensemble_csv(csv, stats, {{"k", "v"}});
    write_seed_sidecar(seeds, stats, cfg);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# k=v");
    std::getline(in, line);
    EXPECT_EQ(line, "wavelength_nm,mean_S,std_S,sem_S");
    std::size_t rows = 0;
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, cfg.grid.size());
    EXPECT_NE(seeds.str().find("index,seed\n0," + std::to_string(child_seed(5, 0)) + "\n"), std::string::npos);
}
