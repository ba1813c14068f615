#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qpm/amplitude.hpp"
#include "qpm/analysis.hpp"

using namespace qpm;

namespace {

constexpr double pi = std::numbers::pi;

ProcessConfig backward()
{
    ProcessConfig p;
    p.mismatch.sense = Propagation::backward;
    return p;
}

ProcessConfig forward405()
{
    ProcessConfig p;
    p.mismatch.pump.wavelength_um = 0.405;
    return p;
}

double qpm_root(double period, ProcessConfig const& p, WavelengthInterval w)
{
    return find_qpm(period, p, w).solution.signal_um;
}

double nbpm_root(ProcessConfig const& p, WavelengthInterval w)
{
    return find_nbpm(p, w).signal_um;
}

double sinc2(double x)
{
    return x == 0.0 ? 1.0 : std::pow(std::sin(x) / x, 2);
}

// Largest |B_analytic - B_numeric| over a grid relative to the largest |B_numeric|.
double peak_relative_error(GratingSpec const& g, ProcessConfig const& p, std::vector<double> const& grid, int M)
{
    auto const ideal = build_ideal(g);
    double diff = 0.0, peak = 0.0;
    for (double l : grid) {
        Complex const n = amplitude_numeric(l, ideal, p);
        diff = std::max(diff, std::abs(amplitude_analytic(l, g, p, M) - n));
        peak = std::max(peak, std::abs(n));
    }
    return diff / peak;
}

}  // namespace

TEST(Sinc, Values)
{
    EXPECT_EQ(sinc(0.0), 1.0);
    EXPECT_NEAR(sinc(pi), 0.0, 1e-16);
    EXPECT_NEAR(sinc(1e-5), std::sin(1e-5) / 1e-5, 1e-15);
    EXPECT_NEAR(sinc(0.3), std::sin(0.3) / 0.3, 1e-16);
}

TEST(AmplitudeNumeric, SingleDomainAtZeroMismatch)
{
    ProcessConfig p;
    p.kappa = 1.7;
    // at the birefringent root dk L is ~1e-8 or below
    double const root = nbpm_root(p, {1.0, 1.08});
    DomainStructure const one({0.0, 11000.0}, 1);
    EXPECT_NEAR(std::abs(amplitude_numeric(root, one, p)), p.kappa * 11000.0, 1e-9 * 11000.0);
}

TEST(AmplitudeNumeric, SingleDomainClosedForm)
{
    ProcessConfig p;
    double const L = 500.0;
    DomainStructure const one({0.0, L}, 1);
    for (double l = 0.95; l <= 1.15; l += 0.01) {
        double const dk = phase_mismatch(p.dispersion, p.mismatch, l);
        EXPECT_NEAR(std::abs(amplitude_numeric(l, one, p)), L * std::abs(sinc(0.5 * dk * L)), 1e-10 * L) << l;
    }
}

TEST(DomainIntegral, ContinuousAcrossSeriesLimit)
{
    auto const s = build_ideal(GratingSpec{2.132, 0.7, 11000.0, 0.0});
    double const L = s.length_um();
    for (double scale : {1.0000001, 1.000001, 1.00001}) {
        double const dk = scale * 1e-8 / L;
        Complex const limit = domain_integral(s, 0.999999 * 1e-8 / L);
        Complex const wall = domain_integral(s, dk);
        EXPECT_LT(std::abs(limit - wall) / std::abs(wall), 1e-9) << scale;
    }
    EXPECT_NEAR(domain_integral(s, 0.0).real(), (2.0 * duty_cycle_estimate(s) - 1.0) * L, 1e-9 * L);
}

TEST(DomainIntegral, ShortDomainFormMatchesWallForm)
{
    // one domain straddles the switch between the two closed forms
    DomainStructure const s({0.0, 1.0, 1.0 + 2e-4, 3.0}, 1);
    for (double dk : {3.0, 5.0, 5.1, 7.0}) {
        Complex exact{0.0, 0.0};
        auto z = s.boundaries();
        for (std::size_t j = 0; j < 3; ++j)
            exact += static_cast<double>(s.sign(j)) *
                     (std::polar(1.0, dk * z[j + 1]) - std::polar(1.0, dk * z[j])) / Complex(0.0, dk);
        EXPECT_LT(std::abs(domain_integral(s, dk) - exact), 1e-12) << dk;
    }
}

TEST(AmplitudeAnalytic, DominantTermAtFirstOrderResonance)
{
    auto const p = forward405();
    GratingSpec g{8.9, 0.5, 11000.0, 0.0};
    ASSERT_GT(g.length_um / g.period_um, 1000.0);
    double const root = qpm_root(g.period_um, p, {0.8, 1.2});
    double const full = std::abs(amplitude_analytic(root, g, p, 50));
    double const dominant = p.kappa * g.length_um * 2.0 / pi;
    EXPECT_NEAR(full / dominant, 1.0, 0.01);
}

TEST(AmplitudeAnalytic, DuttyCycleHalfHasNoDcTerm)
{
    EXPECT_EQ(fourier_coefficient(0, 0.5), 0.0);
    // with c_0 = 0 the NBPM root only sees off-resonant harmonics
    ProcessConfig f;
    GratingSpec g{2.132, 0.5, 11000.0, 0.0};
    double const root = nbpm_root(f, {1.0, 1.08});
    EXPECT_LT(std::abs(amplitude_analytic(root, g, f, 50)), 1e-3 * g.length_um);
}

TEST(AmplitudeAnalytic, NbpmRootGivesDcAmplitude)
{
    ProcessConfig f;
    GratingSpec g{2.132, 0.8, 11000.0, 0.0};
    double const root = nbpm_root(f, {1.0, 1.08});
    double const analytic = std::abs(amplitude_analytic(root, g, f, 50));
    double const numeric = std::abs(amplitude_numeric(root, build_ideal(g), f));
    EXPECT_NEAR(analytic / g.length_um, 0.6, 1e-3);
    EXPECT_NEAR(numeric / g.length_um, 0.6, 1e-3);
    EXPECT_NEAR(analytic, numeric, 1e-4 * numeric);
}

TEST(AmplitudeAnalytic, Preconditions)
{
    ProcessConfig p;
    GratingSpec g;
    EXPECT_THROW(amplitude_analytic(1.064, g, p, 0), InvalidArgument);
    g.sigma_um = 0.1;
    EXPECT_THROW(amplitude_analytic(1.064, g, p, 50), InvalidArgument);
}

// Truncating the series at |m| <= M leaves a tail of order Lambda / (pi^2 M L |c_n|)
// relative to the resonant peak; the two methods converge to each other at that rate.
TEST(OracleEquivalence, TruncationTailBoundAndConvergence)
{
    auto const p = backward();
    GratingSpec g{2.132, 0.5, 1000.0, 0.0};
    double const root = qpm_root(g.period_um, p, {1.0, 1.1});
    auto const grid = linear_grid(root - 0.005, root + 0.005, 201);
    double const c7 = std::abs(fourier_coefficient(7, g.duty_cycle));
    double const bound = g.period_um / (pi * pi * g.length_um * c7);
    double const e50 = peak_relative_error(g, p, grid, 50);
    double const e100 = peak_relative_error(g, p, grid, 100);
    double const e800 = peak_relative_error(g, p, grid, 800);
    EXPECT_LT(e50, 1.2 * bound / 50.0);
    EXPECT_LT(e100, 1.2 * bound / 100.0);
    EXPECT_LT(e800, 1.2 * bound / 800.0);
    EXPECT_LT(e800, e50 / 10.0);
}

TEST(OracleEquivalence, BothSensesAndDutyCyclesConverge)
{
    for (double D : {0.5, 0.6, 0.8}) {
        for (auto sense : {Propagation::forward, Propagation::backward}) {
            ProcessConfig p = sense == Propagation::forward ? forward405() : backward();
            GratingSpec g{sense == Propagation::forward ? 8.9 : 2.132, D, 1000.0, 0.0};
            double const root = sense == Propagation::forward ? qpm_root(8.9, p, {0.8, 1.2})
                                                              : qpm_root(2.132, p, {1.0, 1.1});
            auto const grid = linear_grid(root - 0.002, root + 0.002, 41);
            int const n = sense == Propagation::forward ? 1 : 7;
            int const M = 1000;
            double const bound = g.period_um / (pi * pi * M * g.length_um * std::abs(fourier_coefficient(n, D)));
            EXPECT_LT(peak_relative_error(g, p, grid, M), 1.2 * bound) << D << " " << to_string(sense);
        }
    }
}

TEST(Bogoliubov, UnitModuliAndPhaseRelation)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> lambda(0.95, 1.2), duty(0.2, 0.8);
    for (int i = 0; i < 20; ++i) {
        ProcessConfig p;
        p.mismatch.sense = i % 2 ? Propagation::backward : Propagation::forward;
        auto const s = build_ideal(GratingSpec{2.132, duty(gen), 300.0, 0.0});
        double const l = lambda(gen);
        auto const c = bogoliubov(l, s, p);
        EXPECT_NEAR(std::abs(c.A), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(c.D_out), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(c.C), std::abs(c.B), 1e-12 * std::max(1.0, std::abs(c.B)));
        if (p.mismatch.sense == Propagation::forward) {
            auto const k = wavevectors(p.dispersion, p.mismatch, l);
            Complex const expected = std::conj(c.B) * std::polar(1.0, k.signal * s.length_um());
            EXPECT_LT(std::abs(c.C - expected), 1e-12 * std::max(1.0, std::abs(c.B)));
        }
    }
}

TEST(SpectralDensity, Values)
{
    EXPECT_EQ(spectral_density({0.0, 0.0}), 0.0);
    EXPECT_NEAR(spectral_density({0.6, 0.8}), 1.0 / (2.0 * pi), 1e-16);
    EXPECT_NEAR(spectral_density({1.2, 1.6}), 4.0 * spectral_density({0.6, 0.8}), 1e-15);
}

TEST(ComputeSpectrum, QpmLineHasSincSquaredSideLobe)
{
    auto const p = backward();
    GratingSpec g{2.132, 0.5, 11000.0, 0.0};
    double const root = qpm_root(g.period_um, p, {1.0, 1.1});
    double const h = 2.0 * pi / (11000.0 * 20.6);  // rough first-zero half width
    auto const grid = linear_grid(root - 4 * h, root + 4 * h, 2001);
    auto const s = compute_spectrum(grid, g, p);
    EXPECT_EQ(s.get("method"), "numeric");
    auto const pm = peak_metrics(s);
    ASSERT_TRUE(pm);
    ASSERT_FALSE(pm->side_peaks.empty());
    double side = 0.0;
    for (auto const& sp : pm->side_peaks)
        side = std::max(side, sp.density);
    // oracle: same sampling of the pure sinc^2 law around the root
    auto dk = [&](double l) { return phase_mismatch(p.dispersion, p.mismatch, l) + grating_vector(-7, g.period_um); };
    double oracle_peak = 0.0, oracle_side = 0.0;
    for (double l : grid) {
        double const v = sinc2(0.5 * dk(l) * g.length_um);
        double const x = std::abs(0.5 * dk(l) * g.length_um);
        if (x < pi)
            oracle_peak = std::max(oracle_peak, v);
        else
            oracle_side = std::max(oracle_side, v);
    }
    EXPECT_NEAR((pm->density / side) / (oracle_peak / oracle_side), 1.0, 0.01);
    EXPECT_NEAR(pm->density / side, 21.2, 0.5);
}

TEST(ComputeSpectrum, NbpmLineCenteredOnRoot)
{
    ProcessConfig f;
    GratingSpec g{2.132, 0.8, 11000.0, 0.0};
    double const root = nbpm_root(f, {1.0, 1.08});
    auto const grid = linear_grid(root - 0.01, root + 0.01, 2001);
    auto const pm = peak_metrics(compute_spectrum(grid, g, f));
    ASSERT_TRUE(pm);
    EXPECT_LE(std::abs(pm->wavelength_um - root), grid[1] - grid[0]);
}

TEST(ComputeSpectrum, ForwardDisorderedGratingShowsBothLines)
{
    auto const p = forward405();
    GratingSpec g{8.9, 0.6, 11000.0, 0.9};
    g.seed = 11;
    double const q = qpm_root(8.9, p, {0.8, 1.2});
    double const n = nbpm_root(p, {0.5, 0.7});
    std::vector<double> grid;
    for (auto const& part : {linear_grid(n - 0.0004, n + 0.0004, 81), linear_grid(q - 0.004, q + 0.004, 81)})
        for (double l : part)
            grid.push_back(l);
    auto const s = compute_spectrum(grid, g, p);
    EXPECT_EQ(s.get("seed"), "11");
    double const nb = *std::max_element(s.density.begin(), s.density.begin() + 81);
    double const qp = *std::max_element(s.density.begin() + 81, s.density.end());
    EXPECT_GT(nb, 0.01 * qp);
    EXPECT_GT(qp, nb);
    EXPECT_GT(nb, 10.0 * std::min(s.density[0], s.density[80]));
}

TEST(ComputeSpectrum, GlobalSignFlipLeavesSpectrumUnchanged)
{
    auto const p = backward();
    auto const ideal = build_ideal(GratingSpec{2.132, 0.6, 2000.0, 0.0});
    NormalStream rng(8);
    auto const s = perturb(ideal, 0.3, rng).structure;
    auto const grid = linear_grid(1.06, 1.07, 101);
    auto const a = compute_spectrum(grid, s, p);
    auto const b = compute_spectrum(grid, s.flipped(), p);
    for (std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_EQ(a.density[i], b.density[i]);
}

TEST(ComputeSpectrum, NbpmRootFarBelowQpmPeakAtHalfDuty)
{
    GratingSpec g{2.132, 0.5, 11000.0, 0.0};
    auto const ideal = build_ideal(g);
    ProcessConfig f;
    auto const b = backward();
    double const nb = spectral_density(amplitude_numeric(nbpm_root(f, {1.0, 1.08}), ideal, f));
    double const qp = spectral_density(amplitude_numeric(qpm_root(2.132, b, {1.0, 1.1}), ideal, b));
    EXPECT_GT(qp / nb, 1e3);
}

TEST(ComputeSpectrum, QpmPeakFollowsDutyCycleLaw)
{
    auto const p = forward405();
    double const root = qpm_root(8.9, p, {0.8, 1.2});
    auto peak = [&](double D) {
        return spectral_density(amplitude_numeric(root, build_ideal(GratingSpec{8.9, D, 11000.0, 0.0}), p));
    };
    double const ref = peak(0.5);
    for (double D : {0.6, 0.8}) {
        double const law = std::pow(std::sin(pi * D) / std::sin(pi * 0.5), 2);
        EXPECT_NEAR(peak(D) / ref / law, 1.0, 0.01) << D;
    }
}

TEST(ComputeSpectrum, NbpmAmplitudeLinearInDutyOffset)
{
    ProcessConfig f;
    double const root = nbpm_root(f, {1.0, 1.08});
    auto amp = [&](double D) {
        return std::abs(amplitude_numeric(root, build_ideal(GratingSpec{2.132, D, 11000.0, 0.0}), f));
    };
    EXPECT_NEAR(amp(0.9) / amp(0.7), 2.0, 0.02);
}

TEST(ComputeSpectrum, AnalyticMethodMetadata)
{
    auto const p = backward();
    GratingSpec g{2.132, 0.5, 1000.0, 0.0};
    auto const s = compute_spectrum(linear_grid(1.06, 1.07, 11), g, p, {Method::analytic, 25, 1});
    EXPECT_EQ(s.get("method"), "analytic");
    EXPECT_EQ(s.get("truncation"), "25");
    EXPECT_TRUE(s.get("grating"));
    g.sigma_um = 0.1;
    EXPECT_THROW(compute_spectrum(linear_grid(1.06, 1.07, 11), g, p, {Method::analytic, 25, 1}), InvalidArgument);
}

TEST(ComputeSpectrum, ThreadCountDoesNotChangeResult)
{
    auto const p = backward();
    GratingSpec g{2.132, 0.6, 3000.0, 0.3};
    auto const grid = linear_grid(1.06, 1.07, 97);
    auto const a = compute_spectrum(grid, g, p, {Method::numeric, 50, 1});
    auto const b = compute_spectrum(grid, g, p, {Method::numeric, 50, 4});
    EXPECT_EQ(a.density, b.density);
}

TEST(Grid, Validation)
{
    EXPECT_THROW(validate_grid(std::vector<double>{}), InvalidArgument);
    EXPECT_THROW(validate_grid(std::vector<double>{1.0, 1.0}), InvalidArgument);
    EXPECT_THROW(validate_grid(std::vector<double>{-1.0, 1.0}), InvalidArgument);
    auto const g = linear_grid(1.0, 2.0, 11);
    EXPECT_EQ(g.front(), 1.0);
    EXPECT_EQ(g.back(), 2.0);
    EXPECT_THROW(linear_grid(1.0, 2.0, 1), InvalidArgument);
}

namespace {

Spectrum narrow_line()
{
    // sinc^2 of intrinsic FWHM ~0.05 nm on a 0.01 nm grid
    Spectrum s;
    s.wavelength_um = linear_grid(1.055, 1.065, 1001);
    for (double l : s.wavelength_um)
        s.density.push_back(sinc2((l - 1.06) * 1e3 / 0.05 * 1.39156));
    return s;
}

}  // namespace

TEST(ConvolveResolution, ZeroBandwidthIsIdentity)
{
    auto const s = narrow_line();
    auto const out = convolve_resolution(s, 0.0);
    EXPECT_EQ(out.density, s.density);
}

TEST(ConvolveResolution, ConservesIntegral)
{
    auto const s = narrow_line();
    for (auto k : {ResolutionKernel::top_hat, ResolutionKernel::gaussian}) {
        auto const out = convolve_resolution(s, 1.0, k);
        EXPECT_NEAR(integrate(out) / integrate(s), 1.0, 1e-12);
        EXPECT_EQ(out.wavelength_um, s.wavelength_um);
    }
    // mass next to the edges is renormalized onto existing cells
    Spectrum edge = s;
    std::fill(edge.density.begin(), edge.density.end(), 0.0);
    edge.density[1] = 1.0;
    EXPECT_NEAR(integrate(convolve_resolution(edge, 1.0)) / integrate(edge), 1.0, 1e-12);
}

TEST(ConvolveResolution, NarrowLineTakesKernelWidth)
{
    auto const s = narrow_line();
    auto const intrinsic = peak_metrics(s);
    ASSERT_TRUE(intrinsic);
    EXPECT_LT(intrinsic->fwhm_nm, 0.1);
    auto const top = peak_metrics(convolve_resolution(s, 1.0));
    auto const gauss = peak_metrics(convolve_resolution(s, 1.0, ResolutionKernel::gaussian));
    EXPECT_NEAR(top->fwhm_nm, 1.0, 0.1);
    EXPECT_NEAR(gauss->fwhm_nm, 1.0, 0.1);
    auto const out = convolve_resolution(s, 1.0);
    EXPECT_EQ(out.get("resolution_nm"), "1");
    EXPECT_EQ(out.get("resolution_kernel"), "top_hat");
}

TEST(ConvolveResolution, RejectsCoarseGrid)
{
    auto const s = narrow_line();
    EXPECT_THROW(convolve_resolution(s, 0.03), InvalidArgument);
    EXPECT_THROW(convolve_resolution(s, -1.0), InvalidArgument);
}

TEST(PeakMetrics, SampledSincSquared)
{
    Spectrum s;
    s.wavelength_um = linear_grid(1.0, 1.1, 4001);
    double const center = 1.0437;
    for (double l : s.wavelength_um)
        s.density.push_back(sinc2((l - center) * 200.0));
    auto const pm = peak_metrics(s);
    ASSERT_TRUE(pm);
    EXPECT_LE(std::abs(pm->wavelength_um - center), s.wavelength_um[1] - s.wavelength_um[0]);
    // sinc^2 half maximum at x = 1.39156
    EXPECT_NEAR(pm->fwhm_nm, 2.0 * 1.39156 / 200.0 * 1e3, 0.05);
    for (auto const& sp : pm->side_peaks)
        EXPECT_LT(sp.density, pm->density);
}

TEST(PeakMetrics, DegenerateInputs)
{
    Spectrum two;
    two.wavelength_um = {1.0, 1.1};
    two.density = {1.0, 2.0};
    EXPECT_THROW(peak_metrics(two), InvalidArgument);
    Spectrum flat;
    flat.wavelength_um = {1.0, 1.1, 1.2};
    flat.density = {1.0, 1.0, 1.0};
    EXPECT_FALSE(peak_metrics(flat));
}

TEST(PeakMetrics, WidthDoublesWhenLengthHalves)
{
    auto const p = backward();
    double const root = qpm_root(2.132, p, {1.0, 1.1});
    auto const grid = linear_grid(root - 0.0003, root + 0.0003, 3001);
    auto width = [&](double L) {
        return peak_metrics(compute_spectrum(grid, GratingSpec{2.132, 0.5, L, 0.0}, p))->fwhm_nm;
    };
    EXPECT_NEAR(width(5500.0) / width(11000.0), 2.0, 0.1);
}

TEST(SpectrumCsv, RoundTripAtNineDigits)
{
    auto const p = backward();
    auto const s = compute_spectrum(linear_grid(1.06, 1.07, 21), GratingSpec{2.132, 0.5, 500.0, 0.0}, p);
    std::stringstream io;
    write_spectrum_csv(io, s);
    auto const back = read_spectrum_csv(io);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(back.wavelength_um[i], s.wavelength_um[i], 1e-9 * s.wavelength_um[i]);
        EXPECT_NEAR(back.density[i], s.density[i], 1e-8 * s.density[i]);
    }
    EXPECT_EQ(back.get("method"), "numeric");
    std::istringstream bad("wavelength_nm,S\n1000,1\n999,2\n");
    EXPECT_THROW(read_spectrum_csv(bad), ConfigError);
}
