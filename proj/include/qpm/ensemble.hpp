#pragma once

// Seeded Monte Carlo ensembles over random domain-wall realizations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qpm/amplitude.hpp"
#include "qpm/grating.hpp"
#include "qpm/parallel.hpp"
#include "qpm/random.hpp"
#include "qpm/summation.hpp"

namespace qpm {

struct EnsembleConfig {
    GratingSpec grating;
    ProcessConfig process;
    std::vector<double> grid;
    std::size_t realizations = 200;
    std::uint64_t master_seed = 0;
    /// Index of the first realization; disjoint index ranges give disjoint seed sets.
    std::size_t first_index = 0;

    void validate() const
    {
        grating.validate();
        process.validate();
        validate_grid(grid);
        if (realizations < 1)
            throw InvalidArgument("an ensemble needs at least one realization");
    }
};

struct EnsembleStatistics {
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> stddev;
    /// Standard error of the mean, stddev / sqrt(N).
    std::vector<double> sem;
    std::vector<std::optional<PeakMetrics>> peaks;
    std::vector<std::uint64_t> seeds;

    std::size_t count() const noexcept { return seeds.size(); }
};

namespace detail {

inline Spectrum realization_spectrum(EnsembleConfig const& config, DomainStructure const& ideal,
                                     std::uint64_t seed)
{
    NormalStream rng(seed);
    auto const perturbed = perturb(ideal, config.grating.boundary_sigma_um(), rng);
    Spectrum s = compute_spectrum(config.grid, perturbed.structure, config.process, 1);
    s.set("grating", digest(config.grating));
    s.set("seed", std::to_string(seed));
    return s;
}

// Per-point sums of (S - shift) and (S - shift)^2; the shift (realization 0's spectrum)
// keeps the variance free of cancellation when the spread is small.
struct PointSums {
    std::vector<CompensatedSum> first;
    std::vector<CompensatedSum> second;

    explicit PointSums(std::size_t n) : first(n), second(n) {}

    void add(std::span<double const> values, std::span<double const> shift)
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            double const d = values[i] - shift[i];
            first[i] += d;
            second[i] += d * d;
        }
    }

    void merge(PointSums const& other)
    {
        for (std::size_t i = 0; i < first.size(); ++i) {
            first[i].merge(other.first[i]);
            second[i].merge(other.second[i]);
        }
    }
};

}  // namespace detail

/// Spectrum of realization `index` (0-based, relative to config.first_index).
inline Spectrum single_realization(EnsembleConfig const& config, std::size_t index)
{
    config.validate();
    if (index >= config.realizations)
        throw InvalidArgument("realization index " + std::to_string(index) + " out of range (N = " +
                              std::to_string(config.realizations) + ")");
    return detail::realization_spectrum(config, build_ideal(config.grating),
                                        child_seed(config.master_seed, config.first_index + index));
}

/// Runs every realization (build_ideal -> perturb -> numeric spectrum) and reduces the
/// spectra pointwise.
///
/// Realizations are grouped into fixed blocks of 16 that are summed serially; blocks are
/// computed concurrently and merged in block order, so the result is bit-identical for
/// any thread count.
inline EnsembleStatistics run_ensemble(EnsembleConfig const& config, unsigned threads = 1)
{
    config.validate();
    constexpr std::size_t block = 16;
    std::size_t const n = config.realizations;
    std::size_t const points = config.grid.size();
    DomainStructure const ideal = build_ideal(config.grating);

    EnsembleStatistics stats;
    stats.grid = config.grid;
    stats.seeds.resize(n);
    for (std::size_t r = 0; r < n; ++r)
        stats.seeds[r] = child_seed(config.master_seed, config.first_index + r);
    stats.peaks.resize(n);

    Spectrum const first = detail::realization_spectrum(config, ideal, stats.seeds[0]);
    std::vector<double> const shift = first.density;
    stats.peaks[0] = peak_metrics(first);

    detail::PointSums total(points);
    total.add(first.density, shift);

    std::size_t const blocks = (n - 1 + block - 1) / block;
    std::size_t const wave = std::max<std::size_t>(1, resolve_threads(threads));
    for (std::size_t wave_start = 0; wave_start < blocks; wave_start += wave) {
        std::size_t const wave_size = std::min(wave, blocks - wave_start);
        std::vector<detail::PointSums> partial(wave_size, detail::PointSums(points));
        parallel_for(wave_size, threads, [&](std::size_t w) {
            std::size_t const b = wave_start + w;
            std::size_t const begin = 1 + b * block;
            std::size_t const end = std::min(n, begin + block);
            for (std::size_t r = begin; r < end; ++r) {
                Spectrum const s = detail::realization_spectrum(config, ideal, stats.seeds[r]);
                partial[w].add(s.density, shift);
                stats.peaks[r] = peak_metrics(s);
            }
        });
        for (auto const& p : partial)
            total.merge(p);
    }

    double const count = static_cast<double>(n);
    stats.mean.resize(points);
    stats.stddev.resize(points);
    stats.sem.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        double const d1 = total.first[i].value();
        double const d2 = total.second[i].value();
        stats.mean[i] = std::max(0.0, shift[i] + d1 / count);
        double const var = n > 1 ? std::max(0.0, (d2 - d1 * d1 / count) / (count - 1.0)) : 0.0;
        stats.stddev[i] = std::sqrt(var);
        stats.sem[i] = stats.stddev[i] / std::sqrt(count);
    }
    return stats;
}

/// Mean spectrum as a Spectrum value carrying the ensemble's provenance.
inline Spectrum mean_spectrum(EnsembleStatistics const& stats, EnsembleConfig const& config)
{
    Spectrum s;
    s.wavelength_um = stats.grid;
    s.density = stats.mean;
    s.set("method", "ensemble_mean");
    s.set("process", config.process.digest());
    s.set("grating", digest(config.grating));
    s.set("realizations", std::to_string(stats.count()));
    s.set("master_seed", std::to_string(config.master_seed));
    return s;
}

struct WavelengthInterval {
    double min_um;
    double max_um;

    bool contains(double x) const noexcept { return x >= min_um && x <= max_um; }
};

/// Index of the largest value on grid points inside `window`.
inline std::size_t argmax_in(std::span<double const> grid, std::span<double const> values,
                             WavelengthInterval window)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (window.contains(grid[i]) && (!best || values[i] > values[*best]))
            best = i;
    if (!best)
        throw InvalidArgument("peak window contains no grid point");
    return *best;
}

struct ReductionSummary {
    /// Ensemble-mean QPM peak over the reference QPM peak.
    double peak_ratio;
    double peak_ratio_sem;
    double qpm_peak_um;
    /// NBPM peak over QPM peak of the mean spectrum (when an NBPM window was given).
    std::optional<double> nbpm_to_qpm;
    std::optional<double> nbpm_to_qpm_sem;
    std::optional<double> nbpm_peak_um;
};

/// Compares an ensemble against the sigma = 0 reference spectrum on the same grid.
inline ReductionSummary reduction_summary(EnsembleStatistics const& stats, Spectrum const& reference,
                                          WavelengthInterval qpm_window,
                                          std::optional<WavelengthInterval> nbpm_window = std::nullopt)
{
    if (reference.wavelength_um != stats.grid)
        throw InvalidArgument("reference spectrum and ensemble use different grids");
    std::size_t const q = argmax_in(stats.grid, stats.mean, qpm_window);
    std::size_t const q_ref = argmax_in(reference.wavelength_um, reference.density, qpm_window);
    double const ref_peak = reference.density[q_ref];
    if (!(ref_peak > 0.0))
        throw UndefinedValue("reference QPM peak is zero");

    ReductionSummary out{stats.mean[q] / ref_peak, stats.sem[q] / ref_peak, stats.grid[q], {}, {}, {}};
    if (nbpm_window) {
        std::size_t const b = argmax_in(stats.grid, stats.mean, *nbpm_window);
        double const ratio = stats.mean[b] / stats.mean[q];
        double const rel_b = stats.sem[b] / stats.mean[b];
        double const rel_q = stats.sem[q] / stats.mean[q];
        out.nbpm_to_qpm = ratio;
        out.nbpm_to_qpm_sem = ratio * std::sqrt(rel_b * rel_b + rel_q * rel_q);
        out.nbpm_peak_um = stats.grid[b];
    }
    return out;
}

/// CSV: metadata header lines, then wavelength_nm,mean_S,std_S,sem_S.
inline void write_ensemble_csv(std::ostream& out, EnsembleStatistics const& stats,
                               std::vector<std::pair<std::string, std::string>> const& metadata)
{
    for (auto const& [k, v] : metadata)
        out << "# " << k << '=' << v << '\n';
    out << "wavelength_nm,mean_S,std_S,sem_S\n";
    for (std::size_t i = 0; i < stats.grid.size(); ++i)
        out << format_number(stats.grid[i] * 1e3) << ',' << format_number(stats.mean[i]) << ','
            << format_number(stats.stddev[i]) << ',' << format_number(stats.sem[i]) << '\n';
}

/// Sidecar listing every child seed: "# master_seed=..", header "index,seed".
inline void write_seed_sidecar(std::ostream& out, EnsembleStatistics const& stats, EnsembleConfig const& config)
{
    out << "# master_seed=" << config.master_seed << '\n';
    out << "# first_index=" << config.first_index << '\n';
    out << "# seed_derivation=splitmix64(splitmix64(master) ^ index * 0xD1B54A32D192ED03)\n";
    out << "index,seed\n";
    for (std::size_t r = 0; r < stats.seeds.size(); ++r)
        out << config.first_index + r << ',' << stats.seeds[r] << '\n';
}

}  // namespace qpm
