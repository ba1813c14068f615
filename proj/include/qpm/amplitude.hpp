#pragma once

// Low-gain biphoton amplitude B(omega) and spectral power density S = |B|^2 / 2 pi.
//
// Two independent routes are provided. amplitude_analytic sums the truncated Fourier
// series of an ideal periodic grating in closed form; amplitude_numeric integrates the
// piecewise-constant profile of an arbitrary DomainStructure exactly. For ideal gratings
// they describe the same structure and serve as oracles for one another.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpm/dispersion.hpp"
#include "qpm/error.hpp"
#include "qpm/grating.hpp"
#include "qpm/parallel.hpp"
#include "qpm/summation.hpp"

namespace qpm {

using Complex = std::complex<double>;

struct ProcessConfig {
    SellmeierModel dispersion = kato_takaoka_ktp();
    PhaseMismatchSpec mismatch;
    double kappa = 1.0;
    /// Coupling of a second process when cross-process ratios are predicted.
    std::optional<double> kappa_prime;

    void validate() const
    {
        dispersion.validate();
        mismatch.validate();
        if (!(kappa > 0.0))
            throw ConfigError("coupling constant kappa must be positive");
        if (kappa_prime && !(*kappa_prime > 0.0))
            throw ConfigError("coupling constant kappa_prime must be positive");
    }

    std::string digest() const
    {
        std::ostringstream s;
        s << std::setprecision(9) << dispersion.name << ";pump=" << mismatch.pump.wavelength_um << "um/"
          << to_string(mismatch.pump.axis) << ";signal=" << to_string(mismatch.signal_axis)
          << ";idler=" << to_string(mismatch.idler_axis) << ";eps=" << static_cast<int>(mismatch.sense)
          << ";kappa=" << kappa;
        return s.str();
    }
};

inline std::string digest(GratingSpec const& g)
{
    std::ostringstream s;
    s << std::setprecision(9) << "period=" << g.period_um << "um;D=" << g.duty_cycle << ";L=" << g.length_um
      << "um;sigma=" << g.sigma_um << "um(" << to_string(g.convention) << ")";
    return s.str();
}

/// Unnormalized sinc, sin(x)/x.
inline double sinc(double x) noexcept
{
    if (std::abs(x) < 1e-4) {
        double const x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// Integral of d(z) exp(i dk z) over the structure.
///
/// Long domains use the wall form (e^{i dk z_{j+1}} - e^{i dk z_j}) / (i dk) with phasors
/// shared between neighbours; domains with |dk l| <= 1e-3 switch to the cancellation-free
/// form l sinc(dk l / 2) e^{i dk z_mid}. For |dk| L < 1e-8 each domain contributes its
/// signed length l_j e^{i dk z_mid} (the sinc factor differs from 1 by < 1e-17).
inline Complex domain_integral(DomainStructure const& structure, double dk)
{
    auto const z = structure.boundaries();
    std::size_t const domains = structure.domain_count();
    if (std::abs(dk) * structure.length_um() < 1e-8) {
        CompensatedSum re, im;
        for (std::size_t j = 0; j < domains; ++j) {
            Complex const term = structure.sign(j) * (z[j + 1] - z[j]) * std::polar(1.0, dk * 0.5 * (z[j] + z[j + 1]));
            re += term.real();
            im += term.imag();
        }
        return {re.value(), im.value()};
    }
    Complex walls{0.0, 0.0};
    Complex short_domains{0.0, 0.0};
    Complex left = std::polar(1.0, dk * z[0]);
    for (std::size_t j = 0; j < domains; ++j) {
        double const s = structure.sign(j);
        double const width = z[j + 1] - z[j];
        Complex const right = std::polar(1.0, dk * z[j + 1]);
        if (std::abs(dk * width) > 1e-3)
            walls += s * (right - left);
        else
            short_domains += s * width * sinc(0.5 * dk * width) * std::polar(1.0, dk * 0.5 * (z[j] + z[j + 1]));
        left = right;
    }
    return walls / Complex(0.0, dk) + short_domains;
}

inline Complex amplitude_numeric(double signal_um, DomainStructure const& structure, ProcessConfig const& config)
{
    auto const k = wavevectors(config.dispersion, config.mismatch, signal_um);
    double const dk = phase_mismatch(config.mismatch, k);
    double const L = structure.length_um();
    return Complex(0.0, config.kappa) * std::polar(1.0, (k.signal + k.idler) * L) * domain_integral(structure, dk);
}

/// Truncated Fourier-series amplitude of the ideal grating produced by build_ideal.
///
/// Sums harmonics |m| <= truncation (the m = 0 term uses 2D - 1). The factor
/// exp(i pi m (L/Lambda - D)) places each harmonic relative to a positive domain starting
/// at z = 0; it is 1 for a grating symmetric about the crystal center.
inline Complex amplitude_analytic(double signal_um, GratingSpec const& grating, ProcessConfig const& config,
                                  int truncation)
{
    if (truncation < 1)
        throw InvalidArgument("Fourier truncation order must be at least 1");
    if (grating.sigma_um != 0.0)
        throw InvalidArgument("analytic amplitude models the unperturbed grating (sigma must be 0)");
    grating.validate();
    auto const k = wavevectors(config.dispersion, config.mismatch, signal_um);
    double const dk = phase_mismatch(config.mismatch, k);
    double const L = grating.length_um;
    double const offset = std::fmod(L / grating.period_um - grating.duty_cycle, 2.0);

    Complex series{0.0, 0.0};
    for (int m = -truncation; m <= truncation; ++m) {
        double const c = fourier_coefficient(m, grating.duty_cycle);
        if (c == 0.0)
            continue;
        double const x = 0.5 * (dk + grating_vector(m, grating.period_um)) * L;
        series += c * sinc(x) * std::polar(1.0, std::numbers::pi * m * offset);
    }
    return Complex(0.0, config.kappa * L) * std::polar(1.0, (0.5 * dk + k.signal + k.idler) * L) * series;
}

struct BogoliubovCoefficients {
    Complex A;
    Complex B;
    Complex C;
    Complex D_out;
};

/// Input-output coefficients of the low-gain solution at one signal wavelength.
inline BogoliubovCoefficients bogoliubov(double signal_um, DomainStructure const& structure,
                                         ProcessConfig const& config)
{
    auto const k = wavevectors(config.dispersion, config.mismatch, signal_um);
    double const eps = sign_of(config.mismatch.sense);
    double const L = structure.length_um();
    Complex const B = amplitude_numeric(signal_um, structure, config);
    return {std::polar(1.0, k.signal * L), B, std::conj(B) * std::polar(1.0, (k.signal + (eps - 1.0) * k.idler) * L),
            std::polar(1.0, -eps * k.idler * L)};
}

inline double spectral_density(Complex amplitude) noexcept
{
    return std::norm(amplitude) / (2.0 * std::numbers::pi);
}

enum class Method { analytic, numeric };

inline std::string_view to_string(Method m) noexcept
{
    return m == Method::analytic ? "analytic" : "numeric";
}

inline Method parse_method(std::string_view text)
{
    if (text == "analytic")
        return Method::analytic;
    if (text == "numeric")
        return Method::numeric;
    throw ConfigError("unknown method '" + std::string(text) + "' (expected analytic or numeric)");
}

struct Spectrum {
    std::vector<double> wavelength_um;
    std::vector<double> density;
    /// Ordered key=value provenance, written as CSV header lines.
    std::vector<std::pair<std::string, std::string>> metadata;

    std::size_t size() const noexcept { return wavelength_um.size(); }

    void set(std::string key, std::string value)
    {
        for (auto& [k, v] : metadata)
            if (k == key) {
                v = std::move(value);
                return;
            }
        metadata.emplace_back(std::move(key), std::move(value));
    }

    std::optional<std::string> get(std::string_view key) const
    {
        for (auto const& [k, v] : metadata)
            if (k == key)
                return v;
        return std::nullopt;
    }
};

inline void validate_grid(std::span<double const> grid)
{
    if (grid.empty())
        throw InvalidArgument("wavelength grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
            throw InvalidArgument("wavelength grid contains a non-positive value");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw InvalidArgument("wavelength grid must be strictly increasing");
    }
}

/// Evenly spaced grid of `points` wavelengths over [first, last] (um).
inline std::vector<double> linear_grid(double first_um, double last_um, std::size_t points)
{
    if (points < 2 || !(last_um > first_um))
        throw InvalidArgument("linear grid needs at least 2 points and last > first");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = first_um + (last_um - first_um) * static_cast<double>(i) / static_cast<double>(points - 1);
    g.back() = last_um;
    return g;
}

/// Numeric spectrum of an explicit structure; grid points are evaluated concurrently.
inline Spectrum compute_spectrum(std::span<double const> grid, DomainStructure const& structure,
                                 ProcessConfig const& config, unsigned threads = 1)
{
    validate_grid(grid);
    Spectrum s;
    s.wavelength_um.assign(grid.begin(), grid.end());
    s.density.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        s.density[i] = spectral_density(amplitude_numeric(grid[i], structure, config));
    });
    s.set("method", "numeric");
    s.set("process", config.digest());
    return s;
}

struct SpectrumOptions {
    Method method = Method::numeric;
    int truncation = 50;
    unsigned threads = 1;
};

/// Spectrum of a grating spec. The numeric method builds the ideal structure and, when
/// sigma > 0, perturbs it with a NormalStream seeded by spec.seed.
inline Spectrum compute_spectrum(std::span<double const> grid, GratingSpec const& grating,
                                 ProcessConfig const& config, SpectrumOptions const& options = {})
{
    validate_grid(grid);
    grating.validate();
    Spectrum s;
    if (options.method == Method::analytic) {
        if (options.truncation < 1)
            throw InvalidArgument("Fourier truncation order must be at least 1");
        if (grating.sigma_um != 0.0)
            throw InvalidArgument("analytic spectra require an unperturbed grating (sigma = 0)");
        s.wavelength_um.assign(grid.begin(), grid.end());
        s.density.resize(grid.size());
        parallel_for(grid.size(), options.threads, [&](std::size_t i) {
            s.density[i] = spectral_density(amplitude_analytic(grid[i], grating, config, options.truncation));
        });
        s.set("method", "analytic");
        s.set("process", config.digest());
        s.set("truncation", std::to_string(options.truncation));
    } else {
        DomainStructure structure = build_ideal(grating);
        if (grating.sigma_um > 0.0) {
            NormalStream rng(grating.seed);
            structure = perturb(structure, grating.boundary_sigma_um(), rng).structure;
        }
        s = compute_spectrum(grid, structure, config, options.threads);
    }
    s.set("grating", digest(grating));
    if (grating.sigma_um > 0.0)
        s.set("seed", std::to_string(grating.seed));
    return s;
}

/// Edges of the cells used for integration and resampling: midpoints between samples,
/// extended by half a spacing past each end.
inline std::vector<double> cell_edges(std::span<double const> grid)
{
    std::size_t const n = grid.size();
    std::vector<double> edges(n + 1);
    if (n == 1) {
        edges = {grid[0], grid[0]};
        return edges;
    }
    for (std::size_t i = 1; i < n; ++i)
        edges[i] = 0.5 * (grid[i - 1] + grid[i]);
    edges[0] = grid[0] - 0.5 * (grid[1] - grid[0]);
    edges[n] = grid[n - 1] + 0.5 * (grid[n - 1] - grid[n - 2]);
    return edges;
}

/// Integral of S over wavelength (um) with the cell rule of cell_edges.
inline double integrate(Spectrum const& s)
{
    auto const edges = cell_edges(s.wavelength_um);
    CompensatedSum total;
    for (std::size_t i = 0; i < s.size(); ++i)
        total += s.density[i] * (edges[i + 1] - edges[i]);
    return total.value();
}

enum class ResolutionKernel { top_hat, gaussian };

/// Broadens a spectrum by a unit-area instrument kernel of the given FWHM.
///
/// Each sample's mass S_j * cell_j is spread over the output cells in proportion to the
/// kernel's overlap with each cell, renormalized to the cells that exist, so the
/// integral of the spectrum is preserved exactly (up to rounding) including at the edges.
inline Spectrum convolve_resolution(Spectrum const& input, double fwhm_nm,
                                    ResolutionKernel kernel = ResolutionKernel::top_hat)
{
    if (!(fwhm_nm >= 0.0))
        throw InvalidArgument("resolution bandwidth must be non-negative");
    if (fwhm_nm == 0.0)
        return input;
    double const width_um = fwhm_nm * 1e-3;
    auto const& grid = input.wavelength_um;
    if (grid.size() < 2)
        throw InvalidArgument("resolution broadening needs at least two grid points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] - grid[i - 1] < width_um / 4.0)) {
            std::ostringstream msg;
            msg << "grid spacing " << (grid[i] - grid[i - 1]) * 1e3 << " nm near " << grid[i] * 1e3
                << " nm is not below a quarter of the " << fwhm_nm << " nm bandwidth";
            throw InvalidArgument(msg.str());
        }

    auto const edges = cell_edges(grid);
    double const gauss_sigma = width_um / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    double const reach = kernel == ResolutionKernel::top_hat ? 0.5 * width_um : 6.0 * gauss_sigma;
    auto cumulative = [&](double x, double center) {
        if (kernel == ResolutionKernel::top_hat)
            return std::clamp((x - center) / width_um + 0.5, 0.0, 1.0);
        return 0.5 * std::erfc(-(x - center) / (std::numbers::sqrt2 * gauss_sigma));
    };

    std::size_t const n = grid.size();
    std::vector<CompensatedSum> mass(n);
    std::vector<double> weights;
    for (std::size_t j = 0; j < n; ++j) {
        double const center = grid[j];
        double const source = input.density[j] * (edges[j + 1] - edges[j]);
        auto const lo = std::upper_bound(edges.begin(), edges.end(), center - reach) - edges.begin();
        auto const hi = std::lower_bound(edges.begin(), edges.end(), center + reach) - edges.begin();
        std::size_t const first = lo > 0 ? static_cast<std::size_t>(lo - 1) : 0;
        std::size_t const last = std::min<std::size_t>(static_cast<std::size_t>(hi), n);
        weights.assign(last - first, 0.0);
        double total = 0.0;
        for (std::size_t i = first; i < last; ++i) {
            double const w = cumulative(edges[i + 1], center) - cumulative(edges[i], center);
            weights[i - first] = w;
            total += w;
        }
        for (std::size_t i = first; i < last; ++i)
            mass[i] += source * weights[i - first] / total;
    }

    Spectrum out = input;
    for (std::size_t i = 0; i < n; ++i)
        out.density[i] = mass[i].value() / (edges[i + 1] - edges[i]);
    std::ostringstream bw;
    bw << std::setprecision(9) << fwhm_nm;
    out.set("resolution_nm", bw.str());
    out.set("resolution_kernel", kernel == ResolutionKernel::top_hat ? "top_hat" : "gaussian");
    return out;
}

struct SidePeak {
    double wavelength_um;
    double density;
};

struct PeakMetrics {
    double wavelength_um;
    double density;
    double fwhm_nm;
    std::vector<SidePeak> side_peaks;
};

/// Main peak by grid scan, FWHM from linearly interpolated half-maximum crossings, and
/// every other local maximum above side_floor * peak.
///
/// Returns nullopt for a flat spectrum. When a half-maximum crossing lies beyond the
/// grid, the grid end is used, which underestimates the width.
inline std::optional<PeakMetrics> peak_metrics(Spectrum const& s, double side_floor = 0.01)
{
    std::size_t const n = s.size();
    if (n < 3)
        throw InvalidArgument("peak metrics need at least 3 grid points");
    auto const& x = s.wavelength_um;
    auto const& y = s.density;
    auto const [min_it, max_it] = std::minmax_element(y.begin(), y.end());
    if (!(*max_it > *min_it))
        return std::nullopt;
    std::size_t const top = static_cast<std::size_t>(max_it - y.begin());
    double const peak = *max_it;
    double const half = 0.5 * peak;

    double left = x.front();
    for (std::size_t i = top; i > 0; --i)
        if (y[i - 1] < half) {
            left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]);
            break;
        }
    double right = x.back();
    for (std::size_t i = top; i + 1 < n; ++i)
        if (y[i + 1] < half) {
            right = x[i] + (y[i] - half) * (x[i + 1] - x[i]) / (y[i] - y[i + 1]);
            break;
        }

    PeakMetrics m{x[top], peak, (right - left) * 1e3, {}};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (i == top)
            continue;
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > side_floor * peak && y[i] < peak)
            m.side_peaks.push_back({x[i], y[i]});
    }
    return m;
}

inline std::string format_number(double value)
{
    std::ostringstream s;
    s << std::setprecision(9) << value;
    return s.str();
}

/// CSV: "# key=value" metadata lines, header "wavelength_nm,S_relative", 9 significant digits.
inline void write_spectrum_csv(std::ostream& out, Spectrum const& s)
{
    for (auto const& [k, v] : s.metadata)
        out << "# " << k << '=' << v << '\n';
    out << "wavelength_nm,S_relative\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_number(s.wavelength_um[i] * 1e3) << ',' << format_number(s.density[i]) << '\n';
}

/// Reads a two-column (wavelength_nm, value) CSV; extra columns are ignored.
inline Spectrum read_spectrum_csv(std::istream& in)
{
    Spectrum s;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            auto const eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                s.set(key, line.substr(eq + 1));
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("wavelength_nm,", 0) != 0)
                throw ConfigError("spectrum CSV line " + std::to_string(line_no) +
                                  ": expected header starting with 'wavelength_nm,'");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ','))
            throw ConfigError("spectrum CSV line " + std::to_string(line_no) + ": expected two columns");
        try {
            s.wavelength_um.push_back(std::stod(a) * 1e-3);
            s.density.push_back(std::stod(b));
        } catch (std::exception const&) {
            throw ConfigError("spectrum CSV line " + std::to_string(line_no) + ": not a number");
        }
    }
    if (!header_seen)
        throw ConfigError("spectrum CSV: missing header line");
    try {
        validate_grid(s.wavelength_um);
    } catch (InvalidArgument const& e) {
        throw ConfigError(std::string("spectrum CSV: ") + e.what());
    }
    return s;
}

}  // namespace qpm
