#pragma once

// Phase-matching root solvers, cross-process ratio predictions, pair-rate diagnostics
// and disorder-parameter fitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpm/amplitude.hpp"
#include "qpm/dispersion.hpp"
#include "qpm/ensemble.hpp"
#include "qpm/error.hpp"
#include "qpm/grating.hpp"
#include "qpm/parallel.hpp"

namespace qpm {

inline constexpr double root_tolerance = 1e-9;  // rad/um
inline constexpr double default_scan_step_um = 1e-4;

struct PhaseMatchSolution {
    double signal_um;
    double idler_um;
    /// Harmonic m with dk + K_m = 0; 0 for birefringent phase matching.
    int order;
    /// |dk + K_m| re-evaluated at the returned wavelength.
    double residual;
};

namespace detail {

inline std::vector<double> scan_points(WavelengthInterval window, double step)
{
    if (!(window.max_um > window.min_um) || !(window.min_um > 0.0))
        throw InvalidArgument("search window must satisfy 0 < min < max");
    if (!(step > 0.0))
        throw InvalidArgument("scan step must be positive");
    auto const intervals = static_cast<std::size_t>(std::ceil((window.max_um - window.min_um) / step));
    std::vector<double> x(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        x[i] = std::min(window.max_um, window.min_um + static_cast<double>(i) * step);
    return x;
}

/// Bisection on a bracket [a, b] with f(a), f(b) of opposite sign.
inline double bisect(std::function<double(double)> const& f, double a, double b, double fa)
{
    double best = a;
    double best_value = std::abs(fa);
    for (int it = 0; it < 200; ++it) {
        double const mid = 0.5 * (a + b);
        double const fm = f(mid);
        if (std::abs(fm) < best_value) {
            best = mid;
            best_value = std::abs(fm);
        }
        if (fm == 0.0 || (std::abs(fm) < root_tolerance * 1e-3) || mid == a || mid == b)
            break;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return best;
}

/// First bracketed root of values[i] along x, refined by bisection on f.
inline std::optional<double> first_root(std::vector<double> const& x, std::vector<double> const& values,
                                        std::function<double(double)> const& f)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (values[i] == 0.0)
            return x[i];
        if (i + 1 < x.size() && (values[i] < 0.0) != (values[i + 1] < 0.0) && values[i + 1] != 0.0)
            return bisect(f, x[i], x[i + 1], values[i]);
    }
    return std::nullopt;
}

inline std::string describe(WavelengthInterval w)
{
    std::ostringstream s;
    s << '[' << w.min_um << ", " << w.max_um << "] um";
    return s.str();
}

}  // namespace detail

/// Forward-wave birefringent phase matching: the root of dk(lambda_s) = 0 in `window`.
inline PhaseMatchSolution find_nbpm(ProcessConfig const& config, WavelengthInterval window,
                                    double scan_step_um = default_scan_step_um)
{
    if (config.mismatch.sense != Propagation::forward)
        throw InvalidArgument("birefringent phase matching is solved for the forward process only");
    auto const f = [&](double s) { return phase_mismatch(config.dispersion, config.mismatch, s); };
    auto const x = detail::scan_points(window, scan_step_um);
    std::vector<double> values(x.size());
    std::transform(x.begin(), x.end(), values.begin(), f);
    auto const root = detail::first_root(x, values, f);
    if (!root)
        throw NoRootError("no sign change of the phase mismatch in " + detail::describe(window));
    double const residual = std::abs(f(*root));
    if (!(residual < root_tolerance))
        throw NoRootError("birefringent root did not converge below tolerance in " + detail::describe(window));
    return {*root, idler_wavelength(config.mismatch.pump.wavelength_um, *root), 0, residual};
}

struct OrderScan {
    int order;
    double min_mismatch;  // min over the window of dk + K_m
    double max_mismatch;
    std::optional<double> root_um;
};

struct QpmSearch {
    PhaseMatchSolution solution;
    /// Every scanned order, including the ones without a root.
    std::vector<OrderScan> orders;
};

struct OrderRange {
    int min_abs = 1;
    int max_abs = 15;
};

/// Quasi-phase matching dk + K_m = 0 for a grating of period `period_um`.
///
/// Orders are tried by increasing |m| (positive sign first); the first order with a
/// bracketed root in `window` wins. All scanned orders are reported.
inline QpmSearch find_qpm(double period_um, ProcessConfig const& config, WavelengthInterval window,
                          OrderRange range = {}, double scan_step_um = default_scan_step_um)
{
    if (range.min_abs < 1 || range.max_abs < range.min_abs)
        throw InvalidArgument("QPM order range must satisfy 1 <= min <= max");
    auto const dk = [&](double s) { return phase_mismatch(config.dispersion, config.mismatch, s); };
    auto const x = detail::scan_points(window, scan_step_um);
    std::vector<double> base(x.size());
    std::transform(x.begin(), x.end(), base.begin(), dk);

    QpmSearch search{};
    std::optional<PhaseMatchSolution> best;
    for (int a = range.min_abs; a <= range.max_abs; ++a) {
        for (int m : {a, -a}) {
            double const K = grating_vector(m, period_um);
            std::vector<double> values(base.size());
            std::transform(base.begin(), base.end(), values.begin(), [K](double v) { return v + K; });
            auto const f = [&](double s) { return dk(s) + K; };
            auto const [lo, hi] = std::minmax_element(values.begin(), values.end());
            OrderScan scan{m, *lo, *hi, detail::first_root(x, values, f)};
            if (scan.root_um && !best) {
                double const residual = std::abs(f(*scan.root_um));
                if (residual < root_tolerance)
                    best = PhaseMatchSolution{*scan.root_um,
                                              idler_wavelength(config.mismatch.pump.wavelength_um, *scan.root_um),
                                              m, residual};
            }
            search.orders.push_back(scan);
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no QPM order in |m| = " << range.min_abs << ".." << range.max_abs << " has a root in "
            << detail::describe(window) << "; dk + K_m extrema:";
        for (auto const& s : search.orders)
            msg << " m=" << s.order << ":[" << s.min_mismatch << ',' << s.max_mismatch << ']';
        throw NoRootError(msg.str());
    }
    search.solution = *best;
    return search;
}

/// Signal-wavelength window in which the NBPM root is searched for a given pump: every
/// signal whose idler still lies inside the dispersion model's validity window.
inline WavelengthInterval nbpm_search_window(SellmeierModel const& model, double pump_um)
{
    double const idler_max = model.window.max_um;
    double const lo = pump_um * idler_max / (idler_max - pump_um);
    return {lo * (1.0 + 1e-9), model.window.max_um};
}

struct NbpmCurvePoint {
    double pump_um;
    PhaseMatchSolution solution;
};

/// NBPM signal/idler wavelengths over a list of pump wavelengths.
inline std::vector<NbpmCurvePoint> nbpm_curve(ProcessConfig config, std::span<double const> pumps_um)
{
    std::vector<NbpmCurvePoint> curve;
    curve.reserve(pumps_um.size());
    for (double p : pumps_um) {
        config.mismatch.pump.wavelength_um = p;
        curve.push_back({p, find_nbpm(config, nbpm_search_window(config.dispersion, p))});
    }
    return curve;
}

struct PeakRatioPrediction {
    /// kappa1^2 / (kappa0^2 sinc^2(pi n D)), as printed with a DC coefficient of 2D.
    double printed;
    /// kappa1^2 (2D-1)^2 / (kappa0^2 [2 sin(pi n D)/(pi n)]^2), with the exact DC coefficient.
    double corrected;
};

/// Peak spectral density of the NBPM biphotons relative to the n-th order QPM biphotons.
inline PeakRatioPrediction peak_ratio_prediction(double duty_cycle, int n, double kappa_qpm, double kappa_nbpm)
{
    if (!(duty_cycle > 0.0 && duty_cycle < 1.0))
        throw InvalidArgument("duty cycle must lie in (0, 1)");
    if (n < 1)
        throw InvalidArgument("QPM order must be at least 1");
    if (!(kappa_qpm > 0.0) || !(kappa_nbpm > 0.0))
        throw InvalidArgument("coupling constants must be positive");
    double const x = std::numbers::pi * n * duty_cycle;
    double const s = sinc(x);
    double const c_n = fourier_coefficient(n, duty_cycle);
    if (std::abs(s) < 1e-15 || std::abs(c_n) < 1e-15)
        throw UndefinedValue("QPM harmonic vanishes for this duty cycle and order");
    double const kappa_ratio = (kappa_nbpm * kappa_nbpm) / (kappa_qpm * kappa_qpm);
    double const dc = 2.0 * duty_cycle - 1.0;
    return {kappa_ratio / (s * s), kappa_ratio * dc * dc / (c_n * c_n)};
}

/// alpha_2d = R_c / (tau_c R_s R_i); 1 for a classical random source.
inline double anticorrelation(double coincidence_rate, double signal_rate, double idler_rate,
                              double coincidence_window_s)
{
    if (coincidence_rate < 0.0 || signal_rate < 0.0 || idler_rate < 0.0)
        throw InvalidArgument("rates must be non-negative");
    if (!(coincidence_window_s > 0.0))
        throw InvalidArgument("coincidence window must be positive");
    double const denominator = coincidence_window_s * signal_rate * idler_rate;
    if (denominator == 0.0)
        throw UndefinedValue("anticorrelation parameter undefined: zero singles rate");
    return coincidence_rate / denominator;
}

/// Pair rates per mW of pump power; b = counter-propagating, f = co-propagating.
struct RateTable {
    double R_b = 0.0;
    double R_f = 0.0;
    double R_b_QPM = 0.0;
    double R_f_QPM = 0.0;
    double R_b_NBPM = 0.0;
    double R_f_NBPM = 0.0;
};

inline constexpr std::array<char const*, 6> rate_field_names{"R_b", "R_f", "R_b_QPM", "R_f_QPM", "R_b_NBPM",
                                                             "R_f_NBPM"};

struct GammaRatios {
    double gamma1;  // R_b,NBPM / R_f,NBPM
    double gamma2;  // R_b / R_f
    double gamma3;  // QPM/NBPM proportions, backward over forward, normalized to the single domain
};

namespace detail {

inline double checked_ratio(double num, double den, char const* field)
{
    if (den == 0.0)
        throw UndefinedValue(std::string("ratio undefined: ") + field + " is zero");
    return num / den;
}

inline double qpm_nbpm_proportion(RateTable const& t)
{
    double const backward = checked_ratio(t.R_b_QPM, t.R_b_NBPM, "R_b_NBPM");
    double const forward = checked_ratio(t.R_f_QPM, t.R_f_NBPM, "R_f_NBPM");
    return checked_ratio(backward, forward, "R_f_QPM");
}

}  // namespace detail

inline GammaRatios gamma_ratios(RateTable const& grating, RateTable const& single_domain)
{
    double const reference = detail::qpm_nbpm_proportion(single_domain);
    if (reference == 0.0)
        throw UndefinedValue("ratio undefined: single-domain R_b_QPM is zero");
    return {detail::checked_ratio(grating.R_b_NBPM, grating.R_f_NBPM, "R_f_NBPM"),
            detail::checked_ratio(grating.R_b, grating.R_f, "R_f"),
            detail::qpm_nbpm_proportion(grating) / reference};
}

struct LabeledRates {
    std::string label;
    RateTable rates;
};

/// Reads rate tables from CSV whose header holds the six field names in any order,
/// optionally preceded by a "label" column.
inline std::vector<LabeledRates> read_rate_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> columns;
    std::vector<LabeledRates> rows;
    auto split = [](std::string const& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ','))
            out.push_back(cell.substr(cell.find_first_not_of(' ') == std::string::npos ? 0
                                                                                         : cell.find_first_not_of(' ')));
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        auto cells = split(line);
        if (columns.empty()) {
            columns = cells;
            for (auto const* name : rate_field_names)
                if (std::find(columns.begin(), columns.end(), name) == columns.end())
                    throw ConfigError("rate CSV header is missing column '" + std::string(name) + "'");
            for (auto const& c : columns)
                if (c != "label" && std::find_if(rate_field_names.begin(), rate_field_names.end(),
                                                 [&](char const* n) { return c == n; }) == rate_field_names.end())
                    throw ConfigError("rate CSV header has unknown column '" + c + "'");
            continue;
        }
        if (cells.size() != columns.size())
            throw ConfigError("rate CSV line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns.size()) + " cells");
        LabeledRates row{"row" + std::to_string(rows.size() + 1), {}};
        double* fields[6] = {&row.rates.R_b,     &row.rates.R_f,      &row.rates.R_b_QPM,
                             &row.rates.R_f_QPM, &row.rates.R_b_NBPM, &row.rates.R_f_NBPM};
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == "label") {
                row.label = cells[c];
                continue;
            }
            auto const idx = static_cast<std::size_t>(
                std::find_if(rate_field_names.begin(), rate_field_names.end(),
                             [&](char const* n) { return columns[c] == n; }) -
                rate_field_names.begin());
            try {
                *fields[idx] = std::stod(cells[c]);
            } catch (std::exception const&) {
                throw ConfigError("rate CSV line " + std::to_string(line_no) + ": column '" + columns[c] +
                                  "' is not a number");
            }
            if (*fields[idx] < 0.0)
                throw ConfigError("rate CSV line " + std::to_string(line_no) + ": negative rate");
        }
        rows.push_back(std::move(row));
    }
    if (columns.empty())
        throw ConfigError("rate CSV: missing header");
    return rows;
}

struct Bounds {
    double lo;
    double hi;
};

struct FitOptions {
    Bounds duty_cycle{0.5, 0.9};
    Bounds sigma_um{0.0, 1.0};
    /// Realizations per objective evaluation; seeds child_seed(seed, 0..N-1) every time.
    std::size_t realizations = 16;
    std::uint64_t seed = 1;
    /// Coarse grid points per axis.
    std::size_t coarse_points = 9;
    /// Maximum refinement sweeps; stops early once a sweep moves neither parameter.
    std::size_t sweeps = 6;
    /// Refinements started from the best coarse nodes; the lowest residual wins.
    std::size_t starts = 3;
    /// Golden-section stops when the bracket is below tolerance * (hi - lo).
    double tolerance = 1e-3;
    unsigned threads = 1;
};

struct DisorderFit {
    double duty_cycle;
    double sigma_um;
    double residual;
    std::size_t evaluations;
    std::size_t realizations;
    std::uint64_t seed;
    double duty_cycle_step;
    double sigma_step_um;
};

namespace detail {

inline std::vector<double> normalized(std::span<double const> v)
{
    double const peak = *std::max_element(v.begin(), v.end());
    if (!(peak > 0.0) || !std::isfinite(peak))
        throw FitError("simulated mean spectrum has no positive finite peak");
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out)
        x /= peak;
    return out;
}

}  // namespace detail

/// Sum of squared differences between the unit-peak measured spectrum and the unit-peak
/// ensemble mean simulated at (duty_cycle, sigma) with the option's fixed seed set.
inline double fit_objective(Spectrum const& measured, GratingSpec base, ProcessConfig const& process,
                            FitOptions const& options, double duty_cycle, double sigma_um)
{
    base.duty_cycle = duty_cycle;
    base.sigma_um = sigma_um;
    EnsembleConfig cfg{base, process, measured.wavelength_um, options.realizations, options.seed, 0};
    auto const stats = run_ensemble(cfg, 1);
    auto const sim = detail::normalized(stats.mean);
    CompensatedSum sum;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        double const d = measured.density[i] - sim[i];
        sum += d * d;
    }
    double const r = sum.value();
    if (!std::isfinite(r))
        throw FitError("fit objective is not finite");
    return r;
}

/// Least-squares estimate of (D, sigma) from a measured spectrum.
///
/// A coarse grid over the bounds (evaluated concurrently) picks a start; each sweep then
/// refines D and sigma in turn by golden-section search within one coarse step of the
/// incumbent, until a sweep moves neither parameter. Refinement runs from the `starts`
/// best coarse nodes since D and sigma trade off along a narrow valley.
inline DisorderFit fit_disorder(Spectrum const& measured, GratingSpec const& base, ProcessConfig const& process,
                                FitOptions const& options)
{
    validate_grid(measured.wavelength_um);
    if (measured.density.size() != measured.wavelength_um.size())
        throw InvalidArgument("measured spectrum has mismatched columns");
    double const peak = *std::max_element(measured.density.begin(), measured.density.end());
    if (std::abs(peak - 1.0) > 1e-6)
        throw InvalidArgument("measured spectrum must be normalized to unit peak");
    auto const& d = options.duty_cycle;
    auto const& s = options.sigma_um;
    if (!(d.lo > 0.0 && d.hi < 1.0 && d.lo < d.hi))
        throw InvalidArgument("duty-cycle bounds must satisfy 0 < lo < hi < 1");
    if (!(s.lo >= 0.0 && s.lo < s.hi))
        throw InvalidArgument("sigma bounds must satisfy 0 <= lo < hi");
    if (options.coarse_points < 2 || options.realizations < 1 || options.starts < 1)
        throw InvalidArgument("fit needs at least 2 coarse points per axis, 1 realization and 1 start");

    std::size_t evaluations = 0;
    auto objective = [&](double duty, double sigma) {
        ++evaluations;
        return fit_objective(measured, base, process, options, duty, sigma);
    };

    std::size_t const n = options.coarse_points;
    double const d_step = (d.hi - d.lo) / static_cast<double>(n - 1);
    double const s_step = (s.hi - s.lo) / static_cast<double>(n - 1);
    std::vector<double> coarse(n * n);
    parallel_for(n * n, options.threads, [&](std::size_t k) {
        double const duty = d.lo + d_step * static_cast<double>(k / n);
        double const sigma = s.lo + s_step * static_cast<double>(k % n);
        coarse[k] = fit_objective(measured, base, process, options, duty, sigma);
    });
    evaluations += n * n;
    std::vector<std::size_t> order(coarse.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return coarse[x] < coarse[y]; });

    constexpr double inv_phi = 0.6180339887498949;
    auto golden = [&](double lo, double hi, double span, auto&& eval) {
        double a = lo, b = hi;
        double c = b - inv_phi * (b - a);
        double e = a + inv_phi * (b - a);
        double fc = eval(c), fe = eval(e);
        while (b - a > options.tolerance * span) {
            if (fc <= fe) {
                b = e;
                e = c;
                fe = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + inv_phi * (b - a);
                fe = eval(e);
            }
        }
        return fc <= fe ? std::pair{c, fc} : std::pair{e, fe};
    };

    double best_d = 0.0, best_s = 0.0;
    double best_r = std::numeric_limits<double>::infinity();
    std::size_t const starts = std::min(options.starts, order.size());
    for (std::size_t start = 0; start < starts; ++start) {
        std::size_t const k = order[start];
        double cur_d = d.lo + d_step * static_cast<double>(k / n);
        double cur_s = s.lo + s_step * static_cast<double>(k % n);
        double cur_r = coarse[k];
        for (std::size_t sweep = 0; sweep < options.sweeps; ++sweep) {
            double const prev_d = cur_d;
            double const prev_s = cur_s;
            auto const [dx, dr] = golden(std::max(d.lo, cur_d - d_step), std::min(d.hi, cur_d + d_step),
                                         d.hi - d.lo, [&](double x) { return objective(x, cur_s); });
            if (dr < cur_r) {
                cur_d = dx;
                cur_r = dr;
            }
            auto const [sx, sr] = golden(std::max(s.lo, cur_s - s_step), std::min(s.hi, cur_s + s_step),
                                         s.hi - s.lo, [&](double x) { return objective(cur_d, x); });
            if (sr < cur_r) {
                cur_s = sx;
                cur_r = sr;
            }
            if (std::abs(cur_d - prev_d) <= options.tolerance * (d.hi - d.lo) &&
                std::abs(cur_s - prev_s) <= options.tolerance * (s.hi - s.lo))
                break;
        }
        if (cur_r < best_r) {
            best_d = cur_d;
            best_s = cur_s;
            best_r = cur_r;
        }
    }
    return {best_d, best_s, best_r, evaluations, options.realizations, options.seed, d_step, s_step};
}

}  // namespace qpm
