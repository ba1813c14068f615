#pragma once

// Pinned scenario configurations for the published figure panels.

#include <string>
#include <string_view>
#include <vector>

#include "qpm/analysis.hpp"
#include "qpm/error.hpp"
#include "qpm/scenario.hpp"

namespace qpm {

enum class RunKind { spectrum, ensemble, nbpm_curve };

struct RecipeRun {
    std::string label;
    RunKind kind;
    ScenarioConfig config;
    /// Pump wavelengths for nbpm_curve runs.
    std::vector<double> pumps_um;
};

struct Recipe {
    std::string name;
    std::string description;
    std::vector<RecipeRun> runs;
};

inline std::vector<std::string> recipe_names()
{
    return {"fig1b", "fig1c", "fig1d", "fig5a", "fig5b", "fig5c", "fig5d"};
}

namespace detail {

inline ScenarioConfig backward_device(double period_um, double duty_cycle, double sigma_um)
{
    ScenarioConfig c;
    c.process.mismatch.sense = Propagation::backward;
    c.grating.period_um = period_um;
    c.grating.duty_cycle = duty_cycle;
    c.grating.sigma_um = sigma_um;
    c.grating.seed = 1;
    c.phasematch.window = {1.0, 1.1};
    return c;
}

/// Forward-wave NBPM spectrum of a backward-wave device, on the default +-10 nm grid.
inline ScenarioConfig nbpm_view(ScenarioConfig c)
{
    c.process = forward_process(c.process);
    c.phasematch.mode = "nbpm";
    double const center = phase_match_center(c, "nbpm");
    c.grid.windows = {GridWindow{center, "", 0.02, 2001}};
    return c;
}

/// Window of +-`zeros` sinc zeros around a root.
inline GridWindow line_window(ScenarioConfig const& c, double center_um, double zeros, std::size_t points)
{
    double const h = sinc_half_width_um(c.process, center_um, c.grating.length_um);
    return {center_um, "", 2.0 * zeros * h, points};
}

inline WavelengthInterval span_of(GridWindow const& w)
{
    return {*w.center_um - 0.5 * w.span_um, *w.center_um + 0.5 * w.span_um};
}

}  // namespace detail

inline Recipe make_recipe(std::string_view name)
{
    Recipe r{std::string(name), {}, {}};
    if (name == "fig1b") {
        r.description = "backward QPM line, D = 0.5, sigma = 0 / 175 / 300 nm, N = 200 ensembles";
        for (double sigma : {0.0, 0.175, 0.3}) {
            auto c = detail::backward_device(2.132, 0.5, sigma);
            double const center = phase_match_center(c, "qpm");
            auto const w = detail::line_window(c, center, 3.0, 121);
            c.grid.windows = {w};
            c.ensemble.qpm_window = detail::span_of(w);
            r.runs.push_back({"sigma" + std::to_string(static_cast<int>(sigma * 1000.0 + 0.5)) + "nm",
                              RunKind::ensemble, c, {}});
        }
    } else if (name == "fig1c") {
        r.description = "NBPM signal/idler wavelengths versus pump wavelength, 420-600 nm";
        ScenarioConfig c;
        std::vector<double> pumps;
        for (int i = 0; i <= 36; ++i)
            pumps.push_back(0.420 + 0.005 * i);
        r.runs.push_back({"nbpm_curve", RunKind::nbpm_curve, c, pumps});
    } else if (name == "fig1d") {
        r.description = "NBPM spectra without disorder, D = 0.6 / 0.7 / 0.8 / 0.9";
        for (double d : {0.6, 0.7, 0.8, 0.9})
            r.runs.push_back({"D" + std::to_string(static_cast<int>(d * 10.0 + 0.5)), RunKind::spectrum,
                              detail::nbpm_view(detail::backward_device(2.132, d, 0.0)), {}});
    } else if (name == "fig5a") {
        r.description = "single-realization NBPM spectrum, Lambda = 2.112 um, D = 0.5, sigma = 450 nm";
        r.runs.push_back({"nbpm", RunKind::spectrum, detail::nbpm_view(detail::backward_device(2.112, 0.5, 0.45)), {}});
    } else if (name == "fig5b") {
        r.description = "single-realization NBPM spectrum, Lambda = 2.132 um, D = 0.5, sigma = 600 nm";
        r.runs.push_back({"nbpm", RunKind::spectrum, detail::nbpm_view(detail::backward_device(2.132, 0.5, 0.6)), {}});
    } else if (name == "fig5c") {
        r.description = "ideal NBPM sinc^2 (Lambda = 2.152 um, D = 0.8) broadened by a 1 nm top-hat";
        auto c = detail::nbpm_view(detail::backward_device(2.152, 0.8, 0.0));
        c.spectrum.resolution_nm = 1.0;
        r.runs.push_back({"nbpm", RunKind::spectrum, c, {}});
    } else if (name == "fig5d") {
        r.description = "forward first-order QPM, Lambda = 8.9 um, D = 0.6, sigma = 900 nm, 405 nm pump, N = 200";
        ScenarioConfig c;
        c.process.mismatch.pump.wavelength_um = 0.405;
        c.grating.period_um = 8.9;
        c.grating.duty_cycle = 0.6;
        c.grating.sigma_um = 0.9;
        c.phasematch.window = {0.8, 1.2};
        double const qpm = phase_match_center(c, "qpm");
        c.phasematch.window = {0.5, 0.7};
        double const nbpm = phase_match_center(c, "nbpm");
        c.phasematch.window = {0.8, 1.2};
        auto const wn = detail::line_window(c, nbpm, 3.0, 101);
        auto const wq = detail::line_window(c, qpm, 3.0, 101);
        c.grid.windows = {wn, wq};
        c.ensemble.nbpm_window = detail::span_of(wn);
        c.ensemble.qpm_window = detail::span_of(wq);
        r.runs.push_back({"ensemble", RunKind::ensemble, c, {}});
    } else {
        std::string known;
        for (auto const& n : recipe_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown recipe '" + std::string(name) + "' (available: " + known + ")");
    }
    return r;
}

}  // namespace qpm
