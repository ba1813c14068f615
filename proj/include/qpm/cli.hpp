#pragma once

// Command-line front end. Every subcommand renders its full output in memory and then
// writes it, so a failing run leaves no partial file behind.
//
// Exit codes: 0 success, 1 computation error, 2 configuration or usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qpm/amplitude.hpp"
#include "qpm/analysis.hpp"
#include "qpm/ensemble.hpp"
#include "qpm/recipes.hpp"
#include "qpm/scenario.hpp"

namespace qpm::cli {

struct Options {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::optional<std::string> method;
    std::optional<double> resolution_nm;
    std::optional<std::string> mode;
    std::string measured_path;
    std::vector<double> wavelengths_um;
    std::string recipe;
    bool list_recipes = false;
    bool print_config = false;
};

inline ScenarioConfig effective_config(Options const& o)
{
    ScenarioConfig c = o.config_path.empty() ? ScenarioConfig{} : load_scenario(o.config_path);
    if (o.method)
        c.spectrum.method = parse_method(*o.method);
    if (o.resolution_nm) {
        if (!(*o.resolution_nm >= 0.0))
            throw ConfigError("--resolution-nm must be non-negative");
        c.spectrum.resolution_nm = *o.resolution_nm;
    }
    if (o.mode) {
        if (*o.mode != "qpm" && *o.mode != "nbpm")
            throw ConfigError("--mode must be qpm or nbpm");
        c.phasematch.mode = *o.mode;
    }
    if (o.seed) {
        c.grating.seed = *o.seed;
        c.ensemble.master_seed = *o.seed;
        c.fit.options.seed = *o.seed;
    }
    return c;
}

inline void emit(std::string const& path, std::string const& content, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw Error("cannot open output file '" + path + "'");
    file << content;
    if (!file)
        throw Error("failed writing output file '" + path + "'");
}

inline std::string dispersion_report(ScenarioConfig const& c, std::vector<double> wavelengths)
{
    if (wavelengths.empty())
        wavelengths = c.dispersion_wavelengths_um;
    if (wavelengths.empty())
        throw ConfigError("no wavelengths given (pass them as arguments or set dispersion.wavelengths_um)");
    auto const& model = c.process.dispersion;
    std::ostringstream s;
    s << "# config=" << effective_config_line(c) << '\n';
    s << "# model=" << model.name << '\n';
    s << "wavelength_um,n_y,n_z,k_y_rad_per_um,k_z_rad_per_um\n";
    for (double l : wavelengths) {
        double const ny = refractive_index(model, OpticalAxis::y, l);
        double const nz = refractive_index(model, OpticalAxis::z, l);
        s << format_number(l) << ',' << format_number(ny) << ',' << format_number(nz) << ','
          << format_number(wavevector_from_index(ny, l)) << ',' << format_number(wavevector_from_index(nz, l))
          << '\n';
    }
    return s.str();
}

inline std::string phasematch_report(ScenarioConfig const& c)
{
    std::ostringstream s;
    s << "# config=" << effective_config_line(c) << '\n';
    auto const& p = c.phasematch;
    auto write_solution = [&](PhaseMatchSolution const& sol) {
        s << "signal_nm=" << format_number(sol.signal_um * 1e3) << '\n';
        s << "idler_nm=" << format_number(sol.idler_um * 1e3) << '\n';
        s << "order=" << sol.order << '\n';
        s << "residual_rad_per_um=" << format_number(sol.residual) << '\n';
    };
    if (p.mode == "nbpm") {
        s << "mode=nbpm\nsense=forward\n";
        write_solution(find_nbpm(forward_process(c.process), p.window, p.scan_step_um));
        return s.str();
    }
    auto const search = find_qpm(c.grating.period_um, c.process, p.window, p.orders, p.scan_step_um);
    s << "mode=qpm\nsense=" << to_string(c.process.mismatch.sense) << '\n';
    write_solution(search.solution);
    s << "order,min_mismatch_rad_per_um,max_mismatch_rad_per_um,root_nm\n";
    for (auto const& o : search.orders)
        s << o.order << ',' << format_number(o.min_mismatch) << ',' << format_number(o.max_mismatch) << ','
          << (o.root_um ? format_number(*o.root_um * 1e3) : std::string()) << '\n';
    return s.str();
}

/// Largest |B_analytic - B_numeric| over the grid relative to the largest |B_numeric|.
inline double analytic_numeric_difference(std::span<double const> grid, ScenarioConfig const& c, unsigned threads)
{
    DomainStructure const ideal = build_ideal(c.grating);
    std::vector<double> diff(grid.size());
    std::vector<double> mag(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        Complex const n = amplitude_numeric(grid[i], ideal, c.process);
        Complex const a = amplitude_analytic(grid[i], c.grating, c.process, c.spectrum.truncation);
        diff[i] = std::abs(a - n);
        mag[i] = std::abs(n);
    });
    double const peak = *std::max_element(mag.begin(), mag.end());
    return *std::max_element(diff.begin(), diff.end()) / peak;
}

inline std::string spectrum_report(ScenarioConfig const& c, unsigned threads)
{
    auto const grid = resolve_grid(c);
    Spectrum s = compute_spectrum(grid, c.grating, c.process,
                                  SpectrumOptions{c.spectrum.method, c.spectrum.truncation, threads});
    if (c.spectrum.resolution_nm > 0.0)
        s = convolve_resolution(s, c.spectrum.resolution_nm, c.spectrum.kernel);
    s.metadata.insert(s.metadata.begin(), {"config", effective_config_line(c)});
    std::ostringstream out;
    write_spectrum_csv(out, s);
    if (auto const pm = peak_metrics(s)) {
        out << "# peak_nm=" << format_number(pm->wavelength_um * 1e3) << '\n';
        out << "# peak_S=" << format_number(pm->density) << '\n';
        out << "# fwhm_nm=" << format_number(pm->fwhm_nm) << '\n';
        out << "# side_peaks=" << pm->side_peaks.size() << '\n';
    }
    if (c.grating.sigma_um == 0.0)
        out << "# analytic_numeric_max_rel_diff=" << format_number(analytic_numeric_difference(grid, c, threads))
            << '\n';
    return out.str();
}

struct EnsembleReport {
    std::string csv;
    std::string seeds;
    std::string summary;
};

inline EnsembleReport ensemble_report(ScenarioConfig const& c, unsigned threads)
{
    EnsembleConfig const ec{c.grating, c.process, resolve_grid(c), c.ensemble.realizations,
                            c.ensemble.master_seed, c.ensemble.first_index};
    auto const stats = run_ensemble(ec, threads);
    std::ostringstream summary;
    if (c.ensemble.qpm_window) {
        GratingSpec ideal = c.grating;
        ideal.sigma_um = 0.0;
        Spectrum const reference = compute_spectrum(ec.grid, ideal, c.process, SpectrumOptions{Method::numeric, 50, threads});
        auto const r = reduction_summary(stats, reference, *c.ensemble.qpm_window, c.ensemble.nbpm_window);
        auto ci = [](double v, double sem) {
            return "[" + format_number(v - 1.96 * sem) + "," + format_number(v + 1.96 * sem) + "]";
        };
        summary << "qpm_peak_nm=" << format_number(r.qpm_peak_um * 1e3) << '\n';
        summary << "qpm_peak_ratio=" << format_number(r.peak_ratio) << '\n';
        summary << "qpm_peak_ratio_sem=" << format_number(r.peak_ratio_sem) << '\n';
        summary << "qpm_peak_ratio_ci95=" << ci(r.peak_ratio, r.peak_ratio_sem) << '\n';
        summary << "qpm_peak_reduction=" << format_number(1.0 - r.peak_ratio) << '\n';
        if (r.nbpm_to_qpm) {
            summary << "nbpm_peak_nm=" << format_number(*r.nbpm_peak_um * 1e3) << '\n';
            summary << "nbpm_to_qpm=" << format_number(*r.nbpm_to_qpm) << '\n';
            summary << "nbpm_to_qpm_sem=" << format_number(*r.nbpm_to_qpm_sem) << '\n';
            summary << "nbpm_to_qpm_ci95=" << ci(*r.nbpm_to_qpm, *r.nbpm_to_qpm_sem) << '\n';
        }
    }
    std::ostringstream csv;
    write_ensemble_csv(csv, stats,
                       {{"config", effective_config_line(c)},
                        {"process", c.process.digest()},
                        {"grating", digest(c.grating)},
                        {"realizations", std::to_string(stats.count())},
                        {"master_seed", std::to_string(c.ensemble.master_seed)}});
    std::istringstream lines(summary.str());
    for (std::string line; std::getline(lines, line);)
        csv << "# " << line << '\n';
    std::ostringstream seeds;
    write_seed_sidecar(seeds, stats, ec);
    return {csv.str(), seeds.str(), summary.str()};
}

inline std::string nbpm_curve_report(ScenarioConfig const& c, std::vector<double> const& pumps)
{
    auto const curve = nbpm_curve(c.process, pumps);
    std::ostringstream s;
    s << "# config=" << effective_config_line(c) << '\n';
    s << "pump_nm,signal_nm,idler_nm,residual_rad_per_um\n";
    for (auto const& p : curve)
        s << format_number(p.pump_um * 1e3) << ',' << format_number(p.solution.signal_um * 1e3) << ','
          << format_number(p.solution.idler_um * 1e3) << ',' << format_number(p.solution.residual) << '\n';
    return s.str();
}

inline std::string fit_report(ScenarioConfig const& c, std::string const& measured_path, unsigned threads)
{
    if (measured_path.empty())
        throw ConfigError("no measured spectrum given (use --measured or fit.measured)");
    std::ifstream in(measured_path);
    if (!in)
        throw ConfigError("cannot open measured spectrum '" + measured_path + "'");
    Spectrum measured = read_spectrum_csv(in);
    double const peak = *std::max_element(measured.density.begin(), measured.density.end());
    if (!(peak > 0.0))
        throw FitError("measured spectrum has no positive peak");
    for (auto& v : measured.density)
        v /= peak;
    FitOptions options = c.fit.options;
    options.threads = threads;
    auto const fit = fit_disorder(measured, c.grating, c.process, options);
    Json report;
    report["config"] = to_json(c);
    report["measured"] = {{"path", measured_path}, {"points", measured.size()}, {"peak_normalization", peak}};
    report["result"] = {{"duty_cycle", fit.duty_cycle},
                        {"sigma_um", fit.sigma_um},
                        {"residual", fit.residual},
                        {"evaluations", fit.evaluations},
                        {"realizations_per_evaluation", fit.realizations},
                        {"seed", fit.seed},
                        {"seed_policy", "child_seed(seed, i) for i < realizations at every evaluation"},
                        {"coarse_step", {{"duty_cycle", fit.duty_cycle_step}, {"sigma_um", fit.sigma_step_um}}}};
    return report.dump(2) + "\n";
}

inline std::string sidecar_path(ScenarioConfig const& c, std::string const& out_path)
{
    if (!c.output.seeds_path.empty())
        return c.output.seeds_path;
    if (!out_path.empty() && out_path != "-")
        return out_path + ".seeds.csv";
    return {};
}

inline void reproduce(Options const& o, std::ostream& out)
{
    if (o.list_recipes) {
        for (auto const& n : recipe_names())
            out << n << ": " << make_recipe(n).description << '\n';
        return;
    }
    if (o.recipe.empty())
        throw ConfigError("reproduce needs a recipe name (or --list)");
    Recipe recipe = make_recipe(o.recipe);
    for (auto& run : recipe.runs) {
        if (o.seed) {
            run.config.grating.seed = *o.seed;
            run.config.ensemble.master_seed = *o.seed;
        }
        if (o.method)
            run.config.spectrum.method = parse_method(*o.method);
        if (o.resolution_nm)
            run.config.spectrum.resolution_nm = *o.resolution_nm;
    }
    if (o.print_config) {
        for (auto const& run : recipe.runs)
            out << recipe.name << '_' << run.label << ' ' << effective_config_line(run.config) << '\n';
        return;
    }
    std::filesystem::path const dir = o.out_path.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out_path);
    std::filesystem::create_directories(dir);
    for (auto const& run : recipe.runs) {
        std::string const stem = recipe.name + "_" + run.label;
        std::string const csv_path = (dir / (stem + ".csv")).string();
        switch (run.kind) {
        case RunKind::spectrum:
            emit(csv_path, spectrum_report(run.config, o.threads), out);
            break;
        case RunKind::nbpm_curve:
            emit(csv_path, nbpm_curve_report(run.config, run.pumps_um), out);
            break;
        case RunKind::ensemble: {
            auto const report = ensemble_report(run.config, o.threads);
            emit(csv_path, report.csv, out);
            emit((dir / (stem + ".seeds.csv")).string(), report.seeds, out);
            std::istringstream lines(report.summary);
            for (std::string line; std::getline(lines, line);)
                out << stem << ": " << line << '\n';
            break;
        }
        }
        out << "wrote " << csv_path << '\n';
    }
}

/// Parses `args` (without the program name) and runs the selected subcommand.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quasi-phase-matched parametric down-conversion with nonideal poling"};
    app.name("qpmsim");
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub, bool with_threads) {
        sub->add_option("--config", o.config_path, "scenario JSON file");
        sub->add_option("--out", o.out_path, "output path ('-' or omitted: standard output)");
        if (with_threads)
            sub->add_option("--threads", o.threads, "worker threads (0 = all cores); results do not depend on it");
    };
    auto* dispersion = app.add_subcommand("dispersion", "refractive indices and wavevectors");
    common(dispersion, false);
    dispersion->add_option("wavelengths", o.wavelengths_um, "wavelengths in um");

    auto* phasematch = app.add_subcommand("phasematch", "QPM or NBPM root search");
    common(phasematch, false);
    phasematch->add_option("--mode", o.mode, "qpm or nbpm (overrides phasematch.mode)");

    auto* spectrum = app.add_subcommand("spectrum", "spectral power density of one structure");
    common(spectrum, true);
    spectrum->add_option("--seed", o.seed, "disorder seed (overrides grating.seed)");
    spectrum->add_option("--method", o.method, "analytic or numeric");
    spectrum->add_option("--resolution-nm", o.resolution_nm, "instrument bandwidth FWHM in nm");

    auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo ensemble over disorder realizations");
    common(ensemble, true);
    ensemble->add_option("--seed", o.seed, "master seed (overrides ensemble.master_seed)");

    auto* fit = app.add_subcommand("fit", "fit duty cycle and disorder to a measured spectrum");
    common(fit, true);
    fit->add_option("--seed", o.seed, "seed of the fixed realization set (overrides fit.seed)");
    fit->add_option("--measured", o.measured_path, "measured spectrum CSV (overrides fit.measured)");

    auto* repro = app.add_subcommand("reproduce", "run a pinned figure recipe");
    repro->add_option("recipe", o.recipe, "recipe name");
    repro->add_option("--out", o.out_path, "output directory (default: current directory)");
    repro->add_option("--threads", o.threads, "worker threads");
    repro->add_option("--seed", o.seed, "override the pinned seeds");
    repro->add_option("--method", o.method, "analytic or numeric");
    repro->add_option("--resolution-nm", o.resolution_nm, "instrument bandwidth FWHM in nm");
    repro->add_flag("--list", o.list_recipes, "list recipes");
    repro->add_flag("--print-config", o.print_config, "print the pinned configurations instead of running");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (CLI::CallForHelp const&) {
        out << app.help();
        return 0;
    } catch (CLI::CallForAllHelp const&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (CLI::ParseError const& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (repro->parsed()) {
            reproduce(o, out);
            return 0;
        }
        ScenarioConfig const c = effective_config(o);
        std::string const out_path = o.out_path.empty() ? c.output.path : o.out_path;
        if (dispersion->parsed()) {
            emit(out_path, dispersion_report(c, o.wavelengths_um), out);
        } else if (phasematch->parsed()) {
            emit(out_path, phasematch_report(c), out);
        } else if (spectrum->parsed()) {
            emit(out_path, spectrum_report(c, o.threads), out);
        } else if (ensemble->parsed()) {
            auto const report = ensemble_report(c, o.threads);
            emit(out_path, report.csv, out);
            if (auto const sidecar = sidecar_path(c, out_path); !sidecar.empty())
                emit(sidecar, report.seeds, out);
            if (!out_path.empty() && out_path != "-")
                out << report.summary;
        } else if (fit->parsed()) {
            emit(out_path, fit_report(c, o.measured_path.empty() ? c.fit.measured : o.measured_path, o.threads),
                 out);
        }
        return 0;
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (std::exception const& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qpm::cli
