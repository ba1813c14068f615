#pragma once

// JSON scenario documents: one object per section (dispersion, process, grating, grid,
// phasematch, spectrum, ensemble, fit, output). Unknown keys are errors and every error
// carries the line of the offending key.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qpm/amplitude.hpp"
#include "qpm/analysis.hpp"
#include "qpm/dispersion.hpp"
#include "qpm/ensemble.hpp"
#include "qpm/error.hpp"
#include "qpm/grating.hpp"

namespace qpm {

using Json = nlohmann::ordered_json;

/// Maps JSON pointers ("/grating/duty_cycle", "/grid/windows/1") to the 1-based line on
/// which the member key (or array element) starts. Input must be well-formed JSON.
class JsonLineIndex {
public:
    JsonLineIndex() = default;

    explicit JsonLineIndex(std::string_view text) : text_(text)
    {
        skip_ws();
        if (pos_ < text_.size())
            value("");
        text_ = {};
    }

    /// Line of `pointer`, or of its nearest recorded ancestor; 0 when unknown.
    std::size_t line(std::string pointer) const
    {
        for (;;) {
            if (auto it = lines_.find(pointer); it != lines_.end())
                return it->second;
            auto const slash = pointer.rfind('/');
            if (slash == std::string::npos || pointer.empty())
                return 0;
            pointer.erase(slash);
        }
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size()) {
            char const c = text_[pos_];
            if (c == '\n')
                ++line_;
            else if (c != ' ' && c != '\t' && c != '\r')
                return;
            ++pos_;
        }
    }

    std::string string_token()
    {
        std::string out;
        ++pos_;  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') {
                out += text_[pos_++];
            }
            out += text_[pos_++];
        }
        ++pos_;
        return out;
    }

    void value(std::string const& path)
    {
        skip_ws();
        if (!lines_.contains(path))
            lines_[path] = line_;
        char const c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                std::size_t const key_line = line_;
                std::string const key = string_token();
                std::string const child = path + "/" + key;
                lines_[child] = key_line;
                skip_ws();
                ++pos_;  // ':'
                value(child);
                skip_ws();
                if (text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            std::size_t index = 0;
            while (pos_ < text_.size() && text_[pos_] != ']') {
                value(path + "/" + std::to_string(index++));
                skip_ws();
                if (text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && std::string_view(",}] \t\r\n").find(text_[pos_]) == std::string_view::npos)
                ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::map<std::string, std::size_t> lines_;
};

struct GridWindow {
    /// Center wavelength in um, or the phase-matching root named by `center_on`.
    std::optional<double> center_um;
    std::string center_on;  // "", "qpm" or "nbpm"
    double span_um = 0.02;
    std::size_t points = 2001;
};

/// Exactly one of: explicit wavelengths, a [first, last] range, or centered windows.
struct GridSpec {
    std::vector<double> wavelengths_um;
    std::optional<double> first_um;
    std::optional<double> last_um;
    std::size_t range_points = 0;
    std::vector<GridWindow> windows{GridWindow{std::nullopt, "qpm", 0.02, 2001}};
};

struct PhaseMatchOptions {
    std::string mode = "qpm";  // "qpm" or "nbpm"
    WavelengthInterval window{1.0, 1.1};
    OrderRange orders{1, 15};
    double scan_step_um = default_scan_step_um;
};

struct SpectrumSection {
    Method method = Method::numeric;
    int truncation = 50;
    double resolution_nm = 0.0;
    ResolutionKernel kernel = ResolutionKernel::top_hat;
};

struct EnsembleSection {
    std::size_t realizations = 200;
    std::uint64_t master_seed = 1;
    std::size_t first_index = 0;
    std::optional<WavelengthInterval> qpm_window;
    std::optional<WavelengthInterval> nbpm_window;
};

struct FitSection {
    std::string measured;
    FitOptions options;
};

struct OutputSection {
    std::string path;
    std::string seeds_path;
};

struct ScenarioConfig {
    std::string dispersion_model = "kato2002-ktp";
    std::vector<double> dispersion_wavelengths_um;
    ProcessConfig process;
    GratingSpec grating;
    GridSpec grid;
    PhaseMatchOptions phasematch;
    SpectrumSection spectrum;
    EnsembleSection ensemble;
    FitSection fit;
    OutputSection output;
};

inline SellmeierModel dispersion_model(std::string_view name)
{
    if (name == "kato2002-ktp")
        return kato_takaoka_ktp();
    throw ConfigError("unknown dispersion model '" + std::string(name) + "' (available: kato2002-ktp)");
}

inline std::string_view to_string(ResolutionKernel k) noexcept
{
    return k == ResolutionKernel::top_hat ? "top_hat" : "gaussian";
}

namespace detail {

class SectionReader {
public:
    SectionReader(Json const& node, std::string pointer, JsonLineIndex const& index)
        : node_(node), pointer_(std::move(pointer)), index_(index)
    {
        if (!node_.is_object())
            fail(pointer_, "section must be a JSON object");
    }

    [[noreturn]] void fail(std::string const& pointer, std::string const& what) const
    {
        std::ostringstream msg;
        msg << "config";
        if (auto const line = index_.line(pointer); line > 0)
            msg << " line " << line;
        msg << ": " << (pointer.empty() ? "/" : pointer) << ": " << what;
        throw ConfigError(msg.str());
    }

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (auto const& item : node_.items())
            if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
                std::string known;
                for (auto k : keys)
                    known += (known.empty() ? "" : ", ") + std::string(k);
                fail(child(item.key()), "unknown key '" + item.key() + "' (allowed: " + known + ")");
            }
    }

    bool has(std::string const& key) const { return node_.contains(key) && !node_.at(key).is_null(); }
    std::string child(std::string const& key) const { return pointer_ + "/" + key; }
    Json const& at(std::string const& key) const { return node_.at(key); }
    std::string const& pointer() const { return pointer_; }
    std::size_t line() const { return index_.line(pointer_); }

    void number(std::string const& key, double& out) const
    {
        if (!has(key))
            return;
        auto const& v = at(key);
        if (!v.is_number())
            fail(child(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out))
            fail(child(key), "expected a finite number");
    }

    void number(std::string const& key, std::optional<double>& out) const
    {
        if (!has(key))
            return;
        double v = 0.0;
        number(key, v);
        out = v;
    }

    template <class Int>
    void integer(std::string const& key, Int& out) const
    {
        if (!has(key))
            return;
        auto const& v = at(key);
        if (!v.is_number_integer())
            fail(child(key), "expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.is_number_unsigned())
                out = static_cast<Int>(v.get<std::uint64_t>());
            else if (v.get<std::int64_t>() < 0)
                fail(child(key), "expected a non-negative integer");
            else
                out = static_cast<Int>(v.get<std::int64_t>());
        } else {
            out = static_cast<Int>(v.get<std::int64_t>());
        }
    }

    void string(std::string const& key, std::string& out) const
    {
        if (!has(key))
            return;
        if (!at(key).is_string())
            fail(child(key), "expected a string");
        out = at(key).get<std::string>();
    }

    void number_list(std::string const& key, std::vector<double>& out) const
    {
        if (!has(key))
            return;
        auto const& v = at(key);
        if (!v.is_array())
            fail(child(key), "expected an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number())
                fail(child(key) + "/" + std::to_string(i), "expected a number");
            out.push_back(v[i].get<double>());
        }
    }

    void interval(std::string const& key, std::optional<WavelengthInterval>& out) const
    {
        if (!has(key))
            return;
        std::vector<double> v;
        number_list(key, v);
        if (v.size() != 2 || !(v[0] < v[1]))
            fail(child(key), "expected [min, max] with min < max");
        out = WavelengthInterval{v[0], v[1]};
    }

    template <class F>
    void check(std::string const& key, F&& body) const
    {
        try {
            body();
        } catch (Error const& e) {
            fail(key.empty() ? pointer_ : child(key), e.what());
        }
    }

private:
    Json const& node_;
    std::string pointer_;
    JsonLineIndex const& index_;
};

inline Json interval_json(WavelengthInterval w)
{
    return Json::array({w.min_um, w.max_um});
}

}  // namespace detail

/// Parses a scenario document. `text` is kept only to attribute errors to lines.
inline ScenarioConfig parse_scenario(std::string const& text)
{
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (nlohmann::json::parse_error const& e) {
        std::size_t line = 1;
        std::size_t const end = std::min<std::size_t>(e.byte, text.size());
        for (std::size_t i = 0; i + 1 < end; ++i)
            if (text[i] == '\n')
                ++line;
        throw ConfigError("config line " + std::to_string(line) + ": JSON syntax error: " + e.what());
    }
    JsonLineIndex const index(text);
    ScenarioConfig cfg;
    detail::SectionReader const top(doc, "", index);
    top.allow({"dispersion", "process", "grating", "grid", "phasematch", "spectrum", "ensemble", "fit", "output"});

    if (top.has("dispersion")) {
        detail::SectionReader const r(top.at("dispersion"), "/dispersion", index);
        r.allow({"model", "wavelengths_um"});
        r.string("model", cfg.dispersion_model);
        r.number_list("wavelengths_um", cfg.dispersion_wavelengths_um);
    }
    top.check("dispersion", [&] {
        cfg.process.dispersion = dispersion_model(cfg.dispersion_model);
        cfg.process.dispersion.validate();
    });

    if (top.has("process")) {
        detail::SectionReader const r(top.at("process"), "/process", index);
        r.allow({"pump_um", "pump_axis", "signal_axis", "idler_axis", "sense", "kappa", "kappa_prime"});
        auto& m = cfg.process.mismatch;
        r.number("pump_um", m.pump.wavelength_um);
        std::string text_value;
        auto axis = [&](char const* key, OpticalAxis& out) {
            if (!r.has(key))
                return;
            r.string(key, text_value);
            r.check(key, [&] { out = parse_axis(text_value); });
        };
        axis("pump_axis", m.pump.axis);
        axis("signal_axis", m.signal_axis);
        axis("idler_axis", m.idler_axis);
        if (r.has("sense")) {
            r.string("sense", text_value);
            if (text_value == "forward")
                m.sense = Propagation::forward;
            else if (text_value == "backward")
                m.sense = Propagation::backward;
            else
                r.fail(r.child("sense"), "expected \"forward\" or \"backward\"");
        }
        r.number("kappa", cfg.process.kappa);
        r.number("kappa_prime", cfg.process.kappa_prime);
        r.check("", [&] { cfg.process.validate(); });
        if (!cfg.process.dispersion.window.contains(m.pump.wavelength_um))
            r.fail(r.child("pump_um"), "pump wavelength outside the dispersion validity window");
    }

    if (top.has("grating")) {
        detail::SectionReader const r(top.at("grating"), "/grating", index);
        r.allow({"period_um", "duty_cycle", "length_um", "sigma_um", "sigma_convention", "seed"});
        auto& g = cfg.grating;
        r.number("period_um", g.period_um);
        r.number("duty_cycle", g.duty_cycle);
        r.number("length_um", g.length_um);
        r.number("sigma_um", g.sigma_um);
        r.integer("seed", g.seed);
        if (r.has("sigma_convention")) {
            std::string c;
            r.string("sigma_convention", c);
            if (c == "domain_length")
                g.convention = DisorderConvention::domain_length;
            else if (c == "boundary")
                g.convention = DisorderConvention::boundary;
            else
                r.fail(r.child("sigma_convention"), "expected \"domain_length\" or \"boundary\"");
        }
        auto const field_of = [](std::string const& what) -> std::string {
            if (what.find("period") != std::string::npos)
                return "period_um";
            if (what.find("duty") != std::string::npos)
                return "duty_cycle";
            if (what.find("length") != std::string::npos)
                return "length_um";
            if (what.find("disorder") != std::string::npos)
                return "sigma_um";
            return "";
        };
        try {
            g.validate();
        } catch (Error const& e) {
            std::string const key = field_of(e.what());
            r.fail(key.empty() || !r.has(key) ? r.pointer() : r.child(key), e.what());
        }
    }

    if (top.has("grid")) {
        detail::SectionReader const r(top.at("grid"), "/grid", index);
        r.allow({"wavelengths_um", "first_um", "last_um", "points", "center_um", "center", "span_um", "windows"});
        auto& grid = cfg.grid;
        int forms = 0;
        if (r.has("wavelengths_um")) {
            ++forms;
            r.number_list("wavelengths_um", grid.wavelengths_um);
            r.check("wavelengths_um", [&] { validate_grid(grid.wavelengths_um); });
        }
        auto read_window = [&](detail::SectionReader const& w, GridWindow& out) {
            if (w.has("center_um") && w.has("center"))
                w.fail(w.child("center"), "give either center_um or center, not both");
            if (w.has("center_um")) {
                w.number("center_um", out.center_um);
                out.center_on.clear();
            } else if (w.has("center")) {
                w.string("center", out.center_on);
                if (out.center_on != "qpm" && out.center_on != "nbpm")
                    w.fail(w.child("center"), "expected \"qpm\" or \"nbpm\" (or use center_um)");
                out.center_um.reset();
            }
            w.number("span_um", out.span_um);
            w.integer("points", out.points);
            if (!(out.span_um > 0.0))
                w.fail(w.child("span_um"), "span must be positive");
            if (out.points < 2)
                w.fail(w.child("points"), "at least 2 points are required");
        };
        if (r.has("first_um") || r.has("last_um")) {
            ++forms;
            r.number("first_um", grid.first_um);
            r.number("last_um", grid.last_um);
            r.integer("points", grid.range_points);
            if (!grid.first_um || !grid.last_um || !(*grid.last_um > *grid.first_um) || !(*grid.first_um > 0.0))
                r.fail(r.child("last_um"), "range grid needs 0 < first_um < last_um");
            if (grid.range_points < 2)
                r.fail(r.child("points"), "range grid needs at least 2 points");
        }
        if (r.has("windows")) {
            ++forms;
            auto const& arr = r.at("windows");
            if (!arr.is_array() || arr.empty())
                r.fail(r.child("windows"), "expected a non-empty array of window objects");
            grid.windows.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                detail::SectionReader const w(arr[i], r.child("windows") + "/" + std::to_string(i), index);
                w.allow({"center_um", "center", "span_um", "points"});
                GridWindow win{};
                read_window(w, win);
                grid.windows.push_back(win);
            }
        }
        if (r.has("center_um") || r.has("center") || r.has("span_um")) {
            ++forms;
            GridWindow win = grid.windows.size() == 1 ? grid.windows.front() : GridWindow{};
            read_window(r, win);
            grid.windows = {win};
        } else if (forms == 0 && r.has("points")) {
            r.integer("points", grid.windows.front().points);
            if (grid.windows.front().points < 2)
                r.fail(r.child("points"), "at least 2 points are required");
        }
        if (forms > 1)
            r.fail(r.pointer(), "give exactly one grid form: wavelengths_um, first_um/last_um, a centered window, "
                                "or windows");
        if (forms == 1 && !grid.wavelengths_um.empty()) {
            grid.windows.clear();
        } else if (forms == 1 && grid.first_um) {
            grid.windows.clear();
        }
    }

    if (top.has("phasematch")) {
        detail::SectionReader const r(top.at("phasematch"), "/phasematch", index);
        r.allow({"mode", "window_um", "order_min", "order_max", "scan_step_um"});
        auto& p = cfg.phasematch;
        r.string("mode", p.mode);
        if (p.mode != "qpm" && p.mode != "nbpm")
            r.fail(r.child("mode"), "expected \"qpm\" or \"nbpm\"");
        std::optional<WavelengthInterval> w;
        r.interval("window_um", w);
        if (w)
            p.window = *w;
        r.integer("order_min", p.orders.min_abs);
        r.integer("order_max", p.orders.max_abs);
        r.number("scan_step_um", p.scan_step_um);
        if (p.orders.min_abs < 1 || p.orders.max_abs < p.orders.min_abs)
            r.fail(r.child("order_max"), "order range must satisfy 1 <= order_min <= order_max");
        if (!(p.scan_step_um > 0.0))
            r.fail(r.child("scan_step_um"), "scan step must be positive");
    }

    if (top.has("spectrum")) {
        detail::SectionReader const r(top.at("spectrum"), "/spectrum", index);
        r.allow({"method", "truncation", "resolution_nm", "kernel"});
        auto& s = cfg.spectrum;
        std::string text_value;
        if (r.has("method")) {
            r.string("method", text_value);
            r.check("method", [&] { s.method = parse_method(text_value); });
        }
        r.integer("truncation", s.truncation);
        r.number("resolution_nm", s.resolution_nm);
        if (r.has("kernel")) {
            r.string("kernel", text_value);
            if (text_value == "top_hat")
                s.kernel = ResolutionKernel::top_hat;
            else if (text_value == "gaussian")
                s.kernel = ResolutionKernel::gaussian;
            else
                r.fail(r.child("kernel"), "expected \"top_hat\" or \"gaussian\"");
        }
        if (s.truncation < 1)
            r.fail(r.child("truncation"), "truncation order must be at least 1");
        if (!(s.resolution_nm >= 0.0))
            r.fail(r.child("resolution_nm"), "resolution must be non-negative");
    }

    if (top.has("ensemble")) {
        detail::SectionReader const r(top.at("ensemble"), "/ensemble", index);
        r.allow({"realizations", "master_seed", "first_index", "qpm_window_um", "nbpm_window_um"});
        auto& e = cfg.ensemble;
        r.integer("realizations", e.realizations);
        r.integer("master_seed", e.master_seed);
        r.integer("first_index", e.first_index);
        r.interval("qpm_window_um", e.qpm_window);
        r.interval("nbpm_window_um", e.nbpm_window);
        if (e.realizations < 1)
            r.fail(r.child("realizations"), "an ensemble needs at least one realization");
    }

    if (top.has("fit")) {
        detail::SectionReader const r(top.at("fit"), "/fit", index);
        r.allow({"measured", "duty_cycle_bounds", "sigma_bounds_um", "realizations", "seed", "coarse_points", "sweeps",
                 "starts", "tolerance"});
        auto& f = cfg.fit;
        r.string("measured", f.measured);
        auto bounds = [&](char const* key, Bounds& out) {
            std::optional<WavelengthInterval> w;
            r.interval(key, w);
            if (w)
                out = {w->min_um, w->max_um};
        };
        bounds("duty_cycle_bounds", f.options.duty_cycle);
        bounds("sigma_bounds_um", f.options.sigma_um);
        r.integer("realizations", f.options.realizations);
        r.integer("seed", f.options.seed);
        r.integer("coarse_points", f.options.coarse_points);
        r.integer("sweeps", f.options.sweeps);
        r.integer("starts", f.options.starts);
        r.number("tolerance", f.options.tolerance);
        if (!(f.options.duty_cycle.lo > 0.0 && f.options.duty_cycle.hi < 1.0))
            r.fail(r.child("duty_cycle_bounds"), "duty-cycle bounds must lie inside (0, 1)");
        if (f.options.sigma_um.lo < 0.0)
            r.fail(r.child("sigma_bounds_um"), "sigma bounds must be non-negative");
        if (f.options.realizations < 1)
            r.fail(r.child("realizations"), "at least one realization per evaluation");
        if (f.options.coarse_points < 2)
            r.fail(r.child("coarse_points"), "at least 2 coarse points per axis");
        if (f.options.starts < 1)
            r.fail(r.child("starts"), "at least one refinement start");
        if (!(f.options.tolerance > 0.0))
            r.fail(r.child("tolerance"), "tolerance must be positive");
    }

    if (top.has("output")) {
        detail::SectionReader const r(top.at("output"), "/output", index);
        r.allow({"path", "seeds_path"});
        r.string("path", cfg.output.path);
        r.string("seeds_path", cfg.output.seeds_path);
    }
    return cfg;
}

inline ScenarioConfig load_scenario(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

/// Effective configuration with every default resolved.
inline Json to_json(ScenarioConfig const& c)
{
    Json j;
    j["dispersion"] = {{"model", c.dispersion_model}, {"wavelengths_um", c.dispersion_wavelengths_um}};
    auto const& m = c.process.mismatch;
    j["process"] = {{"pump_um", m.pump.wavelength_um},
                    {"pump_axis", std::string(to_string(m.pump.axis))},
                    {"signal_axis", std::string(to_string(m.signal_axis))},
                    {"idler_axis", std::string(to_string(m.idler_axis))},
                    {"sense", std::string(to_string(m.sense))},
                    {"kappa", c.process.kappa}};
    j["process"]["kappa_prime"] = c.process.kappa_prime ? Json(*c.process.kappa_prime) : Json(nullptr);
    auto const& g = c.grating;
    j["grating"] = {{"period_um", g.period_um},   {"duty_cycle", g.duty_cycle},
                    {"length_um", g.length_um},   {"sigma_um", g.sigma_um},
                    {"sigma_convention", std::string(to_string(g.convention))},
                    {"seed", g.seed}};
    Json grid = Json::object();
    if (!c.grid.wavelengths_um.empty()) {
        grid["wavelengths_um"] = c.grid.wavelengths_um;
    } else if (c.grid.first_um) {
        grid["first_um"] = *c.grid.first_um;
        grid["last_um"] = *c.grid.last_um;
        grid["points"] = c.grid.range_points;
    } else {
        Json windows = Json::array();
        for (auto const& w : c.grid.windows) {
            Json jw = Json::object();
            if (w.center_um)
                jw["center_um"] = *w.center_um;
            else
                jw["center"] = w.center_on;
            jw["span_um"] = w.span_um;
            jw["points"] = w.points;
            windows.push_back(jw);
        }
        grid["windows"] = windows;
    }
    j["grid"] = grid;
    auto const& p = c.phasematch;
    j["phasematch"] = {{"mode", p.mode},
                       {"window_um", detail::interval_json(p.window)},
                       {"order_min", p.orders.min_abs},
                       {"order_max", p.orders.max_abs},
                       {"scan_step_um", p.scan_step_um}};
    j["spectrum"] = {{"method", std::string(to_string(c.spectrum.method))},
                     {"truncation", c.spectrum.truncation},
                     {"resolution_nm", c.spectrum.resolution_nm},
                     {"kernel", std::string(to_string(c.spectrum.kernel))}};
    Json e = {{"realizations", c.ensemble.realizations},
              {"master_seed", c.ensemble.master_seed},
              {"first_index", c.ensemble.first_index}};
    e["qpm_window_um"] = c.ensemble.qpm_window ? detail::interval_json(*c.ensemble.qpm_window) : Json(nullptr);
    e["nbpm_window_um"] = c.ensemble.nbpm_window ? detail::interval_json(*c.ensemble.nbpm_window) : Json(nullptr);
    j["ensemble"] = e;
    auto const& f = c.fit.options;
    j["fit"] = {{"measured", c.fit.measured},
                {"duty_cycle_bounds", Json::array({f.duty_cycle.lo, f.duty_cycle.hi})},
                {"sigma_bounds_um", Json::array({f.sigma_um.lo, f.sigma_um.hi})},
                {"realizations", f.realizations},
                {"seed", f.seed},
                {"coarse_points", f.coarse_points},
                {"sweeps", f.sweeps},
                {"starts", f.starts},
                {"tolerance", f.tolerance}};
    j["output"] = {{"path", c.output.path}, {"seeds_path", c.output.seeds_path}};
    return j;
}

/// Single-line JSON of the effective configuration, as echoed in output headers.
inline std::string effective_config_line(ScenarioConfig const& c)
{
    return to_json(c).dump();
}

/// Process with the forward sense, in which birefringent phase matching is defined.
inline ProcessConfig forward_process(ProcessConfig p)
{
    p.mismatch.sense = Propagation::forward;
    return p;
}

/// Resolves "qpm"/"nbpm" centers with the phase-match window and order range of `c`.
inline double phase_match_center(ScenarioConfig const& c, std::string_view target)
{
    if (target == "nbpm")
        return find_nbpm(forward_process(c.process), c.phasematch.window, c.phasematch.scan_step_um).signal_um;
    return find_qpm(c.grating.period_um, c.process, c.phasematch.window, c.phasematch.orders,
                    c.phasematch.scan_step_um)
        .solution.signal_um;
}

inline std::vector<double> resolve_grid(ScenarioConfig const& c)
{
    auto const& g = c.grid;
    std::vector<double> grid;
    if (!g.wavelengths_um.empty()) {
        grid = g.wavelengths_um;
    } else if (g.first_um) {
        grid = linear_grid(*g.first_um, *g.last_um, g.range_points);
    } else {
        for (auto const& w : g.windows) {
            double const center = w.center_um ? *w.center_um : phase_match_center(c, w.center_on);
            auto const part = linear_grid(center - 0.5 * w.span_um, center + 0.5 * w.span_um, w.points);
            if (!grid.empty() && !(part.front() > grid.back()))
                throw ConfigError("grid windows overlap or are not in increasing wavelength order");
            grid.insert(grid.end(), part.begin(), part.end());
        }
    }
    validate_grid(grid);
    return grid;
}

/// Half-width (first zero) in um of the sinc^2 line sin^2(g L/2)/(g L/2)^2 around a root
/// of g = dk + K at `signal_um`, from the numerical slope of dk.
inline double sinc_half_width_um(ProcessConfig const& process, double signal_um, double length_um)
{
    double const h = 1e-5;
    double const slope = (phase_mismatch(process.dispersion, process.mismatch, signal_um + h) -
                          phase_mismatch(process.dispersion, process.mismatch, signal_um - h)) /
                         (2.0 * h);
    return 2.0 * std::numbers::pi / (length_um * std::abs(slope));
}

}  // namespace qpm
