#pragma once

// Refractive indices, wavevectors and the collinear phase mismatch of a three-wave
// interaction in a biaxial KTP-family crystal. Lengths are in micrometres, wavevectors
// in rad/um, and every wavelength is a vacuum wavelength.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/error.hpp"

namespace qpm {

enum class OpticalAxis { y, z };

inline std::string_view to_string(OpticalAxis axis) noexcept
{
    return axis == OpticalAxis::y ? "y" : "z";
}

inline OpticalAxis parse_axis(std::string_view text)
{
    if (text == "y")
        return OpticalAxis::y;
    if (text == "z")
        return OpticalAxis::z;
    throw ConfigError("unknown optical axis '" + std::string(text) + "' (expected \"y\" or \"z\")");
}

/// One resonance term B / (lambda^2 - C) of a Sellmeier expansion; C in um^2.
struct SellmeierPole {
    double strength;
    double resonance_um2;
};

/// n^2 = constant + sum_j B_j / (lambda^2 - C_j) - ir_slope * lambda^2
struct SellmeierAxis {
    double constant = 1.0;
    std::vector<SellmeierPole> poles;
    double ir_slope = 0.0;

    double index_squared(double wavelength_um) const noexcept
    {
        double const l2 = wavelength_um * wavelength_um;
        double n2 = constant - ir_slope * l2;
        for (auto const& p : poles)
            n2 += p.strength / (l2 - p.resonance_um2);
        return n2;
    }
};

struct ValidityWindow {
    double min_um;
    double max_um;

    bool contains(double wavelength_um) const noexcept
    {
        return wavelength_um >= min_um && wavelength_um <= max_um;
    }
};

struct SellmeierModel {
    std::string name;
    std::string provenance;
    ValidityWindow window;
    SellmeierAxis y;
    SellmeierAxis z;

    SellmeierAxis const& axis(OpticalAxis a) const noexcept { return a == OpticalAxis::y ? y : z; }

    /// Checks that both axes give a real index above 1 across the whole window.
    void validate() const
    {
        if (!(window.min_um > 0.0) || !(window.max_um > window.min_um))
            throw ConfigError("dispersion model '" + name + "': validity window must satisfy 0 < min < max");
        constexpr int samples = 4000;
        for (auto a : {OpticalAxis::y, OpticalAxis::z}) {
            for (int i = 0; i <= samples; ++i) {
                double const l = window.min_um + (window.max_um - window.min_um) * i / samples;
                double const n2 = axis(a).index_squared(l);
                if (!std::isfinite(n2) || n2 <= 1.0) {
                    std::ostringstream msg;
                    msg << "dispersion model '" << name << "': n_" << to_string(a) << "^2 = " << n2
                        << " at " << l << " um is not a real index above 1";
                    throw ConfigError(msg.str());
                }
            }
        }
    }
};

/// KTP room-temperature coefficients for the y and z axes.
inline SellmeierModel kato_takaoka_ktp()
{
    SellmeierModel m;
    m.name = "kato2002-ktp";
    m.provenance = "K. Kato and E. Takaoka, Appl. Opt. 41, 5040 (2002)";
    m.window = {0.35, 4.0};
    m.y = {3.45018, {{0.04341, 0.04597}, {16.98825, 39.43799}}, 0.0};
    m.z = {4.59423, {{0.06206, 0.04763}, {110.80672, 86.12171}}, 0.0};
    return m;
}

inline double refractive_index(SellmeierModel const& model, OpticalAxis axis, double wavelength_um)
{
    if (!model.window.contains(wavelength_um)) {
        std::ostringstream msg;
        msg << "wavelength " << wavelength_um << " um outside the validity window [" << model.window.min_um
            << ", " << model.window.max_um << "] um of dispersion model '" << model.name << "'";
        throw DomainError(msg.str());
    }
    return std::sqrt(model.axis(axis).index_squared(wavelength_um));
}

/// k = 2 pi n / lambda for a known index.
constexpr double wavevector_from_index(double index, double wavelength_um) noexcept
{
    return 2.0 * std::numbers::pi * index / wavelength_um;
}

inline double wavevector(SellmeierModel const& model, OpticalAxis axis, double wavelength_um)
{
    return wavevector_from_index(refractive_index(model, axis, wavelength_um), wavelength_um);
}

/// Idler wavelength fixed by energy conservation, 1/lambda_i = 1/lambda_p - 1/lambda_s.
inline double idler_wavelength(double pump_um, double signal_um)
{
    if (!(pump_um > 0.0) || !(signal_um > pump_um)) {
        std::ostringstream msg;
        msg << "invalid pump/signal pair: signal " << signal_um << " um must be longer than pump " << pump_um
            << " um";
        throw InvalidArgument(msg.str());
    }
    return pump_um * signal_um / (signal_um - pump_um);
}

struct Wave {
    double wavelength_um;
    OpticalAxis axis;
};

/// Sign of the idler's propagation direction relative to the pump.
enum class Propagation : int { forward = 1, backward = -1 };

constexpr double sign_of(Propagation p) noexcept
{
    return static_cast<double>(static_cast<int>(p));
}

inline std::string_view to_string(Propagation p) noexcept
{
    return p == Propagation::forward ? "forward" : "backward";
}

/// Pump, signal/idler axes and propagation sense; together with a dispersion model this
/// fixes dk(lambda_s) = k_p - k_s - eps * k_i.
struct PhaseMismatchSpec {
    Wave pump{0.532, OpticalAxis::y};
    OpticalAxis signal_axis = OpticalAxis::z;
    OpticalAxis idler_axis = OpticalAxis::y;
    Propagation sense = Propagation::forward;

    void validate() const
    {
        if (signal_axis == idler_axis)
            throw ConfigError("type-II process requires different signal and idler axes");
        if (!(pump.wavelength_um > 0.0))
            throw ConfigError("pump wavelength must be positive");
    }
};

struct Wavevectors {
    double pump;
    double signal;
    double idler;
    double idler_wavelength_um;
};

inline Wavevectors wavevectors(SellmeierModel const& model, PhaseMismatchSpec const& spec, double signal_um)
{
    double const idler_um = idler_wavelength(spec.pump.wavelength_um, signal_um);
    return {wavevector(model, spec.pump.axis, spec.pump.wavelength_um),
            wavevector(model, spec.signal_axis, signal_um), wavevector(model, spec.idler_axis, idler_um),
            idler_um};
}

constexpr double phase_mismatch(PhaseMismatchSpec const& spec, Wavevectors const& k) noexcept
{
    return k.pump - k.signal - sign_of(spec.sense) * k.idler;
}

inline double phase_mismatch(SellmeierModel const& model, PhaseMismatchSpec const& spec, double signal_um)
{
    return phase_mismatch(spec, wavevectors(model, spec, signal_um));
}

}  // namespace qpm
