#pragma once

// Signed domain structures realizing the normalized nonlinear profile d(z)/d_eff,
// their Fourier description, and random boundary disorder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpm/error.hpp"
#include "qpm/random.hpp"
#include "qpm/summation.hpp"

namespace qpm {

/// Shortest domain the structure may contain after disorder is applied (1 nm).
inline constexpr double min_domain_um = 1e-3;

/// How GratingSpec::sigma_um maps onto boundary displacements.
///
/// domain_length: sigma_um is the standard deviation of a domain's length, so each of its
/// two independent walls moves with sigma_um / sqrt(2).
/// boundary: sigma_um is the standard deviation of every wall displacement.
enum class DisorderConvention { domain_length, boundary };

inline std::string_view to_string(DisorderConvention c) noexcept
{
    return c == DisorderConvention::domain_length ? "domain_length" : "boundary";
}

struct GratingSpec {
    double period_um = 2.132;
    double duty_cycle = 0.5;
    double length_um = 11000.0;
    double sigma_um = 0.0;
    DisorderConvention convention = DisorderConvention::domain_length;
    std::uint64_t seed = 0;

    void validate() const
    {
        std::ostringstream msg;
        if (!(period_um > 0.0))
            msg << "grating period must be positive (got " << period_um << " um)";
        else if (!(duty_cycle > 0.0 && duty_cycle < 1.0))
            msg << "duty cycle must lie in (0, 1) (got " << duty_cycle << ")";
        else if (!(length_um >= period_um))
            msg << "crystal length " << length_um << " um is shorter than one period " << period_um << " um";
        else if (!(sigma_um >= 0.0))
            msg << "disorder standard deviation must be non-negative (got " << sigma_um << " um)";
        else if (std::min(duty_cycle, 1.0 - duty_cycle) * period_um < min_domain_um)
            msg << "ideal domains shorter than " << min_domain_um << " um";
        else
            return;
        throw InvalidArgument(msg.str());
    }

    /// Standard deviation applied to each individual wall.
    double boundary_sigma_um() const noexcept
    {
        return convention == DisorderConvention::domain_length ? sigma_um / std::numbers::sqrt2 : sigma_um;
    }
};

/// Ordered wall positions 0 = z_0 < z_1 < ... < z_N = L with alternating signs.
class DomainStructure {
public:
    DomainStructure(std::vector<double> boundaries, int initial_sign)
        : boundaries_(std::move(boundaries)), initial_sign_(initial_sign)
    {
        if (initial_sign_ != 1 && initial_sign_ != -1)
            throw InvalidArgument("initial domain sign must be +1 or -1");
        if (boundaries_.size() < 2)
            throw InvalidArgument("a domain structure needs at least the two end faces");
        if (boundaries_.front() != 0.0)
            throw InvalidArgument("domain structure must start at z = 0");
        for (std::size_t i = 1; i < boundaries_.size(); ++i) {
            if (!(boundaries_[i] > boundaries_[i - 1])) {
                std::ostringstream msg;
                msg << "domain boundaries not strictly increasing at index " << i << " (" << boundaries_[i - 1]
                    << " -> " << boundaries_[i] << " um)";
                throw InvalidArgument(msg.str());
            }
        }
    }

    std::span<double const> boundaries() const noexcept { return boundaries_; }
    int initial_sign() const noexcept { return initial_sign_; }
    std::size_t domain_count() const noexcept { return boundaries_.size() - 1; }
    double length_um() const noexcept { return boundaries_.back(); }

    int sign(std::size_t domain) const noexcept { return (domain % 2 == 0) ? initial_sign_ : -initial_sign_; }

    /// Same walls, every sign reversed.
    DomainStructure flipped() const { return DomainStructure(boundaries_, -initial_sign_); }

    friend bool operator==(DomainStructure const&, DomainStructure const&) = default;

private:
    std::vector<double> boundaries_;
    int initial_sign_;
};

/// Fourier coefficient c_m of the +-1 square wave with duty cycle D whose positive
/// segment is centered on the origin: 2 sin(pi m D)/(pi m) for m != 0, and the exact DC
/// value 2D - 1 for m = 0.
inline double fourier_coefficient(int m, double duty_cycle)
{
    if (!(duty_cycle > 0.0 && duty_cycle < 1.0))
        throw InvalidArgument("duty cycle must lie in (0, 1)");
    if (m == 0)
        return 2.0 * duty_cycle - 1.0;
    double const x = std::numbers::pi * m;
    return 2.0 * std::sin(x * duty_cycle) / x;
}

inline double grating_vector(int m, double period_um)
{
    if (!(period_um > 0.0))
        throw InvalidArgument("grating period must be positive");
    return 2.0 * std::numbers::pi * m / period_um;
}

/// Periodic structure: each period starts with a positive domain of length D*Lambda
/// followed by a negative one; the last period is cut at z = L. Walls closer than
/// min_domain_um to the exit face are dropped so that no sliver domain remains.
inline DomainStructure build_ideal(GratingSpec const& spec)
{
    spec.validate();
    double const L = spec.length_um;
    double const period = spec.period_um;
    std::vector<double> walls{0.0};
    walls.reserve(static_cast<std::size_t>(2.0 * L / period) + 3);
    for (std::size_t p = 0;; ++p) {
        double const start = static_cast<double>(p) * period;
        double const candidates[2] = {start + spec.duty_cycle * period, start + period};
        bool done = false;
        for (double z : candidates) {
            if (z >= L - min_domain_um) {
                done = true;
                break;
            }
            walls.push_back(z);
        }
        if (done)
            break;
    }
    walls.push_back(L);
    return DomainStructure(std::move(walls), 1);
}

struct PerturbedStructure {
    DomainStructure structure;
    /// Applied displacement of each interior wall after clamping, z_m - z_m,ideal.
    std::vector<double> displacements;
};

/// Displaces every interior wall of `ideal` by an independent N(0, sigma^2) draw.
///
/// Walls are processed left to right and clamped to
/// [previous wall + 1 nm, next ideal wall + 5 sigma], and additionally kept far enough
/// from the exit face that every remaining wall still fits. End faces never move.
/// One normal variate is consumed per interior wall whether or not it is clamped.
inline PerturbedStructure perturb(DomainStructure const& ideal, double boundary_sigma_um, NormalStream& rng)
{
    if (!(boundary_sigma_um >= 0.0))
        throw InvalidArgument("boundary displacement standard deviation must be non-negative");
    auto const src = ideal.boundaries();
    std::size_t const last = src.size() - 1;
    std::vector<double> displacements(last > 0 ? last - 1 : 0, 0.0);
    if (boundary_sigma_um == 0.0)
        return {ideal, std::move(displacements)};

    std::vector<double> out(src.begin(), src.end());
    double const L = src[last];
    for (std::size_t i = 1; i < last; ++i) {
        double const proposed = src[i] + boundary_sigma_um * rng();
        double const lo = out[i - 1] + min_domain_um;
        double const hi = std::min(src[i + 1] + 5.0 * boundary_sigma_um,
                                   L - static_cast<double>(last - i) * min_domain_um);
        out[i] = std::clamp(proposed, lo, std::max(lo, hi));
        displacements[i - 1] = out[i] - src[i];
    }
    return {DomainStructure(std::move(out), ideal.initial_sign()), std::move(displacements)};
}

/// Fraction of the crystal length carrying the positive sign.
inline double duty_cycle_estimate(DomainStructure const& structure)
{
    auto const z = structure.boundaries();
    CompensatedSum positive;
    for (std::size_t j = 0; j + 1 < z.size(); ++j)
        if (structure.sign(j) > 0)
            positive += z[j + 1] - z[j];
    return positive.value() / structure.length_um();
}

// CSV layout: "# initial_sign=<+1|-1>", "# length_um=<L>", a column header
// "boundary_position_um", then one wall per line including both end faces.

inline void write_domain_csv(std::ostream& out, DomainStructure const& structure)
{
    out << "# initial_sign=" << structure.initial_sign() << '\n';
    out << "# length_um=" << std::setprecision(17) << structure.length_um() << '\n';
    out << "boundary_position_um\n";
    for (double z : structure.boundaries())
        out << std::setprecision(17) << z << '\n';
}

inline DomainStructure read_domain_csv(std::istream& in)
{
    int initial_sign = 1;
    double length = -1.0;
    bool header_seen = false;
    std::vector<double> walls;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](std::string const& what) -> DomainStructure {
        throw ConfigError("domain CSV line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            auto const eq = line.find('=');
            if (eq == std::string::npos)
                continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            std::string const value = line.substr(eq + 1);
            try {
                if (key == "initial_sign")
                    initial_sign = std::stoi(value);
                else if (key == "length_um")
                    length = std::stod(value);
            } catch (std::exception const&) {
                return fail("cannot parse value of '" + key + "'");
            }
            continue;
        }
        if (!header_seen) {
            if (line != "boundary_position_um")
                return fail("expected column header 'boundary_position_um'");
            header_seen = true;
            continue;
        }
        try {
            std::size_t used = 0;
            walls.push_back(std::stod(line, &used));
            if (line.find_first_not_of(" \t", used) != std::string::npos)
                return fail("trailing characters after boundary position");
        } catch (std::invalid_argument const&) {
            return fail("not a number: '" + line + "'");
        }
    }
    if (!header_seen)
        throw ConfigError("domain CSV: missing column header 'boundary_position_um'");
    if (length >= 0.0 && (walls.empty() || walls.back() != length))
        throw ConfigError("domain CSV: last boundary does not match the recorded length_um");
    try {
        return DomainStructure(std::move(walls), initial_sign);
    } catch (InvalidArgument const& e) {
        throw ConfigError(std::string("domain CSV: ") + e.what());
    }
}

}  // namespace qpm
