// scheme.hpp — level-scheme description, JSON parsing, and derived optical parameters
//
// A scheme file is a JSON document (format 1) declaring atomic levels, laser
// modes, the transitions each laser drives, and the physical settings of the
// probe geometry. Two input modes are supported:
//   microscopic — transitions carry dipole moments, lasers carry wavenumbers;
//                 couplings, decay rates and cross-sections are derived.
//   reduced     — transitions carry Rabi frequencies and decay rates directly;
//                 the cross-section is derived from the wavenumber if given.
// All quantities are SI; hbar, epsilon0 and c live in the settings block so
// reduced-unit fixtures can set them to 1.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lightshift {

// CODATA SI values, used when a scheme file does not override them.
inline constexpr double kHbar = 1.054571817e-34;     // J s
inline constexpr double kEpsilon0 = 8.8541878128e-12; // F/m
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

enum class SchemeMode { microscopic, reduced };

struct LevelSpec {
    std::string name;
    double detuning{0.0}; // rad/s, interaction-picture energy / hbar
};

struct LaserSpec {
    std::string name;
    double angular_frequency{0.0};     // rad/s
    std::optional<double> wavenumber;  // 1/m, required in microscopic mode
    double mean_photon_number{1.0};    // dimensionless, >= 1
};

struct TransitionSpec {
    std::string laser;
    std::string lower;
    std::string upper;
    // microscopic mode
    std::optional<double> dipole_moment; // C m
    // reduced mode
    std::optional<double> rabi_frequency; // rad/s, at the mean photon number
    std::optional<double> decay_rate;     // rad/s, upper-state emission rate
};

struct PhysicalSettings {
    double quantisation_volume{0.0}; // m^3
    double interaction_length{0.0};  // m, must equal c * interaction_time
    double interaction_time{0.0};    // s
    double column_density{0.0};      // 1/m^2
    double beam_area{0.0};           // m^2
    double detector_efficiency{1.0}; // in (0, 1]
    double bandwidth{0.0};           // Hz
    double hbar{kHbar};
    double epsilon0{kEpsilon0};
    double c{kSpeedOfLight};
};

struct LevelScheme {
    SchemeMode mode{SchemeMode::reduced};
    std::vector<LevelSpec> levels;
    std::vector<LaserSpec> lasers;
    std::vector<TransitionSpec> transitions;
    PhysicalSettings settings;

    int level_index(std::string_view name) const;
    int laser_index(std::string_view name) const;
    // Transition indices driven by one laser, in declaration order.
    std::vector<int> transitions_of_laser(int laser) const;
};

// One parse/validation finding. `location` is a JSON-pointer-like path into
// the document ("/transitions/2"); byte_offset is nonzero only for syntax
// errors reported by the JSON reader.
struct Diagnostic {
    std::string message;
    std::string location;
    std::size_t byte_offset{0};
};

struct ParseResult {
    std::optional<LevelScheme> scheme;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return scheme.has_value(); }
};

// Total parse: never throws on bad input, every failure becomes a diagnostic.
ParseResult parse_scheme(std::string_view text);

// Canonical serialization: fixed key order, round-trips bit-exactly through
// parse_scheme for valid schemes.
std::string serialize_scheme(const LevelScheme& scheme);

// Structural invariants (unique names, referential integrity, mode-consistent
// fields, positivity, L = c*tau). Empty result means the scheme is valid.
std::vector<Diagnostic> validate_scheme(const LevelScheme& scheme);

// FNV-1a over the canonical serialization, as a stable 16-hex-digit id.
std::string scheme_hash(const LevelScheme& scheme);

// Optical parameters derived from a scheme. Couplings g are stored as angular
// frequencies: H couples (L, U) with hbar * g * sqrt(n + 1 + b). The Rabi
// frequencies Omega = 2 g sqrt(n + 1 + b) depend on the photon-offset matrix
// and are filled by resolve_couplings (manifold.hpp); `couplings_resolved`
// tracks that step.
struct DerivedParams {
    std::vector<std::optional<double>> cross_section; // per laser, m^2, 6*pi/k^2
    std::vector<double> coupling_g; // per transition, rad/s
    std::vector<double> rabi;       // per transition, rad/s, at mean photons
    std::vector<double> decay;      // per transition, rad/s
    bool couplings_resolved{false};
};

// Microscopic mode: g = sqrt(omega / (2 hbar eps0 V)) * d, gamma = k^3 d^2 /
// (3 pi eps0 hbar), sigma = 6 pi / k^2. Reduced mode: Omega and gamma pass
// through; sigma only when the wavenumber is present. Throws
// std::invalid_argument on negative inputs.
DerivedParams derive_optical_params(const LevelScheme& scheme);

} // namespace lightshift
