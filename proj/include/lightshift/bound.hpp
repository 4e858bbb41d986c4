// bound.hpp — the phase-shift bound chain, SNR limits, and the audit report
//
// For every occupied dressed state, |sum_l t_l Re(rho_LU)| <= sum_l t_l
// |<U|m>|, and weighting by the occupation probabilities plus one
// Cauchy-Schwarz step turns the right side into sum_l t_l sqrt(Pbar_U). The
// audit evaluates each link of that chain separately, reports the tightness
// ratio, and translates the bound into shot-noise SNR limits three ways.

#pragma once

#include <span>

#include "lightshift/dynamics.hpp"
#include "lightshift/phase.hpp"

namespace lightshift {

// Literal per-atom bound (L sigma / 2V) sum_l (gamma/Omega) sqrt(Pbar), with
// Omega at the mean photon configuration and L = c tau. Requires the laser's
// cross-section; +infinity when some Omega vanishes (the bound is vacuous for
// arbitrarily weak fields). pbar_upper holds one entry per transition of the
// laser, in transitions_of_laser order.
double per_atom_bound(const LevelScheme& scheme, const DerivedParams& params, int laser,
                      std::span<const double> pbar_upper, double tau);

// Literal total bound (nbar_col sigma / 2) sum_l (gamma/Omega) sqrt(Pbar).
double total_bound(const LevelScheme& scheme, const DerivedParams& params, int laser,
                   std::span<const double> pbar_upper);

// Shot-noise-limited SNR of an ideal single-pass interferometric phase
// measurement: sqrt(eta P / (B hbar omega)) |dphi|.
double snr_ideal(double dphi, double eta, double power, double omega, double bandwidth,
                 double hbar);

// Electric-field amplitude consistent with the photon configuration:
// eps0 E^2 V / 2 = hbar omega (n + 1 + b_lower) for the laser's first
// transition, equivalently E = hbar Omega / d. Microscopic mode only.
double field_amplitude(const LevelScheme& scheme, const DerivedParams& params,
                       const ManifoldMap& map, int laser, const PhotonVector& at);

struct SnrLimits {
    std::optional<double> route27; // via field amplitude and the total bound
    std::optional<double> route28; // sum (nbar_col/2) sqrt(eta A sigma gamma Pbar / B)
    std::optional<double> route29; // same with Gamma = Pbar gamma
    std::optional<double> diff_27_28; // relative
    std::optional<double> diff_28_29;
};

// The three SNR-limit routes with pairwise relative differences. Route 27
// needs microscopic mode; routes 28/29 need the cross-section.
// emission_rates holds Gamma_jl for route 29, one per transition of the laser.
SnrLimits snr_limit(const LevelScheme& scheme, const DerivedParams& params,
                    const ManifoldMap& map, int laser, std::span<const double> pbar_upper,
                    std::span<const double> emission_rates, const PhotonVector& at);

// Margins of the chain links; each is the minimum of (rhs - lhs) over the
// audited configurations and is nonnegative up to rounding when the theorem
// holds.
struct ChainChecks {
    double triangle_margin{0.0};       // per (manifold, m): triangle inequality
    double density_margin{0.0};        // per (manifold, m, l): |rho_LU| <= sqrt(rho_LL rho_UU) <= |<U|m>|
    double cauchy_schwarz_margin{0.0}; // per l: weighted amplitude sum vs sqrt(Pbar)
};

struct TransitionAudit {
    int transition{-1};
    double prefactor{0.0};    // t_l = 2 g^2 tau / Omega (== sigma gamma L / 2 Omega V microscopic)
    double pbar_upper{0.0};   // Eq-16-style time-averaged upper population
    double gamma{0.0};        // spontaneous-emission rate of the upper state
    double emission_rate{0.0}; // Gamma = Pbar * gamma
};

struct LaserAudit {
    int laser{-1};
    double dphi_per_atom{0.0}; // occupation-weighted |phase slope|, rad per atom
    double dphi_total{0.0};
    double bound_per_atom{0.0}; // consistent-prefactor rhs, rad per atom
    double bound_total{0.0};
    std::optional<double> bound_per_atom_literal; // Eq-24 form, needs sigma
    std::optional<double> bound_total_literal;
    double ratio{0.0};
    double dispersion{0.0}; // rad, photon-window spread of the dominant state's shift
    std::optional<double> snr_measurement; // ideal-interferometer SNR at dphi_total
    SnrLimits snr_limits;
    ChainChecks chain;
    std::vector<TransitionAudit> transitions;
};

struct BoundReport {
    std::string scheme_id;
    double tau{0.0};
    bool any_tau{false};
    double residual_mean{0.0};   // return residual at the audited configuration
    double residual_window{0.0}; // worst residual over the photon window
    std::vector<LaserAudit> lasers;
    double worst_ratio{0.0};
    bool theorem_violated{false};
    std::vector<std::string> notes;
};

inline constexpr double kViolationTolerance = 1e-9;

// Full audit of a prepared state at the return condition rc. Prefactors and
// Omega are evaluated at the mean photon configuration; the phase-shift side
// aggregates occupation-weighted per-state magnitudes, so the report is
// meaningful even when the occupied states' slopes disagree (the residual and
// dispersion fields quantify that).
BoundReport audit(const LevelScheme& scheme, const DerivedParams& params,
                  const ManifoldMap& map, const PreparedState& prepared,
                  const ReturnCondition& rc);

// Serialization. CSV columns (stable):
// seed,scheme_hash,laser,dphi_per_atom,dphi_total,bound_per_atom,bound_total,
// ratio,pbar_max,snr_limit,residual
std::string report_to_json(const BoundReport& report, const LevelScheme& scheme);
std::string report_csv_header();
std::vector<std::string> report_csv_rows(const BoundReport& report, const LevelScheme& scheme,
                                         std::uint64_t seed);

} // namespace lightshift
