#include "lightshift/phase.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lightshift {

namespace {

double principal_angle(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(x, two_pi);
    if (r > std::numbers::pi) r -= two_pi;
    if (r < -std::numbers::pi) r += two_pi;
    return r;
}

// Rabi frequency of one transition at the configuration of `ds`.
double rabi_at(const LevelScheme& scheme, const DerivedParams& params,
               const ManifoldMap& map, const DressedSystem& ds, int transition) {
    const auto& tr = scheme.transitions[transition];
    const int j = scheme.laser_index(tr.laser);
    const int lo = scheme.level_index(tr.lower);
    const double arg =
        static_cast<double>(ds.photon_config[j] + 1 + map.offsets[j][lo]);
    return 2.0 * params.coupling_g[transition] * std::sqrt(arg);
}

} // namespace

double hf_derivative(const LevelScheme& scheme, const DressedSystem& ds, int m,
                     int transition) {
    if (m < 0 || m >= ds.dim())
        throw std::out_of_range("hf_derivative: dressed index out of range");
    const auto& tr = scheme.transitions[transition];
    const int lo = ds.basis.slot_of_level(scheme.level_index(tr.lower));
    const int up = ds.basis.slot_of_level(scheme.level_index(tr.upper));
    if (lo < 0 || up < 0) return 0.0;
    const std::complex<double> rho_lu =
        ds.states(lo, m) * std::conj(ds.states(up, m));
    return scheme.settings.hbar * rho_lu.real();
}

double photon_derivative_chain(const LevelScheme& scheme, const DerivedParams& params,
                               const ManifoldMap& map, const DressedSystem& ds, int m,
                               int laser) {
    double dEdn = 0.0;
    for (int t : scheme.transitions_of_laser(laser)) {
        const int lo_level = scheme.level_index(scheme.transitions[t].lower);
        if (!map.is_reachable(lo_level)) continue;
        const double g = params.coupling_g[t];
        if (g == 0.0)
            throw std::invalid_argument(
                "photon_derivative_chain: zero Rabi frequency on transition " +
                std::to_string(t));
        const double arg =
            static_cast<double>(ds.photon_config[laser] + 1 + map.offsets[laser][lo_level]);
        // dOmega/dn = g / sqrt(arg); paired with dE/dOmega = hbar Re(rho_LU).
        dEdn += hf_derivative(scheme, ds, m, t) * g / std::sqrt(arg);
    }
    return dEdn;
}

double photon_derivative_fd(const LevelScheme& scheme, const DerivedParams& params,
                            const ManifoldMap& map, const DressedSystem& ds, int m,
                            int laser) {
    PhotonVector shifted = ds.photon_config;
    shifted[laser] += 1;
    const DressedSystem next = dress(scheme, params, map, shifted);
    const MatchResult match = match_eigenstates(ds, next);
    if (match.ambiguous)
        throw std::runtime_error(
            "photon_derivative_fd: ambiguous eigenstate matching between manifolds");
    return match.aligned_energies[m] - ds.energies[m];
}

double transition_prefactor(const LevelScheme& scheme, const DerivedParams& params,
                            int transition, double tau) {
    (void)scheme;
    const double g = params.coupling_g[transition];
    if (g == 0.0) return 0.0; // consistent gamma vanishes with the dipole
    const double omega = params.rabi[transition];
    return 2.0 * g * g * tau / omega;
}

double atom_count(const LevelScheme& scheme, double tau) {
    const auto& s = scheme.settings;
    return s.column_density * s.quantisation_volume / (s.c * tau);
}

double phase_dispersion(const LevelScheme& scheme, const DerivedParams& params,
                        const ManifoldMap& map, const DressedSystem& ds, int m,
                        int laser, double tau) {
    const double nbar = scheme.lasers[laser].mean_photon_number;
    const double half = 3.0 * std::sqrt(nbar);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double step : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        PhotonVector config = ds.photon_config;
        config[laser] =
            static_cast<std::int64_t>(std::llround(nbar + step * half));
        // Skip window points that would push some level below zero photons.
        bool valid = config[laser] >= 0;
        for (int v : map.reachable)
            valid = valid && config[laser] + map.offsets[laser][v] >= 0;
        if (!valid) continue;
        double value;
        if (config == ds.photon_config) {
            value = photon_derivative_chain(scheme, params, map, ds, m, laser);
        } else {
            const DressedSystem shifted = dress(scheme, params, map, config);
            const MatchResult match = match_eigenstates(ds, shifted);
            if (match.ambiguous) continue;
            DressedSystem tracked = shifted;
            tracked.energies = match.aligned_energies;
            tracked.states = match.aligned;
            value = photon_derivative_chain(scheme, params, map, tracked, m, laser);
        }
        const double dphi = tau / scheme.settings.hbar * value;
        lo = std::min(lo, dphi);
        hi = std::max(hi, dphi);
    }
    if (!(hi >= lo)) return 0.0;
    return hi - lo;
}

PhaseShiftResult phase_shift(const LevelScheme& scheme, const DerivedParams& params,
                             const ManifoldMap& map, const DressedSystem& ds, int m,
                             int laser, PhaseMethod method, double tau) {
    if (!params.couplings_resolved)
        throw std::invalid_argument("phase_shift: couplings not resolved");
    const double hbar = scheme.settings.hbar;

    PhaseShiftResult result;
    result.method = method;
    result.dressed_index = m;

    const double chain = photon_derivative_chain(scheme, params, map, ds, m, laser);
    double dEdn = chain;
    if (method == PhaseMethod::photon_fd)
        dEdn = photon_derivative_fd(scheme, params, map, ds, m, laser);

    if (method == PhaseMethod::time_domain) {
        const double fd = photon_derivative_fd(scheme, params, map, ds, m, laser);
        result.per_atom = principal_angle(fd * tau / hbar);
    } else {
        result.per_atom = tau / hbar * dEdn;
    }
    result.total = result.per_atom * atom_count(scheme, tau);

    const auto laser_transitions = scheme.transitions_of_laser(laser);
    for (int t : laser_transitions)
        result.dEdOmega.push_back(hf_derivative(scheme, ds, m, t));

    // Optical-quantities route, Eq-19 style: needs sigma and gamma.
    if (params.cross_section[laser]) {
        const double sigma = *params.cross_section[laser];
        const double L = scheme.settings.c * tau;
        const double V = scheme.settings.quantisation_volume;
        double eq19 = 0.0;
        bool available = true;
        for (std::size_t i = 0; i < laser_transitions.size(); ++i) {
            const int t = laser_transitions[i];
            const double omega_t = rabi_at(scheme, params, map, ds, t);
            if (omega_t == 0.0) { available = false; break; }
            eq19 += result.dEdOmega[i] * sigma * params.decay[t] * L /
                    (2.0 * hbar * omega_t * V);
        }
        if (available) {
            result.per_atom_eq19 = eq19;
            const double eq13 = tau / hbar * chain;
            result.route_agreement =
                std::abs(eq13 - eq19) /
                std::max({std::abs(eq13), std::abs(eq19), 1e-300});
        }
    }

    result.dispersion = phase_dispersion(scheme, params, map, ds, m, laser, tau);
    return result;
}

} // namespace lightshift
