#include "lightshift/bound.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lightshift {

namespace {

constexpr double kOccupied = 1e-10;

double fmt_guard(double v) { return std::isfinite(v) ? v : 0.0; }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// gamma/Omega weighted sqrt(Pbar) sum shared by Eq-24/25/27.
double gamma_over_omega_sum(const LevelScheme& scheme, const DerivedParams& params, int laser,
                            std::span<const double> pbar_upper) {
    const auto transitions = scheme.transitions_of_laser(laser);
    if (pbar_upper.size() != transitions.size())
        throw std::invalid_argument("bound: one Pbar entry per laser transition required");
    double sum = 0.0;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const int t = transitions[i];
        const double pbar = pbar_upper[i];
        if (pbar < 0.0 || pbar > 1.0 + 1e-12)
            throw std::invalid_argument("bound: Pbar outside [0, 1]");
        if (params.rabi[t] == 0.0) {
            if (pbar > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        sum += params.decay[t] / params.rabi[t] * std::sqrt(std::max(0.0, pbar));
    }
    return sum;
}

} // namespace

double per_atom_bound(const LevelScheme& scheme, const DerivedParams& params, int laser,
                      std::span<const double> pbar_upper, double tau) {
    if (!params.cross_section[laser])
        throw std::invalid_argument("per_atom_bound: cross-section unavailable for this laser");
    const double sigma = *params.cross_section[laser];
    const double L = scheme.settings.c * tau;
    const double V = scheme.settings.quantisation_volume;
    return L * sigma / (2.0 * V) * gamma_over_omega_sum(scheme, params, laser, pbar_upper);
}

double total_bound(const LevelScheme& scheme, const DerivedParams& params, int laser,
                   std::span<const double> pbar_upper) {
    if (!params.cross_section[laser])
        throw std::invalid_argument("total_bound: cross-section unavailable for this laser");
    const double sigma = *params.cross_section[laser];
    return scheme.settings.column_density * sigma / 2.0 *
           gamma_over_omega_sum(scheme, params, laser, pbar_upper);
}

double snr_ideal(double dphi, double eta, double power, double omega, double bandwidth,
                 double hbar) {
    if (!(eta > 0) || eta > 1.0 || !(power > 0) || !(omega > 0) || !(bandwidth > 0))
        throw std::invalid_argument("snr_ideal: parameters must be positive, eta <= 1");
    return std::sqrt(eta * power / (bandwidth * hbar * omega)) * std::abs(dphi);
}

double field_amplitude(const LevelScheme& scheme, const DerivedParams& params,
                       const ManifoldMap& map, int laser, const PhotonVector& at) {
    if (scheme.mode != SchemeMode::microscopic)
        throw std::invalid_argument("field_amplitude: microscopic mode required");
    const auto transitions = scheme.transitions_of_laser(laser);
    if (transitions.empty())
        throw std::invalid_argument("field_amplitude: laser drives no transition");
    const int t = transitions.front();
    const int lo = scheme.level_index(scheme.transitions[t].lower);
    const double arg = static_cast<double>(at[laser] + 1 + map.offsets[laser][lo]);
    const double omega_rabi = 2.0 * params.coupling_g[t] * std::sqrt(arg);
    const double d = *scheme.transitions[t].dipole_moment;
    return scheme.settings.hbar * omega_rabi / d;
}

SnrLimits snr_limit(const LevelScheme& scheme, const DerivedParams& params,
                    const ManifoldMap& map, int laser, std::span<const double> pbar_upper,
                    std::span<const double> emission_rates, const PhotonVector& at) {
    const auto transitions = scheme.transitions_of_laser(laser);
    if (emission_rates.size() != transitions.size())
        throw std::invalid_argument("snr_limit: one Gamma per laser transition required");
    const auto& s = scheme.settings;
    const double eta = s.detector_efficiency;
    const double area = s.beam_area;
    const double bandwidth = s.bandwidth;
    const double nbar_col = s.column_density;
    const double omega = scheme.lasers[laser].angular_frequency;

    SnrLimits limits;
    if (params.cross_section[laser]) {
        const double sigma = *params.cross_section[laser];
        double r28 = 0.0;
        double r29 = 0.0;
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            const int t = transitions[i];
            r28 += nbar_col / 2.0 *
                   std::sqrt(eta * area * sigma * params.decay[t] * pbar_upper[i] / bandwidth);
            r29 += nbar_col / 2.0 *
                   std::sqrt(eta * area * sigma * emission_rates[i] / bandwidth);
        }
        limits.route28 = r28;
        limits.route29 = r29;
        limits.diff_28_29 =
            std::abs(r28 - r29) / std::max({std::abs(r28), std::abs(r29), 1e-300});
    }
    if (scheme.mode == SchemeMode::microscopic) {
        const double field = field_amplitude(scheme, params, map, laser, at);
        const double prefactor = std::sqrt(eta * area * s.c * s.epsilon0 * field * field /
                                           (2.0 * bandwidth * s.hbar * omega));
        limits.route27 = prefactor * total_bound(scheme, params, laser, pbar_upper);
        if (limits.route28)
            limits.diff_27_28 = std::abs(*limits.route27 - *limits.route28) /
                                std::max({std::abs(*limits.route27),
                                          std::abs(*limits.route28), 1e-300});
    }
    return limits;
}

BoundReport audit(const LevelScheme& scheme, const DerivedParams& params,
                  const ManifoldMap& map, const PreparedState& prepared,
                  const ReturnCondition& rc) {
    if (!params.couplings_resolved)
        throw std::invalid_argument("audit: couplings not resolved");
    const double hbar = scheme.settings.hbar;
    const double tau = rc.any_tau && rc.tau == 0.0 ? scheme.settings.interaction_time : rc.tau;

    BoundReport report;
    report.scheme_id = scheme_hash(scheme);
    report.tau = tau;
    report.any_tau = rc.any_tau;
    report.residual_mean = rc.residual;
    report.residual_window = rc.residual;
    report.notes = {
        "total phase shift assumes uniform illumination: atoms = column_density * V / L",
        "Omega and bound prefactors evaluated at the mean photon configuration"};

    // Time-averaged populations per level (closed form; rc guarantees validity).
    const int n_levels = static_cast<int>(scheme.levels.size());
    std::vector<double> pbar_level(n_levels, 0.0);
    for (int lvl = 0; lvl < n_levels; ++lvl) {
        if (!map.is_reachable(lvl)) continue;
        const auto avg = average_population(scheme, prepared, tau, lvl,
                                            AverageMethod::closed_form);
        pbar_level[lvl] = *avg.closed_form;
    }

    // Highest-weight manifold: the mean photon configuration for the delta
    // distribution and the Poisson mode for coherent windows.
    const PreparedManifold* mean_pm = &prepared.manifolds.front();
    for (const auto& pm : prepared.manifolds)
        if (pm.weight > mean_pm->weight) mean_pm = &pm;

    report.worst_ratio = 0.0;
    for (int j = 0; j < static_cast<int>(scheme.lasers.size()); ++j) {
        LaserAudit la;
        la.laser = j;
        const auto transitions = scheme.transitions_of_laser(j);

        std::vector<double> pbar_upper, gammas, emission, prefactors;
        for (int t : transitions) {
            TransitionAudit ta;
            ta.transition = t;
            ta.prefactor = transition_prefactor(scheme, params, t, tau);
            const int upper = scheme.level_index(scheme.transitions[t].upper);
            ta.pbar_upper = map.is_reachable(upper) ? pbar_level[upper] : 0.0;
            ta.gamma = params.decay[t];
            ta.emission_rate = ta.pbar_upper * ta.gamma;
            pbar_upper.push_back(ta.pbar_upper);
            gammas.push_back(ta.gamma);
            emission.push_back(ta.emission_rate);
            prefactors.push_back(ta.prefactor);
            la.transitions.push_back(ta);
        }

        // Phase side and the first two chain links, over occupied (manifold, m).
        double dphi = 0.0;
        double triangle_margin = std::numeric_limits<double>::infinity();
        double density_margin = std::numeric_limits<double>::infinity();
        std::vector<double> weighted_amp(transitions.size(), 0.0);
        for (const auto& pm : prepared.manifolds) {
            for (int m = 0; m < pm.ds.dim(); ++m) {
                const double w = pm.weight * std::norm(pm.coeffs[m]);
                if (w < kOccupied * kOccupied) continue;
                double signed_sum = 0.0;
                double abs_sum = 0.0;
                for (std::size_t i = 0; i < transitions.size(); ++i) {
                    const auto& tr = scheme.transitions[transitions[i]];
                    const int lo = pm.ds.basis.slot_of_level(scheme.level_index(tr.lower));
                    const int up = pm.ds.basis.slot_of_level(scheme.level_index(tr.upper));
                    if (lo < 0 || up < 0) continue;
                    const std::complex<double> rho_lu =
                        pm.ds.states(lo, m) * std::conj(pm.ds.states(up, m));
                    const double upper_amp = std::abs(pm.ds.states(up, m));
                    const double lower_amp = std::abs(pm.ds.states(lo, m));
                    signed_sum += prefactors[i] * rho_lu.real();
                    abs_sum += prefactors[i] * std::abs(rho_lu.real());
                    density_margin =
                        std::min(density_margin, upper_amp * lower_amp - std::abs(rho_lu));
                    density_margin = std::min(density_margin, upper_amp - std::abs(rho_lu));
                    weighted_amp[i] += w * upper_amp;
                }
                dphi += w * std::abs(signed_sum);
                triangle_margin = std::min(triangle_margin, abs_sum - std::abs(signed_sum));
            }
        }

        double bound = 0.0;
        double cs_margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            const double root = std::sqrt(std::max(0.0, pbar_upper[i]));
            bound += prefactors[i] * root;
            cs_margin = std::min(cs_margin, root - weighted_amp[i]);
        }
        la.chain.triangle_margin = std::isfinite(triangle_margin) ? triangle_margin : 0.0;
        la.chain.density_margin = std::isfinite(density_margin) ? density_margin : 0.0;
        la.chain.cauchy_schwarz_margin = std::isfinite(cs_margin) ? cs_margin : 0.0;

        la.dphi_per_atom = dphi;
        la.bound_per_atom = bound;
        const double atoms = atom_count(scheme, tau);
        la.dphi_total = dphi * atoms;
        la.bound_total = bound * atoms;
        if (params.cross_section[j]) {
            la.bound_per_atom_literal =
                per_atom_bound(scheme, params, j, pbar_upper, tau);
            la.bound_total_literal = total_bound(scheme, params, j, pbar_upper);
        }

        if (dphi <= 1e-12 && bound <= 1e-15) {
            la.ratio = 0.0;
        } else if (bound <= 1e-15) {
            la.ratio = std::numeric_limits<double>::infinity();
            report.theorem_violated = true; // phase shift without excited population
        } else {
            la.ratio = dphi / bound;
            if (la.ratio > 1.0 + kViolationTolerance) report.theorem_violated = true;
        }
        report.worst_ratio = std::max(report.worst_ratio, fmt_guard(la.ratio));

        // Dispersion of the dominant occupied state at the mean configuration,
        // and the worst return residual over the same window.
        {
            int dominant = 0;
            for (int m = 1; m < mean_pm->ds.dim(); ++m)
                if (std::abs(mean_pm->coeffs[m]) > std::abs(mean_pm->coeffs[dominant]))
                    dominant = m;
            la.dispersion = phase_dispersion(scheme, params, map, mean_pm->ds, dominant, j, tau);

            if (!rc.any_tau) {
                const double nbar = scheme.lasers[j].mean_photon_number;
                const double half = 3.0 * std::sqrt(nbar);
                for (double step : {-1.0, -0.5, 0.5, 1.0}) {
                    PhotonVector config = mean_pm->ds.photon_config;
                    config[j] = static_cast<std::int64_t>(std::llround(nbar + step * half));
                    bool valid = config[j] >= 0;
                    for (int v : map.reachable)
                        valid = valid && config[j] + map.offsets[j][v] >= 0;
                    if (!valid) continue;
                    const DressedSystem shifted = dress(scheme, params, map, config);
                    const MatchResult match = match_eigenstates(mean_pm->ds, shifted);
                    if (match.ambiguous) continue;
                    DressedSystem tracked = shifted;
                    tracked.energies = match.aligned_energies;
                    tracked.states = match.aligned;
                    report.residual_window =
                        std::max(report.residual_window,
                                 return_condition_at(tracked, mean_pm->coeffs, hbar, tau)
                                     .residual);
                }
            }
        }

        la.snr_limits = snr_limit(scheme, params, map, j, pbar_upper, emission,
                                  mean_pm->photons);
        if (scheme.mode == SchemeMode::microscopic) {
            const double field = field_amplitude(scheme, params, map, j, mean_pm->photons);
            const double power = scheme.settings.beam_area * scheme.settings.c *
                                 scheme.settings.epsilon0 * field * field / 2.0;
            la.snr_measurement =
                snr_ideal(la.dphi_total, scheme.settings.detector_efficiency, power,
                          scheme.lasers[j].angular_frequency, scheme.settings.bandwidth,
                          hbar);
        }
        report.lasers.push_back(std::move(la));
    }
    return report;
}

std::string report_to_json(const BoundReport& report, const LevelScheme& scheme) {
    nlohmann::ordered_json doc;
    doc["scheme_hash"] = report.scheme_id;
    doc["tau"] = report.tau;
    doc["any_tau"] = report.any_tau;
    doc["residual_mean"] = report.residual_mean;
    doc["residual_window"] = report.residual_window;
    doc["worst_ratio"] = report.worst_ratio;
    doc["theorem_violated"] = report.theorem_violated;
    doc["notes"] = report.notes;
    doc["lasers"] = nlohmann::ordered_json::array();
    for (const auto& la : report.lasers) {
        nlohmann::ordered_json j;
        j["laser"] = scheme.lasers[la.laser].name;
        j["dphi_per_atom"] = la.dphi_per_atom;
        j["dphi_total"] = la.dphi_total;
        j["bound_per_atom"] = la.bound_per_atom;
        j["bound_total"] = la.bound_total;
        if (la.bound_per_atom_literal) j["bound_per_atom_eq24"] = *la.bound_per_atom_literal;
        if (la.bound_total_literal) j["bound_total_eq25"] = *la.bound_total_literal;
        j["ratio"] = fmt_guard(la.ratio);
        j["dispersion"] = la.dispersion;
        j["chain"] = {{"triangle_margin", la.chain.triangle_margin},
                      {"density_margin", la.chain.density_margin},
                      {"cauchy_schwarz_margin", la.chain.cauchy_schwarz_margin}};
        if (la.snr_measurement) j["snr_measurement"] = *la.snr_measurement;
        nlohmann::ordered_json snr;
        if (la.snr_limits.route27) snr["route27"] = *la.snr_limits.route27;
        if (la.snr_limits.route28) snr["route28"] = *la.snr_limits.route28;
        if (la.snr_limits.route29) snr["route29"] = *la.snr_limits.route29;
        if (la.snr_limits.diff_27_28) snr["diff_27_28"] = *la.snr_limits.diff_27_28;
        if (la.snr_limits.diff_28_29) snr["diff_28_29"] = *la.snr_limits.diff_28_29;
        j["snr_limits"] = std::move(snr);
        j["transitions"] = nlohmann::ordered_json::array();
        for (const auto& ta : la.transitions) {
            j["transitions"].push_back({{"transition", ta.transition},
                                        {"prefactor", ta.prefactor},
                                        {"pbar_upper", ta.pbar_upper},
                                        {"gamma", ta.gamma},
                                        {"emission_rate", ta.emission_rate}});
        }
        doc["lasers"].push_back(std::move(j));
    }
    return doc.dump(2);
}

std::string report_csv_header() {
    return "seed,scheme_hash,laser,dphi_per_atom,dphi_total,bound_per_atom,bound_total,"
           "ratio,pbar_max,snr_limit,residual";
}

std::vector<std::string> report_csv_rows(const BoundReport& report, const LevelScheme& scheme,
                                         std::uint64_t seed) {
    std::vector<std::string> rows;
    for (const auto& la : report.lasers) {
        double pbar_max = 0.0;
        for (const auto& ta : la.transitions) pbar_max = std::max(pbar_max, ta.pbar_upper);
        std::ostringstream os;
        os << seed << ',' << report.scheme_id << ',' << scheme.lasers[la.laser].name << ','
           << num(la.dphi_per_atom) << ',' << num(la.dphi_total) << ','
           << num(la.bound_per_atom) << ',' << num(la.bound_total) << ','
           << num(fmt_guard(la.ratio)) << ',' << num(pbar_max) << ','
           << (la.snr_limits.route28 ? num(*la.snr_limits.route28) : "") << ','
           << num(report.residual_window);
        rows.push_back(os.str());
    }
    return rows;
}

} // namespace lightshift
