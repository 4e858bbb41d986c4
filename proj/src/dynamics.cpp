#include "lightshift/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lightshift {

namespace {

constexpr double kOccupied = 1e-10; // |c_m| above this counts as occupied
constexpr std::size_t kMaxWindowManifolds = 200000;

double principal_distance(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(std::abs(x), two_pi);
    return std::min(r, two_pi - r);
}

// 64-point Gauss-Legendre nodes/weights on [-1, 1] via Golub-Welsch: nodes are
// the eigenvalues of the Jacobi matrix, weights 2 * (first row of vectors)^2.
struct GaussLegendre {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

const GaussLegendre& gauss_legendre_64() {
    static const GaussLegendre table = [] {
        constexpr int n = 64;
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double beta = k / std::sqrt(4.0 * k * k - 1.0);
            jacobi(k, k - 1) = beta;
            jacobi(k - 1, k) = beta;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
        GaussLegendre gl;
        gl.nodes = solver.eigenvalues();
        gl.weights = 2.0 * solver.eigenvectors().row(0).cwiseAbs2();
        return gl;
    }();
    return table;
}

std::vector<int> occupied_indices(const Eigen::VectorXcd& coeffs) {
    std::vector<int> occ;
    for (Eigen::Index m = 0; m < coeffs.size(); ++m)
        if (std::abs(coeffs[m]) > kOccupied) occ.push_back(static_cast<int>(m));
    return occ;
}

double log_poisson(double lambda, std::int64_t n) {
    return static_cast<double>(n) * std::log(lambda) - lambda -
           std::lgamma(static_cast<double>(n) + 1.0);
}

// Instantaneous populations over basis slots for one manifold at time t.
void accumulate_populations(const PreparedManifold& pm, double hbar, double t,
                            const std::vector<int>& level_of_slot,
                            Eigen::Ref<Eigen::VectorXd> populations,
                            std::complex<double>* overlap_with_initial) {
    const int dim = pm.ds.dim();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    for (int m = 0; m < dim; ++m) {
        if (std::abs(pm.coeffs[m]) == 0.0) continue;
        const std::complex<double> phase =
            std::exp(std::complex<double>(0.0, -pm.ds.energies[m] * t / hbar));
        psi += pm.coeffs[m] * phase * pm.ds.states.col(m);
    }
    for (int s = 0; s < dim; ++s)
        populations[level_of_slot[s]] += pm.weight * std::norm(psi[s]);
    if (overlap_with_initial) {
        Eigen::VectorXcd psi0 = pm.ds.states * pm.coeffs;
        *overlap_with_initial += pm.weight * psi0.dot(psi);
    }
}

} // namespace

Expanded expand_initial(const Eigen::VectorXcd& atomic, const DressedSystem& ds) {
    if (atomic.size() != ds.dim())
        throw std::invalid_argument("expand_initial: amplitude vector has wrong dimension");
    if (std::abs(atomic.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("expand_initial: initial state is not normalized");

    Expanded out{ds, ds.states.adjoint() * atomic};

    // Rotate each degenerate cluster so |I> projects onto a single basis
    // vector of the cluster; cross terms between equal energies then vanish
    // from every time average.
    const double gap_tol = kDegeneracyThreshold * std::max(ds.spectral_scale(), 1e-300);
    const int n = ds.dim();
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n && std::abs(ds.energies[end] - ds.energies[end - 1]) < gap_tol) ++end;
        const int width = end - start;
        if (width > 1) {
            Eigen::VectorXcd cluster = out.coeffs.segment(start, width);
            const double norm = cluster.norm();
            if (norm > 1e-14) {
                // Householder-style completion of cluster/norm to a unitary.
                Eigen::MatrixXcd rotation = Eigen::MatrixXcd::Identity(width, width);
                rotation.col(0) = cluster / norm;
                // Gram-Schmidt the remaining columns against the new first one.
                for (int c = 1; c < width; ++c) {
                    Eigen::VectorXcd v = Eigen::VectorXcd::Unit(width, c - 1);
                    for (int p = 0; p < c; ++p)
                        v -= rotation.col(p).dot(v) * rotation.col(p);
                    if (v.norm() < 1e-8) {
                        v = Eigen::VectorXcd::Unit(width, width - 1);
                        for (int p = 0; p < c; ++p)
                            v -= rotation.col(p).dot(v) * rotation.col(p);
                    }
                    rotation.col(c) = v.normalized();
                }
                out.ds.states.middleCols(start, width) =
                    ds.states.middleCols(start, width) * rotation;
                out.coeffs.segment(start, width).setZero();
                out.coeffs[start] = norm;
            }
        }
        start = end;
    }

    if (std::abs(out.coeffs.norm() - 1.0) > 1e-12)
        throw std::runtime_error("expand_initial: coefficient norm drifted");
    return out;
}

PreparedState prepare(const LevelScheme& scheme, const DerivedParams& params,
                      const ManifoldMap& map, const Eigen::VectorXcd& atomic_levels,
                      PhotonDistribution distribution) {
    const int n_levels = static_cast<int>(scheme.levels.size());
    if (atomic_levels.size() != n_levels)
        throw std::invalid_argument("prepare: need one amplitude per declared level");
    for (int v : map.unreachable)
        if (std::abs(atomic_levels[v]) > 1e-12)
            throw std::invalid_argument(
                "prepare: nonzero amplitude on unreachable level \"" +
                scheme.levels[v].name + "\"");

    const PhotonVector base = mean_photon_config(scheme);
    const ManifoldBasis basis = enumerate_manifold(map, base);
    Eigen::VectorXcd atomic(basis.dim());
    for (int s = 0; s < basis.dim(); ++s) atomic[s] = atomic_levels[basis.level_indices[s]];
    if (std::abs(atomic.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("prepare: initial state is not normalized");

    PreparedState prepared;
    prepared.atomic = atomic;

    const int m = static_cast<int>(scheme.lasers.size());
    std::vector<std::int64_t> lo(m), hi(m);
    if (distribution == PhotonDistribution::delta_mean) {
        for (int j = 0; j < m; ++j) lo[j] = hi[j] = base[j];
    } else {
        std::size_t count = 1;
        for (int j = 0; j < m; ++j) {
            const double nbar = scheme.lasers[j].mean_photon_number;
            const auto half =
                static_cast<std::int64_t>(std::ceil(6.0 * std::sqrt(nbar))) + 5;
            lo[j] = std::max<std::int64_t>(0, base[j] - half);
            hi[j] = base[j] + half;
            count *= static_cast<std::size_t>(hi[j] - lo[j] + 1);
            if (count > kMaxWindowManifolds)
                throw std::length_error("prepare: coherent photon window too large");
        }
    }

    double mass = 0.0;
    PhotonVector n = lo;
    while (true) {
        double weight = 1.0;
        if (distribution == PhotonDistribution::coherent) {
            double logw = 0.0;
            for (int j = 0; j < m; ++j)
                logw += log_poisson(scheme.lasers[j].mean_photon_number, n[j]);
            weight = std::exp(logw);
        }
        bool valid = true;
        for (int v : map.reachable)
            for (int j = 0; j < m && valid; ++j)
                valid = n[j] + map.offsets[j][v] >= 0;
        if (valid && weight > 0.0) {
            Expanded ex = expand_initial(atomic, dress(scheme, params, map, n));
            prepared.manifolds.push_back({n, weight, std::move(ex.ds), std::move(ex.coeffs)});
            mass += weight;
        }
        int j = 0;
        for (; j < m; ++j) {
            if (n[j] < hi[j]) { ++n[j]; break; }
            n[j] = lo[j];
        }
        if (j == m) break;
        if (m == 0) break;
    }
    if (prepared.manifolds.empty())
        throw std::domain_error("prepare: no valid manifold in the photon window");

    prepared.coverage = distribution == PhotonDistribution::coherent ? mass : 1.0;
    for (auto& pm : prepared.manifolds) pm.weight /= mass;
    return prepared;
}

ReturnCondition return_condition_at(const DressedSystem& ds, const Eigen::VectorXcd& coeffs,
                                    double hbar, double tau) {
    ReturnCondition rc;
    rc.tau = tau;
    const auto occ = occupied_indices(coeffs);
    if (occ.empty()) throw std::invalid_argument("return_condition_at: empty occupied set");

    const double two_pi = 2.0 * std::numbers::pi;
    const double reference = ds.energies[occ.front()] * tau / hbar;
    rc.global_phase = std::fmod(reference, two_pi);
    if (rc.global_phase < 0) rc.global_phase += two_pi;

    rc.residual = 0.0;
    for (int m : occ) {
        const double phase = ds.energies[m] * tau / hbar;
        rc.f.push_back({m, std::llround((reference - phase) / two_pi)});
        for (int mp : occ) {
            if (mp <= m) continue;
            rc.residual = std::max(
                rc.residual,
                principal_distance((ds.energies[m] - ds.energies[mp]) * tau / hbar));
        }
    }
    rc.any_tau = occ.size() == 1;
    return rc;
}

std::vector<ReturnCondition> find_return_times(const DressedSystem& ds,
                                               const Eigen::VectorXcd& coeffs, double hbar,
                                               double tolerance, std::int64_t k_max,
                                               int max_results) {
    if (k_max < 1) throw std::invalid_argument("find_return_times: k_max must be >= 1");
    const auto occ = occupied_indices(coeffs);
    if (occ.empty()) throw std::invalid_argument("find_return_times: empty occupied set");

    // Distinct nonzero gaps between occupied energies; degenerate pairs are
    // commensurate for free.
    const double deg_tol = kDegeneracyThreshold * std::max(ds.spectral_scale(), 1e-300);
    std::vector<double> gaps;
    for (std::size_t p = 0; p < occ.size(); ++p)
        for (std::size_t q = p + 1; q < occ.size(); ++q) {
            const double gap = std::abs(ds.energies[occ[p]] - ds.energies[occ[q]]);
            if (gap > deg_tol) gaps.push_back(gap);
        }

    std::vector<ReturnCondition> found;
    if (gaps.empty()) {
        ReturnCondition rc;
        rc.any_tau = true;
        for (int m : occ) rc.f.push_back({m, 0});
        found.push_back(std::move(rc));
        return found;
    }

    const double gap_min = *std::min_element(gaps.begin(), gaps.end());
    const double base_tau = 2.0 * std::numbers::pi * hbar / gap_min;
    for (std::int64_t k = 1; k <= k_max; ++k) {
        const double tau = static_cast<double>(k) * base_tau;
        double residual = 0.0;
        for (double gap : gaps) {
            residual = std::max(residual, principal_distance(gap * tau / hbar));
            if (residual > tolerance) break;
        }
        if (residual <= tolerance) {
            found.push_back(return_condition_at(ds, coeffs, hbar, tau));
            if (static_cast<int>(found.size()) >= max_results) break;
        }
    }
    return found;
}

double worst_residual(const PreparedState& prepared, double hbar, double tau) {
    double worst = 0.0;
    for (const auto& pm : prepared.manifolds)
        worst = std::max(worst,
                         return_condition_at(pm.ds, pm.coeffs, hbar, tau).residual);
    return worst;
}

Trajectory evolve(const LevelScheme& scheme, const PreparedState& prepared, double tau,
                  int samples) {
    if (samples < 1) throw std::invalid_argument("evolve: need at least one sample");
    const double hbar = scheme.settings.hbar;
    const int n_levels = static_cast<int>(scheme.levels.size());

    Trajectory traj;
    traj.times.resize(samples);
    traj.populations = Eigen::MatrixXd::Zero(samples, n_levels);
    traj.fidelity.resize(samples);

    for (int i = 0; i < samples; ++i) {
        const double t = samples == 1
                             ? 0.0
                             : tau * static_cast<double>(i) / static_cast<double>(samples - 1);
        traj.times[i] = t;
        std::complex<double> overlap{0.0, 0.0};
        Eigen::VectorXd pops = Eigen::VectorXd::Zero(n_levels);
        for (const auto& pm : prepared.manifolds)
            accumulate_populations(pm, hbar, t, pm.ds.basis.level_indices, pops, &overlap);
        traj.populations.row(i) = pops;
        traj.fidelity[i] = std::norm(overlap);
    }
    return traj;
}

PopulationAverage average_population(const LevelScheme& scheme, const PreparedState& prepared,
                                     double tau, int level, AverageMethod method,
                                     double refusal_residual) {
    if (level < 0 || level >= static_cast<int>(scheme.levels.size()))
        throw std::out_of_range("average_population: level index out of range");
    const double hbar = scheme.settings.hbar;
    PopulationAverage out;

    if (method != AverageMethod::integral) {
        const double residual = worst_residual(prepared, hbar, tau);
        if (residual > refusal_residual)
            throw std::runtime_error(
                "average_population: closed form refused, tau is not a return time "
                "(worst residual " +
                std::to_string(residual) + " rad); dressed-state cross terms do not cancel");
        double value = 0.0;
        for (const auto& pm : prepared.manifolds) {
            const int slot = pm.ds.basis.slot_of_level(level);
            if (slot < 0) continue;
            for (int m = 0; m < pm.ds.dim(); ++m)
                value += pm.weight * std::norm(pm.coeffs[m]) *
                         std::norm(pm.ds.states(slot, m));
        }
        out.closed_form = value;
    }

    if (method != AverageMethod::closed_form) {
        if (!(tau > 0)) throw std::invalid_argument("average_population: tau must be positive");
        const auto& gl = gauss_legendre_64();
        double value = 0.0;
        for (const auto& pm : prepared.manifolds) {
            const int slot = pm.ds.basis.slot_of_level(level);
            if (slot < 0) continue;
            const auto occ = occupied_indices(pm.coeffs);
            double gap_max = 0.0;
            for (std::size_t p = 0; p < occ.size(); ++p)
                for (std::size_t q = p + 1; q < occ.size(); ++q)
                    gap_max = std::max(
                        gap_max, std::abs(pm.ds.energies[occ[p]] - pm.ds.energies[occ[q]]));
            // 64 nodes per shortest Rabi period 2 pi hbar / gap_max.
            std::int64_t segments = 1;
            if (gap_max > 0)
                segments = std::max<std::int64_t>(
                    1, static_cast<std::int64_t>(
                           std::ceil(tau * gap_max / (2.0 * std::numbers::pi * hbar))));
            const double seg_len = tau / static_cast<double>(segments);
            double integral = 0.0;
            for (std::int64_t s = 0; s < segments; ++s) {
                const double mid = (static_cast<double>(s) + 0.5) * seg_len;
                for (int q = 0; q < gl.nodes.size(); ++q) {
                    const double t = mid + 0.5 * seg_len * gl.nodes[q];
                    std::complex<double> amp{0.0, 0.0};
                    for (int m : occ)
                        amp += pm.coeffs[m] * pm.ds.states(slot, m) *
                               std::exp(std::complex<double>(0.0,
                                                             -pm.ds.energies[m] * t / hbar));
                    integral += gl.weights[q] * std::norm(amp) * 0.5 * seg_len;
                }
            }
            value += pm.weight * integral / tau;
        }
        out.integral = value;
    }
    return out;
}

} // namespace lightshift
