// dynamics.hpp — manifold state preparation, exact evolution, return times,
// and time-averaged populations
//
// Evolution inside a manifold is a pure dressed-phase rotation, so trajectories
// are evaluated from exact exponentials rather than an ODE stepper. The only
// approximation anywhere is the truncation of the coherent-state photon window.

#pragma once

#include <Eigen/Dense>

#include "lightshift/dressed.hpp"

namespace lightshift {

enum class PhotonDistribution {
    delta_mean, // single manifold at the rounded mean photon numbers
    coherent    // Poisson window, half-width ceil(6 sqrt(nbar)) + 5 per laser
};

struct PreparedManifold {
    PhotonVector photons;
    double weight{1.0}; // |alpha|^2, renormalized over the window
    DressedSystem ds;   // cluster-gauged so each degenerate cluster holds one coefficient
    Eigen::VectorXcd coeffs;
};

struct PreparedState {
    Eigen::VectorXcd atomic; // |I> over the manifold basis order
    std::vector<PreparedManifold> manifolds;
    double coverage{1.0}; // raw window mass before renormalization
};

// Expansion of |I> in the dressed basis: coeffs = states^dagger * atomic.
// Degenerate clusters are rotated so the initial state meets exactly one basis
// vector per cluster, which keeps the closed-form time average exact; the
// returned system carries that gauge.
struct Expanded {
    DressedSystem ds;
    Eigen::VectorXcd coeffs;
};
Expanded expand_initial(const Eigen::VectorXcd& atomic, const DressedSystem& ds);

// atomic_levels holds one amplitude per declared level; amplitudes on
// unreachable levels must vanish. Throws std::invalid_argument on
// non-normalized input and std::length_error when the coherent window would
// exceed 200000 manifolds.
PreparedState prepare(const LevelScheme& scheme, const DerivedParams& params,
                      const ManifoldMap& map, const Eigen::VectorXcd& atomic_levels,
                      PhotonDistribution distribution);

struct ReturnCondition {
    double tau{0.0};
    bool any_tau{false}; // single occupied dressed state: every tau returns
    std::vector<std::pair<int, std::int64_t>> f; // integer label per occupied state
    double residual{0.0};     // rad, worst occupied-pair distance from 2 pi Z
    double global_phase{0.0}; // rad, in [0, 2 pi)
};

// Evaluate the return condition at one tau for one manifold. hbar converts
// stored energies (J) to phase rates.
ReturnCondition return_condition_at(const DressedSystem& ds, const Eigen::VectorXcd& coeffs,
                                    double hbar, double tau);

// Scan integer multiples of 2 pi hbar / gap_min for commensurate times. Empty
// result means no return time below k_max exists at this tolerance.
std::vector<ReturnCondition> find_return_times(const DressedSystem& ds,
                                               const Eigen::VectorXcd& coeffs, double hbar,
                                               double tolerance = 1e-9,
                                               std::int64_t k_max = 10000,
                                               int max_results = 16);

// Worst return-condition residual across every sampled manifold of a prepared
// state (the "all relevant photon states" reading of the return requirement).
double worst_residual(const PreparedState& prepared, double hbar, double tau);

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd populations; // samples x declared levels
    Eigen::VectorXd fidelity;    // |<psi(0)|psi(t)>|^2
};

Trajectory evolve(const LevelScheme& scheme, const PreparedState& prepared, double tau,
                  int samples);

enum class AverageMethod { closed_form, integral, both };

struct PopulationAverage {
    std::optional<double> closed_form;
    std::optional<double> integral;
};

// Time-averaged population of one declared level over [0, tau]. The closed
// form requires tau to be a return time (worst residual below
// refusal_residual) and is refused with a diagnostic otherwise; the integral
// uses composite Gauss-Legendre with 64 nodes per shortest Rabi period.
PopulationAverage average_population(const LevelScheme& scheme, const PreparedState& prepared,
                                     double tau, int level, AverageMethod method,
                                     double refusal_residual = 1e-6);

} // namespace lightshift
