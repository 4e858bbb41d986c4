// dressed.hpp — reduced Hamiltonian assembly and dressed-state diagonalization
//
// Within one closed manifold the Hamiltonian is the N_reachable-dimensional
// Hermitian matrix with hbar*Delta on the diagonal and, for each transition
// (j, l), a coupling hbar * g_jl * sqrt(n_j + 1 + b_j,lower) between its lower
// and upper levels. Coincident couplings sum.

#pragma once

#include <Eigen/Dense>

#include "lightshift/manifold.hpp"
#include "lightshift/scheme.hpp"

namespace lightshift {

struct ReducedHamiltonian {
    Eigen::MatrixXcd matrix; // J, Hermitian over the basis order
    ManifoldBasis basis;
    PhotonVector photon_config;
};

struct DressedSystem {
    Eigen::VectorXd energies;     // J, ascending
    Eigen::MatrixXcd states;      // columns |m>, unitary, phase-fixed
    ManifoldBasis basis;
    PhotonVector photon_config;

    int dim() const { return static_cast<int>(energies.size()); }
    double spectral_scale() const;
};

ReducedHamiltonian build_hamiltonian(const LevelScheme& scheme, const DerivedParams& params,
                                     const ManifoldMap& map, const PhotonVector& n);

// Full spectral decomposition. Eigenvalues ascending; each eigenvector's first
// component above 1e-12 of its largest is rotated real positive so repeated
// runs and cross-manifold comparisons share a gauge. Throws on non-Hermitian
// input (assembly bug guard) and verifies unitarity/residual to 1e-12.
DressedSystem diagonalize(const ReducedHamiltonian& h);

// Convenience: assemble and diagonalize at one photon configuration.
DressedSystem dress(const LevelScheme& scheme, const DerivedParams& params,
                    const ManifoldMap& map, const PhotonVector& n);

// Pair eigenstates of two equal-dimension systems by maximum total squared
// overlap (exact assignment). Within clusters of `b` that are degenerate below
// 1e-10 * spectral scale, the cluster basis is rotated (orthogonal Procrustes)
// onto its matched partners. `ambiguous` is set when the mean matched overlap
// falls below 0.5, i.e. the systems are not perturbatively related.
struct MatchResult {
    std::vector<int> permutation; // index in b matched to each state of a
    Eigen::MatrixXcd aligned;     // b's states, permuted and rotated
    Eigen::VectorXd aligned_energies;
    double total_overlap{0.0};
    bool ambiguous{false};
};

MatchResult match_eigenstates(const DressedSystem& a, const DressedSystem& b);

inline constexpr double kDegeneracyThreshold = 1e-10; // relative to spectral scale

} // namespace lightshift
