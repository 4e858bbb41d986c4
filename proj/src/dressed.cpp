#include "lightshift/dressed.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lightshift {

namespace {

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    const double top = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12 * top) {
            v *= std::conj(v[i]) / std::abs(v[i]);
            return;
        }
    }
}

// Exact max-weight assignment over |<a_k|b_l>|^2 by bitmask DP; dimensions
// here are at most a few tens of levels, and in practice <= 8.
std::vector<int> best_assignment(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    if (n > 16) throw std::invalid_argument("match_eigenstates: dimension too large");
    const std::size_t full = std::size_t{1} << n;
    std::vector<double> best(full, -1.0);
    std::vector<std::int8_t> last(full, -1); // column assigned to the newest row
    best[0] = 0.0;
    for (std::size_t mask = 0; mask < full; ++mask) {
        if (best[mask] < 0) continue;
        const int row = std::popcount(mask);
        if (row == n) continue;
        for (int col = 0; col < n; ++col) {
            if (mask & (std::size_t{1} << col)) continue;
            const std::size_t next = mask | (std::size_t{1} << col);
            const double value = best[mask] + score(row, col);
            if (value > best[next]) {
                best[next] = value;
                last[next] = static_cast<std::int8_t>(col);
            }
        }
    }
    std::vector<int> assignment(n, -1);
    std::size_t mask = full - 1;
    for (int row = n - 1; row >= 0; --row) {
        const int col = last[mask];
        assignment[row] = col;
        mask &= ~(std::size_t{1} << col);
    }
    return assignment;
}

} // namespace

double DressedSystem::spectral_scale() const {
    if (energies.size() == 0) return 0.0;
    return std::max(energies.cwiseAbs().maxCoeff(),
                    std::numeric_limits<double>::min());
}

ReducedHamiltonian build_hamiltonian(const LevelScheme& scheme, const DerivedParams& params,
                                     const ManifoldMap& map, const PhotonVector& n) {
    ReducedHamiltonian h;
    h.basis = enumerate_manifold(map, n);
    h.photon_config = n;
    const int dim = h.basis.dim();
    const double hbar = scheme.settings.hbar;
    h.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const int level = h.basis.level_indices[i];
        h.matrix(i, i) = hbar * scheme.levels[level].detuning;
    }
    for (std::size_t t = 0; t < scheme.transitions.size(); ++t) {
        const auto& tr = scheme.transitions[t];
        const int lo = h.basis.slot_of_level(scheme.level_index(tr.lower));
        const int up = h.basis.slot_of_level(scheme.level_index(tr.upper));
        if (lo < 0 || up < 0) continue; // transition outside the anchor component
        const int j = scheme.laser_index(tr.laser);
        const int lo_level = scheme.level_index(tr.lower);
        const double arg = static_cast<double>(n[j] + 1 + map.offsets[j][lo_level]);
        const double coupling = hbar * params.coupling_g[t] * std::sqrt(arg);
        h.matrix(lo, up) += coupling;
        h.matrix(up, lo) += coupling;
    }
    return h;
}

DressedSystem diagonalize(const ReducedHamiltonian& h) {
    const Eigen::MatrixXcd& H = h.matrix;
    const double scale = std::max(H.cwiseAbs().maxCoeff(),
                                  std::numeric_limits<double>::min());
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw std::invalid_argument("diagonalize: matrix is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: eigensolver failed");

    DressedSystem ds;
    ds.energies = solver.eigenvalues();
    ds.states = solver.eigenvectors();
    ds.basis = h.basis;
    ds.photon_config = h.photon_config;
    for (Eigen::Index m = 0; m < ds.states.cols(); ++m) fix_phase(ds.states.col(m));

    const int dim = ds.dim();
    const double unitary_err =
        (ds.states.adjoint() * ds.states - Eigen::MatrixXcd::Identity(dim, dim))
            .cwiseAbs()
            .maxCoeff();
    const double residual =
        (H * ds.states - ds.states * ds.energies.asDiagonal().toDenseMatrix().cast<std::complex<double>>())
            .cwiseAbs()
            .maxCoeff();
    if (unitary_err > 1e-12 * dim || residual > 1e-12 * std::max(scale, ds.spectral_scale()))
        throw std::runtime_error("diagonalize: decomposition outside tolerance");
    return ds;
}

DressedSystem dress(const LevelScheme& scheme, const DerivedParams& params,
                    const ManifoldMap& map, const PhotonVector& n) {
    return diagonalize(build_hamiltonian(scheme, params, map, n));
}

MatchResult match_eigenstates(const DressedSystem& a, const DressedSystem& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("match_eigenstates: dimension mismatch");
    const int n = a.dim();

    Eigen::MatrixXcd overlap = a.states.adjoint() * b.states;
    Eigen::MatrixXd score = overlap.cwiseAbs2();
    MatchResult match;
    match.permutation = best_assignment(score);

    match.aligned.resize(n, n);
    match.aligned_energies.resize(n);
    for (int k = 0; k < n; ++k) {
        match.aligned.col(k) = b.states.col(match.permutation[k]);
        match.aligned_energies[k] = b.energies[match.permutation[k]];
    }

    // Rotate each degenerate cluster of b onto its matched partners in a.
    const double gap_tol = kDegeneracyThreshold * std::max(b.spectral_scale(), 1e-300);
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n &&
               std::abs(match.aligned_energies[end] - match.aligned_energies[end - 1]) < gap_tol)
            ++end;
        const int width = end - start;
        if (width > 1) {
            Eigen::MatrixXcd B = match.aligned.middleCols(start, width);
            Eigen::MatrixXcd A = a.states.middleCols(start, width);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B.adjoint() * A,
                                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
            match.aligned.middleCols(start, width) =
                B * (svd.matrixU() * svd.matrixV().adjoint());
        }
        start = end;
    }

    match.total_overlap = 0.0;
    for (int k = 0; k < n; ++k)
        match.total_overlap += std::norm(a.states.col(k).dot(match.aligned.col(k)));
    match.ambiguous = match.total_overlap < 0.5 * n;
    return match;
}

} // namespace lightshift
