// manifold.hpp — photon-offset consistency and closed-manifold enumeration
//
// A scheme is free of coherent momentum diffusion exactly when an integer
// offset matrix b(laser, level) exists with b[j][upper] = b[j][lower] - 1
// along every transition of laser j (and no change for other lasers). The
// solver propagates offset vectors with a union-find; an inconsistent scheme
// is rejected with the offending cycle as a witness.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lightshift/scheme.hpp"

namespace lightshift {

using PhotonVector = std::vector<std::int64_t>;

// One step of a witness cycle: transition index, traversed lower->upper
// (absorbing) or upper->lower (emitting).
struct CycleStep {
    int transition{-1};
    bool forward{true};
};

struct ManifoldMap {
    // offsets[j][v]: photon offset of level v in laser mode j; anchor column 0.
    std::vector<std::vector<std::int64_t>> offsets;
    int anchor_level{0};
    std::vector<int> reachable;   // level indices connected to the anchor, ascending
    std::vector<int> unreachable; // declared levels outside the anchor component

    bool is_reachable(int level) const;
};

struct SolveResult {
    std::optional<ManifoldMap> map;
    std::vector<CycleStep> witness; // non-empty iff rejected
    bool accepted() const { return map.has_value(); }
};

// Global consistency check plus offsets relative to `anchor`. Rejection is a
// value carrying the inconsistent cycle; only malformed input throws.
SolveResult solve_offsets(const LevelScheme& scheme, int anchor);
SolveResult solve_offsets(const LevelScheme& scheme, std::string_view anchor);

// Basis of one closed manifold: reachable levels in declaration order, each
// with its photon numbers base + offset column.
struct ManifoldBasis {
    std::vector<int> level_indices;
    std::vector<PhotonVector> photons; // per basis entry, one count per laser

    int dim() const { return static_cast<int>(level_indices.size()); }
    // Position of a level in this basis, -1 if absent.
    int slot_of_level(int level) const;
};

// Throws std::domain_error when base + offsets would give a negative photon
// number for some reachable level.
ManifoldBasis enumerate_manifold(const ManifoldMap& map, const PhotonVector& base);

// Fill the mode-dependent half of DerivedParams at the photon configuration
// `at` (defaults to the rounded mean photon numbers): microscopic mode gains
// Omega = 2 g sqrt(n + 1 + b_lower), reduced mode gains g = Omega / (2 sqrt(..)).
void resolve_couplings(const LevelScheme& scheme, const ManifoldMap& map,
                       DerivedParams& params);
void resolve_couplings(const LevelScheme& scheme, const ManifoldMap& map,
                       DerivedParams& params, const PhotonVector& at);

// Rounded mean photon numbers, the default evaluation point everywhere.
PhotonVector mean_photon_config(const LevelScheme& scheme);

} // namespace lightshift
