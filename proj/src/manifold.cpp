#include "lightshift/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace lightshift {

namespace {

// Union-find over levels; each node stores its photon-offset vector relative
// to its parent, so find() yields the offset relative to the root.
struct OffsetForest {
    std::vector<int> parent;
    std::vector<PhotonVector> rel; // offset(node) - offset(parent)
    int lasers;

    OffsetForest(int n, int m) : parent(n), rel(n, PhotonVector(m, 0)), lasers(m) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }

    std::pair<int, PhotonVector> find(int v) {
        if (parent[v] == v) return {v, PhotonVector(lasers, 0)};
        auto [root, above] = find(parent[v]);
        for (int j = 0; j < lasers; ++j) above[j] += rel[v][j];
        parent[v] = root;
        rel[v] = above;
        return {root, above};
    }
};

} // namespace

bool ManifoldMap::is_reachable(int level) const {
    return std::binary_search(reachable.begin(), reachable.end(), level);
}

SolveResult solve_offsets(const LevelScheme& scheme, std::string_view anchor) {
    const int idx = scheme.level_index(anchor);
    if (idx < 0)
        throw std::invalid_argument("solve_offsets: unknown anchor level \"" +
                                    std::string(anchor) + "\"");
    return solve_offsets(scheme, idx);
}

SolveResult solve_offsets(const LevelScheme& scheme, int anchor) {
    const int n = static_cast<int>(scheme.levels.size());
    const int m = static_cast<int>(scheme.lasers.size());
    if (anchor < 0 || anchor >= n)
        throw std::invalid_argument("solve_offsets: anchor level out of range");

    OffsetForest forest(n, m);
    // Spanning-forest adjacency for witness reconstruction.
    std::vector<std::vector<std::pair<int, int>>> tree(n); // (neighbor, transition)

    SolveResult result;
    for (std::size_t t = 0; t < scheme.transitions.size(); ++t) {
        const auto& tr = scheme.transitions[t];
        const int lo = scheme.level_index(tr.lower);
        const int up = scheme.level_index(tr.upper);
        const int j = scheme.laser_index(tr.laser);
        if (lo < 0 || up < 0 || j < 0)
            throw std::invalid_argument("solve_offsets: dangling reference in transition");

        auto [rlo, off_lo] = forest.find(lo);
        auto [rup, off_up] = forest.find(up);
        if (rlo != rup) {
            // offset(up) = offset(lo) - e_j; hang rup below rlo.
            PhotonVector delta(m, 0);
            for (int i = 0; i < m; ++i) delta[i] = off_lo[i] - off_up[i];
            delta[j] -= 1;
            forest.parent[rup] = rlo;
            forest.rel[rup] = delta;
            tree[lo].push_back({up, static_cast<int>(t)});
            tree[up].push_back({lo, static_cast<int>(t)});
            continue;
        }
        bool consistent = true;
        for (int i = 0; i < m && consistent; ++i) {
            const std::int64_t want = off_lo[i] - (i == j ? 1 : 0);
            consistent = off_up[i] == want;
        }
        if (consistent) {
            tree[lo].push_back({up, static_cast<int>(t)});
            tree[up].push_back({lo, static_cast<int>(t)});
            continue;
        }
        // Witness: tree path lower -> upper, then this transition traversed
        // upper -> lower to close the cycle.
        std::vector<int> prev(n, -1), via(n, -1);
        std::deque<int> queue{lo};
        prev[lo] = lo;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            if (v == up) break;
            for (auto [w, e] : tree[v]) {
                if (prev[w] != -1) continue;
                prev[w] = v;
                via[w] = e;
                queue.push_back(w);
            }
        }
        std::vector<CycleStep> path;
        for (int v = up; v != lo; v = prev[v]) {
            const auto& step = scheme.transitions[via[v]];
            const bool fwd = scheme.level_index(step.upper) == v;
            path.push_back({via[v], fwd});
        }
        std::reverse(path.begin(), path.end());
        path.push_back({static_cast<int>(t), false});
        result.witness = std::move(path);
        return result;
    }

    ManifoldMap map;
    map.anchor_level = anchor;
    map.offsets.assign(m, std::vector<std::int64_t>(n, 0));
    auto [anchor_root, anchor_off] = forest.find(anchor);
    for (int v = 0; v < n; ++v) {
        auto [root, off] = forest.find(v);
        if (root != anchor_root) {
            map.unreachable.push_back(v);
            continue;
        }
        map.reachable.push_back(v);
        for (int j = 0; j < m; ++j) map.offsets[j][v] = off[j] - anchor_off[j];
    }
    result.map = std::move(map);
    return result;
}

int ManifoldBasis::slot_of_level(int level) const {
    for (std::size_t i = 0; i < level_indices.size(); ++i)
        if (level_indices[i] == level) return static_cast<int>(i);
    return -1;
}

ManifoldBasis enumerate_manifold(const ManifoldMap& map, const PhotonVector& base) {
    const std::size_t m = map.offsets.size();
    if (base.size() != m)
        throw std::invalid_argument("enumerate_manifold: base has wrong laser count");
    ManifoldBasis basis;
    for (int v : map.reachable) {
        PhotonVector photons(m);
        for (std::size_t j = 0; j < m; ++j) {
            photons[j] = base[j] + map.offsets[j][v];
            if (photons[j] < 0)
                throw std::domain_error(
                    "enumerate_manifold: negative photon number for level index " +
                    std::to_string(v) + " in laser mode " + std::to_string(j));
        }
        basis.level_indices.push_back(v);
        basis.photons.push_back(std::move(photons));
    }
    return basis;
}

PhotonVector mean_photon_config(const LevelScheme& scheme) {
    PhotonVector config(scheme.lasers.size());
    for (std::size_t j = 0; j < scheme.lasers.size(); ++j)
        config[j] = static_cast<std::int64_t>(std::llround(scheme.lasers[j].mean_photon_number));
    return config;
}

void resolve_couplings(const LevelScheme& scheme, const ManifoldMap& map,
                       DerivedParams& params) {
    resolve_couplings(scheme, map, params, mean_photon_config(scheme));
}

void resolve_couplings(const LevelScheme& scheme, const ManifoldMap& map,
                       DerivedParams& params, const PhotonVector& at) {
    for (std::size_t t = 0; t < scheme.transitions.size(); ++t) {
        const auto& tr = scheme.transitions[t];
        const int j = scheme.laser_index(tr.laser);
        const int lo = scheme.level_index(tr.lower);
        if (!map.is_reachable(lo)) continue;
        const double arg =
            static_cast<double>(at[j] + 1 + map.offsets[j][lo]);
        if (arg <= 0)
            throw std::domain_error("resolve_couplings: photon configuration too small");
        const double root = std::sqrt(arg);
        if (scheme.mode == SchemeMode::microscopic)
            params.rabi[t] = 2.0 * params.coupling_g[t] * root;
        else
            params.coupling_g[t] = params.rabi[t] / (2.0 * root);
    }
    params.couplings_resolved = true;
}

} // namespace lightshift
