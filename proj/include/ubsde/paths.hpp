#pragma once
// Path generation: Brownian ensembles (exact Gaussian increments, counter
// based and reproducible) and canonical-process alpha paths (deterministic
// linear quantile paths, comonotone across components).

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "ubsde/alpha_grid.hpp"
#include "ubsde/field.hpp"
#include "ubsde/time_grid.hpp"

namespace ubsde {

struct PathBundle {
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    AlphaGrid alpha = AlphaGrid::single();
    std::size_t num_paths = 0;    // M
    std::size_t brownian_dim = 0; // m
    std::size_t canonical_dim = 0; // d
    std::vector<double> brownian;  // (path i, node k, component a)
    std::vector<double> canonical; // (level j, node k, component e)

    double b(std::size_t i, std::size_t k, std::size_t a) const {
        return brownian[(i * grid.num_nodes() + k) * brownian_dim + a];
    }
    double c(std::size_t j, std::size_t k, std::size_t e) const {
        return canonical[(j * grid.num_nodes() + k) * canonical_dim + e];
    }
    // Forward increments over [t_k, t_{k+1}].
    double db(std::size_t i, std::size_t k, std::size_t a) const {
        return b(i, k + 1, a) - b(i, k, a);
    }
    double dc(std::size_t j, std::size_t k, std::size_t e) const {
        return c(j, k + 1, e) - c(j, k, e);
    }
};

// Brownian ensemble: increments are N(0, dt) per component, deterministic
// under (ensemble.seed). Layout: ((i * (N+1)) + k) * m + a.
std::vector<double> gen_brownian(const TimeGrid& grid, std::size_t m,
                                 const HybridEnsemble& ensemble);

// Canonical alpha paths: C_{t_k}(alpha_j) = quantile(j) * t_k per component
// (one alpha drives all d components). Layout: ((j * (N+1)) + k) * d + e.
std::vector<double> gen_canonical(const TimeGrid& grid, std::size_t d,
                                  const AlphaGrid& alpha);

PathBundle make_path_bundle(const TimeGrid& grid,
                            const HybridEnsemble& ensemble, std::size_t m,
                            std::size_t d);

// CSV dump with header
// alpha_index,path_index,node_index,time,component_kind,component_index,value
void dump_paths_csv(const PathBundle& bundle, std::ostream& out);

} // namespace ubsde
