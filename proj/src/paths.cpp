#include "ubsde/paths.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ubsde/errors.hpp"
#include "ubsde/rng.hpp"

namespace ubsde {

std::vector<double> gen_brownian(const TimeGrid& grid, std::size_t m,
                                 const HybridEnsemble& ensemble) {
    if (m == 0) throw ConfigError("brownian dimension must be positive");
    if (ensemble.paths == 0) throw ConfigError("ensemble.paths must be positive");
    const std::size_t nn = grid.num_nodes();
    const std::size_t M = ensemble.paths;
    NormalStream stream(ensemble.seed, kBrownianStream);

    std::vector<double> b(M * nn * m, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t k = 0; k + 1 < nn; ++k) {
            const double sdt = std::sqrt(grid.dt(k));
            for (std::size_t a = 0; a < m; ++a) {
                const double z = stream.normal(i, static_cast<std::uint32_t>(k),
                                               static_cast<std::uint32_t>(a));
                b[(i * nn + k + 1) * m + a] = b[(i * nn + k) * m + a] + z * sdt;
            }
        }
    }
    return b;
}

std::vector<double> gen_canonical(const TimeGrid& grid, std::size_t d,
                                  const AlphaGrid& alpha) {
    if (d == 0) throw ConfigError("canonical dimension must be positive");
    const std::size_t nn = grid.num_nodes();
    const std::size_t L = alpha.size();
    std::vector<double> c(L * nn * d);
    for (std::size_t j = 0; j < L; ++j) {
        const double q = alpha.quantile(j);
        for (std::size_t k = 0; k < nn; ++k) {
            const double v = q * grid.node(k);
            for (std::size_t e = 0; e < d; ++e) c[(j * nn + k) * d + e] = v;
        }
    }
    return c;
}

PathBundle make_path_bundle(const TimeGrid& grid,
                            const HybridEnsemble& ensemble, std::size_t m,
                            std::size_t d) {
    PathBundle bundle;
    bundle.grid = grid;
    bundle.alpha = ensemble.alpha;
    bundle.num_paths = ensemble.paths;
    bundle.brownian_dim = m;
    bundle.canonical_dim = d;
    bundle.brownian = gen_brownian(grid, m, ensemble);
    bundle.canonical = gen_canonical(grid, d, ensemble.alpha);
    return bundle;
}

void dump_paths_csv(const PathBundle& bundle, std::ostream& out) {
    out << "alpha_index,path_index,node_index,time,component_kind,"
           "component_index,value\n";
    char buf[160];
    const std::size_t nn = bundle.grid.num_nodes();
    // Brownian rows are alpha-independent (alpha_index -1); canonical rows are
    // path-independent (path_index -1).
    for (std::size_t i = 0; i < bundle.num_paths; ++i)
        for (std::size_t k = 0; k < nn; ++k)
            for (std::size_t a = 0; a < bundle.brownian_dim; ++a) {
                std::snprintf(buf, sizeof buf, "-1,%zu,%zu,%.17e,B,%zu,%.17e\n",
                              i, k, bundle.grid.node(k), a, bundle.b(i, k, a));
                out << buf;
            }
    for (std::size_t j = 0; j < bundle.alpha.size(); ++j)
        for (std::size_t k = 0; k < nn; ++k)
            for (std::size_t e = 0; e < bundle.canonical_dim; ++e) {
                std::snprintf(buf, sizeof buf, "%zu,-1,%zu,%.17e,C,%zu,%.17e\n",
                              j, k, bundle.grid.node(k), e, bundle.c(j, k, e));
                out << buf;
            }
}

} // namespace ubsde
