#pragma once

#include "occ/evaluation.hpp"
#include "occ/hierarchy.hpp"

#include <random>
#include <string>
#include <vector>

namespace occ::testing {

struct GridData {
    ConstraintMatrix C;
    Dataset data;
};

/// Coherent daily panel on a zones x sources grid: bottoms follow a weekly
/// pattern plus AR(1) noise, uppers are their sums.
inline GridData synthetic_grid(int zones, int sources, int T, std::uint64_t seed) {
    std::vector<std::string> z, s;
    for (int k = 0; k < zones; ++k) z.push_back("Z" + std::to_string(k + 1));
    for (int k = 0; k < sources; ++k) s.push_back("S" + std::to_string(k + 1));
    GridData out{build_constraint_matrix(make_grid_hierarchy(z, s)), {}};
    const int nb = out.C.n_bottom();
    const Eigen::MatrixXd S = summing_matrix(out.C);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd bottoms(T, nb);
    for (int b = 0; b < nb; ++b) {
        const double level = 40.0 + 7.0 * b;
        double ar = 0.0;
        for (int t = 0; t < T; ++t) {
            ar = 0.6 * ar + (1.0 + 0.2 * b) * nd(rng);
            bottoms(t, b) = level + 4.0 * ((t + b) % 7) + ar;
        }
    }
    out.data.values = bottoms * S.transpose();
    out.data.series_ids = out.C.ids();
    for (int t = 0; t < T; ++t) out.data.dates.push_back("d" + std::to_string(t));
    return out;
}

}  // namespace occ::testing
