#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fnclust/dynsys/dataset.hpp"
#include "fnclust/dynsys/ode.hpp"
#include "fnclust/error.hpp"
#include "fnclust/random.hpp"

namespace fnclust::dynsys {

/// One family per frequency: a * sin(2 pi f t + phi) + noise on t in [0, 1], with
/// a ~ U(0.8, 1.2), phi ~ U(0, phase_max) and Gaussian noise of the given sd.
inline Dataset sinusoid_families(int n_per_family, std::vector<double> freqs, std::uint64_t seed, int grid_size = 101,
                                 double noise = 0.05, double phase_max = 0.5) {
    if (n_per_family < 1 || freqs.empty() || grid_size < 2) throw ParameterError("sinusoid_families: bad arguments");
    Dataset ds;
    ds.name = "sinusoids";
    ds.grid_size = grid_size;
    const auto grid = uniform_grid(0.0, 1.0, grid_size);
    std::uint64_t id = 0;
    for (std::size_t c = 0; c < freqs.size(); ++c)
        for (int j = 0; j < n_per_family; ++j, ++id) {
            auto rng = make_rng(seed, {0x51e, id});
            Trajectory tr;
            tr.id = id;
            tr.times = grid;
            tr.class_label = static_cast<int>(c);
            tr.seed = derive_seed(seed, {0x51e, id});
            const double a = uniform(rng, 0.8, 1.2), phi = uniform(rng, 0.0, phase_max);
            for (double t : grid) tr.values.push_back(a * std::sin(2.0 * std::numbers::pi * freqs[c] * t + phi) + normal(rng, 0.0, noise));
            tr.params = {{"f", freqs[c]}, {"a", a}, {"phi", phi}};
            tr.split = j % 5 == 4 ? Split::test : Split::train;
            ds.trajectories.push_back(std::move(tr));
        }
    return ds;
}

}  // namespace fnclust::dynsys
