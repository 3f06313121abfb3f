#pragma once

// Periodic 3D Voronoi tessellation of random seed points: Voronoi vertices
// become network nodes (generically 4 fibers each), Voronoi edges become
// fibers with correct periodic image shifts.

#include "core/network.hpp"
#include "core/rng.hpp"

namespace cellmat::gen {

// node_target steers the seed count (a Poisson-Voronoi diagram has ~6.77
// vertices per seed). Degenerate seed configurations (e.g. exact lattices)
// are retried with a small fresh perturbation. Fibers get the given section.
Network voronoi_seed(const PeriodicBox& box, int node_target, SequentialRng& rng,
                     double fiber_diameter = 0.18, double fiber_modulus = 1.1e6);

// Same construction from caller-provided seed points (jittered on retry when
// the configuration is degenerate, e.g. an exact lattice).
Network voronoi_from_seeds(const PeriodicBox& box, std::vector<Vec3> seeds, SequentialRng& rng,
                           double fiber_diameter = 0.18, double fiber_modulus = 1.1e6);

}  // namespace cellmat::gen
