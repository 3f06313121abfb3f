#pragma once

// Snapshot files for a running mechanical assembly. Two flavors:
//  - a full state file ("cellmat-state 1") holding the box, its deformation,
//    the clock, every mesh node with orientation, every element including
//    run-time bonds, free points and tether springs — enough to rebuild a
//    MechSystem whose recomputed stress matches the saved system bit-for-bit
//    (all floats are written with 17 significant digits);
//  - a plain network file flattening the active elements to straight
//    segments for external visualization tools.

#include <iosfwd>
#include <memory>
#include <string>

#include "core/network.hpp"
#include "mech/solver.hpp"

namespace cellmat::harness {

void save_state(MechSystem& sys, const std::string& path);
void write_state(MechSystem& sys, std::ostream& os);

// Rebuilds the saved assembly; solver settings are supplied by the caller
// because they are configuration, not state. Throws DomainError on a
// malformed file, ConfigError when the file cannot be opened. Returned by
// pointer because the system holds a non-movable factorization.
std::unique_ptr<MechSystem> load_state(const std::string& path, const SolverConfig& solver = {});
std::unique_ptr<MechSystem> read_state(std::istream& is, const SolverConfig& solver = {});

// Active elements as a straight-segment network in the undeformed box:
// node positions are wrapped into [0, L) and image shifts adjusted so every
// segment keeps its span. Bond elements appear as extra short fibers.
Network mesh_to_network(const BeamMesh& mesh);

}  // namespace cellmat::harness
