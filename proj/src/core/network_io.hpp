#pragma once

// Line-oriented versioned text format for networks.
//
//   cellmat-net 1
//   box Lx Ly Lz
//   deform m00 m01 m02 m10 m11 m12 m20 m21 m22
//   nodes N
//   <id x y z>                                   x N
//   fibers F
//   <id node_a node_b sx sy sz diameter modulus> x F
//
// Doubles are printed with 17 significant digits so save/load round-trips
// are bit-exact.

#include <iosfwd>
#include <string>

#include "core/network.hpp"

namespace cellmat {

void save_network(const Network& net, const std::string& path);
void write_network(const Network& net, std::ostream& os);

// strict_length_bound: enforce the generation-time free-length bound on load
// (relaxed for deformed snapshots).
Network load_network(const std::string& path, bool strict_length_bound = true);
Network read_network(std::istream& is, bool strict_length_bound = true);

// 17-significant-digit decimal rendering used by all emitters.
std::string format_double(double x);

}  // namespace cellmat
