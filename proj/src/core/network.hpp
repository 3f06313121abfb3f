#pragma once

// Periodic fiber network: nodes joined by straight fibers, fibers may cross
// box faces (tracked by integer image shifts).

#include <vector>

#include "core/geometry.hpp"

namespace cellmat {

struct NetworkNode {
  int id = 0;
  Vec3 position = Vec3::Zero();  // undeformed box coordinates, in [0, L)
};

struct Fiber {
  int id = 0;
  int node_a = 0;
  int node_b = 0;
  IVec3 image_shift = IVec3::Zero();  // image of node_b the fiber runs to
  double diameter = 0.18;             // um
  double modulus = 1.1e6;             // pN/um^2
};

class Network {
 public:
  PeriodicBox box;
  std::vector<NetworkNode> nodes;
  std::vector<Fiber> fibers;

  // Undeformed fiber vector from node_a to node_b's image.
  Vec3 fiber_vector_undeformed(const Fiber& f) const {
    return box.separation(nodes[f.node_a].position, nodes[f.node_b].position, f.image_shift);
  }

  // Physical (deformed-space) fiber vector.
  Vec3 fiber_vector(const Fiber& f) const { return box.to_physical(fiber_vector_undeformed(f)); }

  double fiber_length(const Fiber& f) const { return fiber_vector(f).norm(); }

  std::vector<int> valencies() const;

  // Fiber ids incident to each node.
  std::vector<std::vector<int>> incidence() const;

  // Checks ids, shifts, section parameters, duplicate fibers, isolated nodes
  // and (when strict) the free-length bound min(edge)/3. Throws DomainError.
  void validate(bool strict_length_bound = true) const;

  // Rigid translation in undeformed coordinates with re-wrapping; image
  // shifts absorb whole-period wraps so fiber vectors are preserved to
  // rounding accuracy. Exact-period translations are bit-exact identities.
  void translate(const Vec3& delta);
};

}  // namespace cellmat
