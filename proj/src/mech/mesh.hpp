#pragma once

// Beam mesh over a periodic box. Nodes carry positions in undeformed box
// coordinates (they may drift outside [0, L) while a simulation runs; only
// element image shifts keep the unwrapped geometry consistent) plus a unit
// quaternion orientation. Shared nodes act as rigid joints coupling both
// translations and rotations of all incident elements.

#include <vector>

#include "core/network.hpp"
#include "mech/beam.hpp"

namespace cellmat {

struct MeshNode {
  Vec3 position = Vec3::Zero();  // undeformed box coordinates
  Quat orientation = Quat::Identity();
};

// A material point along an original fiber, resolved to the current mesh.
struct MaterialPoint {
  int element = -1;
  double xi = 0.0;  // fractional position between the element's nodes
};

class BeamMesh {
 public:
  PeriodicBox box;
  std::vector<MeshNode> nodes;
  std::vector<BeamElement> elements;

  // Per original fiber: its elements in arc order with cumulative rest
  // lengths, so (fiber, arc-length) coordinates survive element splits.
  struct FiberSpan {
    std::vector<int> elements;
    std::vector<double> arc_end;  // arc at the far end of each element
    double total = 0.0;
  };
  std::vector<FiberSpan> fibers;

  // Undeformed chord a->b including the periodic image shift.
  Vec3 chord_undeformed(const BeamElement& el) const {
    return box.separation(nodes[el.node_a].position, nodes[el.node_b].position, el.image_shift);
  }

  Vec3 physical_a(const BeamElement& el) const { return box.to_physical(nodes[el.node_a].position); }
  Vec3 physical_b(const BeamElement& el) const {
    return box.to_physical(nodes[el.node_b].position + box.shift_offset(el.image_shift));
  }

  ElementForces eval(int element) const {
    const BeamElement& el = elements[static_cast<size_t>(element)];
    return element_forces(el, physical_a(el), physical_b(el), nodes[el.node_a].orientation,
                          nodes[el.node_b].orientation);
  }

  MaterialPoint locate(int fiber, double arc) const;

  // Undeformed position of a material point, continuous in time (no wrap
  // jumps) because it interpolates along the unwrapped chord.
  Vec3 point_undeformed(const MaterialPoint& mp) const {
    const BeamElement& el = elements[static_cast<size_t>(mp.element)];
    return nodes[el.node_a].position + mp.xi * chord_undeformed(el);
  }

  // Returns a mesh node sitting at (fiber, arc), splitting the containing
  // element when the point is farther than snap_arc from an existing node.
  // Splits preserve axial strain and twist exactly; the bending state local
  // to the split element is re-referenced to its current shape.
  int node_at(int fiber, double arc, double snap_arc = 1e-6);

  // Rigid translation with re-wrapping; whole-period translations are
  // bit-exact no-ops (same contract as Network::translate).
  void translate(const Vec3& delta);

  // Total elastic energy (useful in tests and diagnostics).
  double total_energy() const;
};

// Splits every fiber of the network into elems_per_fiber equal-length beam
// elements; interior nodes are created wrapped into the box with image
// shifts apportioned so state-II geometry is continuous.
BeamMesh discretize(const Network& net, int elems_per_fiber);

}  // namespace cellmat
