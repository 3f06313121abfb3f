#include "mech/stress.hpp"

#include <cmath>

namespace cellmat {

namespace {

// Signed count of cut planes {c + k L} crossed by the 1-d span a -> b.
// Valid for unwrapped coordinates as long as the span is shorter than L.
int crossings(double a, double b, double c, double l) {
  return static_cast<int>(std::floor((b - c) / l)) - static_cast<int>(std::floor((a - c) / l));
}

struct Transmission {
  Vec3 a_und = Vec3::Zero();  // undeformed start point
  Vec3 b_und = Vec3::Zero();  // undeformed end point (possibly another image)
  Vec3 force = Vec3::Zero();  // physical force the b side exerts on the a side
};

// Flattens elements and springs into pairwise force transmissions. The
// recorded force is what the far (b) side hands to the near (a) side through
// the member: for an element that is the elastic force on node a; for a
// spring, the tension directed from the free point toward the anchor.
std::vector<Transmission> collect(MechSystem& sys) {
  std::vector<Transmission> out;
  const BeamMesh& mesh = sys.mesh();
  const auto& forces = sys.element_forces_now();
  out.reserve(mesh.elements.size() + sys.springs().size());
  for (size_t i = 0; i < mesh.elements.size(); ++i) {
    const BeamElement& el = mesh.elements[i];
    if (!el.active) continue;
    Transmission t;
    t.a_und = mesh.nodes[static_cast<size_t>(el.node_a)].position;
    t.b_und = mesh.nodes[static_cast<size_t>(el.node_b)].position + mesh.box.shift_offset(el.image_shift);
    t.force = -forces[i].force_b;
    out.push_back(t);
  }
  const Mat3 f = mesh.box.deformation();
  for (const PointSpring& s : sys.springs()) {
    Transmission t;
    t.a_und = sys.points()[static_cast<size_t>(s.point)].position;
    t.b_und = sys.anchor_undeformed(s);
    const Vec3 v = f * (t.b_und - t.a_und);
    const double d = v.norm();
    if (d < 1e-6) continue;
    t.force = s.stiffness * (d - s.rest_length) * (v / d);
    out.push_back(t);
  }
  return out;
}

}  // namespace

Mat3 pk1_plane(MechSystem& sys) {
  const std::vector<Transmission> spans = collect(sys);
  const Vec3 l = sys.box().edge_lengths();
  Mat3 p = Mat3::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    // Nudge the cut away from any endpoint that sits on it, deterministically.
    double c = 0.5 * l[axis];
    for (int attempt = 0; attempt < 64; ++attempt) {
      bool clear = true;
      for (const Transmission& t : spans) {
        for (double x : {t.a_und[axis], t.b_und[axis]}) {
          const double frac = std::abs(std::remainder(x - c, l[axis]));
          if (frac < 1e-9) {
            clear = false;
            break;
          }
        }
        if (!clear) break;
      }
      if (clear) break;
      c += 7.3e-7 * l[axis];
    }
    Vec3 column = Vec3::Zero();
    for (const Transmission& t : spans)
      column += static_cast<double>(crossings(t.a_und[axis], t.b_und[axis], c, l[axis])) * t.force;
    const double area = l[(axis + 1) % 3] * l[(axis + 2) % 3];
    p.col(axis) = column / area;
  }
  return p;
}

Mat3 pk1_virial(MechSystem& sys) {
  const std::vector<Transmission> spans = collect(sys);
  const Vec3 l = sys.box().edge_lengths();
  const double volume = l.x() * l.y() * l.z();
  Mat3 p = Mat3::Zero();
  for (const Transmission& t : spans) p += t.force * (t.b_und - t.a_und).transpose();
  return p / volume;
}

}  // namespace cellmat
