#pragma once

// Corotational two-node beam element retaining axial, torsion, bending and
// shear stiffness. The stored energy is built from rotation-invariant
// measures of the current state:
//   - chord stretch (axial),
//   - the geodesic rotation from the chord to each node's material tangent
//     (bending, with the shear-flexible Timoshenko coupling between ends),
//   - the azimuthal angle between the two material reference directors
//     around the chord (torsion).
// Forces and moments are the exact analytic gradients of that energy, so
// momentum balance and frame indifference hold to rounding accuracy.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "core/geometry.hpp"

namespace cellmat {

using Quat = Eigen::Quaterniond;

struct BeamSection {
  double area = 0.0;              // um^2
  double inertia = 0.0;           // um^4
  double torsion = 0.0;           // um^4
  double shear_correction = 1.0;  // unitless
};

// Circular cross-section with the shear correction 6(1+nu)/(7+6nu).
BeamSection circular_section(double diameter, double poisson = 0.3);

struct BeamMaterial {
  double young = 0.0;  // pN/um^2
  double shear = 0.0;  // pN/um^2
};

// Isotropic material with G = E / (2 (1 + nu)).
BeamMaterial isotropic_material(double young, double poisson = 0.3);

struct BeamElement {
  int node_a = -1;
  int node_b = -1;
  IVec3 image_shift = IVec3::Zero();  // image of node_b the element runs to
  double rest_length = 0.0;           // um
  BeamSection section{};
  BeamMaterial material{};
  int fiber = -1;     // host fiber id; -1 for bonds created at run time
  bool active = true;  // cleared when a bond is removed; inactive elements carry no force

  // Element axis and a perpendicular reference director, expressed in each
  // node's material frame at the stress-free reference state.
  Vec3 axis_a = Vec3::UnitX();
  Vec3 ref_a = Vec3::UnitY();
  Vec3 axis_b = Vec3::UnitX();
  Vec3 ref_b = Vec3::UnitY();
};

struct ElementForces {
  double energy = 0.0;                 // pN um
  Vec3 force_a = Vec3::Zero();         // pN, acting on node a
  Vec3 force_b = Vec3::Zero();         // pN, acting on node b
  Vec3 moment_a = Vec3::Zero();        // pN um, conjugate to spatial rotation
  Vec3 moment_b = Vec3::Zero();        // pN um
  Vec3 chord = Vec3::Zero();           // physical a->b vector
  double length = 0.0;                 // um
};

// Evaluates the element given physical (deformed, unwrapped) endpoint
// positions and the nodal orientations. Throws SolverError when the element
// has collapsed below 1e-6 of its rest length or folded back onto itself.
ElementForces element_forces(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                             const Quat& qb);

// Energy only, through the identical code path (used for derivative checks).
double element_energy(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                      const Quat& qb);

// Current twist angle and chord direction (used when splitting an element so
// the torsional state can be apportioned between the halves).
struct ElementTwist {
  Vec3 chord_dir = Vec3::UnitX();
  double twist = 0.0;  // radians, director b relative to director a
};
ElementTwist element_twist(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                           const Quat& qb);

// Unit quaternion exp map of a rotation vector (radians).
Quat quat_from_rotvec(const Vec3& w);

// Deterministic unit vector perpendicular to a unit vector.
Vec3 perpendicular_unit(const Vec3& e);

}  // namespace cellmat
