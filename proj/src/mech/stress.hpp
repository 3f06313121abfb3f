#pragma once

// First Piola-Kirchhoff stress of the periodic assembly, measured two ways:
//  - pk1_plane: for each axis, the net force transmitted across a periodic
//    cut plane of the undeformed box, divided by the undeformed face area;
//  - pk1_virial: the volume-averaged dyad of transmitted force with the
//    undeformed element span.
// The two agree at mechanical equilibrium; comparing them is a cheap
// consistency probe of the force bookkeeping. Column j holds the physical
// force per undeformed area across the plane with normal j.

#include "mech/solver.hpp"

namespace cellmat {

Mat3 pk1_plane(MechSystem& sys);
Mat3 pk1_virial(MechSystem& sys);

}  // namespace cellmat
