#include "mech/beam.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace cellmat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// angle/sin(angle) given sin and cos of the angle; smooth at zero.
double angle_over_sine(double s, double c, double angle) {
  if (s < 1e-8) return 1.0;
  (void)c;
  return angle / s;
}

// d(angle/sin)/d(cos), smooth at zero: -(1 - angle*cot(angle))/sin^2.
double angle_over_sine_slope(double s, double c, double angle, double f) {
  if (s < 1e-3) {
    const double a2 = angle * angle;
    return -(1.0 / 3.0) - (2.0 / 15.0) * a2;
  }
  return -(1.0 - f * c) / (s * s);
}

struct Scratch {
  double energy = 0.0;
  Vec3 d_r = Vec3::Zero();       // dU / d(chord)
  Vec3 d_ta = Vec3::Zero();      // dU / d(theta_a), spatial rotation increment
  Vec3 d_tb = Vec3::Zero();
};

// Shared evaluation of energy and, when grad != nullptr, its exact gradient.
double evaluate(const BeamElement& el, const Vec3& xa, const Vec3& xb, const Quat& qa,
                const Quat& qb, Scratch* grad, ElementForces* out, ElementTwist* twist_out) {
  const double L0 = el.rest_length;
  if (!(L0 > 0.0)) throw DomainError("beam element: rest length must be positive");

  const Vec3 r = xb - xa;
  const double len = r.norm();
  if (len < 1e-6 * L0)
    throw SolverError("beam element collapsed: length " + std::to_string(len) +
                      " um below 1e-6 of rest length " + std::to_string(L0) + " um");
  const Vec3 e = r / len;

  const double EA = el.material.young * el.section.area;
  const double EI = el.material.young * el.section.inertia;
  const double GJ = el.material.shear * el.section.torsion;
  const double GAk = el.material.shear * el.section.area * el.section.shear_correction;
  const double phi = 12.0 * EI / (GAk * L0 * L0);  // shear flexibility ratio

  const double k_axial = EA / L0;
  const double k_diag = EI * (4.0 + phi) / (2.0 * L0 * (1.0 + phi));
  const double k_cross = EI * (2.0 - phi) / (L0 * (1.0 + phi));
  const double k_twist = GJ / L0;

  const Vec3 ta = qa * el.axis_a;
  const Vec3 tb = qb * el.axis_b;
  const Vec3 ba = qa * el.ref_a;
  const Vec3 bb = qb * el.ref_b;

  // Bending: geodesic rotation from the chord to each material tangent.
  const double ca = e.dot(ta), cb = e.dot(tb);
  if (ca < -0.99 || cb < -0.99)
    throw SolverError("beam element folded back onto itself (tangent reversed against chord)");
  const Vec3 wa = e.cross(ta), wb = e.cross(tb);
  const double sa = wa.norm(), sb = wb.norm();
  const double alpha_a = std::atan2(sa, ca), alpha_b = std::atan2(sb, cb);
  const double fa = angle_over_sine(sa, ca, alpha_a);
  const double fb = angle_over_sine(sb, cb, alpha_b);
  const double cross_w = ta.dot(tb) - ca * cb;  // wa . wb

  // Torsion: azimuth between the reference directors around the chord.
  const double tN = e.dot(ba.cross(bb));
  const double tD = ba.dot(bb) - ba.dot(e) * bb.dot(e);
  const double t_mag2 = tN * tN + tD * tD;
  if (t_mag2 < 1e-12)
    throw SolverError("beam element torsion reference degenerate (director parallel to chord)");
  const double twist = std::atan2(tN, tD);
  if (std::abs(twist) > 0.9 * kPi)
    throw SolverError("beam element twist beyond +-0.9 pi; state no longer resolvable");

  const double stretch = len - L0;
  const double energy = 0.5 * k_axial * stretch * stretch +
                        k_diag * (alpha_a * alpha_a + alpha_b * alpha_b) +
                        k_cross * (fa * fb * cross_w) + 0.5 * k_twist * twist * twist;

  if (twist_out) {
    twist_out->chord_dir = e;
    twist_out->twist = twist;
  }
  if (!grad) return energy;

  const double ga = angle_over_sine_slope(sa, ca, alpha_a, fa);
  const double gb = angle_over_sine_slope(sb, cb, alpha_b, fb);

  // Projector d(e)/d(r) = (I - e e^T)/len applied on the fly: P v = (v - (e.v)e)/len.
  const auto project = [&](const Vec3& v) { return (v - e.dot(v) * e) / len; };

  Vec3 d_r = k_axial * stretch * e;
  // d(alpha^2)/dr = -2 f P t ; d(alpha^2)/dtheta = 2 f w.
  d_r += k_diag * (-2.0 * fa * project(ta) - 2.0 * fb * project(tb));
  Vec3 d_ta = k_diag * (2.0 * fa * wa);
  Vec3 d_tb = k_diag * (2.0 * fb * wb);
  // Cross term f_a f_b (t_a.t_b - c_a c_b).
  d_r += k_cross * project((fb * cross_w * ga - fa * fb * cb) * ta +
                           (fa * cross_w * gb - fa * fb * ca) * tb);
  const Vec3 ta_x_tb = ta.cross(tb);
  d_ta += k_cross * ((fa * fb * cb - fb * cross_w * ga) * wa + fa * fb * ta_x_tb);
  d_tb += k_cross * ((fa * fb * ca - fa * cross_w * gb) * wb - fa * fb * ta_x_tb);
  // Twist angle: atan2(N, D).
  const double qn = k_twist * twist / t_mag2;
  const Vec3 ba_x_bb = ba.cross(bb);
  const Vec3 ua = ba - ba.dot(e) * e;
  const Vec3 ub = bb - bb.dot(e) * e;
  d_r += qn * project(tD * ba_x_bb + tN * (bb.dot(e) * ba + ba.dot(e) * bb));
  d_ta += qn * (tD * ba.cross(bb.cross(e)) - tN * ba.cross(ub));
  d_tb += qn * (tD * bb.cross(e.cross(ba)) - tN * bb.cross(ua));

  grad->energy = energy;
  grad->d_r = d_r;
  grad->d_ta = d_ta;
  grad->d_tb = d_tb;

  if (out) {
    out->energy = energy;
    out->force_a = d_r;    // -dU/dx_a with dr/dx_a = -I
    out->force_b = -d_r;   // -dU/dx_b
    out->moment_a = -d_ta;
    out->moment_b = -d_tb;
    out->chord = r;
    out->length = len;
  }
  return energy;
}

void check_unit(const Quat& q, const char* which) {
  if (std::abs(q.norm() - 1.0) > 1e-9)
    throw DomainError(std::string("beam element: ") + which + " orientation quaternion not unit");
}

}  // namespace

BeamSection circular_section(double diameter, double poisson) {
  if (!(diameter > 0.0)) throw DomainError("circular_section: diameter must be positive");
  BeamSection s;
  const double d2 = diameter * diameter;
  s.area = kPi * d2 / 4.0;
  s.inertia = kPi * d2 * d2 / 64.0;
  s.torsion = 2.0 * s.inertia;
  s.shear_correction = 6.0 * (1.0 + poisson) / (7.0 + 6.0 * poisson);
  return s;
}

BeamMaterial isotropic_material(double young, double poisson) {
  if (!(young > 0.0)) throw DomainError("isotropic_material: modulus must be positive");
  return BeamMaterial{young, young / (2.0 * (1.0 + poisson))};
}

ElementForces element_forces(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                             const Quat& qb) {
  check_unit(qa, "node a");
  check_unit(qb, "node b");
  Scratch grad;
  ElementForces out;
  evaluate(e, xa, xb, qa, qb, &grad, &out, nullptr);
  return out;
}

double element_energy(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                      const Quat& qb) {
  check_unit(qa, "node a");
  check_unit(qb, "node b");
  return evaluate(e, xa, xb, qa, qb, nullptr, nullptr, nullptr);
}

ElementTwist element_twist(const BeamElement& e, const Vec3& xa, const Vec3& xb, const Quat& qa,
                           const Quat& qb) {
  ElementTwist t;
  evaluate(e, xa, xb, qa, qb, nullptr, nullptr, &t);
  return t;
}

Quat quat_from_rotvec(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * angle;
  const double s = std::sin(half) / angle;
  Quat q(std::cos(half), s * w.x(), s * w.y(), s * w.z());
  q.normalize();
  return q;
}

Vec3 perpendicular_unit(const Vec3& e) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(e[i]) < std::abs(e[k])) k = i;
  Vec3 axis = Vec3::Zero();
  axis[k] = 1.0;
  return e.cross(axis).normalized();
}

}  // namespace cellmat
