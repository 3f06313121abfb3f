#pragma once

// Basic periodic-box geometry. Units project-wide: micrometers, piconewtons,
// seconds (so stress pN/um^2 == Pa).

#include <Eigen/Dense>
#include <cmath>

#include "core/errors.hpp"

namespace cellmat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using IVec3 = Eigen::Vector3i;

// Rectangular periodic domain with an affine deformation applied on read.
// Node coordinates are stored in undeformed box coordinates in [0, L_i);
// physical (deformed) positions are deformation * (coord + shift .* L).
class PeriodicBox {
 public:
  PeriodicBox() : edge_lengths_(1.0, 1.0, 1.0), deformation_(Mat3::Identity()) {}

  PeriodicBox(const Vec3& edge_lengths, const Mat3& deformation = Mat3::Identity()) {
    set_edge_lengths(edge_lengths);
    set_deformation(deformation);
  }

  const Vec3& edge_lengths() const { return edge_lengths_; }
  const Mat3& deformation() const { return deformation_; }

  void set_edge_lengths(const Vec3& edges) {
    if (!(edges.x() > 0.0 && edges.y() > 0.0 && edges.z() > 0.0))
      throw DomainError("PeriodicBox: edge lengths must be positive");
    edge_lengths_ = edges;
  }

  void set_deformation(const Mat3& f) {
    const double det = f.determinant();
    if (!std::isfinite(det) || det <= 0.0)
      throw DomainError("PeriodicBox: deformation matrix must be invertible with positive determinant");
    deformation_ = f;
  }

  double volume() const { return edge_lengths_.prod(); }
  double deformed_volume() const { return deformation_.determinant() * volume(); }
  double min_edge() const { return edge_lengths_.minCoeff(); }

  // Wraps an undeformed coordinate into [0, L). Single-period offsets are
  // exact in floating point (Sterbenz), so wrapping never loses bits.
  Vec3 wrap(const Vec3& p) const {
    Vec3 out = p;
    for (int k = 0; k < 3; ++k) {
      const double L = edge_lengths_[k];
      while (out[k] < 0.0) out[k] += L;
      while (out[k] >= L) out[k] -= L;
    }
    return out;
  }

  // Integer image shift s minimizing |b + s.*L - a| componentwise.
  IVec3 min_image_shift(const Vec3& a, const Vec3& b) const {
    IVec3 s;
    for (int k = 0; k < 3; ++k)
      s[k] = static_cast<int>(-std::lround((b[k] - a[k]) / edge_lengths_[k]));
    return s;
  }

  Vec3 shift_offset(const IVec3& s) const {
    return Vec3(s[0] * edge_lengths_[0], s[1] * edge_lengths_[1], s[2] * edge_lengths_[2]);
  }

  // Undeformed separation b (+ shift) - a.
  Vec3 separation(const Vec3& a, const Vec3& b, const IVec3& shift) const {
    return b + shift_offset(shift) - a;
  }

  Vec3 min_image_separation(const Vec3& a, const Vec3& b) const {
    return separation(a, b, min_image_shift(a, b));
  }

  Vec3 to_physical(const Vec3& undeformed) const { return deformation_ * undeformed; }

 private:
  Vec3 edge_lengths_;
  Mat3 deformation_;
};

}  // namespace cellmat
