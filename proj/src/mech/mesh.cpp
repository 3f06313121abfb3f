#include "mech/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace cellmat {

BeamMesh discretize(const Network& net, int elems_per_fiber) {
  if (elems_per_fiber < 1) throw ConfigError("discretize: elems_per_fiber must be >= 1");
  BeamMesh mesh;
  mesh.box = net.box;
  mesh.nodes.resize(net.nodes.size());
  for (size_t i = 0; i < net.nodes.size(); ++i) mesh.nodes[i].position = net.nodes[i].position;
  mesh.fibers.resize(net.fibers.size());

  for (size_t fi = 0; fi < net.fibers.size(); ++fi) {
    const Fiber& fiber = net.fibers[fi];
    const Vec3 sep = net.fiber_vector_undeformed(fiber);
    const double total = sep.norm();
    if (!(total > 0.0)) throw DomainError("discretize: zero-length fiber " + std::to_string(fi));
    const Vec3 axis = sep / total;
    const Vec3 ref = perpendicular_unit(axis);
    const BeamSection section = circular_section(fiber.diameter);
    const BeamMaterial material = isotropic_material(fiber.modulus);

    // Interior nodes: wrap each interpolated point and remember how many
    // periods the wrap moved it, so per-sub-element shifts recombine to the
    // fiber's total image shift.
    const Vec3 pa = net.nodes[fiber.node_a].position;
    std::vector<int> chain_nodes{fiber.node_a};
    std::vector<IVec3> wrap_counts{IVec3::Zero()};
    for (int k = 1; k < elems_per_fiber; ++k) {
      const Vec3 raw = pa + (static_cast<double>(k) / elems_per_fiber) * sep;
      const Vec3 wrapped = mesh.box.wrap(raw);
      IVec3 n;
      for (int c = 0; c < 3; ++c)
        n[c] = static_cast<int>(std::lround((wrapped[c] - raw[c]) / mesh.box.edge_lengths()[c]));
      chain_nodes.push_back(static_cast<int>(mesh.nodes.size()));
      wrap_counts.push_back(n);
      MeshNode node;
      node.position = wrapped;
      mesh.nodes.push_back(node);
    }
    chain_nodes.push_back(fiber.node_b);
    wrap_counts.push_back(-fiber.image_shift);

    BeamMesh::FiberSpan& span = mesh.fibers[fi];
    span.total = total;
    for (int k = 0; k < elems_per_fiber; ++k) {
      BeamElement el;
      el.node_a = chain_nodes[static_cast<size_t>(k)];
      el.node_b = chain_nodes[static_cast<size_t>(k) + 1];
      el.image_shift = wrap_counts[static_cast<size_t>(k)] - wrap_counts[static_cast<size_t>(k) + 1];
      el.rest_length = total / elems_per_fiber;
      el.section = section;
      el.material = material;
      el.fiber = static_cast<int>(fi);
      el.axis_a = el.axis_b = axis;
      el.ref_a = el.ref_b = ref;
      span.elements.push_back(static_cast<int>(mesh.elements.size()));
      span.arc_end.push_back(total * (k + 1) / elems_per_fiber);
      mesh.elements.push_back(el);
    }
  }
  return mesh;
}

MaterialPoint BeamMesh::locate(int fiber, double arc) const {
  if (fiber < 0 || static_cast<size_t>(fiber) >= fibers.size())
    throw DomainError("mesh locate: fiber id out of range");
  const FiberSpan& span = fibers[static_cast<size_t>(fiber)];
  const double clamped = std::clamp(arc, 0.0, span.total);
  const auto it = std::lower_bound(span.arc_end.begin(), span.arc_end.end(), clamped);
  const size_t k = std::min(static_cast<size_t>(it - span.arc_end.begin()), span.arc_end.size() - 1);
  const double start = k == 0 ? 0.0 : span.arc_end[k - 1];
  const BeamElement& el = elements[static_cast<size_t>(span.elements[k])];
  MaterialPoint mp;
  mp.element = span.elements[k];
  mp.xi = std::clamp((clamped - start) / el.rest_length, 0.0, 1.0);
  return mp;
}

int BeamMesh::node_at(int fiber, double arc, double snap_arc) {
  const MaterialPoint mp = locate(fiber, arc);
  BeamElement& el = elements[static_cast<size_t>(mp.element)];
  if (mp.xi * el.rest_length <= snap_arc) return el.node_a;
  if ((1.0 - mp.xi) * el.rest_length <= snap_arc) return el.node_b;

  const double xi = mp.xi;
  const Vec3 chord = chord_undeformed(el);
  const Vec3 raw = nodes[el.node_a].position + xi * chord;
  const Vec3 wrapped = box.wrap(raw);
  IVec3 wrap_n;
  for (int c = 0; c < 3; ++c)
    wrap_n[c] = static_cast<int>(std::lround((wrapped[c] - raw[c]) / box.edge_lengths()[c]));

  const Quat qa = nodes[el.node_a].orientation;
  const Quat qb = nodes[el.node_b].orientation;
  MeshNode fresh;
  fresh.position = wrapped;
  fresh.orientation = qa.slerp(xi, qb).normalized();
  const int new_node = static_cast<int>(nodes.size());
  nodes.push_back(fresh);

  // Apportion the current twist so torsional energy is preserved exactly;
  // the chord direction gives the stress-free axis at the new joint.
  const ElementTwist tw = element_twist(el, physical_a(el), physical_b(el), qa, qb);
  const Vec3 e = tw.chord_dir;
  const Vec3 ba = (qa * el.ref_a);
  Vec3 mid_ref = ba - ba.dot(e) * e;
  const double mid_norm = mid_ref.norm();
  if (mid_norm < 1e-9) throw SolverError("mesh split: reference director collapsed onto the chord");
  mid_ref /= mid_norm;
  mid_ref = Eigen::AngleAxisd(xi * tw.twist, e) * mid_ref;
  const Quat q_new_inv = fresh.orientation.conjugate();

  BeamElement first = el;
  first.node_b = new_node;
  first.image_shift = -wrap_n;
  first.rest_length = xi * el.rest_length;
  first.axis_b = q_new_inv * e;
  first.ref_b = q_new_inv * mid_ref;

  BeamElement second = el;
  second.node_a = new_node;
  second.image_shift = el.image_shift + wrap_n;
  second.rest_length = (1.0 - xi) * el.rest_length;
  second.axis_a = q_new_inv * e;
  second.ref_a = q_new_inv * mid_ref;

  const int second_id = static_cast<int>(elements.size());
  elements[static_cast<size_t>(mp.element)] = first;
  elements.push_back(second);

  FiberSpan& span = fibers[static_cast<size_t>(fiber)];
  const auto pos = std::find(span.elements.begin(), span.elements.end(), mp.element);
  const size_t k = static_cast<size_t>(pos - span.elements.begin());
  const double start = k == 0 ? 0.0 : span.arc_end[k - 1];
  span.elements.insert(span.elements.begin() + static_cast<long>(k) + 1, second_id);
  span.arc_end.insert(span.arc_end.begin() + static_cast<long>(k), start + first.rest_length);
  return new_node;
}

void BeamMesh::translate(const Vec3& delta) {
  Vec3 d;
  for (int k = 0; k < 3; ++k) {
    const double L = box.edge_lengths()[k];
    d[k] = delta[k] - L * std::round(delta[k] / L);
  }
  if (d.isZero(0.0)) return;
  std::vector<IVec3> wraps(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    const Vec3 moved = nodes[i].position + d;
    const Vec3 wrapped = box.wrap(moved);
    for (int k = 0; k < 3; ++k)
      wraps[i][k] = static_cast<int>(std::lround((wrapped[k] - moved[k]) / box.edge_lengths()[k]));
    nodes[i].position = wrapped;
  }
  for (BeamElement& el : elements) el.image_shift += wraps[static_cast<size_t>(el.node_a)] -
                                                     wraps[static_cast<size_t>(el.node_b)];
}

double BeamMesh::total_energy() const {
  double sum = 0.0;
  for (size_t i = 0; i < elements.size(); ++i)
    if (elements[i].active) sum += eval(static_cast<int>(i)).energy;
  return sum;
}

}  // namespace cellmat
