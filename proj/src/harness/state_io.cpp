#include "harness/state_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/network_io.hpp"

namespace cellmat::harness {

namespace {

void put(std::ostream& os, double x) { os << ' ' << format_double(x); }

void put(std::ostream& os, const Vec3& v) {
  for (int i = 0; i < 3; ++i) put(os, v[i]);
}

[[noreturn]] void bad(const std::string& what) { throw DomainError("state file: " + what); }

std::istringstream next_line(std::istream& is, const char* what) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
  }
  bad(std::string("missing ") + what);
}

template <typename T>
T expect(std::istringstream& ls, const char* what) {
  T v{};
  if (!(ls >> v)) bad(std::string("cannot read ") + what);
  return v;
}

Vec3 expect_vec3(std::istringstream& ls, const char* what) {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = expect<double>(ls, what);
  return v;
}

}  // namespace

void write_state(MechSystem& sys, std::ostream& os) {
  const BeamMesh& mesh = sys.mesh();
  const Vec3 l = mesh.box.edge_lengths();
  const Mat3 f = mesh.box.deformation();

  os << "cellmat-state 1\n";
  os << "time" << ' ' << format_double(sys.time()) << '\n';
  os << "box";
  put(os, l);
  os << '\n';
  os << "deform";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) put(os, f(r, c));
  os << '\n';

  os << "nodes " << mesh.nodes.size() << '\n';
  for (const MeshNode& n : mesh.nodes) {
    os << format_double(n.position.x());
    put(os, n.position.y());
    put(os, n.position.z());
    put(os, n.orientation.w());
    put(os, n.orientation.x());
    put(os, n.orientation.y());
    put(os, n.orientation.z());
    os << '\n';
  }

  os << "elements " << mesh.elements.size() << '\n';
  for (const BeamElement& e : mesh.elements) {
    os << e.node_a << ' ' << e.node_b << ' ' << e.image_shift.x() << ' ' << e.image_shift.y()
       << ' ' << e.image_shift.z() << ' ' << e.fiber << ' ' << (e.active ? 1 : 0);
    put(os, e.rest_length);
    put(os, e.section.area);
    put(os, e.section.inertia);
    put(os, e.section.torsion);
    put(os, e.section.shear_correction);
    put(os, e.material.young);
    put(os, e.material.shear);
    put(os, e.axis_a);
    put(os, e.ref_a);
    put(os, e.axis_b);
    put(os, e.ref_b);
    os << '\n';
  }

  os << "fibers " << mesh.fibers.size() << '\n';
  for (const BeamMesh::FiberSpan& span : mesh.fibers) {
    os << format_double(span.total) << ' ' << span.elements.size();
    for (size_t k = 0; k < span.elements.size(); ++k) {
      os << ' ' << span.elements[k];
      put(os, span.arc_end[k]);
    }
    os << '\n';
  }

  os << "points " << sys.points().size() << '\n';
  for (const FreePoint& p : sys.points()) {
    os << format_double(p.position.x());
    put(os, p.position.y());
    put(os, p.position.z());
    put(os, p.drag);
    os << '\n';
  }

  os << "springs " << sys.springs().size() << '\n';
  for (const PointSpring& s : sys.springs()) {
    os << s.point << ' ' << s.fiber;
    put(os, s.arc);
    os << ' ' << s.image_shift.x() << ' ' << s.image_shift.y() << ' ' << s.image_shift.z();
    put(os, s.stiffness);
    put(os, s.rest_length);
    os << '\n';
  }
}

void save_state(MechSystem& sys, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  write_state(sys, os);
  if (!os) throw ConfigError("write failed: " + path);
}

std::unique_ptr<MechSystem> read_state(std::istream& is, const SolverConfig& solver) {
  {
    auto ls = next_line(is, "header");
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "cellmat-state" || version != 1) bad("unrecognized header");
  }

  double time = 0.0;
  {
    auto ls = next_line(is, "time");
    if (expect<std::string>(ls, "time keyword") != "time") bad("expected time");
    time = expect<double>(ls, "time value");
  }

  BeamMesh mesh;
  {
    auto ls = next_line(is, "box");
    if (expect<std::string>(ls, "box keyword") != "box") bad("expected box");
    mesh.box.set_edge_lengths(expect_vec3(ls, "box edges"));
  }
  {
    auto ls = next_line(is, "deform");
    if (expect<std::string>(ls, "deform keyword") != "deform") bad("expected deform");
    Mat3 f;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) f(r, c) = expect<double>(ls, "deform entry");
    mesh.box.set_deformation(f);
  }

  size_t n_nodes = 0;
  {
    auto ls = next_line(is, "nodes");
    if (expect<std::string>(ls, "nodes keyword") != "nodes") bad("expected nodes");
    n_nodes = expect<size_t>(ls, "node count");
  }
  mesh.nodes.resize(n_nodes);
  for (size_t i = 0; i < n_nodes; ++i) {
    auto ls = next_line(is, "node row");
    MeshNode& n = mesh.nodes[i];
    n.position = expect_vec3(ls, "node position");
    const double w = expect<double>(ls, "node orientation");
    const double x = expect<double>(ls, "node orientation");
    const double y = expect<double>(ls, "node orientation");
    const double z = expect<double>(ls, "node orientation");
    n.orientation = Quat(w, x, y, z);
    if (std::abs(n.orientation.norm() - 1.0) > 1e-9) bad("node orientation is not a unit quaternion");
  }

  size_t n_elems = 0;
  {
    auto ls = next_line(is, "elements");
    if (expect<std::string>(ls, "elements keyword") != "elements") bad("expected elements");
    n_elems = expect<size_t>(ls, "element count");
  }
  mesh.elements.resize(n_elems);
  for (size_t i = 0; i < n_elems; ++i) {
    auto ls = next_line(is, "element row");
    BeamElement& e = mesh.elements[i];
    e.node_a = expect<int>(ls, "element node");
    e.node_b = expect<int>(ls, "element node");
    for (int k = 0; k < 3; ++k) e.image_shift[k] = expect<int>(ls, "element shift");
    e.fiber = expect<int>(ls, "element fiber");
    e.active = expect<int>(ls, "element active flag") != 0;
    e.rest_length = expect<double>(ls, "element rest length");
    e.section.area = expect<double>(ls, "section area");
    e.section.inertia = expect<double>(ls, "section inertia");
    e.section.torsion = expect<double>(ls, "section torsion");
    e.section.shear_correction = expect<double>(ls, "section shear correction");
    e.material.young = expect<double>(ls, "material modulus");
    e.material.shear = expect<double>(ls, "material modulus");
    e.axis_a = expect_vec3(ls, "element frame");
    e.ref_a = expect_vec3(ls, "element frame");
    e.axis_b = expect_vec3(ls, "element frame");
    e.ref_b = expect_vec3(ls, "element frame");
    if (e.node_a < 0 || e.node_b < 0 || e.node_a >= static_cast<int>(n_nodes) ||
        e.node_b >= static_cast<int>(n_nodes))
      bad("element references a missing node");
    if (e.rest_length <= 0.0 || e.section.area <= 0.0) bad("element with non-positive geometry");
  }

  size_t n_fibers = 0;
  {
    auto ls = next_line(is, "fibers");
    if (expect<std::string>(ls, "fibers keyword") != "fibers") bad("expected fibers");
    n_fibers = expect<size_t>(ls, "fiber count");
  }
  mesh.fibers.resize(n_fibers);
  for (size_t i = 0; i < n_fibers; ++i) {
    auto ls = next_line(is, "fiber row");
    BeamMesh::FiberSpan& span = mesh.fibers[i];
    span.total = expect<double>(ls, "fiber total arc");
    const size_t count = expect<size_t>(ls, "fiber element count");
    span.elements.resize(count);
    span.arc_end.resize(count);
    for (size_t k = 0; k < count; ++k) {
      span.elements[k] = expect<int>(ls, "fiber element id");
      span.arc_end[k] = expect<double>(ls, "fiber arc end");
      if (span.elements[k] < 0 || span.elements[k] >= static_cast<int>(n_elems))
        bad("fiber references a missing element");
    }
  }

  size_t n_points = 0;
  {
    auto ls = next_line(is, "points");
    if (expect<std::string>(ls, "points keyword") != "points") bad("expected points");
    n_points = expect<size_t>(ls, "point count");
  }
  std::vector<FreePoint> points(n_points);
  for (size_t i = 0; i < n_points; ++i) {
    auto ls = next_line(is, "point row");
    points[i].position = expect_vec3(ls, "point position");
    points[i].drag = expect<double>(ls, "point drag");
    if (points[i].drag <= 0.0) bad("point with non-positive drag");
  }

  size_t n_springs = 0;
  {
    auto ls = next_line(is, "springs");
    if (expect<std::string>(ls, "springs keyword") != "springs") bad("expected springs");
    n_springs = expect<size_t>(ls, "spring count");
  }
  std::vector<PointSpring> springs(n_springs);
  for (size_t i = 0; i < n_springs; ++i) {
    auto ls = next_line(is, "spring row");
    PointSpring& s = springs[i];
    s.point = expect<int>(ls, "spring point");
    s.fiber = expect<int>(ls, "spring fiber");
    s.arc = expect<double>(ls, "spring arc");
    for (int k = 0; k < 3; ++k) s.image_shift[k] = expect<int>(ls, "spring shift");
    s.stiffness = expect<double>(ls, "spring stiffness");
    s.rest_length = expect<double>(ls, "spring rest length");
    if (s.point < 0 || s.point >= static_cast<int>(n_points)) bad("spring references a missing point");
    if (s.fiber < 0 || s.fiber >= static_cast<int>(n_fibers)) bad("spring references a missing fiber");
  }

  auto sys = std::make_unique<MechSystem>(std::move(mesh), solver);
  sys->set_time(time);
  sys->points() = std::move(points);
  sys->springs() = std::move(springs);
  sys->mark_topology_changed();
  return sys;
}

std::unique_ptr<MechSystem> load_state(const std::string& path, const SolverConfig& solver) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open: " + path);
  return read_state(is, solver);
}

Network mesh_to_network(const BeamMesh& mesh) {
  Network net;
  net.box = mesh.box;
  const Vec3 l = mesh.box.edge_lengths();

  net.nodes.resize(mesh.nodes.size());
  std::vector<IVec3> wraps(mesh.nodes.size(), IVec3::Zero());  // periods removed per node
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Vec3 original = mesh.nodes[i].position;
    const Vec3 wrapped = mesh.box.wrap(original);
    for (int k = 0; k < 3; ++k)
      wraps[i][k] = static_cast<int>(std::lround((original[k] - wrapped[k]) / l[k]));
    net.nodes[i] = NetworkNode{static_cast<int>(i), wrapped};
  }

  for (const BeamElement& e : mesh.elements) {
    if (!e.active) continue;
    Fiber f;
    f.id = static_cast<int>(net.fibers.size());
    f.node_a = e.node_a;
    f.node_b = e.node_b;
    // Wrapping moved each endpoint by whole periods; fold those periods into
    // the image shift so the segment span is unchanged.
    f.image_shift = e.image_shift + wraps[static_cast<size_t>(e.node_b)] -
                    wraps[static_cast<size_t>(e.node_a)];
    f.diameter = 2.0 * std::sqrt(e.section.area / M_PI);
    f.modulus = e.material.young;
    net.fibers.push_back(f);
  }
  return net;
}

}  // namespace cellmat::harness
