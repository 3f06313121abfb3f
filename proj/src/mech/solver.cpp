#include "mech/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace cellmat {

void LoadProgram::validate() const {
  for (size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i].time > schedule[i - 1].time))
      throw ConfigError("load program: schedule times must be strictly increasing");
}

Mat3 LoadProgram::strain_at(double t) const {
  if (schedule.empty()) return Mat3::Zero();
  if (t <= schedule.front().time) return schedule.front().strain;
  if (t >= schedule.back().time) return schedule.back().strain;
  size_t hi = 1;
  while (schedule[hi].time < t) ++hi;
  const LoadStep& a = schedule[hi - 1];
  const LoadStep& b = schedule[hi];
  const double w = (t - a.time) / (b.time - a.time);
  return (1.0 - w) * a.strain + w * b.strain;
}

Mat3 strain_to_deformation(const Mat3& strain) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!(std::abs(strain(i, j)) <= 0.5))
        throw DomainError("strain entries must lie within +-0.5");
  const Mat3 f = Mat3::Identity() + strain;
  if (!(f.determinant() > 1e-12))
    throw DomainError("strain produces a non-invertible deformation");
  return f;
}

PeriodicBox apply_strain(const PeriodicBox& box, const Mat3& strain) {
  PeriodicBox out = box;
  out.set_deformation(strain_to_deformation(strain) * box.deformation());
  return out;
}

MechSystem::MechSystem(BeamMesh mesh, SolverConfig cfg) : mesh_(std::move(mesh)), cfg_(cfg) {
  refresh_topology();
}

void MechSystem::set_strain(const Mat3& strain) {
  mesh_.box.set_deformation(strain_to_deformation(strain));
  forces_dirty_ = true;
}

void MechSystem::refresh_topology() {
  layout_.n_nodes = static_cast<int>(mesh_.nodes.size());
  layout_.n_points = static_cast<int>(points_.size());
  node_drag_trans_.assign(static_cast<size_t>(layout_.n_nodes), 0.0);
  node_drag_rot_.assign(static_cast<size_t>(layout_.n_nodes), 0.0);
  char_force_ = 1.0;
  for (const BeamElement& el : mesh_.elements) {
    if (!el.active) continue;
    const double l = el.rest_length;
    node_drag_trans_[static_cast<size_t>(el.node_a)] += cfg_.drag_per_length * l / 2.0;
    node_drag_trans_[static_cast<size_t>(el.node_b)] += cfg_.drag_per_length * l / 2.0;
    node_drag_rot_[static_cast<size_t>(el.node_a)] += cfg_.drag_per_length * l * l * l / 24.0;
    node_drag_rot_[static_cast<size_t>(el.node_b)] += cfg_.drag_per_length * l * l * l / 24.0;
    char_force_ = std::max(char_force_, el.material.young * el.section.area);
  }
  for (double& c : node_drag_trans_) c = std::max(c, 1e-9);
  for (double& c : node_drag_rot_) c = std::max(c, cfg_.rot_drag_floor);

  spring_anchor_cache_.clear();
  spring_anchor_cache_.reserve(springs_.size());
  for (const PointSpring& s : springs_) spring_anchor_cache_.push_back(mesh_.locate(s.fiber, s.arc));

  pattern_ready_ = false;
  topology_dirty_ = false;
  forces_dirty_ = true;
}

Vec3 MechSystem::anchor_undeformed(const PointSpring& s) const {
  const MaterialPoint mp = mesh_.locate(s.fiber, s.arc);
  return mesh_.point_undeformed(mp) + mesh_.box.shift_offset(s.image_shift);
}

double MechSystem::spring_tension(const PointSpring& s) const {
  const Vec3 v = mesh_.box.deformation() * (anchor_undeformed(s) - points_[static_cast<size_t>(s.point)].position);
  return s.stiffness * (v.norm() - s.rest_length);
}

int MechSystem::add_bond_element(int node_a, int node_b, const IVec3& shift, double diameter,
                                 double modulus) {
  const Quat& qa = mesh_.nodes[static_cast<size_t>(node_a)].orientation;
  const Quat& qb = mesh_.nodes[static_cast<size_t>(node_b)].orientation;
  const Vec3 ya = mesh_.box.to_physical(mesh_.nodes[static_cast<size_t>(node_a)].position);
  const Vec3 yb = mesh_.box.to_physical(mesh_.nodes[static_cast<size_t>(node_b)].position +
                                        mesh_.box.shift_offset(shift));
  const Vec3 r = yb - ya;
  const double len = r.norm();
  if (len < 1e-6) throw DomainError("bond element endpoints coincide; refusing zero-length bond");
  const Vec3 e = r / len;
  const Vec3 ref = perpendicular_unit(e);

  BeamElement el;
  el.node_a = node_a;
  el.node_b = node_b;
  el.image_shift = shift;
  el.rest_length = len;
  el.section = circular_section(diameter);
  el.material = isotropic_material(modulus);
  el.fiber = -1;
  el.axis_a = qa.conjugate() * e;
  el.ref_a = qa.conjugate() * ref;
  el.axis_b = qb.conjugate() * e;
  el.ref_b = qb.conjugate() * ref;
  mesh_.elements.push_back(el);
  mark_topology_changed();
  return static_cast<int>(mesh_.elements.size()) - 1;
}

void MechSystem::remove_element(int element) {
  mesh_.elements[static_cast<size_t>(element)].active = false;
  mark_topology_changed();
}

int MechSystem::dof_count() const { return layout_.total(); }

double MechSystem::assemble_residual(Eigen::VectorXd& r, const Eigen::VectorXd& du, double dt) {
  const Mat3 F = mesh_.box.deformation();
  const Mat3 Ft = F.transpose();
  const Mat3 FtF = Ft * F;
  r.setZero(layout_.total());

  for (int i = 0; i < layout_.n_nodes; ++i) {
    r.segment<3>(layout_.node_trans(i)) =
        (node_drag_trans_[static_cast<size_t>(i)] / dt) * (FtF * du.segment<3>(layout_.node_trans(i)));
    r.segment<3>(layout_.node_rot(i)) =
        (node_drag_rot_[static_cast<size_t>(i)] / dt) * du.segment<3>(layout_.node_rot(i));
  }
  for (int j = 0; j < layout_.n_points; ++j)
    r.segment<3>(layout_.point_trans(j)) =
        (points_[static_cast<size_t>(j)].drag / dt) * (FtF * du.segment<3>(layout_.point_trans(j)));

  force_cache_.assign(mesh_.elements.size(), ElementForces{});
  for (size_t ei = 0; ei < mesh_.elements.size(); ++ei) {
    const BeamElement& el = mesh_.elements[ei];
    if (!el.active) continue;
    const ElementForces ef = mesh_.eval(static_cast<int>(ei));
    force_cache_[ei] = ef;
    r.segment<3>(layout_.node_trans(el.node_a)) -= Ft * ef.force_a;
    r.segment<3>(layout_.node_rot(el.node_a)) -= ef.moment_a;
    r.segment<3>(layout_.node_trans(el.node_b)) -= Ft * ef.force_b;
    r.segment<3>(layout_.node_rot(el.node_b)) -= ef.moment_b;
  }

  for (size_t si = 0; si < springs_.size(); ++si) {
    const PointSpring& s = springs_[si];
    const MaterialPoint& mp = spring_anchor_cache_[si];
    const BeamElement& host = mesh_.elements[static_cast<size_t>(mp.element)];
    const Vec3 a_und = mesh_.point_undeformed(mp) + mesh_.box.shift_offset(s.image_shift);
    const Vec3 v = F * (a_und - points_[static_cast<size_t>(s.point)].position);
    const double d = v.norm();
    if (d < 1e-6) continue;
    const Vec3 dir = v / d;
    const double tension = s.stiffness * (d - s.rest_length);
    const Vec3 pull = Ft * (tension * dir);
    r.segment<3>(layout_.point_trans(s.point)) -= pull;
    r.segment<3>(layout_.node_trans(host.node_a)) += (1.0 - mp.xi) * pull;
    r.segment<3>(layout_.node_trans(host.node_b)) += mp.xi * pull;
  }
  forces_dirty_ = false;
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

void MechSystem::scatter_block(std::vector<Eigen::Triplet<double>>& trip, int row0, int col0,
                               const Mat3& block) const {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) trip.emplace_back(row0 + i, col0 + j, block(i, j));
}

void MechSystem::assemble_jacobian(Eigen::SparseMatrix<double>& j, double dt) {
  const Mat3 F = mesh_.box.deformation();
  const Mat3 Ft = F.transpose();
  const Mat3 FtF = Ft * F;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh_.elements.size() * 144 + springs_.size() * 81 + static_cast<size_t>(layout_.total()) * 3);

  for (int i = 0; i < layout_.n_nodes; ++i) {
    scatter_block(trip, layout_.node_trans(i), layout_.node_trans(i),
                  (node_drag_trans_[static_cast<size_t>(i)] / dt) * FtF);
    scatter_block(trip, layout_.node_rot(i), layout_.node_rot(i),
                  (node_drag_rot_[static_cast<size_t>(i)] / dt) * Mat3::Identity());
  }
  for (int p = 0; p < layout_.n_points; ++p)
    scatter_block(trip, layout_.point_trans(p), layout_.point_trans(p),
                  (points_[static_cast<size_t>(p)].drag / dt) * FtF);

  const double h = 1e-6;
  using Vec12 = Eigen::Matrix<double, 12, 1>;
  using Mat12 = Eigen::Matrix<double, 12, 12>;
  for (size_t ei = 0; ei < mesh_.elements.size(); ++ei) {
    const BeamElement& el = mesh_.elements[ei];
    if (!el.active) continue;
    const Vec3 ya0 = mesh_.physical_a(el);
    const Vec3 yb0 = mesh_.physical_b(el);
    const Quat qa0 = mesh_.nodes[static_cast<size_t>(el.node_a)].orientation;
    const Quat qb0 = mesh_.nodes[static_cast<size_t>(el.node_b)].orientation;

    const auto grad12 = [&](const Vec3& ya, const Quat& qa, const Vec3& yb, const Quat& qb) {
      const ElementForces ef = element_forces(el, ya, yb, qa, qb);
      Vec12 g;
      g.segment<3>(0) = -ef.force_a;
      g.segment<3>(3) = -ef.moment_a;
      g.segment<3>(6) = -ef.force_b;
      g.segment<3>(9) = -ef.moment_b;
      return g;
    };

    Mat12 k_phys;
    for (int c = 0; c < 12; ++c) {
      Vec3 ya = ya0, yb = yb0;
      Quat qa = qa0, qb = qb0;
      Vec3 axis = Vec3::Zero();
      const int comp = c % 3;
      Vec12 plus, minus;
      switch (c / 3) {
        case 0:
          ya[comp] += h;
          plus = grad12(ya, qa, yb, qb);
          ya[comp] -= 2 * h;
          minus = grad12(ya, qa, yb, qb);
          break;
        case 1:
          axis[comp] = h;
          qa = quat_from_rotvec(axis) * qa0;
          plus = grad12(ya, qa, yb, qb);
          qa = quat_from_rotvec(-axis) * qa0;
          minus = grad12(ya, qa, yb, qb);
          break;
        case 2:
          yb[comp] += h;
          plus = grad12(ya, qa, yb, qb);
          yb[comp] -= 2 * h;
          minus = grad12(ya, qa, yb, qb);
          break;
        default:
          axis[comp] = h;
          qb = quat_from_rotvec(axis) * qb0;
          plus = grad12(ya, qa, yb, qb);
          qb = quat_from_rotvec(-axis) * qb0;
          minus = grad12(ya, qa, yb, qb);
          break;
      }
      k_phys.col(c) = (plus - minus) / (2.0 * h);
    }
    k_phys = 0.5 * (k_phys + k_phys.transpose()).eval();

    const int dofs[4] = {layout_.node_trans(el.node_a), layout_.node_rot(el.node_a),
                         layout_.node_trans(el.node_b), layout_.node_rot(el.node_b)};
    const bool is_trans[4] = {true, false, true, false};
    for (int br = 0; br < 4; ++br)
      for (int bc = 0; bc < 4; ++bc) {
        Mat3 block = k_phys.block<3, 3>(3 * br, 3 * bc);
        if (is_trans[br]) block = Ft * block;
        if (is_trans[bc]) block = block * F;
        scatter_block(trip, dofs[br], dofs[bc], block);
      }
  }

  for (size_t si = 0; si < springs_.size(); ++si) {
    const PointSpring& s = springs_[si];
    const MaterialPoint& mp = spring_anchor_cache_[si];
    const BeamElement& host = mesh_.elements[static_cast<size_t>(mp.element)];
    const Vec3 a_und = mesh_.point_undeformed(mp) + mesh_.box.shift_offset(s.image_shift);
    const Vec3 v = F * (a_und - points_[static_cast<size_t>(s.point)].position);
    const double d = v.norm();
    if (d < 1e-6) continue;
    const Vec3 dir = v / d;
    const double tension = s.stiffness * (d - s.rest_length);
    const Mat3 h_phys = s.stiffness * (dir * dir.transpose()) +
                        (tension / d) * (Mat3::Identity() - dir * dir.transpose());
    const Mat3 h_und = Ft * h_phys * F;
    const int idx[3] = {layout_.point_trans(s.point), layout_.node_trans(host.node_a),
                        layout_.node_trans(host.node_b)};
    const double w[3] = {-1.0, 1.0 - mp.xi, mp.xi};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) scatter_block(trip, idx[a], idx[b], (w[a] * w[b]) * h_und);
  }

  j.resize(layout_.total(), layout_.total());
  j.setFromTriplets(trip.begin(), trip.end());
}

void MechSystem::apply_increment(const Eigen::VectorXd& delta, double scale) {
  for (int i = 0; i < layout_.n_nodes; ++i) {
    mesh_.nodes[static_cast<size_t>(i)].position += scale * delta.segment<3>(layout_.node_trans(i));
    const Vec3 w = scale * delta.segment<3>(layout_.node_rot(i));
    MeshNode& node = mesh_.nodes[static_cast<size_t>(i)];
    node.orientation = (quat_from_rotvec(w) * node.orientation).normalized();
  }
  for (int p = 0; p < layout_.n_points; ++p)
    points_[static_cast<size_t>(p)].position += scale * delta.segment<3>(layout_.point_trans(p));
  du_ += scale * delta;
}

bool MechSystem::solve_newton(double dt, StepReport& report) {
  const double tol_force = cfg_.tol_force_rel * char_force_;
  du_.setZero(layout_.total());
  Eigen::VectorXd r;
  double rnorm = assemble_residual(r, du_, dt);
  report.residual_history.clear();
  report.residual_history.push_back(rnorm);

  Eigen::SparseMatrix<double> J;
  for (int iter = 0; iter < cfg_.max_newton; ++iter) {
    if (rnorm < tol_force) {
      report.residual = rnorm;
      return true;
    }
    ++report.newton_iterations;
    assemble_jacobian(J, dt);
    if (!pattern_ready_) {
      ldlt_.analyzePattern(J);
      pattern_ready_ = true;
    }
    ldlt_.factorize(J);
    if (ldlt_.info() != Eigen::Success) return false;
    const Eigen::VectorXd delta = ldlt_.solve(-r);
    if (ldlt_.info() != Eigen::Success) return false;

    const auto saved_nodes = mesh_.nodes;
    const auto saved_points = points_;
    const Eigen::VectorXd saved_du = du_;
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls <= cfg_.max_line_search; ++ls) {
      apply_increment(delta, lambda);
      double r2;
      try {
        r2 = assemble_residual(r, du_, dt);
      } catch (const SolverError&) {
        r2 = std::numeric_limits<double>::infinity();
      }
      if (r2 < rnorm || r2 < tol_force) {
        rnorm = r2;
        accepted = true;
        report.residual_history.push_back(rnorm);
        break;
      }
      mesh_.nodes = saved_nodes;
      points_ = saved_points;
      du_ = saved_du;
      forces_dirty_ = true;  // cache reflects the rejected trial state
      lambda *= 0.5;
    }
    if (!accepted) return false;
    if (lambda * delta.cwiseAbs().maxCoeff() < cfg_.tol_displacement) {
      report.residual = rnorm;
      return true;
    }
  }
  return false;
}

void MechSystem::advance_recursive(double dt, int depth, StepReport& report,
                                   const LoadProgram* load) {
  const auto saved_nodes = mesh_.nodes;
  const auto saved_points = points_;
  const auto saved_box = mesh_.box;

  // Apply the scheduled strain for the sub-step's end time before solving so
  // the implicit update equilibrates against the new box shape.
  if (load != nullptr && !load->schedule.empty()) set_strain(load->strain_at(time_ + dt));

  StepReport sub;
  if (solve_newton(dt, sub)) {
    time_ += dt;
    report.newton_iterations += sub.newton_iterations;
    report.residual = sub.residual;
    report.residual_history = sub.residual_history;
    return;
  }

  mesh_.nodes = saved_nodes;
  points_ = saved_points;
  mesh_.box = saved_box;
  forces_dirty_ = true;
  if (depth >= cfg_.max_bisections) {
    Eigen::VectorXd r;
    du_.setZero(layout_.total());
    const double rnorm = assemble_residual(r, du_, dt);
    int worst = 0;
    r.cwiseAbs().maxCoeff(&worst);
    std::ostringstream msg;
    msg << "mechanics step failed after " << cfg_.max_bisections
        << " time-step bisections: t=" << time_ << " s, dt=" << dt
        << " s, static residual=" << rnorm << " pN (tolerance "
        << cfg_.tol_force_rel * char_force_ << " pN), worst dof " << worst << " of "
        << layout_.total() << " (" << layout_.n_nodes << " nodes, " << layout_.n_points
        << " points, " << mesh_.elements.size() << " elements)";
    throw SolverError(msg.str());
  }
  report.bisections = std::max(report.bisections, depth + 1);
  advance_recursive(0.5 * dt, depth + 1, report, load);
  advance_recursive(0.5 * dt, depth + 1, report, load);
}

StepReport MechSystem::step(double dt, const LoadProgram& load) {
  if (!(dt > 0.0)) throw ConfigError("mechanics step: dt must be positive");
  load.validate();
  if (topology_dirty_) refresh_topology();

  StepReport report;
  advance_recursive(dt, 0, report, &load);
  return report;
}

const std::vector<ElementForces>& MechSystem::element_forces_now() {
  if (topology_dirty_) refresh_topology();
  if (forces_dirty_) {
    Eigen::VectorXd r;
    du_.setZero(layout_.total());
    assemble_residual(r, du_, 1.0);
  }
  return force_cache_;
}

double MechSystem::element_tension(int element) {
  const ElementForces& ef = element_forces_now()[static_cast<size_t>(element)];
  const double len = ef.chord.norm();
  if (len <= 0.0) return 0.0;
  return ef.force_a.dot(ef.chord / len);
}

double MechSystem::static_residual() {
  if (topology_dirty_) refresh_topology();
  Eigen::VectorXd r;
  du_.setZero(layout_.total());
  return assemble_residual(r, du_, 1.0);
}

}  // namespace cellmat
