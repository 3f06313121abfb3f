#pragma once

// Overdamped implicit time stepping for the beam mesh plus point particles
// (cell centers) tethered to fiber material points by springs. Dynamics:
// drag times velocity balances elastic force, integrated by backward Euler
// with Newton iterations, line search, and time-step bisection fallback.
// Node translations are solved in undeformed box coordinates: the affine
// part of a box deformation moves material without drag penalty, so drag
// acts on motion relative to the deforming background.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "mech/mesh.hpp"

namespace cellmat {

struct LoadStep {
  double time = 0.0;  // s
  Mat3 strain = Mat3::Zero();
};

// Piecewise-linear strain schedule; empty means unloaded.
class LoadProgram {
 public:
  std::vector<LoadStep> schedule;
  void validate() const;
  Mat3 strain_at(double t) const;
};

// Deformation matrix for a small-strain tensor: ones on the diagonal plus
// strain entries. Entries must be within +-0.5 and the result invertible.
Mat3 strain_to_deformation(const Mat3& strain);

// Applies an additional strain on top of whatever deformation the box
// already carries.
PeriodicBox apply_strain(const PeriodicBox& box, const Mat3& strain);

struct SolverConfig {
  double drag_per_length = 1.0;   // pN s / um^2 (per um of fiber)
  double point_drag = 100.0;      // pN s / um, default for free points
  double rot_drag_floor = 1e-4;   // pN s um
  double tol_displacement = 1e-8; // um
  double tol_force_rel = 1e-8;    // fraction of the characteristic force E*A
  int max_newton = 40;
  int max_bisections = 8;
  int max_line_search = 8;
};

// A point particle with only translational freedom (drag given per point).
struct FreePoint {
  Vec3 position = Vec3::Zero();  // undeformed box coordinates
  double drag = 100.0;           // pN s / um
};

// Linear spring from a free point to a material point on a fiber. The
// anchor is addressed by (fiber, arc) so it survives element splits; the
// image shift fixes which periodic copy of the anchor the spring reaches.
struct PointSpring {
  int point = -1;
  int fiber = -1;
  double arc = 0.0;
  IVec3 image_shift = IVec3::Zero();
  double stiffness = 200.0;   // pN/um
  double rest_length = 0.0;   // um
};

struct StepReport {
  int newton_iterations = 0;
  int bisections = 0;
  double residual = 0.0;               // scaled, at convergence
  std::vector<double> residual_history;  // accepted Newton iterates, last leaf
};

class MechSystem {
 public:
  explicit MechSystem(BeamMesh mesh, SolverConfig cfg = {});

  BeamMesh& mesh() { return mesh_; }
  const BeamMesh& mesh() const { return mesh_; }
  const PeriodicBox& box() const { return mesh_.box; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  const SolverConfig& config() const { return cfg_; }
  double characteristic_force() const { return char_force_; }

  std::vector<FreePoint>& points() { return points_; }
  const std::vector<FreePoint>& points() const { return points_; }
  std::vector<PointSpring>& springs() { return springs_; }
  const std::vector<PointSpring>& springs() const { return springs_; }

  // Must be called after adding/removing points, springs, or elements, or
  // editing connectivity; re-derives drags, adjacency, and solve pattern.
  void mark_topology_changed() { topology_dirty_ = true; }

  // Replaces the box deformation with identity plus the given strain.
  void set_strain(const Mat3& strain);

  // Creates a stress-free bond element between two existing mesh nodes at
  // the current geometry. Returns the element id.
  int add_bond_element(int node_a, int node_b, const IVec3& shift, double diameter,
                       double modulus);
  void remove_element(int element);

  // Advances by dt under the load program (time-shifted so the program is
  // sampled at absolute simulation time). Throws SolverError after the
  // bisection budget is exhausted.
  StepReport step(double dt, const LoadProgram& load = LoadProgram{});

  // Element forces at the current configuration (cached).
  const std::vector<ElementForces>& element_forces_now();
  // Axial tension (positive = pulling its nodes together) of one element.
  double element_tension(int element);
  // Spring tension k (length - rest), positive in tension.
  double spring_tension(const PointSpring& s) const;
  Vec3 anchor_undeformed(const PointSpring& s) const;

  // Scaled residual norm of the static force balance at the current state.
  double static_residual();

  int dof_count() const;

 private:
  struct DofLayout {
    int n_nodes = 0, n_points = 0;
    int node_trans(int i) const { return 6 * i; }
    int node_rot(int i) const { return 6 * i + 3; }
    int point_trans(int j) const { return 6 * n_nodes + 3 * j; }
    int total() const { return 6 * n_nodes + 3 * n_points; }
  };

  void refresh_topology();
  double assemble_residual(Eigen::VectorXd& r, const Eigen::VectorXd& du, double dt);
  void assemble_jacobian(Eigen::SparseMatrix<double>& j, double dt);
  bool solve_newton(double dt, StepReport& report);
  void advance_recursive(double dt, int depth, StepReport& report, const LoadProgram* load = nullptr);
  void apply_increment(const Eigen::VectorXd& delta, double scale);
  void scatter_block(std::vector<Eigen::Triplet<double>>& trip, int row0, int col0,
                     const Mat3& block) const;

  BeamMesh mesh_;
  SolverConfig cfg_;
  std::vector<FreePoint> points_;
  std::vector<PointSpring> springs_;
  double time_ = 0.0;
  double char_force_ = 0.0;

  bool topology_dirty_ = true;
  std::vector<double> node_drag_trans_, node_drag_rot_;
  DofLayout layout_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool pattern_ready_ = false;

  std::vector<MaterialPoint> spring_anchor_cache_;
  std::vector<ElementForces> force_cache_;
  bool forces_dirty_ = true;

  // Transient per-step state.
  Eigen::VectorXd du_;  // accumulated increment since step start
};

}  // namespace cellmat
