#pragma once

// Contractile cell agents coupled to the fiber network. A cell is a point
// particle (overdamped) carrying up to 65 focal adhesions; each adhesion
// anchors at a fiber material point and bundles up to 50 integrin clusters,
// each holding up to 20 bonded integrins and one contracting stress fiber
// modeled as a linear spring from the cell center to the anchor. Integrins
// follow catch-slip kinetics: the mean bond lifetime peaks near 30 pN per
// integrin and collapses at higher loads. Mechanically, the live clusters
// of an adhesion aggregate exactly into one spring of summed stiffness and
// mean rest length. All stochastic decisions use counter-based streams
// keyed by stable entity ids, so outcomes are independent of update order.

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "core/rng.hpp"
#include "mech/solver.hpp"
#include "search/grid.hpp"

namespace cellmat {

struct CatchSlipParams {
  double a1 = 2.2;   // s
  double b1 = 29.9;  // pN
  double c1 = 8.4;   // pN
  double a2 = 1.2;   // s
  double b2 = 16.2;  // pN
  double c2 = 37.8;  // pN
};

// Mean integrin bond lifetime in seconds at the given tensile force; the
// per-integrin unbinding rate is its reciprocal.
double catch_slip_lifetime(double force_pn, const CatchSlipParams& p = {});

// Load carried by one bonded integrin when the cluster's stress fiber pulls
// with f_sf. Throws DomainError for a dissolved cluster (bonded < 1).
double integrin_force(double f_sf, int bonded);

// One stochastic update of a cluster's bonded count: each currently bonded
// integrin survives with 1 - p_unbind, each free slot binds with p_rebind.
// Decisions draw from (stream, id, step, slot), so the result is a pure
// function of its arguments.
int cluster_kinetics(int bonded, int capacity, double p_unbind, double p_rebind,
                     const CounterRng& rng, std::uint64_t id, std::uint64_t step,
                     std::uint64_t unbind_stream = CounterRng::kIntegrinUnbind,
                     std::uint64_t bind_stream = CounterRng::kIntegrinBind);

struct CellConfig {
  double radius_um = 12.0;          // cell radius R
  double shell_um = 3.0;            // adhesions form within R +- shell
  int max_adhesions = 65;
  int clusters_per_adhesion = 50;
  int integrins_per_cluster = 20;
  double kcf_on = 0.1;              // 1/s, integrin binding rate
  double contraction_um_per_s = 0.1;
  double sf_stiffness = 200.0;      // pN/um per stress fiber
  double rest_floor_fraction = 0.1; // stress fibers stop contracting at this * R
  double if_spot_spacing_um = 0.05; // integrin binding site spacing on fibers
  double cell_drag = 100.0;         // pN s/um
  CatchSlipParams catch_slip{};
  double grid_edge_um = 5.0;        // element search grid for adhesion formation
  int grid_rebuild_every = 10;

  void validate() const;  // throws ConfigError
};

struct IntegrinCluster {
  bool alive = false;
  int bonded = 0;
  double rest_length = 0.0;  // um, this cluster's stress fiber
};

struct FocalAdhesion {
  int fiber = -1;
  double arc = 0.0;                // um, rest arc length along the fiber
  IVec3 image_shift = IVec3::Zero();  // periodic copy the cell reaches
  std::uint64_t spot_id = 0;       // global integrin site claimed by this FA
  std::uint32_t uid = 0;           // stable id for random streams
  int spring = -1;                 // aggregate spring index in the mech system
  std::vector<IntegrinCluster> clusters;

  int live_clusters() const {
    int n = 0;
    for (const IntegrinCluster& c : clusters)
      if (c.alive) ++n;
    return n;
  }
};

struct CellAgent {
  int point = -1;  // free point in the mech system
  std::vector<FocalAdhesion> adhesions;
};

struct CellSweepStats {
  int adhesions_formed = 0;
  int adhesions_dissolved = 0;
  int clusters_dissolved = 0;
  int clusters_reformed = 0;
  double max_rate_dt = 0.0;
  bool rate_warning = false;  // max_rate_dt exceeded 0.1
};

struct CellCensus {
  int adhesions = 0;
  int live_clusters = 0;
  int bonded_integrins = 0;
  double mean_integrin_force = 0.0;  // pN, signed (negative = slack fiber)
  Vec3 net_force = Vec3::Zero();     // pN on the cell center, physical frame
};

class CellManager {
 public:
  // The manager owns the mech system's spring set: it rebuilds the springs
  // vector whenever adhesions appear or dissolve.
  CellManager(MechSystem& sys, CellConfig cfg, std::uint64_t seed);

  // Registers a cell centered at the given undeformed coordinates.
  int add_cell(const Vec3& center);

  // One stochastic update: adhesion formation over free integrin sites in
  // the shell (entry-state occupancy), then integrin binding/unbinding and
  // cluster reformation on the adhesions that existed at entry. Adhesions
  // left without live clusters dissolve and free their site.
  CellSweepStats sweep(double dt, std::uint64_t step);

  // Shortens every live stress fiber by rate * dt, floored at the
  // configured fraction of the cell radius.
  void contract_all(double dt);

  // Stops all integrin binding (formation, rebinding, reformation);
  // existing bonds keep decaying through normal kinetics.
  void detach_all() { cfg_.kcf_on = 0.0; }

  const std::vector<CellAgent>& cells() const { return cells_; }
  CellConfig& config() { return cfg_; }

  // Physical center-to-anchor distance of an adhesion.
  double anchor_distance(const CellAgent& cell, const FocalAdhesion& fa) const;

  CellCensus census(int cell) const;

  // Largest kinetic rate currently in play: the binding rate and every live
  // cluster's per-integrin unbinding rate at the present stress-fiber loads.
  // Drivers use it to pick kinetics substeps small enough that rate * dt
  // stays within bounds.
  double max_rate() const;

 private:
  void refresh_element_table();
  void rebuild_springs();
  void sync_spring_params();
  void formation(int ci, double dt, std::uint64_t step, CellSweepStats& st);
  void clutch(int ci, size_t n_entry, double dt, std::uint64_t step, CellSweepStats& st);

  MechSystem& sys_;
  CellConfig cfg_;
  CounterRng rng_;
  std::vector<CellAgent> cells_;
  std::unordered_set<std::uint64_t> occupied_spots_;
  std::vector<std::uint64_t> fiber_spot_offset_;  // prefix counts per fiber

  ContainerGrid grid_;
  struct ElementArc {
    int fiber = -1;
    double lo = 0.0, hi = 0.0;
  };
  std::vector<ElementArc> element_arcs_;
  bool grid_ready_ = false;
  std::uint64_t last_rebuild_step_ = 0;
  size_t grid_elements_ = 0;

  std::uint32_t next_fa_uid_ = 0;
  bool structure_dirty_ = false;
  bool warned_once_ = false;
};

}  // namespace cellmat
