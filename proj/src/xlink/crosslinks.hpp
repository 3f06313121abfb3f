#pragma once

// Stochastic fiber-fiber bonds. Fibers carry binding spots at a fixed arc
// spacing; a pair of free spots on distinct fibers whose separation falls
// inside a capture interval can form a bond, realized as a stress-free beam
// element between mesh nodes created at the two spots. Transient bonds break
// at a rate boosted exponentially by the axial force they carry; bonds with
// a zero base off-rate are permanent. All stochastic decisions draw from
// counter-based streams keyed by (pair or link id, step), so outcomes are
// independent of sweep order and thread count.

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "mech/solver.hpp"
#include "search/grid.hpp"

namespace cellmat {

// Thermal energy at 37 C, piconewton-nanometers.
inline constexpr double kThermalEnergyPnNm = 4.28;

// Probability that a waiting event with the given rate fires within dt.
double p_on(double k_on, double dt);

// Slip-bond off-rate: base rate boosted by exp(F dx / kT). A zero base rate
// stays zero for any force (covalent bond).
double bell_off_rate(double k_off0, double force_pn, double dx_nm,
                     double thermal_energy = kThermalEnergyPnNm);

struct CrosslinkConfig {
  double kff_on = 1e-4;             // 1/s, association rate per eligible spot pair
  double kff_off0 = 1e-4;           // 1/s, base dissociation rate; 0 = permanent
  double bell_dx_nm = 0.5;          // nm, force sensitivity of dissociation
  double ff_spot_spacing_um = 0.5;  // arc distance between spots on a fiber
  double capture_min_um = 0.0;      // smallest bondable spot separation
  double capture_max_um = 0.2;      // largest bondable spot separation
  double linker_diameter_um = 0.18;
  double linker_modulus = 1.1e6;    // pN/um^2
  double grid_edge_um = 1.0;        // container edge for the spot search grid
  int grid_rebuild_every = 10;      // sweeps between grid rebuilds

  void validate() const;  // throws ConfigError
};

struct BindingSpot {
  int fiber = -1;
  double arc = 0.0;  // um from the fiber's a-end, in rest arc length
  int link = -1;     // live crosslink occupying this spot, or -1
};

// All binding spots of a mesh, fiber by fiber in increasing arc order.
class BindingSpotSet {
 public:
  BindingSpotSet() = default;
  BindingSpotSet(const BeamMesh& mesh, double spacing);

  const std::vector<BindingSpot>& spots() const { return spots_; }
  std::vector<BindingSpot>& spots() { return spots_; }
  int bound_count() const;

 private:
  std::vector<BindingSpot> spots_;
};

struct Crosslink {
  int spot_a = -1;
  int spot_b = -1;
  int element = -1;        // bond element id in the mech system
  double k_off0 = 0.0;     // 1/s, frozen at creation
  double bell_dx_nm = 0.5;
  double created_at = 0.0;  // s
  bool alive = true;
};

struct SweepStats {
  int created = 0;
  int destroyed = 0;
  int live = 0;             // after the sweep
  double max_rate_dt = 0.0;  // largest rate * dt seen this sweep
  bool rate_warning = false;  // max_rate_dt exceeded 0.1
};

class CrosslinkManager {
 public:
  CrosslinkManager(MechSystem& sys, CrosslinkConfig cfg, std::uint64_t seed);

  // One stochastic update: bond formation over eligible free spot pairs,
  // then dissolution of bonds that existed when the sweep started. Both
  // phases see the occupancy and forces of the entry state.
  SweepStats sweep(double dt, std::uint64_t step);

  const BindingSpotSet& spots() const { return spots_; }
  const std::vector<Crosslink>& links() const { return links_; }
  int live_count() const { return live_; }

  // Mean axial force magnitude over live bonds (0 when there are none).
  double mean_force();

  // Largest kinetic rate currently in play: the association rate and every
  // live transient bond's force-boosted dissociation rate at the present
  // geometry. Drivers use it to pick kinetics substeps small enough that
  // rate * dt stays within bounds.
  double max_rate();

  // Mutable so protocols can e.g. forbid new bonds by zeroing kff_on.
  CrosslinkConfig& config() { return cfg_; }

 private:
  Vec3 spot_position(int i) const;
  void rebuild_grid();

  MechSystem& sys_;
  CrosslinkConfig cfg_;
  CounterRng rng_;
  BindingSpotSet spots_;
  std::vector<Crosslink> links_;
  ContainerGrid grid_;
  std::uint64_t last_rebuild_step_ = 0;
  bool grid_ready_ = false;
  bool warned_once_ = false;
  int live_ = 0;
};

}  // namespace cellmat
