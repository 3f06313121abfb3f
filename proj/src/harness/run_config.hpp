#pragma once

// Run configuration for the simulation drivers, ingested from JSON. Every
// module parameter is reachable from the file; omitted keys fall back to
// the module defaults, unknown keys are rejected so typos cannot silently
// revert a parameter to its default.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cells/cells.hpp"
#include "gen/netgen.hpp"
#include "harness/series.hpp"
#include "mech/solver.hpp"
#include "mech/tensile.hpp"
#include "xlink/crosslinks.hpp"

namespace cellmat::harness {

// Inline network generation request; zero/negative sentinel values mean
// "use the generation library default".
struct GenerateSpec {
  Vec3 box_um = Vec3(60.0, 60.0, 60.0);
  double concentration_mg_ml = 2.5;
  double density_tolerance = 0.02;
  double fiber_diameter_um = 0.18;
  double fiber_modulus_pn_um2 = 1.1e6;
  std::uint64_t seed = 0;               // 0 = derive from the run seed
  long anneal_max_iters = 0;            // 0 = library default
  long anneal_iters_per_stage = 0;      // 0 = library default
  double anneal_energy_threshold = -1;  // < 0 = library default
};

// Exactly one of file / generate must be set.
struct NetworkSource {
  std::string file;
  std::optional<GenerateSpec> generate;
};

struct RmtVariantSpec {
  std::string name;
  double kff_off0 = 0.0;        // bond base off-rate for the whole run, 1/s
  bool allow_new_bonds = true;  // keep forming bonds after cells detach
};

struct RunConfig {
  std::uint64_t seed = 1;
  double dt_s = 0.01;
  double duration_s = 600.0;
  int record_every = 1;       // record every k-th step (the last is always kept)
  int substep_limit = 1000;   // cap on kinetics substeps within one step
  int elements_per_fiber = 1;
  std::string output_dir;     // used by the command-line front end

  double snapshot_interval_s = 0.0;  // 0 = no periodic snapshots
  bool snapshot_state = true;        // full state files at each snapshot
  bool snapshot_network = false;     // straight-segment network files too

  NetworkSource network;
  SolverConfig solver;
  CrosslinkConfig crosslinks;

  int cell_count = 0;
  std::optional<double> cell_density_per_ml;  // cross-checked against count
  CellConfig cells;

  TensileConfig tensile;
  PlateauConfig plateau;

  double rmt_post_duration_s = 600.0;
  std::vector<RmtVariantSpec> rmt_variants;  // empty = default_rmt_variants

  // Checks everything that does not need the network's box volume; throws
  // ConfigError. The count-vs-density consistency check lives in
  // validate_cell_density because it needs the volume.
  void validate() const;
};

// Bond off-rate sweep used by the residual-tension protocol when the config
// lists no variants: covalent, three transient rates, and a variant that
// keeps the baseline chemistry but forbids new bonds once cells detach.
std::vector<RmtVariantSpec> default_rmt_variants(double baseline_off0);

// |count - density * volume| must stay within max(1, 15% of the expected
// count); desk-scale configs simply omit the density. Throws ConfigError.
void validate_cell_density(const RunConfig& cfg, double box_volume_um3);

RunConfig parse_run_config_text(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace cellmat::harness
