#include "harness/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "json.hpp"

namespace cellmat::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path.empty() ? "config: " + what : "config " + path + ": " + what);
}

// Typed key access over one JSON object that tracks which keys were read;
// finish() rejects whatever is left so misspelled keys cannot silently fall
// back to defaults.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(join(key), e.what());
    }
  }

  // Nested object (or array) by key; nullptr when absent.
  const json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(path_, "unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_generate(const json& j, GenerateSpec& g) {
  ObjectReader r(j, "network.generate");
  if (const json* jb = r.take("box_um")) {
    std::vector<double> edges;
    try {
      edges = jb->get<std::vector<double>>();
    } catch (const json::exception& e) {
      fail("network.generate.box_um", e.what());
    }
    if (edges.size() != 3) fail("network.generate.box_um", "needs exactly 3 edge lengths");
    g.box_um = Vec3(edges[0], edges[1], edges[2]);
  }
  r.get("concentration_mg_ml", g.concentration_mg_ml);
  r.get("density_tolerance", g.density_tolerance);
  r.get("fiber_diameter_um", g.fiber_diameter_um);
  r.get("fiber_modulus_pn_um2", g.fiber_modulus_pn_um2);
  r.get("seed", g.seed);
  r.get("anneal_max_iters", g.anneal_max_iters);
  r.get("anneal_iters_per_stage", g.anneal_iters_per_stage);
  r.get("anneal_energy_threshold", g.anneal_energy_threshold);
  r.finish();
}

void read_network(const json& j, NetworkSource& n) {
  ObjectReader r(j, "network");
  r.get("file", n.file);
  if (const json* jg = r.take("generate")) {
    n.generate.emplace();
    read_generate(*jg, *n.generate);
  }
  r.finish();
}

void read_solver(const json& j, SolverConfig& s) {
  ObjectReader r(j, "solver");
  r.get("drag_per_length", s.drag_per_length);
  r.get("point_drag", s.point_drag);
  r.get("rot_drag_floor", s.rot_drag_floor);
  r.get("tol_displacement", s.tol_displacement);
  r.get("tol_force_rel", s.tol_force_rel);
  r.get("max_newton", s.max_newton);
  r.get("max_bisections", s.max_bisections);
  r.get("max_line_search", s.max_line_search);
  r.finish();
}

void read_crosslinks(const json& j, CrosslinkConfig& c) {
  ObjectReader r(j, "crosslinks");
  r.get("kff_on_per_s", c.kff_on);
  r.get("kff_off0_per_s", c.kff_off0);
  r.get("bell_dx_nm", c.bell_dx_nm);
  r.get("spot_spacing_um", c.ff_spot_spacing_um);
  r.get("capture_min_um", c.capture_min_um);
  r.get("capture_max_um", c.capture_max_um);
  r.get("linker_diameter_um", c.linker_diameter_um);
  r.get("linker_modulus_pn_um2", c.linker_modulus);
  r.get("grid_edge_um", c.grid_edge_um);
  r.get("grid_rebuild_every", c.grid_rebuild_every);
  r.finish();
}

void read_catch_slip(const json& j, CatchSlipParams& p) {
  ObjectReader r(j, "cells.catch_slip");
  r.get("a1_s", p.a1);
  r.get("b1_pn", p.b1);
  r.get("c1_pn", p.c1);
  r.get("a2_s", p.a2);
  r.get("b2_pn", p.b2);
  r.get("c2_pn", p.c2);
  r.finish();
}

void read_cells(const json& j, RunConfig& cfg) {
  ObjectReader r(j, "cells");
  r.get("count", cfg.cell_count);
  if (j.contains("density_per_ml")) {
    double d = 0.0;
    r.get("density_per_ml", d);
    cfg.cell_density_per_ml = d;
  }
  CellConfig& c = cfg.cells;
  r.get("radius_um", c.radius_um);
  r.get("shell_um", c.shell_um);
  r.get("max_adhesions", c.max_adhesions);
  r.get("clusters_per_adhesion", c.clusters_per_adhesion);
  r.get("integrins_per_cluster", c.integrins_per_cluster);
  r.get("kcf_on_per_s", c.kcf_on);
  r.get("contraction_um_per_s", c.contraction_um_per_s);
  r.get("sf_stiffness_pn_um", c.sf_stiffness);
  r.get("rest_floor_fraction", c.rest_floor_fraction);
  r.get("spot_spacing_um", c.if_spot_spacing_um);
  r.get("drag_pn_s_um", c.cell_drag);
  r.get("grid_edge_um", c.grid_edge_um);
  r.get("grid_rebuild_every", c.grid_rebuild_every);
  if (const json* jc = r.take("catch_slip")) read_catch_slip(*jc, c.catch_slip);
  r.finish();
}

void read_tensile(const json& j, TensileConfig& t) {
  ObjectReader r(j, "tensile");
  r.get("axis", t.axis);
  r.get("target_strain", t.target_strain);
  r.get("rate_um_per_s", t.rate_um_per_s);
  r.get("dt_s", t.dt);
  r.finish();
}

void read_plateau(const json& j, PlateauConfig& p) {
  ObjectReader r(j, "plateau");
  r.get("window_s", p.window_s);
  r.get("drift_tol_per_min", p.drift_tol_per_min);
  r.get("floor_fraction", p.floor_fraction);
  r.get("abs_floor", p.abs_floor);
  r.finish();
}

void read_rmt(const json& j, RunConfig& cfg) {
  ObjectReader r(j, "rmt");
  r.get("post_duration_s", cfg.rmt_post_duration_s);
  if (const json* jv = r.take("variants")) {
    if (!jv->is_array()) fail("rmt.variants", "must be an array");
    int index = 0;
    for (const json& item : *jv) {
      RmtVariantSpec v;
      ObjectReader rv(item, "rmt.variants[" + std::to_string(index) + "]");
      rv.get("name", v.name);
      rv.get("kff_off0_per_s", v.kff_off0);
      rv.get("allow_new_bonds", v.allow_new_bonds);
      rv.finish();
      cfg.rmt_variants.push_back(std::move(v));
      ++index;
    }
  }
  r.finish();
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  ObjectReader r(j, "");
  r.get("seed", cfg.seed);
  r.get("dt_s", cfg.dt_s);
  r.get("duration_s", cfg.duration_s);
  r.get("record_every", cfg.record_every);
  r.get("substep_limit", cfg.substep_limit);
  r.get("elements_per_fiber", cfg.elements_per_fiber);
  r.get("output_dir", cfg.output_dir);
  r.get("snapshot_interval_s", cfg.snapshot_interval_s);
  r.get("snapshot_state", cfg.snapshot_state);
  r.get("snapshot_network", cfg.snapshot_network);
  if (const json* jn = r.take("network")) read_network(*jn, cfg.network);
  if (const json* js = r.take("solver")) read_solver(*js, cfg.solver);
  if (const json* jx = r.take("crosslinks")) read_crosslinks(*jx, cfg.crosslinks);
  if (const json* jc = r.take("cells")) read_cells(*jc, cfg);
  if (const json* jt = r.take("tensile")) read_tensile(*jt, cfg.tensile);
  if (const json* jp = r.take("plateau")) read_plateau(*jp, cfg.plateau);
  if (const json* jr = r.take("rmt")) read_rmt(*jr, cfg);
  r.finish();
  cfg.validate();
  return cfg;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
  require(dt_s > 0.0, "dt_s must be positive");
  require(std::isfinite(dt_s) && std::isfinite(duration_s), "times must be finite");
  require(duration_s >= 0.0, "duration_s must be non-negative");
  require(record_every >= 1, "record_every must be at least 1");
  require(substep_limit >= 1, "substep_limit must be at least 1");
  require(elements_per_fiber >= 1, "elements_per_fiber must be at least 1");
  require(snapshot_interval_s >= 0.0, "snapshot_interval_s must be non-negative");

  const bool has_file = !network.file.empty();
  const bool has_gen = network.generate.has_value();
  require(has_file || has_gen, "network needs either a file or a generate block");
  require(!(has_file && has_gen), "network cannot have both a file and a generate block");
  if (has_gen) {
    const GenerateSpec& g = *network.generate;
    require(g.box_um.minCoeff() > 0.0, "network.generate.box_um must be positive");
    require(g.concentration_mg_ml > 0.0, "network.generate.concentration_mg_ml must be positive");
    require(g.density_tolerance > 0.0, "network.generate.density_tolerance must be positive");
    require(g.fiber_diameter_um > 0.0, "network.generate.fiber_diameter_um must be positive");
    require(g.fiber_modulus_pn_um2 > 0.0, "network.generate.fiber_modulus_pn_um2 must be positive");
    require(g.anneal_max_iters >= 0, "network.generate.anneal_max_iters must be non-negative");
    require(g.anneal_iters_per_stage >= 0,
            "network.generate.anneal_iters_per_stage must be non-negative");
  }

  require(solver.drag_per_length > 0.0, "solver.drag_per_length must be positive");
  require(solver.point_drag > 0.0, "solver.point_drag must be positive");
  require(solver.rot_drag_floor > 0.0, "solver.rot_drag_floor must be positive");
  require(solver.tol_displacement > 0.0, "solver.tol_displacement must be positive");
  require(solver.tol_force_rel > 0.0, "solver.tol_force_rel must be positive");
  require(solver.max_newton >= 1, "solver.max_newton must be at least 1");
  require(solver.max_bisections >= 0, "solver.max_bisections must be non-negative");
  require(solver.max_line_search >= 0, "solver.max_line_search must be non-negative");

  crosslinks.validate();

  require(cell_count >= 0, "cells.count must be non-negative");
  if (cell_density_per_ml) require(*cell_density_per_ml > 0.0, "cells.density_per_ml must be positive");
  cells.validate();

  require(tensile.axis >= 0 && tensile.axis <= 2, "tensile.axis must be 0, 1, or 2");
  require(tensile.target_strain > 0.0 && tensile.target_strain <= 0.5,
          "tensile.target_strain must lie in (0, 0.5]");
  require(tensile.rate_um_per_s > 0.0, "tensile.rate_um_per_s must be positive");
  require(tensile.dt > 0.0, "tensile.dt_s must be positive");

  plateau.validate();

  require(rmt_post_duration_s >= 0.0, "rmt.post_duration_s must be non-negative");
  std::set<std::string> names;
  for (const RmtVariantSpec& v : rmt_variants) {
    require(!v.name.empty(), "rmt.variants entries need a name");
    require(names.insert(v.name).second, "rmt.variants names must be unique");
    require(v.kff_off0 >= 0.0, "rmt.variants kff_off0_per_s must be non-negative");
  }
}

std::vector<RmtVariantSpec> default_rmt_variants(double baseline_off0) {
  return {
      {"covalent", 0.0, true},
      {"off-1e-4", 1e-4, true},
      {"off-3e-4", 3e-4, true},
      {"off-1e-3", 1e-3, true},
      {"no-new-bonds", baseline_off0, false},
  };
}

void validate_cell_density(const RunConfig& cfg, double box_volume_um3) {
  if (!cfg.cell_density_per_ml) return;
  const double expected = *cfg.cell_density_per_ml * box_volume_um3 * 1e-12;  // um^3 per ml
  const double slack = std::max(1.0, 0.15 * expected);
  if (std::abs(cfg.cell_count - expected) > slack) {
    std::ostringstream msg;
    msg << "config: cells.count = " << cfg.cell_count << " is inconsistent with density "
        << *cfg.cell_density_per_ml << "/ml over " << box_volume_um3 << " um^3 (expected about "
        << expected << ")";
    throw ConfigError(msg.str());
  }
}

RunConfig parse_run_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open: " + path);
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_run_config_text(buffer.str());
}

}  // namespace cellmat::harness
