#include "cells/cells.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "core/errors.hpp"
#include "xlink/crosslinks.hpp"  // p_on

namespace cellmat {

double catch_slip_lifetime(double force_pn, const CatchSlipParams& p) {
  const double u = (force_pn - p.b1) / p.c1;
  const double v = (force_pn - p.b2) / p.c2;
  return p.a1 * std::exp(-u * u) + p.a2 * std::exp(-v * v);
}

double integrin_force(double f_sf, int bonded) {
  if (bonded < 1) throw DomainError("integrin force undefined for a dissolved cluster");
  return f_sf / bonded;
}

int cluster_kinetics(int bonded, int capacity, double p_unbind, double p_rebind,
                     const CounterRng& rng, std::uint64_t id, std::uint64_t step,
                     std::uint64_t unbind_stream, std::uint64_t bind_stream) {
  int out = 0;
  for (int s = 0; s < capacity; ++s) {
    if (s < bonded) {
      if (!rng.bernoulli(p_unbind, unbind_stream, id, step, static_cast<std::uint64_t>(s))) ++out;
    } else {
      if (rng.bernoulli(p_rebind, bind_stream, id, step, static_cast<std::uint64_t>(s))) ++out;
    }
  }
  return out;
}

void CellConfig::validate() const {
  if (!(radius_um > 0.0)) throw ConfigError("cell radius must be > 0");
  if (!(shell_um > 0.0 && shell_um < radius_um))
    throw ConfigError("adhesion shell must be positive and thinner than the radius");
  if (max_adhesions < 1) throw ConfigError("adhesion cap must be >= 1");
  if (clusters_per_adhesion < 1) throw ConfigError("cluster cap must be >= 1");
  if (integrins_per_cluster < 1) throw ConfigError("integrin cap must be >= 1");
  if (!(kcf_on >= 0.0)) throw ConfigError("integrin binding rate must be >= 0");
  if (!(contraction_um_per_s >= 0.0)) throw ConfigError("contraction rate must be >= 0");
  if (!(sf_stiffness > 0.0)) throw ConfigError("stress-fiber stiffness must be > 0");
  if (!(rest_floor_fraction > 0.0 && rest_floor_fraction <= 1.0))
    throw ConfigError("rest-length floor must be in (0, 1] of the radius");
  if (!(if_spot_spacing_um > 0.0)) throw ConfigError("integrin site spacing must be > 0");
  if (!(cell_drag > 0.0)) throw ConfigError("cell drag must be > 0");
  if (!(catch_slip.a1 > 0.0 && catch_slip.a2 > 0.0 && catch_slip.c1 > 0.0 && catch_slip.c2 > 0.0))
    throw ConfigError("catch-slip amplitudes and widths must be > 0");
  if (!(grid_edge_um > 0.0)) throw ConfigError("search grid edge must be > 0");
  if (grid_rebuild_every < 1) throw ConfigError("grid rebuild interval must be >= 1");
}

CellManager::CellManager(MechSystem& sys, CellConfig cfg, std::uint64_t seed)
    : sys_(sys), cfg_(cfg) {
  cfg_.validate();
  rng_.seed = seed;
  const BeamMesh& mesh = sys_.mesh();
  fiber_spot_offset_.assign(mesh.fibers.size() + 1, 0);
  for (size_t f = 0; f < mesh.fibers.size(); ++f) {
    const double total = mesh.fibers[f].total;
    const int count =
        std::max(0, static_cast<int>(std::ceil((total - 1e-9) / cfg_.if_spot_spacing_um)) - 1);
    fiber_spot_offset_[f + 1] = fiber_spot_offset_[f] + static_cast<std::uint64_t>(count);
  }
}

int CellManager::add_cell(const Vec3& center) {
  FreePoint p;
  p.position = sys_.box().wrap(center);
  p.drag = cfg_.cell_drag;
  const int point = static_cast<int>(sys_.points().size());
  sys_.points().push_back(p);
  sys_.mark_topology_changed();
  CellAgent cell;
  cell.point = point;
  cells_.push_back(cell);
  return static_cast<int>(cells_.size()) - 1;
}

double CellManager::anchor_distance(const CellAgent& cell, const FocalAdhesion& fa) const {
  const BeamMesh& mesh = sys_.mesh();
  const Vec3 anchor = mesh.point_undeformed(mesh.locate(fa.fiber, fa.arc));
  const Vec3 sep =
      mesh.box.separation(sys_.points()[static_cast<size_t>(cell.point)].position, anchor,
                          fa.image_shift);
  return (mesh.box.deformation() * sep).norm();
}

void CellManager::refresh_element_table() {
  grid_ = ContainerGrid(sys_.box(), cfg_.grid_edge_um, cfg_.grid_rebuild_every);
  const BeamMesh& mesh = sys_.mesh();
  element_arcs_.assign(mesh.elements.size(), ElementArc{});
  for (size_t f = 0; f < mesh.fibers.size(); ++f) {
    const BeamMesh::FiberSpan& span = mesh.fibers[f];
    double lo = 0.0;
    for (size_t k = 0; k < span.elements.size(); ++k) {
      const double hi = span.arc_end[k];
      element_arcs_[static_cast<size_t>(span.elements[k])] = {static_cast<int>(f), lo, hi};
      lo = hi;
    }
  }
  for (size_t e = 0; e < mesh.elements.size(); ++e) {
    if (element_arcs_[e].fiber < 0) continue;  // run-time bonds carry no sites
    const Vec3 a = mesh.nodes[static_cast<size_t>(mesh.elements[e].node_a)].position;
    grid_.insert_segment(static_cast<int>(e), a, a + mesh.chord_undeformed(mesh.elements[e]));
  }
  grid_elements_ = mesh.elements.size();
  grid_ready_ = true;
}

void CellManager::rebuild_springs() {
  std::vector<PointSpring>& springs = sys_.springs();
  springs.clear();
  for (CellAgent& cell : cells_) {
    for (FocalAdhesion& fa : cell.adhesions) {
      fa.spring = static_cast<int>(springs.size());
      PointSpring s;
      s.point = cell.point;
      s.fiber = fa.fiber;
      s.arc = fa.arc;
      s.image_shift = fa.image_shift;
      springs.push_back(s);
    }
  }
  sys_.mark_topology_changed();
  structure_dirty_ = false;
  sync_spring_params();
}

void CellManager::sync_spring_params() {
  std::vector<PointSpring>& springs = sys_.springs();
  for (const CellAgent& cell : cells_) {
    for (const FocalAdhesion& fa : cell.adhesions) {
      int live = 0;
      double rest_sum = 0.0;
      for (const IntegrinCluster& c : fa.clusters) {
        if (!c.alive) continue;
        ++live;
        rest_sum += c.rest_length;
      }
      // Parallel equal-stiffness springs sum exactly to one spring with the
      // summed stiffness and the mean rest length.
      PointSpring& s = springs[static_cast<size_t>(fa.spring)];
      s.stiffness = live * cfg_.sf_stiffness;
      s.rest_length = live > 0 ? rest_sum / live : 0.0;
    }
  }
}

void CellManager::formation(int ci, double dt, std::uint64_t step, CellSweepStats& st) {
  CellAgent& cell = cells_[static_cast<size_t>(ci)];
  int capacity = cfg_.max_adhesions - static_cast<int>(cell.adhesions.size());
  if (capacity <= 0 || cfg_.kcf_on <= 0.0) return;

  if (!grid_ready_ || grid_elements_ != sys_.mesh().elements.size() ||
      step - last_rebuild_step_ >= static_cast<std::uint64_t>(cfg_.grid_rebuild_every)) {
    refresh_element_table();
    last_rebuild_step_ = step;
  }

  const BeamMesh& mesh = sys_.mesh();
  const PeriodicBox& box = mesh.box;
  const Vec3 center = sys_.points()[static_cast<size_t>(cell.point)].position;
  const double p_fa = p_on(cfg_.kcf_on, dt);
  const double spacing = cfg_.if_spot_spacing_um;
  const double r_lo = cfg_.radius_um - cfg_.shell_um;
  const double r_hi = cfg_.radius_um + cfg_.shell_um;
  // Padded so the undeformed query box covers the physical shell under
  // moderate box deformations.
  const double reach = 1.2 * r_hi;

  struct Candidate {
    std::uint64_t spot;
    int fiber;
    double arc;
    IVec3 shift;
    double dist;
    bool operator<(const Candidate& o) const { return spot < o.spot; }
  };
  std::vector<Candidate> accepted;

  const Vec3 pad(reach, reach, reach);
  for (int e : grid_.candidates_aabb(center - pad, center + pad)) {
    const ElementArc& ea = element_arcs_[static_cast<size_t>(e)];
    if (ea.fiber < 0) continue;
    const double total = mesh.fibers[static_cast<size_t>(ea.fiber)].total;
    const BeamElement& el = mesh.elements[static_cast<size_t>(e)];
    const Vec3 base = mesh.nodes[static_cast<size_t>(el.node_a)].position;
    const Vec3 chord = mesh.chord_undeformed(el);
    // Sites on this element: arcs in (lo, hi], global index k-1 for arc k*spacing.
    for (int k = static_cast<int>(std::floor(ea.lo / spacing)) + 1;; ++k) {
      const double arc = k * spacing;
      if (arc > ea.hi + 1e-12 || arc >= total - 1e-9) break;
      const std::uint64_t spot = fiber_spot_offset_[static_cast<size_t>(ea.fiber)] +
                                 static_cast<std::uint64_t>(k - 1);
      if (occupied_spots_.count(spot)) continue;
      const Vec3 pos = base + ((arc - ea.lo) / (ea.hi - ea.lo)) * chord;
      const IVec3 shift = box.min_image_shift(center, pos);
      const double d = (box.deformation() * box.separation(center, pos, shift)).norm();
      if (d < r_lo || d > r_hi) continue;
      if (rng_.bernoulli(p_fa, CounterRng::kFaFormation,
                         pair_key(static_cast<std::uint64_t>(ci), spot), step))
        accepted.push_back({spot, ea.fiber, arc, shift, d});
    }
  }

  std::sort(accepted.begin(), accepted.end());
  for (const Candidate& cand : accepted) {
    if (capacity <= 0) break;
    if (occupied_spots_.count(cand.spot)) continue;  // duplicate or lost claim
    const std::uint32_t uid = next_fa_uid_++;
    FocalAdhesion fa;
    fa.fiber = cand.fiber;
    fa.arc = cand.arc;
    fa.image_shift = cand.shift;
    fa.spot_id = cand.spot;
    fa.uid = uid;
    fa.clusters.resize(static_cast<size_t>(cfg_.clusters_per_adhesion));
    int live = 0;
    for (int c = 0; c < cfg_.clusters_per_adhesion; ++c) {
      const int bonded =
          cluster_kinetics(0, cfg_.integrins_per_cluster, 0.0, p_fa, rng_,
                           pair_key(uid, static_cast<std::uint64_t>(c)), step);
      IntegrinCluster& cl = fa.clusters[static_cast<size_t>(c)];
      cl.rest_length = cand.dist;  // fresh, uncontracted stress fiber
      if (bonded > 0) {
        cl.alive = true;
        cl.bonded = bonded;
        ++live;
      }
    }
    if (live == 0) continue;  // every cluster came up empty; nothing formed
    cell.adhesions.push_back(std::move(fa));
    occupied_spots_.insert(cand.spot);
    --capacity;
    ++st.adhesions_formed;
    structure_dirty_ = true;
  }
}

void CellManager::clutch(int ci, size_t n_entry, double dt, std::uint64_t step,
                         CellSweepStats& st) {
  CellAgent& cell = cells_[static_cast<size_t>(ci)];
  const double p_b = p_on(cfg_.kcf_on, dt);
  for (size_t ai = 0; ai < n_entry; ++ai) {
    FocalAdhesion& fa = cell.adhesions[ai];
    const double len = anchor_distance(cell, fa);
    for (int c = 0; c < cfg_.clusters_per_adhesion; ++c) {
      IntegrinCluster& cl = fa.clusters[static_cast<size_t>(c)];
      const std::uint64_t id = pair_key(fa.uid, static_cast<std::uint64_t>(c));
      if (cl.alive) {
        const double f_sf = cfg_.sf_stiffness * (len - cl.rest_length);
        // A slack stress fiber loads its integrins with zero force, not a
        // negative one.
        const double f_i = std::max(0.0, integrin_force(f_sf, cl.bonded));
        const double rate = 1.0 / catch_slip_lifetime(f_i, cfg_.catch_slip);
        st.max_rate_dt = std::max(st.max_rate_dt, rate * dt);
        const int bonded = cluster_kinetics(cl.bonded, cfg_.integrins_per_cluster,
                                            p_on(rate, dt), p_b, rng_, id, step);
        if (bonded == 0) {
          cl.alive = false;
          cl.bonded = 0;
          ++st.clusters_dissolved;
        } else {
          cl.bonded = bonded;
        }
      } else if (p_b > 0.0) {
        // Dissolved clusters reform through first integrin binding, with a
        // fresh uncontracted stress fiber at the current distance.
        const int bonded = cluster_kinetics(0, cfg_.integrins_per_cluster, 0.0, p_b, rng_, id,
                                            step, CounterRng::kIntegrinUnbind,
                                            CounterRng::kClusterReform);
        if (bonded > 0) {
          cl.alive = true;
          cl.bonded = bonded;
          cl.rest_length = len;
          ++st.clusters_reformed;
        }
      }
    }
  }
}

CellSweepStats CellManager::sweep(double dt, std::uint64_t step) {
  if (!(dt > 0.0)) throw ConfigError("cell sweep time step must be > 0");
  CellSweepStats st;
  if (cfg_.kcf_on > 0.0) st.max_rate_dt = cfg_.kcf_on * dt;

  // Formation first, on entry-state occupancy; adhesions formed now are not
  // processed by the clutch phase below.
  std::vector<size_t> entry_count(cells_.size());
  for (size_t ci = 0; ci < cells_.size(); ++ci) entry_count[ci] = cells_[ci].adhesions.size();
  for (size_t ci = 0; ci < cells_.size(); ++ci)
    formation(static_cast<int>(ci), dt, step, st);
  for (size_t ci = 0; ci < cells_.size(); ++ci)
    clutch(static_cast<int>(ci), entry_count[ci], dt, step, st);

  // Adhesions with no live clusters dissolve; their sites free up for
  // formation on later sweeps.
  for (CellAgent& cell : cells_) {
    for (const FocalAdhesion& fa : cell.adhesions) {
      if (fa.live_clusters() > 0) continue;
      occupied_spots_.erase(fa.spot_id);
      ++st.adhesions_dissolved;
      structure_dirty_ = true;
    }
    std::erase_if(cell.adhesions,
                  [](const FocalAdhesion& fa) { return fa.live_clusters() == 0; });
  }

  if (structure_dirty_)
    rebuild_springs();
  else
    sync_spring_params();

  if (st.max_rate_dt > 0.1) {
    st.rate_warning = true;
    if (!warned_once_) {
      warned_once_ = true;
      std::cerr << "warning: integrin kinetics under-resolved (max rate*dt = " << st.max_rate_dt
                << " > 0.1); reduce the time step\n";
    }
  }
  return st;
}

void CellManager::contract_all(double dt) {
  if (!(dt >= 0.0)) throw ConfigError("contraction interval must be >= 0");
  const double floor_len = cfg_.rest_floor_fraction * cfg_.radius_um;
  const double shrink = cfg_.contraction_um_per_s * dt;
  for (CellAgent& cell : cells_) {
    for (FocalAdhesion& fa : cell.adhesions) {
      for (IntegrinCluster& cl : fa.clusters) {
        if (!cl.alive) continue;
        cl.rest_length = std::max(cl.rest_length - shrink, floor_len);
      }
    }
  }
  sync_spring_params();
}

CellCensus CellManager::census(int cell_id) const {
  const CellAgent& cell = cells_[static_cast<size_t>(cell_id)];
  const BeamMesh& mesh = sys_.mesh();
  CellCensus out;
  out.adhesions = static_cast<int>(cell.adhesions.size());
  double force_sum = 0.0;
  for (const FocalAdhesion& fa : cell.adhesions) {
    const Vec3 anchor = mesh.point_undeformed(mesh.locate(fa.fiber, fa.arc));
    const Vec3 sep = mesh.box.deformation() *
                     mesh.box.separation(sys_.points()[static_cast<size_t>(cell.point)].position,
                                         anchor, fa.image_shift);
    const double len = sep.norm();
    for (const IntegrinCluster& cl : fa.clusters) {
      if (!cl.alive) continue;
      ++out.live_clusters;
      out.bonded_integrins += cl.bonded;
      const double f_sf = cfg_.sf_stiffness * (len - cl.rest_length);
      force_sum += f_sf / cl.bonded;
      if (len > 1e-12) out.net_force += (f_sf / len) * sep;
    }
  }
  if (out.live_clusters > 0) out.mean_integrin_force = force_sum / out.live_clusters;
  return out;
}

}  // namespace cellmat
