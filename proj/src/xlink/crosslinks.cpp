#include "xlink/crosslinks.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <utility>

#include "core/errors.hpp"

namespace cellmat {

double p_on(double k_on, double dt) {
  return -std::expm1(-k_on * dt);
}

double bell_off_rate(double k_off0, double force_pn, double dx_nm, double thermal_energy) {
  if (k_off0 == 0.0) return 0.0;
  return k_off0 * std::exp(force_pn * dx_nm / thermal_energy);
}

void CrosslinkConfig::validate() const {
  if (!(kff_on >= 0.0)) throw ConfigError("crosslink on-rate must be >= 0");
  if (!(kff_off0 >= 0.0)) throw ConfigError("crosslink base off-rate must be >= 0");
  if (!(bell_dx_nm >= 0.0)) throw ConfigError("crosslink force sensitivity must be >= 0");
  if (!(ff_spot_spacing_um > 0.0)) throw ConfigError("binding spot spacing must be > 0");
  if (!(capture_min_um >= 0.0)) throw ConfigError("capture minimum must be >= 0");
  if (!(capture_max_um > capture_min_um))
    throw ConfigError("capture maximum must exceed the capture minimum");
  if (!(grid_edge_um >= capture_max_um))
    throw ConfigError("search grid edge must be at least the capture maximum");
  if (!(linker_diameter_um > 0.0)) throw ConfigError("linker diameter must be > 0");
  if (!(linker_modulus > 0.0)) throw ConfigError("linker modulus must be > 0");
  if (grid_rebuild_every < 1) throw ConfigError("grid rebuild interval must be >= 1");
}

BindingSpotSet::BindingSpotSet(const BeamMesh& mesh, double spacing) {
  for (size_t f = 0; f < mesh.fibers.size(); ++f) {
    const double total = mesh.fibers[f].total;
    // Interior spots only: fiber ends are network junctions, not free sites.
    for (int k = 1; k * spacing < total - 1e-9; ++k) {
      BindingSpot s;
      s.fiber = static_cast<int>(f);
      s.arc = k * spacing;
      spots_.push_back(s);
    }
  }
}

int BindingSpotSet::bound_count() const {
  int n = 0;
  for (const BindingSpot& s : spots_)
    if (s.link >= 0) ++n;
  return n;
}

CrosslinkManager::CrosslinkManager(MechSystem& sys, CrosslinkConfig cfg, std::uint64_t seed)
    : sys_(sys), cfg_(std::move(cfg)) {
  cfg_.validate();
  rng_.seed = seed;
  spots_ = BindingSpotSet(sys_.mesh(), cfg_.ff_spot_spacing_um);
}

Vec3 CrosslinkManager::spot_position(int i) const {
  const BindingSpot& s = spots_.spots()[static_cast<size_t>(i)];
  const BeamMesh& mesh = sys_.mesh();
  return mesh.box.wrap(mesh.point_undeformed(mesh.locate(s.fiber, s.arc)));
}

void CrosslinkManager::rebuild_grid() {
  grid_ = ContainerGrid(sys_.box(), cfg_.grid_edge_um, cfg_.grid_rebuild_every);
  const int n = static_cast<int>(spots_.spots().size());
  for (int i = 0; i < n; ++i) grid_.insert_point(i, spot_position(i));
  grid_ready_ = true;
}

SweepStats CrosslinkManager::sweep(double dt, std::uint64_t step) {
  if (!(dt > 0.0)) throw ConfigError("sweep time step must be > 0");
  SweepStats st;
  std::vector<BindingSpot>& spots = spots_.spots();
  const PeriodicBox& box = sys_.box();

  // Formation. Eligibility (occupancy, distance) is judged on the entry
  // state: a spot freed or claimed later in this same sweep does not change
  // which pairs were offered a draw. Accepted pairs are then claimed in
  // canonical (i, j) order, so a spot that wins two draws keeps only the
  // first — the same outcome in any traversal order.
  if (cfg_.kff_on > 0.0) {
    if (!grid_ready_ ||
        step - last_rebuild_step_ >= static_cast<std::uint64_t>(cfg_.grid_rebuild_every)) {
      rebuild_grid();
      last_rebuild_step_ = step;
    }
    const double p_bind = p_on(cfg_.kff_on, dt);
    st.max_rate_dt = std::max(st.max_rate_dt, cfg_.kff_on * dt);
    const double d_lo = std::max(cfg_.capture_min_um, 1e-3);
    const int n = static_cast<int>(spots.size());
    std::vector<Vec3> pos(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pos[static_cast<size_t>(i)] = spot_position(i);
    std::vector<std::pair<int, int>> accepted;
    for (int i = 0; i < n; ++i) {
      if (spots[static_cast<size_t>(i)].link >= 0) continue;
      for (int j : grid_.neighbors(i)) {
        if (j <= i) continue;
        const BindingSpot& sj = spots[static_cast<size_t>(j)];
        if (sj.link >= 0) continue;
        if (sj.fiber == spots[static_cast<size_t>(i)].fiber) continue;
        const Vec3& pi = pos[static_cast<size_t>(i)];
        const Vec3& pj = pos[static_cast<size_t>(j)];
        const IVec3 shift = box.min_image_shift(pi, pj);
        const double d = (box.deformation() * box.separation(pi, pj, shift)).norm();
        if (d < d_lo || d > cfg_.capture_max_um) continue;
        if (rng_.bernoulli(p_bind, CounterRng::kLinkBind,
                           pair_key(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)),
                           step))
          accepted.emplace_back(i, j);
      }
    }
    std::sort(accepted.begin(), accepted.end());
    for (const auto& [i, j] : accepted) {
      BindingSpot& a = spots[static_cast<size_t>(i)];
      BindingSpot& b = spots[static_cast<size_t>(j)];
      if (a.link >= 0 || b.link >= 0) continue;  // lost to an earlier claim
      BeamMesh& mesh = sys_.mesh();
      const int na = mesh.node_at(a.fiber, a.arc, 1e-3);
      const int nb = mesh.node_at(b.fiber, b.arc, 1e-3);
      sys_.mark_topology_changed();
      if (na == nb) continue;
      const IVec3 shift = box.min_image_shift(mesh.nodes[static_cast<size_t>(na)].position,
                                              mesh.nodes[static_cast<size_t>(nb)].position);
      int element = -1;
      try {
        element = sys_.add_bond_element(na, nb, shift, cfg_.linker_diameter_um, cfg_.linker_modulus);
      } catch (const DomainError&) {
        continue;  // coincident after snapping; no bond
      }
      Crosslink link;
      link.spot_a = i;
      link.spot_b = j;
      link.element = element;
      link.k_off0 = cfg_.kff_off0;
      link.bell_dx_nm = cfg_.bell_dx_nm;
      link.created_at = sys_.time();
      links_.push_back(link);
      const int id = static_cast<int>(links_.size()) - 1;
      a.link = id;
      b.link = id;
      ++st.created;
      ++live_;
    }
  }

  // Dissolution, over the bonds that existed at sweep entry; bonds formed
  // above are not at risk until the next sweep. The risk of each bond comes
  // from its own axial force, which the formation phase cannot have changed:
  // element splits preserve axial state and new bonds are stress-free.
  const size_t n_entry = links_.size() - static_cast<size_t>(st.created);
  bool any_transient = false;
  for (size_t k = 0; k < n_entry; ++k)
    if (links_[k].alive && links_[k].k_off0 > 0.0) {
      any_transient = true;
      break;
    }
  if (any_transient) {
    for (size_t k = 0; k < n_entry; ++k) {
      Crosslink& link = links_[k];
      if (!link.alive || link.k_off0 <= 0.0) continue;
      const double force = std::abs(sys_.element_tension(link.element));
      const double rate = bell_off_rate(link.k_off0, force, link.bell_dx_nm);
      st.max_rate_dt = std::max(st.max_rate_dt, rate * dt);
      if (rng_.bernoulli(p_on(rate, dt), CounterRng::kLinkUnbind, k, step)) {
        sys_.remove_element(link.element);
        spots[static_cast<size_t>(link.spot_a)].link = -1;
        spots[static_cast<size_t>(link.spot_b)].link = -1;
        link.alive = false;
        ++st.destroyed;
        --live_;
      }
    }
  }

  st.live = live_;
  if (st.max_rate_dt > 0.1) {
    st.rate_warning = true;
    if (!warned_once_) {
      warned_once_ = true;
      std::cerr << "warning: crosslink kinetics under-resolved (max rate*dt = " << st.max_rate_dt
                << " > 0.1); reduce the time step\n";
    }
  }
  return st;
}

double CrosslinkManager::mean_force() {
  double sum = 0.0;
  int n = 0;
  for (const Crosslink& link : links_) {
    if (!link.alive) continue;
    sum += std::abs(sys_.element_tension(link.element));
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

double CrosslinkManager::max_rate() {
  double rate = cfg_.kff_on;
  for (const Crosslink& link : links_) {
    if (!link.alive || link.k_off0 <= 0.0) continue;
    const double force = std::abs(sys_.element_tension(link.element));
    rate = std::max(rate, bell_off_rate(link.k_off0, force, link.bell_dx_nm));
  }
  return rate;
}

}  // namespace cellmat
