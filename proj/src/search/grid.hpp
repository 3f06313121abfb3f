#pragma once

// Uniform-container proximity index over the periodic box. Entities are
// registered with their full spatial extent (every container they overlap);
// queries return the contents of one layer of containers around the queried
// region, which is a superset of all true in-radius partners as long as the
// container edge is at least the query radius. Indexing always happens in
// undeformed box coordinates, so a deformed box indexes identically to the
// undeformed one.

#include <cstdint>
#include <vector>

#include "core/geometry.hpp"

namespace cellmat {

// Worker decomposition: each worker owns a connected set of containers and
// additionally sees a read-only one-layer ghost shell around it.
struct GridPartition {
  std::vector<std::vector<int>> owned;
  std::vector<std::vector<int>> ghosts;
};

struct GridStats {
  std::uint64_t rebuilds = 0;
  std::uint64_t queries = 0;
  std::uint64_t candidates_returned = 0;
};

class ContainerGrid {
 public:
  ContainerGrid() = default;

  // Containers per axis: floor(L_i / min_edge), at least one. A min_edge
  // larger than the box collapses to a single container, which stays sound
  // (every entity is everyone's candidate).
  ContainerGrid(const PeriodicBox& box, double min_edge, int rebuild_every = 10);

  const IVec3& dims() const { return dims_; }
  Vec3 container_edges() const;
  int container_count() const { return dims_.prod(); }
  int rebuild_every() const { return rebuild_every_; }
  GridStats& stats() const { return stats_; }

  void clear();

  // Entity ids must be dense non-negative integers (they index an internal
  // table). Endpoints may lie outside [0, L); they are wrapped on indexing.
  void insert_point(int id, const Vec3& p);
  void insert_aabb(int id, const Vec3& lo, const Vec3& hi);
  void insert_segment(int id, const Vec3& a, const Vec3& b);

  // Sorted unique ids within one container layer of the queried region.
  std::vector<int> candidates_point(const Vec3& p) const;
  std::vector<int> candidates_aabb(const Vec3& lo, const Vec3& hi) const;

  // Candidates around a registered entity, excluding the entity itself.
  std::vector<int> neighbors(int id) const;

  // Slab decomposition along the most-subdivided axis. Workers beyond the
  // slab count own nothing. Union of owned sets is the whole grid; ghost
  // shells are the only duplicated view.
  GridPartition partition(int n_workers) const;

  // Same as candidates_point but restricted to the containers a single
  // worker may read (its owned set plus ghosts). Throws DomainError if the
  // query would touch a container outside that view, which proves the
  // one-layer ghost shell suffices for queries about owned content.
  std::vector<int> candidates_point_scoped(const GridPartition& part, int worker,
                                           const Vec3& p) const;

 private:
  int wrap_index(int i, int axis) const;
  int linear_index(const IVec3& c) const;
  IVec3 container_of(const Vec3& p) const;
  void containers_overlapping(const Vec3& lo, const Vec3& hi, std::vector<int>& out) const;
  void collect_layer(const std::vector<int>& containers, const std::vector<char>* allowed,
                     std::vector<int>& out) const;

  Vec3 edge_lengths_ = Vec3::Ones();
  IVec3 dims_ = IVec3::Ones();
  int rebuild_every_ = 10;
  std::vector<std::vector<int>> cells_;             // container -> entity ids
  std::vector<std::vector<int>> entity_containers_; // entity -> containers
  mutable GridStats stats_;
};

}  // namespace cellmat
