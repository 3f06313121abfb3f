#include "search/grid.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace cellmat {

ContainerGrid::ContainerGrid(const PeriodicBox& box, double min_edge, int rebuild_every)
    : edge_lengths_(box.edge_lengths()), rebuild_every_(rebuild_every) {
  if (!(min_edge > 0.0)) throw DomainError("ContainerGrid: min_edge must be positive");
  if (rebuild_every < 1) throw DomainError("ContainerGrid: rebuild_every must be >= 1");
  for (int k = 0; k < 3; ++k)
    dims_[k] = std::max(1, static_cast<int>(std::floor(edge_lengths_[k] / min_edge)));
  cells_.assign(static_cast<size_t>(container_count()), {});
  stats_.rebuilds = 1;
}

Vec3 ContainerGrid::container_edges() const {
  return Vec3(edge_lengths_[0] / dims_[0], edge_lengths_[1] / dims_[1], edge_lengths_[2] / dims_[2]);
}

void ContainerGrid::clear() {
  for (auto& c : cells_) c.clear();
  entity_containers_.clear();
  ++stats_.rebuilds;
}

int ContainerGrid::wrap_index(int i, int axis) const {
  const int d = dims_[axis];
  return ((i % d) + d) % d;
}

int ContainerGrid::linear_index(const IVec3& c) const {
  return (c[0] * dims_[1] + c[1]) * dims_[2] + c[2];
}

IVec3 ContainerGrid::container_of(const Vec3& p) const {
  IVec3 c;
  for (int k = 0; k < 3; ++k) {
    const double e = edge_lengths_[k] / dims_[k];
    c[k] = wrap_index(static_cast<int>(std::floor(p[k] / e)), k);
  }
  return c;
}

void ContainerGrid::containers_overlapping(const Vec3& lo, const Vec3& hi,
                                           std::vector<int>& out) const {
  IVec3 c_lo, span;
  for (int k = 0; k < 3; ++k) {
    if (!(hi[k] >= lo[k])) throw DomainError("ContainerGrid: inverted bounding box");
    const double e = edge_lengths_[k] / dims_[k];
    const int a = static_cast<int>(std::floor(lo[k] / e));
    const int b = static_cast<int>(std::floor(hi[k] / e));
    c_lo[k] = a;
    span[k] = std::min(b - a + 1, dims_[k]);
  }
  out.clear();
  for (int ix = 0; ix < span[0]; ++ix)
    for (int iy = 0; iy < span[1]; ++iy)
      for (int iz = 0; iz < span[2]; ++iz) {
        const IVec3 c(wrap_index(c_lo[0] + ix, 0), wrap_index(c_lo[1] + iy, 1),
                      wrap_index(c_lo[2] + iz, 2));
        out.push_back(linear_index(c));
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

void ContainerGrid::insert_point(int id, const Vec3& p) { insert_aabb(id, p, p); }

void ContainerGrid::insert_aabb(int id, const Vec3& lo, const Vec3& hi) {
  if (id < 0) throw DomainError("ContainerGrid: entity ids must be non-negative");
  std::vector<int> containers;
  containers_overlapping(lo, hi, containers);
  if (entity_containers_.size() <= static_cast<size_t>(id))
    entity_containers_.resize(static_cast<size_t>(id) + 1);
  entity_containers_[static_cast<size_t>(id)] = containers;
  for (int c : containers) cells_[static_cast<size_t>(c)].push_back(id);
}

void ContainerGrid::insert_segment(int id, const Vec3& a, const Vec3& b) {
  insert_aabb(id, a.cwiseMin(b), a.cwiseMax(b));
}

void ContainerGrid::collect_layer(const std::vector<int>& containers,
                                  const std::vector<char>* allowed, std::vector<int>& out) const {
  out.clear();
  std::vector<int> visited;
  for (int lin : containers) {
    IVec3 c;
    c[0] = lin / (dims_[1] * dims_[2]);
    c[1] = (lin / dims_[2]) % dims_[1];
    c[2] = lin % dims_[2];
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const IVec3 n(wrap_index(c[0] + dx, 0), wrap_index(c[1] + dy, 1),
                        wrap_index(c[2] + dz, 2));
          visited.push_back(linear_index(n));
        }
  }
  std::sort(visited.begin(), visited.end());
  visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
  for (int lin : visited) {
    if (allowed && !(*allowed)[static_cast<size_t>(lin)])
      throw DomainError("ContainerGrid: query reached a container outside the worker's view");
    const auto& ids = cells_[static_cast<size_t>(lin)];
    out.insert(out.end(), ids.begin(), ids.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  ++stats_.queries;
  stats_.candidates_returned += out.size();
}

std::vector<int> ContainerGrid::candidates_point(const Vec3& p) const {
  std::vector<int> home{linear_index(container_of(p))};
  std::vector<int> out;
  collect_layer(home, nullptr, out);
  return out;
}

std::vector<int> ContainerGrid::candidates_aabb(const Vec3& lo, const Vec3& hi) const {
  std::vector<int> containers;
  containers_overlapping(lo, hi, containers);
  std::vector<int> out;
  collect_layer(containers, nullptr, out);
  return out;
}

std::vector<int> ContainerGrid::neighbors(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= entity_containers_.size())
    throw DomainError("ContainerGrid: unknown entity id");
  std::vector<int> out;
  collect_layer(entity_containers_[static_cast<size_t>(id)], nullptr, out);
  out.erase(std::remove(out.begin(), out.end(), id), out.end());
  return out;
}

GridPartition ContainerGrid::partition(int n_workers) const {
  if (n_workers < 1) throw DomainError("ContainerGrid: n_workers must be >= 1");
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (dims_[k] > dims_[axis]) axis = k;
  const int slabs = dims_[axis];

  GridPartition part;
  part.owned.assign(static_cast<size_t>(n_workers), {});
  part.ghosts.assign(static_cast<size_t>(n_workers), {});

  std::vector<int> owner_of_slab(static_cast<size_t>(slabs));
  for (int s = 0; s < slabs; ++s)
    owner_of_slab[static_cast<size_t>(s)] =
        std::min(n_workers - 1, s * n_workers / std::max(slabs, 1));

  std::vector<int> owner(static_cast<size_t>(container_count()));
  for (int ix = 0; ix < dims_[0]; ++ix)
    for (int iy = 0; iy < dims_[1]; ++iy)
      for (int iz = 0; iz < dims_[2]; ++iz) {
        const IVec3 c(ix, iy, iz);
        const int w = owner_of_slab[static_cast<size_t>(c[axis])];
        const int lin = linear_index(c);
        owner[static_cast<size_t>(lin)] = w;
        part.owned[static_cast<size_t>(w)].push_back(lin);
      }

  for (int w = 0; w < n_workers; ++w) {
    std::vector<int> ghost;
    for (int lin : part.owned[static_cast<size_t>(w)]) {
      IVec3 c;
      c[0] = lin / (dims_[1] * dims_[2]);
      c[1] = (lin / dims_[2]) % dims_[1];
      c[2] = lin % dims_[2];
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            const IVec3 n(wrap_index(c[0] + dx, 0), wrap_index(c[1] + dy, 1),
                          wrap_index(c[2] + dz, 2));
            const int nl = linear_index(n);
            if (owner[static_cast<size_t>(nl)] != w) ghost.push_back(nl);
          }
    }
    std::sort(ghost.begin(), ghost.end());
    ghost.erase(std::unique(ghost.begin(), ghost.end()), ghost.end());
    part.ghosts[static_cast<size_t>(w)] = std::move(ghost);
  }
  return part;
}

std::vector<int> ContainerGrid::candidates_point_scoped(const GridPartition& part, int worker,
                                                        const Vec3& p) const {
  if (worker < 0 || static_cast<size_t>(worker) >= part.owned.size())
    throw DomainError("ContainerGrid: worker index out of range");
  std::vector<char> allowed(static_cast<size_t>(container_count()), 0);
  for (int lin : part.owned[static_cast<size_t>(worker)]) allowed[static_cast<size_t>(lin)] = 1;
  for (int lin : part.ghosts[static_cast<size_t>(worker)]) allowed[static_cast<size_t>(lin)] = 1;
  std::vector<int> home{linear_index(container_of(p))};
  std::vector<int> out;
  collect_layer(home, &allowed, out);
  return out;
}

}  // namespace cellmat
