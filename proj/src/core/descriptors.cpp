#include "core/descriptors.hpp"

#include <algorithm>
#include <cmath>

namespace cellmat {

DescriptorHistogram make_histogram(const std::vector<double>& samples, double lo, double hi,
                                   int bins) {
  if (bins < 1 || !(hi > lo)) throw DomainError("make_histogram: need bins >= 1 and hi > lo");
  DescriptorHistogram h;
  h.bin_edges.resize(bins + 1);
  const double w = (hi - lo) / bins;
  for (int j = 0; j <= bins; ++j) h.bin_edges[j] = lo + j * w;
  h.counts.assign(bins, 0.0);
  for (double x : samples) {
    int j = static_cast<int>(std::floor((x - lo) / w));
    j = std::clamp(j, 0, bins - 1);
    h.counts[j] += 1.0;
  }
  h.total = static_cast<double>(samples.size());
  return h;
}

DescriptorHistogram valency_distribution(const Network& net) {
  const std::vector<int> val = net.valencies();
  int vmax = 1;
  for (int v : val) vmax = std::max(vmax, v);
  DescriptorHistogram h;
  h.bin_edges.resize(vmax + 1);
  for (int j = 0; j <= vmax; ++j) h.bin_edges[j] = j + 0.5;  // bin j holds valency j+1
  h.counts.assign(vmax, 0.0);
  for (int v : val)
    if (v >= 1) h.counts[v - 1] += 1.0;
  h.total = static_cast<double>(val.size());
  return h;
}

double length_normalization(const Network& net) {
  return std::cbrt(static_cast<double>(net.nodes.size()) / net.box.deformed_volume());
}

std::vector<double> length_samples(const Network& net, bool normalize) {
  const double scale = normalize ? length_normalization(net) : 1.0;
  std::vector<double> out;
  out.reserve(net.fibers.size());
  for (const Fiber& f : net.fibers) out.push_back(scale * net.fiber_length(f));
  return out;
}

DescriptorHistogram length_distribution(const Network& net, bool normalize, int bins) {
  const std::vector<double> s = length_samples(net, normalize);
  double hi = 0.0;
  for (double x : s) hi = std::max(hi, x);
  if (hi <= 0.0) hi = 1.0;
  return make_histogram(s, 0.0, hi, bins);
}

std::vector<double> cosine_samples(const Network& net) {
  const auto inc = net.incidence();
  std::vector<double> out;
  for (size_t n = 0; n < net.nodes.size(); ++n) {
    const auto& fids = inc[n];
    std::vector<Vec3> dirs(fids.size());
    for (size_t i = 0; i < fids.size(); ++i) {
      const Fiber& f = net.fibers[fids[i]];
      Vec3 v = net.fiber_vector(f);
      if (f.node_b == static_cast<int>(n) && f.node_a != static_cast<int>(n)) v = -v;
      dirs[i] = v.normalized();
    }
    for (size_t i = 0; i < fids.size(); ++i)
      for (size_t j = i + 1; j < fids.size(); ++j)
        out.push_back(std::clamp(dirs[i].dot(dirs[j]), -1.0, 1.0));
  }
  return out;
}

DescriptorHistogram cosine_distribution(const Network& net, int bins) {
  return make_histogram(cosine_samples(net), -1.0, 1.0, bins);
}

double collagen_density(const Network& net, double specific_volume_ml_g) {
  if (!(specific_volume_ml_g > 0.0)) throw DomainError("collagen_density: specific volume must be positive");
  double fiber_volume = 0.0;  // um^3
  for (const Fiber& f : net.fibers)
    fiber_volume += net.fiber_length(f) * M_PI * f.diameter * f.diameter / 4.0;
  const double fraction = fiber_volume / net.box.deformed_volume();
  return fraction / specific_volume_ml_g * 1000.0;  // g/ml -> mg/ml
}

}  // namespace cellmat
