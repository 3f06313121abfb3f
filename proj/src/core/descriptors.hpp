#pragma once

// Scalar statistics describing network architecture: node valency, free fiber
// length (optionally normalized by mean node spacing), direction cosines of
// fiber pairs at shared nodes, and collagen mass concentration.

#include <vector>

#include "core/network.hpp"

namespace cellmat {

struct DescriptorHistogram {
  std::vector<double> bin_edges;  // size counts.size() + 1, ascending
  std::vector<double> counts;
  double total = 0.0;             // sum of counts

  double bin_center(size_t j) const { return 0.5 * (bin_edges[j] + bin_edges[j + 1]); }
};

// Builds a histogram from samples over [lo, hi]; samples outside the range
// are clamped into the end bins.
DescriptorHistogram make_histogram(const std::vector<double>& samples, double lo, double hi,
                                   int bins);

// One unit-width bin per integer valency value.
DescriptorHistogram valency_distribution(const Network& net);

// Physical fiber lengths; when normalize is set each length is multiplied by
// (node_count / box_volume)^(1/3) so distributions are size-comparable.
DescriptorHistogram length_distribution(const Network& net, bool normalize, int bins = 64);
std::vector<double> length_samples(const Network& net, bool normalize);
double length_normalization(const Network& net);

// Cosine of the angle between each unordered pair of fibers meeting at a
// node, both directions taken pointing away from the node (a straight
// continuation scores -1). Physical-space vectors, image shifts applied.
DescriptorHistogram cosine_distribution(const Network& net, int bins = 64);
std::vector<double> cosine_samples(const Network& net);

// Collagen concentration in mg/ml implied by total fiber volume, using the
// specific volume of collagen (ml/g).
double collagen_density(const Network& net, double specific_volume_ml_g = 0.73);

}  // namespace cellmat
