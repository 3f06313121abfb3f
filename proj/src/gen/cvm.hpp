#pragma once

// Binned Cramer-von-Mises-type mismatch between an empirical histogram and a
// target CDF evaluated at bin centers. This is the n-scaled statistic: for a
// fixed relative mismatch it grows linearly with sample count.

#include <vector>

#include "core/errors.hpp"

namespace cellmat::gen {

// counts: per-bin sample counts (must sum to > 0).
// cdf_centers: target CDF at each bin center, same length as counts.
//
// E = (1/n^2) sum_j m_j [ (1/6)(m_j+1)(6 S_j + 2 m_j + 1) + S_j^2 ],
// S_j = M_{j-1} - n C(x_j) - 1/2, with M_j the cumulative counts.
double cvm_energy(const std::vector<double>& counts, const std::vector<double>& cdf_centers);

}  // namespace cellmat::gen
