#include "gen/cvm.hpp"

namespace cellmat::gen {

double cvm_energy(const std::vector<double>& counts, const std::vector<double>& cdf_centers) {
  if (counts.size() != cdf_centers.size())
    throw DomainError("cvm_energy: counts and target CDF values must align");
  double n = 0.0;
  for (double m : counts) n += m;
  if (!(n > 0.0)) throw DomainError("cvm_energy: empty histogram");

  double e = 0.0;
  double cum = 0.0;  // M_{j-1}
  for (size_t j = 0; j < counts.size(); ++j) {
    const double m = counts[j];
    if (m > 0.0) {
      const double s = cum - n * cdf_centers[j] - 0.5;
      e += m * ((1.0 / 6.0) * (m + 1.0) * (6.0 * s + 2.0 * m + 1.0) + s * s);
    }
    cum += m;
  }
  return e / (n * n);
}

}  // namespace cellmat::gen
