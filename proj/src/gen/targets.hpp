#pragma once

// Target descriptor distributions for network generation: lognormal free
// length, truncated-power-series direction cosine, discrete valency weights.

#include <map>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace cellmat::gen {

enum class CosineCdfForm {
  kAsPrinted,   // closed form with exponent 2k-1 over divisor 2k
  kIntegrated,  // exact integral of the cosine density (proper CDF)
};

struct DescriptorTargets {
  double length_mu = -0.3;
  double length_sigma = 0.6008;
  double cosine_b[3] = {0.6467, -0.1267, 0.0200};
  std::map<int, double> valency_weights = {{3, 0.7}, {4, 0.3}};
  CosineCdfForm cosine_cdf_form = CosineCdfForm::kIntegrated;

  // Checks sigma > 0, non-negative cosine density on [-1,1], normalizable
  // valency weights (normalized in place). Throws ConfigError.
  void validate();

  double mean_valency() const;
};

// Lognormal CDF of normalized free length: 1/2 + 1/2 erf((ln l - mu)/(sqrt2 sigma)).
double target_length_cdf(double l_norm, const DescriptorTargets& t);

// Quantile of the length target (inverse CDF), p in (0,1).
double target_length_quantile(double p, const DescriptorTargets& t);

// Direction-cosine density sum b_k (1-beta)^(2k-1), beta in [-1,1].
double cosine_pdf(double beta, const DescriptorTargets& t);

// Direction-cosine CDF in the configured form.
double target_cosine_cdf(double beta, const DescriptorTargets& t);
double target_cosine_cdf(double beta, const DescriptorTargets& t, CosineCdfForm form);

// Samplers used for self-noise floors and two-sample checks.
double sample_length(const DescriptorTargets& t, SequentialRng& rng);
double sample_cosine(const DescriptorTargets& t, SequentialRng& rng);  // integrated-form inverse CDF
int sample_valency(const DescriptorTargets& t, SequentialRng& rng);

// Standard-normal quantile (bisection on erf; init-time use only).
double standard_normal_quantile(double p);

}  // namespace cellmat::gen
