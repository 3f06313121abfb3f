#pragma once

// Frozen expected values for the test suite. Every constant here was
// computed independently of the code under test (hand arithmetic or a
// high-precision reference evaluation) and recorded before the first test
// run; tests compare library output against these numbers, never the other
// way around.

namespace oracle {

// Lognormal free-length CDF at l = 1 for mu = -0.3, sigma = 0.6008.
inline constexpr double kLengthCdfAtOne = 0.6912280245851495;

// Direction-cosine CDF at beta = -1 for b = {0.6467, -0.1267, 0.0200}:
// closed form as printed (exponent 2k-1) and exact integral of the density.
inline constexpr double kCosinePrintedCdfAtMinusOne = 0.5000333333333333;
inline constexpr double kCosineIntegratedCdfAtMinusOne = 6.666666666666667e-5;

// Binned mismatch statistic, single bin, one sample:
// target CDF 0.5 at the bin center -> 0; target CDF 0 -> 0.25.
inline constexpr double kCvmSingleHalf = 0.0;
inline constexpr double kCvmSingleZero = 0.25;

// 97.5% standard-normal quantile.
inline constexpr double kNormalQuantile975 = 1.9599639845400545;

// Collagen density of one 5-um fiber (diameter 0.18 um) in a 10 um box,
// specific volume 0.73 ml/g.
inline constexpr double kDensityOneFiber = 0.17429383900052962;

// Collagen density for 1.055e6 um of total fiber length in a 245 um box.
inline constexpr double kDensityReference = 2.5007267399883892;

// Mean of the normalized length target distribution, exp(mu + sigma^2/2).
inline constexpr double kMeanNormalizedLength = 0.8873465446672146;

// Mean valency of the default {3: 0.7, 4: 0.3} target.
inline constexpr double kMeanValency = 3.3;

// Binding probability over one 10 s sweep at rate 1e-4 /s: 1 - exp(-1e-3).
inline constexpr double kBindProbabilityTenSeconds = 9.995001666250083e-4;

// Force-dependent unbinding rate amplification exp(F dx / kT) for
// F = 10 pN, dx = 0.5 nm, kT = 4.28 pN nm.
inline constexpr double kBellFactorTenPiconewton = 3.2162764198384823;

// Catch-slip mean bond lifetime tau(F) = 2.2 exp(-((F-29.9)/8.4)^2)
//                                      + 1.2 exp(-((F-16.2)/37.8)^2), seconds.
inline constexpr double kLifetimeAtZero = 0.9986559162792525;
inline constexpr double kLifetimeAtPeakForceParam = 3.252284223395392;
inline constexpr double kLifetimeArgmax = 29.581552897783125;
inline constexpr double kLifetimeMax = 3.2554951350743757;

// Shear correction factor 6(1+nu)/(7+6nu) at nu = 0.3.
inline constexpr double kShearCorrection = 0.8863636363636364;

// Circular section with diameter 0.18 um: area pi D^2/4, bending second
// moment pi D^4/64, torsion constant pi D^4/32.
inline constexpr double kSectionArea = 0.025446900494077326;
inline constexpr double kSectionInertia = 5.1529973500506574e-5;
inline constexpr double kSectionTorsion = 1.0305994700101315e-4;

// Axial stiffness E*A for E = 1.1e6 pN/um^2 and the section above, and the
// bar force E*A*delta/L for a 10 um element stretched by 0.01 um.
inline constexpr double kAxialStiffness = 27991.590543485057;
inline constexpr double kBarForceTenMicron = 27.991590543485056;

// Overdamped axial relaxation rate of a free two-node bar with drag lumped
// half-and-half: 4*E*A/(drag_per_length*L^2) at L = 50 um, drag 1 pN s/um^2.
inline constexpr double kRelaxationRateFifty = 44.78654486957609;

// Axial stress of a periodic two-element ring spanning a 10 um box and
// stretched 1%: E*A*0.01/(10*10) per unit undeformed face area.
inline constexpr double kSpanningRingStress = 2.7991590543485061;

// 2^1.33, the modulus ratio that makes a doubling of concentration fit a
// power-law exponent of exactly 1.33.
inline constexpr double kPowerLawRatio = 2.5140267490436567;

// Two-sample Kolmogorov-Smirnov coefficient at the 1% level:
// sqrt(-ln(0.005)/2); critical D = coefficient * sqrt((n1+n2)/(n1*n2)).
inline constexpr double kKsCoefficientOnePercent = 1.6276236307187293;

// Chi-square 99th percentiles for 1..4 degrees of freedom.
inline constexpr double kChi2OnePercentDf1 = 6.6348966010212145;
inline constexpr double kChi2OnePercentDf2 = 9.2103403719761801;
inline constexpr double kChi2OnePercentDf3 = 11.344866730144373;
inline constexpr double kChi2OnePercentDf4 = 13.276704135987622;

}  // namespace oracle
