#pragma once

namespace taprbm {

/// Scaled complementary error function e^{x^2} erfc(x). Accurate for x >= 0;
/// for x < -26 the true value overflows and an overflow error is raised.
double erfcx(double x);

/// Dawson integral F(x) = e^{-x^2} \int_0^x e^{t^2} dt.
double dawson(double x);

/// ln erfc(x), defined for all x where erfc(x) > 0.
double log_erfc(double x);

/// First-moment endpoint ratio of a Gaussian factor restricted to an interval,
/// with h_alpha and h_omega the standardized endpoints (h_alpha < h_omega).
///
///   branch > 0:  (e^{-h_alpha^2} - e^{-h_omega^2}) / (erf(h_omega)  - erf(h_alpha))
///   branch < 0:  (e^{h_omega^2}  - e^{h_alpha^2})  / (erfi(h_omega) - erfi(h_alpha))
///
/// Direct evaluation cancels catastrophically once both endpoints sit in the
/// same tail. Evaluation switches between a scaled direct form and an 11-term
/// asymptotic series of the error function when the erf difference drops below
/// 1e-10 relative to the larger erf term. Finite for all finite inputs.
double stable_erf_ratio(double h_alpha, double h_omega, int branch);

/// Second-moment companion of stable_erf_ratio:
///   branch > 0:  (h_alpha e^{-h_alpha^2} - h_omega e^{-h_omega^2}) / d_+
///   branch < 0:  (h_omega e^{h_omega^2}  - h_alpha e^{h_alpha^2})  / d_-
double stable_erf_ratio_sq(double h_alpha, double h_omega, int branch);

/// Log-normalization, mean and variance of the density proportional to
/// exp(-precision x^2 / 2 + field x) on [lo, hi]. Handles positive, negative
/// and exactly-zero precision (the zero case integrates the linear tilt
/// analytically). Mean is clamped to [lo, hi] and variance to
/// [0, (hi-lo)^2/4] against terminal rounding.
struct GaussTiltMoments {
    double log_z;
    double mean;
    double var;
};
GaussTiltMoments gaussian_tilt_moments(double precision, double field, double lo, double hi);

}  // namespace taprbm
