#include "taprbm/special.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_dawson.h>
#include <gsl/gsl_sf_erf.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "taprbm/errors.hpp"

namespace taprbm {

namespace {

const double kSqrtPi = std::sqrt(M_PI);
const double kInf = std::numeric_limits<double>::infinity();

// Relative-smallness trigger for the series fallback: the erf difference is
// considered degenerate once it drops below 1e-10 of the larger erf term.
constexpr double kSeriesTrigger = 1e-10;
// The asymptotic series is only meaningful in the tail; closer in, a midpoint
// expansion takes over.
constexpr double kSeriesMinH = 4.5;
// Interval thinner than this on the standardized scale bypasses the erf
// machinery (midpoint expansion is exact to ~(width^2/6)^3 there).
constexpr double kThinWidth = 0.02;
// Beyond this endpoint the closed-form variance identity amplifies both
// roundoff and the series truncation as h^4: the first/second moments switch
// to a slice decomposition there (ln Z keeps the erf/series route, whose
// error is not amplified).
constexpr double kDeepTailH = 4.5;

struct GslInit {
    GslInit() { gsl_set_error_handler_off(); }
};
const GslInit gsl_init;

double checked_gsl(int status, const gsl_sf_result& r, const char* name, double x) {
    if (status != GSL_SUCCESS && status != GSL_EUNDRFLW) {
        throw NumericalError(std::string(name) + " failed for argument " + std::to_string(x), x, 0.0);
    }
    return r.val;
}

// Asymptotic tail sum S(h) = sum_{k=0}^{10} s_k (2k-1)!! / (2h^2)^k with
// s_k = (-1)^k on the erf branch and +1 on the erfi branch.
double tail_sum(double h, bool alternating) {
    const double step = 1.0 / (2.0 * h * h);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 11; ++k) {
        term *= (2 * k - 1) * step;
        sum += (alternating && (k & 1)) ? -term : term;
    }
    return sum;
}

// Divided difference D(h_a) - D(h_o) of D(h) = S(h)/h for 0 < h_a <= h_o,
// evaluated term by term so that nearby arguments do not cancel.
double tail_ratio_diff(double h_a, double h_o, bool alternating) {
    const double lr = std::log1p(-(h_o - h_a) / h_o);  // ln(h_a / h_o) <= 0
    const double step = 1.0 / (2.0 * h_a * h_a);
    double coeff = 1.0 / h_a;  // c_k 2^{-k} h_a^{-(2k+1)}
    double sum = 0.0;
    for (int k = 0; k < 11; ++k) {
        if (k > 0) coeff *= (2 * k - 1) * step;
        const double diff = -std::expm1((2 * k + 1) * lr);  // 1 - (h_a/h_o)^{2k+1}
        const double t = coeff * diff;
        sum += (alternating && (k & 1)) ? -t : t;
    }
    return sum;
}

struct RatioPack {
    double r1;      // first-moment endpoint ratio
    double r2;      // second-moment endpoint ratio
    double lnpart;  // scaled log of the erf/erfi difference (see call sites)
};

// erf branch, interval straddling the mode (h_a < 0 <= h_o).
// lnpart = ln d_+ directly; no tail cancellation is possible here.
RatioPack erf_straddle(double h_a, double h_o) {
    const double d = std::erf(h_o) - std::erf(h_a);
    const double ea = std::exp(-h_a * h_a);
    const double eo = std::exp(-h_o * h_o);
    return {(ea - eo) / d, (h_a * ea - h_o * eo) / d, std::log(d)};
}

// Midpoint expansion for nearly coincident endpoints, valid while
// u * max(1, |hbar|) stays small. sign = +1 for the erf branch, -1 for erfi.
RatioPack midpoint_pack(double h_a, double h_o, int sign) {
    const double u = 0.5 * (h_o - h_a);
    const double hb = 0.5 * (h_a + h_o);
    const double hb2 = hb * hb;
    const double q = u * u / 3.0;
    double r1, r2, corr;
    if (sign > 0) {
        corr = q * (2.0 * hb2 - 1.0);
        r1 = kSqrtPi * hb * (1.0 + q * (2.0 * hb2 - 3.0)) / (1.0 + corr);
        r2 = -0.5 * kSqrtPi *
             ((1.0 - 2.0 * hb2) + (u * u / 6.0) * (-8.0 * hb2 * hb2 + 24.0 * hb2 - 6.0)) /
             (1.0 + corr);
    } else {
        corr = q * (2.0 * hb2 + 1.0);
        r1 = kSqrtPi * hb * (1.0 + q * (2.0 * hb2 + 3.0)) / (1.0 + corr);
        r2 = 0.5 * kSqrtPi *
             ((1.0 + 2.0 * hb2) + (u * u / 6.0) * (8.0 * hb2 * hb2 + 24.0 * hb2 + 6.0)) /
             (1.0 + corr);
    }
    // erf branch: ln(e^{h_a^2} d_+); erfi branch: ln((sqrt(pi)/2) e^{-h_o^2} d_-).
    double lnpart;
    if (u == 0.0) {
        lnpart = -kInf;
    } else if (sign > 0) {
        lnpart = std::log(4.0 * u / kSqrtPi) - u * (h_a + hb) + std::log1p(corr);
    } else {
        lnpart = std::log(2.0 * u) - u * (h_o + hb) + std::log1p(corr);
    }
    return {r1, r2, lnpart};
}

// erf branch with both endpoints in the right tail (0 <= h_a <= h_o).
// lnpart = ln(e^{h_a^2} d_+).
RatioPack erf_samesign(double h_a, double h_o) {
    const double dh = h_o - h_a;
    if (dh == 0.0) return midpoint_pack(h_a, h_o, +1);
    const double delta = dh * (h_a + h_o);
    const double one_m_ed = -std::expm1(-delta);  // 1 - e^{-delta}

    const double lec_a = log_erfc(h_a);
    const double lec_o = log_erfc(h_o);
    const double d_val = std::exp(lec_a) * (-std::expm1(lec_o - lec_a));
    const double erf_hi = -std::expm1(lec_o);
    const bool degenerate = d_val < kSeriesTrigger * erf_hi;

    if (degenerate && h_a >= kSeriesMinH) {
        const double d_o = tail_sum(h_o, true) / h_o;
        const double den = tail_ratio_diff(h_a, h_o, true) + d_o * one_m_ed;
        const double ed = std::exp(-delta);
        return {kSqrtPi * one_m_ed / den, kSqrtPi * (h_a - h_o * ed) / den,
                std::log(den / kSqrtPi)};
    }
    // Below the series region the scaled form never cancels except for nearly
    // coincident endpoints, which the midpoint expansion owns.
    const double hb = 0.5 * (h_a + h_o);
    if (0.5 * dh * std::max(1.0, hb) <= 1e-2) {
        return midpoint_pack(h_a, h_o, +1);
    }
    const double ed = std::exp(-delta);
    const double den = erfcx(h_a) - ed * erfcx(h_o);
    return {one_m_ed / den, (h_a - h_o * ed) / den, std::log(den)};
}

// erfi branch after symmetrization (h_a + h_o >= 0, so h_o >= |h_a|).
// lnpart = ln((sqrt(pi)/2) e^{-h_o^2} d_-).
RatioPack erfi_pack(double h_a, double h_o) {
    const double dh = h_o - h_a;
    if (dh == 0.0) return midpoint_pack(h_a, h_o, -1);
    const double delta = dh * (h_a + h_o);  // h_o^2 - h_a^2 >= 0
    const double ed = std::exp(-delta);
    const double one_m_ed = -std::expm1(-delta);

    const double f_o = dawson(h_o);
    const double f_a = dawson(h_a);
    const double denom_s = f_o - ed * f_a;  // (sqrt(pi)/2) e^{-h_o^2} d_-
    const bool degenerate =
        denom_s < kSeriesTrigger * std::max(std::abs(f_o), std::abs(ed * f_a));

    if (degenerate && h_a >= kSeriesMinH) {
        // den_minus = D(h_o) - e^{-delta} D(h_a)
        //           = -(D(h_a) - D(h_o)) + D(h_a)(1 - e^{-delta})
        const double den_minus =
            -tail_ratio_diff(h_a, h_o, false) + (tail_sum(h_a, false) / h_a) * one_m_ed;
        return {kSqrtPi * one_m_ed / den_minus, kSqrtPi * (h_o - h_a * ed) / den_minus,
                std::log(den_minus) - std::log(2.0)};
    }
    if (0.5 * dh * std::max(1.0, 0.5 * (h_a + h_o)) <= 1e-2) {
        return midpoint_pack(h_a, h_o, -1);
    }
    return {0.5 * kSqrtPi * one_m_ed / denom_s, 0.5 * kSqrtPi * (h_o - h_a * ed) / denom_s,
            std::log(denom_s)};
}

// Moments mu_1..mu_6 of u under the linearly tilted uniform density on
// [-w, w], weight e^{c u}, y = c w.
struct UniformTiltMoments {
    double mu[7];   // mu[k] = E[u^k], mu[0] = 1
    double log_i0;  // ln integral of e^{cu} over [-w, w]
};

UniformTiltMoments uniform_tilt(double w, double c) {
    UniformTiltMoments out{};
    out.mu[0] = 1.0;
    const double y = c * w;
    if (std::abs(y) < 0.5) {
        // J_k = sum over j with k+j even of y^j / (j! (k+j+1)); mu_k = w^k J_k / J_0.
        double j_acc[7] = {0, 0, 0, 0, 0, 0, 0};
        double yj = 1.0;  // y^j / j!
        for (int j = 0; j < 34; ++j) {
            for (int k = 0; k < 7; ++k) {
                if ((k + j) % 2 == 0) j_acc[k] += yj / (k + j + 1);
            }
            yj *= y / (j + 1);
            if (std::abs(yj) < 1e-20) break;
        }
        double wk = 1.0;
        for (int k = 1; k < 7; ++k) {
            wk *= w;
            out.mu[k] = wk * j_acc[k] / j_acc[0];
        }
        out.log_i0 = std::log(2.0 * w * j_acc[0]);
        return out;
    }
    const double coth_y = 1.0 / std::tanh(y);
    const double w2 = w * w;
    out.mu[1] = w * (coth_y - 1.0 / y);
    out.mu[2] = w2 - (2.0 / c) * out.mu[1];
    out.mu[3] = w2 * w * coth_y - (3.0 / c) * out.mu[2];
    out.mu[4] = w2 * w2 - (4.0 / c) * out.mu[3];
    out.mu[5] = w2 * w2 * w * coth_y - (5.0 / c) * out.mu[4];
    out.mu[6] = w2 * w2 * w2 - (6.0 / c) * out.mu[5];
    const double ay = std::abs(y);
    if (ay > 30.0) {
        out.log_i0 = std::log(w / ay) + ay + std::log1p(-std::exp(-2.0 * ay));
    } else {
        out.log_i0 = std::log(2.0 * w * std::sinh(y) / y);
    }
    return out;
}

double tilt_exponent(double precision, double field, double x) {
    return -0.5 * precision * x * x + field * x;
}

// Second-order midpoint evaluation: exact tilted-uniform moments plus the
// expansion of e^{-P u^2/2} through (P u^2)^2. Relative error is
// O((eta * width)^6); exact when precision == 0.
GaussTiltMoments midpoint_moments(double precision, double field, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double w = 0.5 * (hi - lo);
    const double slope = field - precision * mid;
    const UniformTiltMoments m = uniform_tilt(w, slope);
    const double p2 = 0.5 * precision;
    const double n0 = 1.0 - p2 * m.mu[2] + 0.5 * p2 * p2 * m.mu[4];
    const double n1 = m.mu[1] - p2 * m.mu[3] + 0.5 * p2 * p2 * m.mu[5];
    const double n2 = m.mu[2] - p2 * m.mu[4] + 0.5 * p2 * p2 * m.mu[6];
    const double mean_u = n1 / n0;
    GaussTiltMoments out;
    out.mean = mid + mean_u;
    out.var = n2 / n0 - mean_u * mean_u;
    out.log_z = tilt_exponent(precision, field, mid) + m.log_i0 + std::log(n0);
    return out;
}

// Deep-tail first/second moments: the interval is cut into slices thin enough
// for midpoint_moments and the slice mixtures are recombined. Only reached
// when the mode lies far outside the support, where the slice masses decay
// monotonically (allowing early exit).
void deep_tail_mean_var(double precision, double field, double lo, double hi, bool decreasing,
                        double* mean, double* var) {
    const double eta = std::sqrt(0.5 * std::abs(precision));
    const int n = std::max(1, static_cast<int>(std::ceil(eta * (hi - lo) / 0.01)));
    const double width = (hi - lo) / n;

    // first pass: slice weights and means
    double ln_max = -kInf;
    std::vector<GaussTiltMoments> slices;
    slices.reserve(64);
    for (int i = 0; i < n; ++i) {
        const double a = (decreasing ? lo + i * width : hi - (i + 1) * width);
        const GaussTiltMoments g = midpoint_moments(precision, field, a, a + width);
        if (i == 0) ln_max = g.log_z;
        slices.push_back(g);
        if (g.log_z < ln_max - 45.0) break;  // remaining mass below 1e-19 of total
        ln_max = std::max(ln_max, g.log_z);
    }
    double wsum = 0.0, msum = 0.0;
    for (const auto& s : slices) {
        const double wgt = std::exp(s.log_z - ln_max);
        wsum += wgt;
        msum += wgt * s.mean;
    }
    const double mu = msum / wsum;
    double vsum = 0.0;
    for (const auto& s : slices) {
        const double wgt = std::exp(s.log_z - ln_max);
        const double d = s.mean - mu;
        vsum += wgt * (s.var + d * d);
    }
    *mean = mu;
    *var = vsum / wsum;
}

}  // namespace

double erfcx(double x) {
    if (x < 0.0) {
        if (x < -26.0) {
            throw NumericalError("erfcx overflow for argument " + std::to_string(x), x, 0.0);
        }
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x < 6.0) {
        return std::exp(x * x) * std::erfc(x);
    }
    // Laplace continued fraction via modified Lentz iteration.
    const double tiny = 1e-300;
    double f = x != 0.0 ? x : tiny;
    double c_l = f;
    double d_l = 0.0;
    // CF: erfcx(x) sqrt(pi) = 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
    for (int k = 1; k <= 60; ++k) {
        const double a_k = 0.5 * k;
        d_l = x + a_k * d_l;
        if (d_l == 0.0) d_l = tiny;
        d_l = 1.0 / d_l;
        c_l = x + a_k / c_l;
        if (c_l == 0.0) c_l = tiny;
        const double delta = c_l * d_l;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return 1.0 / (kSqrtPi * f);
}

double dawson(double x) {
    gsl_sf_result r;
    return checked_gsl(gsl_sf_dawson_e(x, &r), r, "dawson", x);
}

double log_erfc(double x) {
    gsl_sf_result r;
    return checked_gsl(gsl_sf_log_erfc_e(x, &r), r, "log_erfc", x);
}

namespace {

RatioPack dispatch_pack(double h_a, double h_o, int branch, bool* flipped) {
    if (h_a > h_o) std::swap(h_a, h_o);  // both ratios are invariant under the swap
    const bool flip = (h_a + h_o) < 0.0;
    if (flip) {
        const double t = h_a;
        h_a = -h_o;
        h_o = -t;
    }
    *flipped = flip;
    if (branch > 0) {
        return (h_a < 0.0) ? erf_straddle(h_a, h_o) : erf_samesign(h_a, h_o);
    }
    return erfi_pack(h_a, h_o);
}

}  // namespace

double stable_erf_ratio(double h_alpha, double h_omega, int branch) {
    if (!std::isfinite(h_alpha) || !std::isfinite(h_omega)) {
        throw InputError("stable_erf_ratio: non-finite endpoint");
    }
    bool flip = false;
    const RatioPack p = dispatch_pack(h_alpha, h_omega, branch, &flip);
    return flip ? -p.r1 : p.r1;
}

double stable_erf_ratio_sq(double h_alpha, double h_omega, int branch) {
    if (!std::isfinite(h_alpha) || !std::isfinite(h_omega)) {
        throw InputError("stable_erf_ratio_sq: non-finite endpoint");
    }
    bool flip = false;
    return dispatch_pack(h_alpha, h_omega, branch, &flip).r2;
}

GaussTiltMoments gaussian_tilt_moments(double precision, double field, double lo, double hi) {
    if (!std::isfinite(precision) || !std::isfinite(field) || !std::isfinite(lo) ||
        !std::isfinite(hi)) {
        throw InputError("gaussian_tilt_moments: non-finite input");
    }
    if (!(lo < hi)) {
        throw InputError("gaussian_tilt_moments: empty interval");
    }

    const double len = hi - lo;
    const double eta = std::sqrt(0.5 * std::abs(precision));

    GaussTiltMoments out{};
    if (precision == 0.0 || eta * len < kThinWidth) {
        out = midpoint_moments(precision, field, lo, hi);
    } else {
        const double m = field / precision;
        double h_lo = eta * (lo - m);
        double h_hi = eta * (hi - m);
        const bool flip = (h_lo + h_hi) < 0.0;
        double h_a = flip ? -h_hi : h_lo;
        double h_o = flip ? -h_lo : h_hi;
        const double m_f = flip ? -m : m;

        if (precision > 0.0) {
            const bool straddle = h_a < 0.0;
            const RatioPack p = straddle ? erf_straddle(h_a, h_o) : erf_samesign(h_a, h_o);
            const double half_log = 0.5 * std::log(M_PI / (2.0 * precision));
            if (straddle) {
                out.log_z = field * field / (2.0 * precision) + half_log + p.lnpart;
            } else {
                // anchored at the endpoint closest to the mode
                const double anchor = flip ? hi : lo;
                out.log_z = tilt_exponent(precision, field, anchor) + half_log + p.lnpart;
            }
            if (!straddle && h_a >= kDeepTailH) {
                // The closed-form variance cancels as h^4 out here; recombine
                // thin slices instead (mass decays away from the near endpoint,
                // which is `lo` in flipped coordinates = the endpoint nearest
                // the mode).
                deep_tail_mean_var(precision, field, lo, hi, !flip, &out.mean, &out.var);
            } else {
                const double mean_f = m_f + std::sqrt(2.0 / (M_PI * precision)) * p.r1;
                out.mean = flip ? -mean_f : mean_f;
                out.var =
                    (1.0 + (2.0 / kSqrtPi) * p.r2 - (2.0 / M_PI) * p.r1 * p.r1) / precision;
            }
        } else {
            const double ap = -precision;
            const RatioPack p = erfi_pack(h_a, h_o);
            const double mean_f = m_f + std::sqrt(2.0 / (M_PI * ap)) * p.r1;
            out.mean = flip ? -mean_f : mean_f;
            const double dm = mean_f - m_f;
            out.var = ((2.0 / kSqrtPi) * p.r2 - 1.0) / ap - dm * dm;
            // anchored at the dominant endpoint (the one mapping to h_o)
            const double anchor = flip ? lo : hi;
            out.log_z =
                tilt_exponent(precision, field, anchor) + 0.5 * std::log(2.0 / ap) + p.lnpart;
        }
    }

    if (!std::isfinite(out.log_z) || !std::isfinite(out.mean) || !std::isfinite(out.var)) {
        throw NumericalError("gaussian_tilt_moments: non-finite result", field, precision);
    }
    out.mean = std::clamp(out.mean, lo, hi);
    out.var = std::clamp(out.var, 0.0, 0.25 * len * len);
    return out;
}

}  // namespace taprbm
