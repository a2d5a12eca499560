#include "taprbm/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "taprbm/errors.hpp"
#include "taprbm/special.hpp"

namespace taprbm {

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InputError(std::string("non-finite ") + what);
}

// Tilted truncated-Gaussian block shared by the TG and TGB families.
GaussTiltMoments tg_tilted(const TruncGaussParams& p, double b, double a) {
    if (!std::isfinite(b) || !std::isfinite(a)) {
        throw InputError("tilted_moments: non-finite cavity field");
    }
    return gaussian_tilt_moments(p.v + a, p.u + b, p.alpha, p.omega);
}

TruncGaussParams tg_part(const TgbParams& p) { return {p.u, p.v, p.alpha, p.omega}; }

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

UnitFamily family_of(const UnitParams& p) {
    return static_cast<UnitFamily>(p.index());
}

void validate(const UnitParams& p) {
    std::visit(
        [](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                check_finite(q.u, "binary field");
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                check_finite(q.u, "field u");
                check_finite(q.v, "precision v");
                check_finite(q.alpha, "bound alpha");
                check_finite(q.omega, "bound omega");
                if (!(q.alpha < q.omega)) throw InputError("truncation bounds require alpha < omega");
            } else {
                check_finite(q.rho, "rho");
                check_finite(q.u, "field u");
                check_finite(q.v, "precision v");
                check_finite(q.alpha, "bound alpha");
                check_finite(q.omega, "bound omega");
                if (!(q.alpha < q.omega)) throw InputError("truncation bounds require alpha < omega");
                if (!(q.rho > 0.0 && q.rho < 1.0)) throw InputError("rho must lie in (0,1)");
                if (q.alpha > 0.0 || q.omega < 0.0) {
                    throw InputError("TGB interval must contain 0");
                }
            }
        },
        p);
}

double support_var_bound(const UnitParams& p) {
    return std::visit(
        [](const auto& q) -> double {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                return 0.25;
            } else {
                const double w = q.omega - q.alpha;
                return 0.25 * w * w;
            }
        },
        p);
}

PriorMoments prior_moments(const UnitParams& p) {
    return std::visit(
        [](const auto& q) -> PriorMoments {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                const double m = sigmoid(q.u);
                return {0.0, m, m};
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                const GaussTiltMoments g = gaussian_tilt_moments(q.v, q.u, q.alpha, q.omega);
                return {g.log_z, g.mean, g.var + g.mean * g.mean};
            } else {
                const GaussTiltMoments g = gaussian_tilt_moments(q.v, q.u, q.alpha, q.omega);
                return {g.log_z, g.mean, g.var + g.mean * g.mean};
            }
        },
        p);
}

TiltedMoments tilted_moments(const UnitParams& p, double b, double a) {
    return tilted_moments(p, b, a, prior_moments(p));
}

TiltedMoments tilted_moments(const UnitParams& p, double b, double a, const PriorMoments& prior) {
    return std::visit(
        [&](const auto& q) -> TiltedMoments {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                if (!std::isfinite(b) || !std::isfinite(a)) {
                    throw InputError("tilted_moments: non-finite cavity field");
                }
                const double t = q.u + b - 0.5 * a;
                const double m = sigmoid(t);
                // ln Z_Q = softplus(t) - softplus(u); the direct difference
                // cancels when the tilt is small, so route through
                // ln(1 + sigm(u)(e^{t-u} - 1)) in that regime.
                const double shift = b - 0.5 * a;
                const double log_z = std::abs(shift) < 1.0
                                         ? std::log1p(sigmoid(q.u) * std::expm1(shift))
                                         : softplus(t) - softplus(q.u);
                // sigm(t) sigm(-t) avoids the 1 - m cancellation in the tails
                return {log_z, m, m * sigmoid(-t)};
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                const GaussTiltMoments g = tg_tilted(q, b, a);
                return {g.log_z - prior.log_norm, g.mean, g.var};
            } else {
                const GaussTiltMoments g = tg_tilted(tg_part(q), b, a);
                const double log_zq_tg = g.log_z - prior.log_norm;
                const double log_zq =
                    log_sum_exp(std::log1p(-q.rho), std::log(q.rho) + log_zq_tg);
                const double p_nz = std::exp(std::log(q.rho) + log_zq_tg - log_zq);
                const double mean = p_nz * g.mean;
                const double second = p_nz * (g.var + g.mean * g.mean);
                const double var =
                    std::clamp(second - mean * mean, 0.0, support_var_bound(p));
                return {log_zq, mean, var};
            }
        },
        p);
}

double conditional_mean(const UnitParams& p, double b) {
    return tilted_moments(p, b, 0.0).a;
}

double conditional_mean(const UnitParams& p, double b, const PriorMoments& prior) {
    return tilted_moments(p, b, 0.0, prior).a;
}

double log_prior(const UnitParams& p, double x) {
    if (!std::isfinite(x)) throw InputError("log_prior: non-finite x");
    return std::visit(
        [&](const auto& q) -> double {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                if (x == 1.0) return -softplus(-q.u);
                if (x == 0.0) return -softplus(q.u);
                return kNegInf;
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                if (x < q.alpha || x > q.omega) return kNegInf;
                const PriorMoments pm = prior_moments(p);
                return -0.5 * q.v * x * x + q.u * x - pm.log_norm;
            } else {
                if (x == 0.0) return std::log1p(-q.rho);
                if (x < q.alpha || x > q.omega) return kNegInf;
                const PriorMoments pm = prior_moments(p);
                return std::log(q.rho) - 0.5 * q.v * x * x + q.u * x - pm.log_norm;
            }
        },
        p);
}

UnitGrad grad_log_prior(const UnitParams& p, double x) {
    if (!std::isfinite(x)) throw InputError("grad_log_prior: non-finite x");
    return std::visit(
        [&](const auto& q) -> UnitGrad {
            using T = std::decay_t<decltype(q)>;
            UnitGrad g;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                g.d_u = x - sigmoid(q.u);
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                const PriorMoments pm = prior_moments(p);
                g.d_u = x - pm.mean;
                g.d_v = -0.5 * (x * x - pm.second);
            } else {
                // The point mass carries no (u, v) dependence; only the
                // continuous component contributes there.
                g.d_rho = ((x != 0.0 ? 1.0 : 0.0) - q.rho) / (q.rho * (1.0 - q.rho));
                if (x != 0.0) {
                    const PriorMoments pm = prior_moments(p);
                    g.d_u = x - pm.mean;
                    g.d_v = -0.5 * (x * x - pm.second);
                }
            }
            return g;
        },
        p);
}

UnitGrad grad_log_z(const UnitParams& p, double b, double a) {
    return std::visit(
        [&](const auto& q) -> UnitGrad {
            using T = std::decay_t<decltype(q)>;
            UnitGrad g;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                const TiltedMoments t = tilted_moments(p, b, a);
                g.d_u = t.a - sigmoid(q.u);
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                const PriorMoments pm = prior_moments(p);
                const GaussTiltMoments tq = tg_tilted(q, b, a);
                g.d_u = tq.mean - pm.mean;
                g.d_v = -0.5 * ((tq.var + tq.mean * tq.mean) - pm.second);
            } else {
                const PriorMoments pm = prior_moments(p);
                const GaussTiltMoments tq = tg_tilted(tg_part(q), b, a);
                const double log_zq_tg = tq.log_z - pm.log_norm;
                const double log_zq =
                    log_sum_exp(std::log1p(-q.rho), std::log(q.rho) + log_zq_tg);
                const double p_nz = std::exp(std::log(q.rho) + log_zq_tg - log_zq);
                g.d_u = p_nz * (tq.mean - pm.mean);
                g.d_v = -0.5 * p_nz * ((tq.var + tq.mean * tq.mean) - pm.second);
                g.d_rho = (p_nz - q.rho) / (q.rho * (1.0 - q.rho));
            }
            return g;
        },
        p);
}

}  // namespace taprbm
