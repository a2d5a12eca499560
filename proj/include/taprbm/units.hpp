#pragma once

#include <cstdint>
#include <variant>

namespace taprbm {

// Site prior families. Binary units live on {0,1}; the truncated families
// carry finite bounds [alpha, omega]. Natural parameterization throughout:
// the Gaussian part is exp(-v x^2 / 2 + u x), so u = mu/sigma^2, v = 1/sigma^2.

struct BinaryParams {
    double u = 0.0;  // log-odds field
};

struct TruncGaussParams {
    double u = 0.0;
    double v = 1.0;  // any real; v <= 0 is meaningful only combined with a cavity precision
    double alpha = 0.0;
    double omega = 1.0;
};

struct TgbParams {  // truncated Gauss-Bernoulli: (1-rho) delta(x) + rho TG(x)
    double rho = 0.5;
    double u = 0.0;
    double v = 1.0;
    double alpha = 0.0;
    double omega = 1.0;
};

using UnitParams = std::variant<BinaryParams, TruncGaussParams, TgbParams>;

enum class UnitFamily : std::uint8_t { Binary = 0, TruncGauss = 1, TruncGaussBernoulli = 2 };

UnitFamily family_of(const UnitParams& p);

/// Throws InputError when the parameters violate the family's domain
/// (non-finite fields, alpha >= omega, rho outside (0,1), 0 outside the
/// TGB interval).
void validate(const UnitParams& p);

/// Moments of the tilted distribution Q(x) ~ P(x; theta) exp(-A x^2/2 + B x).
struct TiltedMoments {
    double log_z;  // ln Z_Q with Z_Q = integral of P(x) exp(-A x^2/2 + B x)
    double a;      // E_Q[x]
    double c;      // Var_Q[x], >= 0
};

/// Prior-side constants reused across many tilted evaluations of one site.
struct PriorMoments {
    double log_norm;  // ln integral of the unnormalized Gaussian part (0 for binary)
    double mean;
    double second;  // E[x^2] under the prior's continuous component
};

PriorMoments prior_moments(const UnitParams& p);

TiltedMoments tilted_moments(const UnitParams& p, double b, double a);
TiltedMoments tilted_moments(const UnitParams& p, double b, double a, const PriorMoments& prior);

/// f(B; theta) = E[x] under the prior tilted by the linear field B alone.
double conditional_mean(const UnitParams& p, double b);
double conditional_mean(const UnitParams& p, double b, const PriorMoments& prior);

/// Exact log-density at x, point-mass components included. Out-of-support x
/// yields -infinity by contract.
double log_prior(const UnitParams& p, double x);

/// Gradient of ln P(x; theta) / ln Z_Q(B, A; theta) with respect to each
/// family parameter. Unused slots stay zero.
struct UnitGrad {
    double d_u = 0.0;
    double d_v = 0.0;
    double d_rho = 0.0;
};

UnitGrad grad_log_prior(const UnitParams& p, double x);
UnitGrad grad_log_z(const UnitParams& p, double b, double a);

/// Variance upper bound implied by the support: width^2/4 for truncated
/// families, 1/4 for binary.
double support_var_bound(const UnitParams& p);

double sigmoid(double x);
double softplus(double x);

}  // namespace taprbm
