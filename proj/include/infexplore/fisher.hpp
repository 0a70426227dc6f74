#pragma once

// Information distance between Bernoulli means and the fixed-budget rate
// constant. theta(a) = arccos(1 - 2a) maps a mean in [0,1] to arc length
// in [0, pi]; distances between means are absolute differences in theta.

namespace infexplore::fisher {

// arccos(1 - 2a), monotone increasing on [0,1]. Throws std::domain_error
// outside [0,1].
double theta(double a);

// Exact inverse of theta: (1 - cos t) / 2 for t in [0, pi].
double theta_inv(double t);

// |theta(a) - theta(b)|.
double fisher_distance(double a, double b);

// fisher_distance(alpha, beta)^2 / 2 for 0 <= beta < alpha <= 1. Governs the
// optimal failure exponent N / ln^2 N in the fixed-budget setting.
double rate_constant(double alpha, double beta);

// Independent route to the same distance: adaptive Simpson quadrature of
// integral over [beta, alpha] of dx / sqrt(x (1-x)), evaluated after the
// substitution x = (1 - cos u) / 2 so the endpoint singularities vanish.
// Used by tests as an oracle against the closed form.
double fisher_distance_quadrature(double alpha, double beta, double abs_tol);

}  // namespace infexplore::fisher
