#pragma once

#include "aewm/policy.hpp"

#include <span>
#include <vector>

namespace aewm {

// (u)_- = min(u, 0).
inline double neg_part(double u) { return u < 0.0 ? u : 0.0; }

// Exact lower-tail average of the empirical quantile function:
//   (1/alpha) * int_0^alpha F_n^{-1}(t) dt
// With m = floor(alpha*n) and ascending order statistics v_(1) <= ... <= v_(n),
//   (1/(alpha*n)) [ sum_{i<=m} v_(i) + (alpha*n - m) * v_(m+1) ],
// the partial term absent when alpha*n is integral. alpha in (0, 1];
// alpha = 1 is the plain mean.
double empirical_cvar(std::span<const double> values, double alpha);

// Allocation-free variant for hot loops; reorders its input (partial
// selection).
double empirical_cvar_inplace(std::span<double> values, double alpha);

// Dual objective (1/alpha) * mean((v - eta)_-) + eta. For every eta this is
// a lower bound on empirical_cvar, with equality on the optimal interval.
double dual_value(std::span<const double> values, double alpha, double eta);

struct DualSup {
    double eta_star;
    double value;
};

// Maximizer of the dual: eta* = v_(ceil(alpha*n)), the empirical
// alpha-quantile; the value equals empirical_cvar exactly.
DualSup dual_sup(std::span<const double> values, double alpha);

// Rank weight of order statistic i (1-based) for the extended Gini welfare:
//   (1 - (i-1)/n)^{k-1} - (1 - i/n)^{k-1}
// computed as a ratio of integer powers so the weights telescope cleanly.
std::vector<double> gini_rank_weights(std::size_t n, double k);

// Extended Gini social welfare sum_i v_(i) * w_i, k >= 2. k = 2 is the
// arithmetic mean (the weights are identically 1/n in that case).
double gini_welfare(std::span<const double> values, double k);

struct GiniIdentityCheck {
    double weight_form;     // gini_welfare
    double integral_form;   // (k-2) * int_0^1 W_alpha * alpha * (1-alpha)^{k-3} d(alpha)
    double raw_residual;    // integral_form - weight_form
    double scaled_residual; // (k-1) * integral_form - weight_form
};

// Numerical check of the stated relation between the extended Gini welfare
// and the tail-average family. Direct integration reproduces the weight form
// only after multiplying by (k-1); both residuals are reported so the
// discrepancy is visible rather than silently resolved. Requires k > 2.
GiniIdentityCheck gini_integral_identity(std::span<const double> values, double k);

// v_(ceil(alpha*n)), the empirical alpha-quantile. alpha in (0, 1].
double quantile_welfare(std::span<const double> values, double alpha);

// Joint argument theta = (pi, eta) of the dual criterion.
struct Theta {
    PolicyRule policy;
    double eta = 0.0;
};

// Compact dual feasible interval; empirically the observed outcome range.
struct FeasibleEtaInterval {
    double lo = 0.0;
    double hi = 0.0;

    static FeasibleEtaInterval from_outcomes(std::span<const double> y);
};

// Candidate eta values for profiling the dual criterion: all observed
// outcomes (where the IPW part kinks) plus a uniform grid over the feasible
// interval; ascending, deduplicated.
std::vector<double> eta_candidates(std::span<const double> y, const FeasibleEtaInterval& interval,
                                   int grid_points = 512);

// One observation's contribution to the doubly robust criterion:
//   (1/a)[ (1-pi) mu0 + pi mu1 ] + eta
//   + (1/a) (1-pi)(1-A)/(1-e) ( (y-eta)_- - mu0 )
//   + (1/a) pi A / e         ( (y-eta)_- - mu1 )
// pi_x is the policy decision at x, mu0/mu1/e the nuisance evaluations.
// With mu0 = mu1 = 0 this reduces row-wise to the IPW form
// (1/a) w(x,A,pi) (y-eta)_- + eta.
double dr_score(double y, int a, int pi_x, double eta, double mu0, double mu1, double e,
                double alpha);

// Per-observation doubly robust scores for a fixed (policy, eta, alpha).
// The mean of gamma is the criterion estimate V_n(theta).
struct ScoreSet {
    double alpha = 0.0;
    Theta theta;
    std::vector<double> gamma;

    double mean() const;
};

} // namespace aewm
