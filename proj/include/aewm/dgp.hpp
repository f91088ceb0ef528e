#pragma once

#include "aewm/dataset.hpp"
#include "aewm/policy.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aewm {

struct SaConfig; // optimize.hpp

// Synthetic designs. Illustrative (p = 1, e = 0.5):
//   Y = 20 + 3A + X - 5AX + (1 + A + 2AX) eps,  X ~ U[0,1], eps ~ N(0,1).
// AwTau1 / AwTau2 (p = 4, e = 2/3):
//   Y = 10 + (X3 + X4)_+ + A tau(X) + eps,  X ~ N(0, I4), eps ~ N(0,1),
// with tau1(x) = ((x1)_+ + (x2)_+ - 1)/2 and tau2(x) = sign(x1 x2)/2
// (sign(0) taken as 0).
enum class DgpKind { Illustrative, AwTau1, AwTau2 };

struct DgpSpec {
    DgpKind kind = DgpKind::Illustrative;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

std::size_t covariate_dim(DgpKind kind);
double dgp_propensity(DgpKind kind);
std::string dgp_name(DgpKind kind);
DgpKind dgp_from_name(const std::string& name);

// Outcome equations, exposed for direct checks.
double cate_tau1(std::span<const double> x);
double cate_tau2(std::span<const double> x);
// Both potential outcomes of the Illustrative design at (x, eps).
void illustrative_outcomes(double x, double eps, double& y0, double& y1);

// Draws a counterfactual superpopulation: y0/y1 populated, known_propensity
// set, y the realized arm. Row i's draws come from a per-row substream of
// the seed, so results are identical for any n covering the row and any
// parallel schedule.
ObservationTable generate(const DgpSpec& spec, int workers = 0);

// Tail average of post-treatment outcomes y(pi) = pi(x) y1 + (1-pi(x)) y0 at
// level alpha. Requires counterfactual columns.
double oracle_welfare(const ObservationTable& table, const PolicyRule& policy, double alpha);

// Welfare criteria computed on the post-treatment outcome vector.
struct Criterion {
    enum class Kind { TailAverage, Mean, Gini, Quantile };
    Kind kind = Kind::TailAverage;
    double param = 0.5; // alpha for TailAverage/Quantile, k for Gini

    static Criterion tail_average(double alpha) { return {Kind::TailAverage, alpha}; }
    static Criterion mean() { return {Kind::Mean, 0.0}; }
    static Criterion gini(double k) { return {Kind::Gini, k}; }
    static Criterion quantile(double alpha) { return {Kind::Quantile, alpha}; }

    std::string name() const;
};

double evaluate_criterion(std::span<const double> outcomes, const Criterion& criterion);

struct OracleOptimum {
    PolicyRule policy;
    double value = 0.0;
};

// Best policy in the class under the criterion, on the oracle objective:
// exhaustive for constants, cutoff grid for thresholds, multi-start
// simulated annealing for linear rules.
OracleOptimum optimize_oracle(const ObservationTable& table, const PolicyClassSpec& class_spec,
                              const Criterion& criterion, const SaConfig& sa, int workers = 0);

// Pointwise first-best rule 1{tau_hat(x, eta) > 0} selected over an eta
// grid by the dual criterion; tau_hat smooths the pseudo-outcome contrast
// (y1 - eta)_- - (y0 - eta)_- over covariates with a product Gaussian
// kernel fitted on a strided subsample of at most train_cap rows.
struct FirstBestResult {
    double eta_star = 0.0;
    double value = 0.0; // tail average of the selected rule
    std::vector<std::uint8_t> treat;
    double treated_fraction = 0.0;
};

FirstBestResult oracle_first_best(const ObservationTable& table, double alpha,
                                  std::span<const double> eta_grid, double bandwidth = 1.0,
                                  std::size_t train_cap = 4000, int workers = 0);

// Best-in-class oracle welfare minus the oracle welfare of the learned
// policy; nonnegative up to optimizer noise.
double measure_regret(const ObservationTable& table, const PolicyRule& learned,
                      const PolicyClassSpec& class_spec, double alpha, const SaConfig& sa,
                      int workers = 0);

} // namespace aewm
