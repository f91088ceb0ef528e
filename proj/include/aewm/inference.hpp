#pragma once

#include "aewm/dgp.hpp"
#include "aewm/optimize.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace aewm {

// Wald interval for the mean of the doubly robust scores with
// se = sqrt( (1/(n(n-1))) sum (gamma_i - mean)^2 ). Requires n >= 2.
WaldInterval wald_ci(std::span<const double> gammas, double level);
WaldInterval wald_ci(const ScoreSet& scores, double level);

struct BootstrapConfig {
    int B = 100;
    // Numerical delta-method step; <= 0 selects the n^{-1/4} default.
    double epsilon = -1.0;
    double level = 0.95;
    std::uint64_t seed = 0;
    // Reduced budget for the per-replicate warm-started maximization.
    int sa_iterations = 1000;
};

struct BootstrapResult {
    int B = 0;
    double epsilon_n = 0.0;
    double level = 0.95;
    std::vector<double> psi_prime; // one draw per kept replicate
    double c_level = 0.0;          // level-quantile of psi_prime
    double q_level = 0.0;          // level-quantile of |psi_prime|
    double estimate = 0.0;         // sup of the unperturbed criterion
    double one_sided_lo = 0.0;     // [one_sided_lo, infinity)
    double two_sided_lo = 0.0;
    double two_sided_hi = 0.0;
    int dropped = 0;
    std::string multiplier_kind = "gaussian";
};

// Multiplier-bootstrap uniform inference for the optimal welfare via the
// numerical delta method. Each replicate perturbs the criterion with
// centered standard-normal multipliers,
//   V_n(theta) + eps_n n^{-1/2} sum_i xi_i (g_theta(Z_i) - V_n(theta)),
// re-maximizes over the class (warm-started at theta_hat with a reduced
// budget), and records psi'_b = (sup perturbed - sup unperturbed) / eps_n.
// Replicates whose maximization returns a non-finite value are dropped;
// more than 10% dropped is an error. Fixed (seed, B, epsilon) reproduce the
// draws bitwise.
BootstrapResult bootstrap_optimal_welfare(const ObservationTable& table, double alpha,
                                          const PolicyClassSpec& class_spec,
                                          const NuisanceModel& nuisance,
                                          const LearnResult& theta_hat,
                                          const BootstrapConfig& config, int workers = 0);

struct SimulationMetrics {
    std::size_t n = 0;
    double alpha = 0.0;
    int reps = 0;
    double truth = 0.0;
    double avg_treated_fraction = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double coverage_95 = 0.0;
};

struct CoverageConfig {
    DgpKind dgp = DgpKind::AwTau1;
    double alpha = 0.25;
    std::size_t n = 1000;
    int reps = 1000;
    std::uint64_t base_seed = 0;
    double ci_level = 0.95;
    // Supplied superpopulation truth; NaN means "compute it once" from a
    // superpopulation of truth_superpop_n rows.
    double truth = std::numeric_limits<double>::quiet_NaN();
    std::size_t truth_superpop_n = 1000000;
};

// Replicated experiment: per replicate r (seed base_seed + r) draw a sample,
// learn, form the Wald CI and record the hit against the truth. Replicates
// run in a worker pool; the aggregation order is fixed by replicate index.
// The population identity mse = bias^2 + variance holds exactly.
SimulationMetrics run_coverage_experiment(const CoverageConfig& coverage,
                                          const PolicyClassSpec& class_spec,
                                          const NuisanceConfig& nuisance_config,
                                          const SaConfig& sa, int workers = 0);

} // namespace aewm
