#pragma once

#include "aewm/nuisance.hpp"
#include "aewm/policy.hpp"
#include "aewm/score_engine.hpp"
#include "aewm/welfare.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace aewm {

struct SaConfig {
    double initial_temperature = 1.0;
    double cooling_rate = 0.995; // geometric cooling T_t = T0 * rate^t
    int iterations = 5000;
    double step_scale = 0.2; // proposal sd at T = T0, shrinking with T
    int restarts = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SaDiagnostics {
    long evaluations = 0;
    long accepted = 0;
    long nonfinite_rejected = 0;
    std::vector<double> restart_best; // best value per restart
};

struct SaResult {
    std::vector<double> argmax;
    double value = 0.0;
    SaDiagnostics diagnostics;
};

// Derivative-free maximization with geometric cooling and Gaussian
// proposals. Proposals with non-finite objective are rejected and counted.
// Restart r draws from substream r of the seed and runs independently
// (optionally in parallel); the best point across restarts is returned, so
// results do not depend on scheduling. The optional `project` hook maps each
// proposal back into the search domain (e.g. onto the unit sphere).
SaResult simulated_annealing(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> init, const SaConfig& config,
                             int workers = 1,
                             const std::function<void(std::span<double>)>& project = {});

enum class EtaMode {
    Profiled, // exact sup over the eta candidate set per proposal (default)
    Joint     // eta is an extra search coordinate, as in the joint program
};

struct LearnResult {
    PolicyRule policy; // canonical
    double eta_hat = 0.0;
    double w_hat = 0.0; // mean of scores.gamma
    ScoreSet scores;
    double treated_fraction = 0.0;
    SaDiagnostics diagnostics;
};

// Learns the welfare-maximizing policy in the class from the doubly robust
// criterion: fits cross-fitted nuisances once, then maximizes beta ->
// sup_eta V_n(pi_beta, eta). Constants are enumerated and thresholds grid
// searched; linear classes use simulated annealing on the unit sphere.
// alpha must lie in (0,1); mean-welfare learning is out of scope.
LearnResult learn_policy(const ObservationTable& table, double alpha,
                         const PolicyClassSpec& class_spec, const NuisanceConfig& nuisance_config,
                         const SaConfig& sa, int workers = 0,
                         EtaMode eta_mode = EtaMode::Profiled);
LearnResult learn_policy(const ObservationTable& table, double alpha,
                         const PolicyClassSpec& class_spec, const NuisanceModel& nuisance,
                         const SaConfig& sa, int workers = 0,
                         EtaMode eta_mode = EtaMode::Profiled);

struct WaldInterval {
    double estimate = 0.0;
    double se = 0.0;
    double level = 0.95;
    double lo = 0.0;
    double hi = 0.0;
};

// estimate +/- z * se with z = Phi^{-1}((1+level)/2).
WaldInterval make_wald_interval(double estimate, double se, double level);

struct WelfareReport {
    double alpha = 0.0;
    double estimate = 0.0;
    double eta_hat = 0.0;
    double se = 0.0;
    WaldInterval wald;
    // Two-sided bootstrap interval, filled by the infer command when run.
    bool has_bootstrap = false;
    double bootstrap_lo = 0.0;
    double bootstrap_hi = 0.0;
    double treated_fraction = 0.0;
    std::string provenance; // resolved settings, JSON text
};

// Cross-alpha evaluation of a fixed policy: for each alpha, profiles eta
// and reports the point estimate, standard error and Wald interval.
std::vector<WelfareReport> evaluate_policy(const ObservationTable& table,
                                           const PolicyRule& policy,
                                           std::span<const double> alphas,
                                           const NuisanceConfig& nuisance_config,
                                           double ci_level = 0.95, int workers = 0);
std::vector<WelfareReport> evaluate_policy(const ObservationTable& table,
                                           const PolicyRule& policy,
                                           std::span<const double> alphas,
                                           const NuisanceModel& nuisance, double ci_level = 0.95,
                                           int workers = 0);

} // namespace aewm
