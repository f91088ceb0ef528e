#pragma once

#include "aewm/nuisance.hpp"
#include "aewm/welfare.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aewm {

struct ProfileResult {
    double eta = 0.0;
    double value = 0.0;
};

// Precomputed cross-fitted scoring machinery for one (table, nuisance) pair.
//
// The criterion V_n(pi, eta) = (1/n) sum_i g_i(eta) is piecewise linear in
// eta with kinks only at observed outcomes: the IPW part kinks at the row's
// own outcome and the regression part at the training outcomes, which are
// themselves sample rows. Collapsing both into one coefficient per outcome,
//   n * V_n(eta) = (sum_i m_i) eta + (1/alpha) sum_r kappa_r (y_r - eta)_-,
// so the exact sup over eta costs one pass over the candidate set after an
// O(n * n_train) aggregation, independent of how many candidates there are.
//
// Per-row normalized kernel weights are computed once at construction;
// profiling, learning and bootstrap replicates all reuse them. Keeps
// references to the table and nuisance model, which must outlive the engine.
class ScoreEngine {
  public:
    ScoreEngine(const ObservationTable& table, const NuisanceModel& nuisance,
                int eta_grid_points = 512);

    std::vector<std::uint8_t> decisions(const PolicyRule& policy) const;

    // Exact maximum of eta -> (1/n) sum_i m_i g_i(eta) over the candidate
    // set. Multipliers default to 1 (the unperturbed criterion); the
    // multiplier bootstrap passes m_i = 1 + eps*sqrt(n)*(xi_i - mean(xi)).
    ProfileResult profile(const std::vector<std::uint8_t>& decisions, double alpha,
                          std::span<const double> multipliers = {}) const;

    // Criterion value at one fixed eta.
    double value_at(const std::vector<std::uint8_t>& decisions, double alpha, double eta,
                    std::span<const double> multipliers = {}) const;

    // Row-wise doubly robust scores at (decisions, eta).
    std::vector<double> scores(const std::vector<std::uint8_t>& decisions, double alpha,
                               double eta) const;

    const std::vector<double>& candidates() const { return candidates_; }
    const FeasibleEtaInterval& interval() const { return interval_; }
    const ObservationTable& table() const { return table_; }
    const NuisanceModel& nuisance() const { return nuisance_; }

  private:
    struct Core {
        std::vector<double> kappa_sorted;
        double linear = 0.0;  // sum_i m_i
        double constant = 0.0; // mu_shift * sum_i m_i (1 - c_i)
    };
    Core aggregate(const std::vector<std::uint8_t>& decisions,
                   std::span<const double> multipliers) const;

    const ObservationTable& table_;
    const NuisanceModel& nuisance_;

    std::vector<double> ipw_; // n * 2: (1-a)/(1-e), a/e per row
    std::vector<int> fold_of_;
    std::vector<std::size_t> rank_of_;  // position of row in y-ascending order
    std::vector<double> y_sorted_;
    std::vector<double> candidates_;
    FeasibleEtaInterval interval_;

    bool kernel_mu_ = false;
    // Flattened per-row kernel weights, one block per (row, arm), aligned
    // with the nuisance training lists.
    std::vector<double> weights_;
    std::vector<std::size_t> weight_offset_; // n * 2
    // Per (fold, arm): training outcomes and the sorted-order ranks of the
    // training rows.
    std::vector<std::vector<double>> train_y_;
    std::vector<std::vector<std::size_t>> train_rank_;
};

// Doubly robust scores for a fixed theta, evaluated without engine
// precomputation (kernel queries on the fly); suitable for large tables.
ScoreSet score_set(const ObservationTable& table, const Theta& theta,
                   const NuisanceModel& nuisance, double alpha, int workers = 1);

struct EstimateResult {
    double eta_hat = 0.0;
    double w_hat = 0.0;
    ScoreSet scores;
};

// sup over the eta candidate set of V_n(policy, eta); the reported W is the
// mean of the scores at the maximizer.
EstimateResult estimate_W(const ScoreEngine& engine, const PolicyRule& policy, double alpha);
EstimateResult estimate_W(const ObservationTable& table, const PolicyRule& policy,
                          const NuisanceModel& nuisance, double alpha, int grid_points = 512);

} // namespace aewm
