#pragma once

#include "aewm/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aewm {

enum class PropensityMode { Known, SampleMean, Logistic };
enum class MuMode { Kernel, Zero };

struct NuisanceConfig {
    PropensityMode propensity_mode = PropensityMode::SampleMean;
    // Used when propensity_mode == Known; negative means "take the table's
    // known_propensity".
    double known_e = -1.0;
    double kappa = 0.01; // clipping constant, in (0, 0.5)
    double bandwidth_multiplier = 1.0;
    int folds = 2;
    std::uint64_t fold_seed = 1;
    // Cap on the per-(fold, arm) kernel training set; 0 = no cap. Training
    // rows beyond the cap are dropped by even striding, keeping fits
    // deterministic and large-n scoring affordable.
    std::size_t train_cap = 0;

    // Diagnostic overrides for the outcome regressions. Zero replaces the
    // regressions with the constant 0 (the IPW reduction); mu_shift adds a
    // constant to every evaluation (a deliberate corruption for
    // double-robustness checks).
    MuMode mu_mode = MuMode::Kernel;
    double mu_shift = 0.0;

    void validate() const;
};

// eta-profile of one kernel regression query: the training outcomes sorted
// ascending with their normalized weights and prefix sums, so that
// mu(eta) = sum_t w_t (y_t - eta)_- is O(log m) for any eta.
class KernelProfile {
  public:
    KernelProfile(std::vector<double> sorted_y, std::vector<double> weights);

    double mu(double eta) const;
    std::size_t size() const { return y_.size(); }
    const std::vector<double>& sorted_y() const { return y_; }
    const std::vector<double>& weights() const { return w_; }

  private:
    std::vector<double> y_; // ascending
    std::vector<double> w_; // normalized, aligned with y_
    std::vector<double> cum_w_;
    std::vector<double> cum_wy_;
};

// Residual of the weighted-empirical-CDF identity
//   mu(eta) = sum w (y - eta) 1{y <= eta}  vs  the profile evaluation;
// the two expressions are algebraically identical, so this is a test oracle.
double plugin_identity_residual(const KernelProfile& profile, double eta);

// Cross-fitted nuisance bundle: per-fold propensity evaluators clipped to
// [kappa, 1-kappa] and per-fold per-arm Nadaraya-Watson regressions of the
// pseudo-outcome (y - eta)_- on standardized covariates (product Gaussian
// kernel, rule-of-thumb bandwidths b_j = sd_j * m^(-1/(4+p)) * multiplier).
// Fold-k evaluators are fitted only on rows outside fold k.
class NuisanceModel {
  public:
    NuisanceModel(const ObservationTable& table, FoldAssignment folds, NuisanceConfig config);

    double propensity(int fold, std::span<const double> x) const;
    double mu(int fold, int arm, std::span<const double> x, double eta) const;
    KernelProfile profile(int fold, int arm, std::span<const double> x) const;

    // Training rows (global indices) behind the fold/arm regression, in
    // ascending outcome order; normalized kernel weights for a query are
    // written aligned to this list.
    const std::vector<std::size_t>& training_rows(int fold, int arm) const;
    void kernel_weights(int fold, int arm, std::span<const double> x,
                        std::span<double> out) const;

    const FoldAssignment& folds() const { return folds_; }
    const NuisanceConfig& config() const { return config_; }
    double kappa() const { return config_.kappa; }
    // Set when logistic fitting fell back to the sample mean.
    bool propensity_fallback() const { return propensity_fallback_; }

  private:
    struct FoldArmFit {
        std::vector<std::size_t> rows;      // ascending by outcome
        std::vector<double> train_y;        // aligned with rows
        std::vector<double> train_x_scaled; // rows.size() * p, premultiplied by 1/b_j
        std::vector<double> inv_bandwidth;
        bool uniform_fallback = false; // empty in-complement arm, weights uniform
    };

    const FoldArmFit& fit(int fold, int arm) const;
    double clip(double e) const;

    FoldAssignment folds_;
    NuisanceConfig config_;
    std::size_t p_ = 0;

    // Propensity: constant per fold, or logistic coefficients per fold.
    std::vector<double> propensity_const_;
    std::vector<std::vector<double>> propensity_beta_; // empty when constant
    bool propensity_fallback_ = false;

    std::vector<FoldArmFit> fits_; // fold * 2 + arm
};

NuisanceModel fit_nuisances(const ObservationTable& table, const FoldAssignment& folds,
                            const NuisanceConfig& config);

} // namespace aewm
