#include "aewm/nuisance.hpp"

#include "aewm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aewm {

void NuisanceConfig::validate() const {
    if (!(kappa > 0.0 && kappa < 0.5)) throw ConfigError("nuisance: kappa outside (0, 0.5)");
    if (folds < 2) throw ConfigError("nuisance: fold count must be >= 2");
    if (!(bandwidth_multiplier > 0.0))
        throw ConfigError("nuisance: bandwidth multiplier must be positive");
    if (propensity_mode == PropensityMode::Known && known_e >= 0.0 &&
        !(known_e > 0.0 && known_e < 1.0))
        throw ConfigError("nuisance: known propensity must lie in (0,1)");
}

KernelProfile::KernelProfile(std::vector<double> sorted_y, std::vector<double> weights)
    : y_(std::move(sorted_y)), w_(std::move(weights)) {
    if (y_.size() != w_.size() || y_.empty())
        throw ComputeError("kernel profile: malformed inputs");
    cum_w_.resize(y_.size() + 1, 0.0);
    cum_wy_.resize(y_.size() + 1, 0.0);
    for (std::size_t j = 0; j < y_.size(); ++j) {
        cum_w_[j + 1] = cum_w_[j] + w_[j];
        cum_wy_[j + 1] = cum_wy_[j] + w_[j] * y_[j];
    }
}

double KernelProfile::mu(double eta) const {
    // Rows with y >= eta contribute zero; the strictly-below prefix carries
    // everything.
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(y_.begin(), y_.end(), eta) - y_.begin());
    return cum_wy_[idx] - eta * cum_w_[idx];
}

double plugin_identity_residual(const KernelProfile& profile, double eta) {
    double cdf_form = 0.0;
    const auto& y = profile.sorted_y();
    const auto& w = profile.weights();
    for (std::size_t j = 0; j < y.size(); ++j)
        if (y[j] <= eta) cdf_form += w[j] * (y[j] - eta);
    return cdf_form - profile.mu(eta);
}

namespace {

std::vector<std::size_t> complement_rows(const FoldAssignment& folds, int fold) {
    std::vector<std::size_t> rows;
    rows.reserve(folds.n());
    for (std::size_t i = 0; i < folds.n(); ++i)
        if (folds.fold_of[i] != fold) rows.push_back(i);
    return rows;
}

// Ridge-regularized logistic fit by Newton iterations; returns false when
// the iterations fail to converge.
bool fit_logistic(const ObservationTable& table, const std::vector<std::size_t>& rows,
                  std::vector<double>& beta) {
    const std::size_t p = table.p;
    const std::size_t dim = p + 1;
    beta.assign(dim, 0.0);
    constexpr double ridge = 1e-6;
    constexpr int max_iters = 50;

    std::vector<double> xi(dim), grad(dim), hess(dim * dim), step(dim);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t r : rows) {
            auto x = table.row(r);
            xi[0] = 1.0;
            for (std::size_t j = 0; j < p; ++j) xi[j + 1] = x[j];
            double lin = 0.0;
            for (std::size_t d = 0; d < dim; ++d) lin += beta[d] * xi[d];
            const double prob = 1.0 / (1.0 + std::exp(-lin));
            const double resid = static_cast<double>(table.a[r]) - prob;
            const double wgt = prob * (1.0 - prob);
            for (std::size_t d = 0; d < dim; ++d) {
                grad[d] += resid * xi[d];
                for (std::size_t l = 0; l < dim; ++l) hess[d * dim + l] += wgt * xi[d] * xi[l];
            }
        }
        for (std::size_t d = 0; d < dim; ++d) {
            grad[d] -= ridge * beta[d];
            hess[d * dim + d] += ridge;
        }

        // Solve hess * step = grad by Cholesky.
        std::vector<double> chol(hess);
        for (std::size_t c = 0; c < dim; ++c) {
            for (std::size_t r2 = c; r2 < dim; ++r2) {
                double sum = chol[r2 * dim + c];
                for (std::size_t l = 0; l < c; ++l) sum -= chol[r2 * dim + l] * chol[c * dim + l];
                if (r2 == c) {
                    if (sum <= 0.0) return false;
                    chol[c * dim + c] = std::sqrt(sum);
                } else {
                    chol[r2 * dim + c] = sum / chol[c * dim + c];
                }
            }
        }
        for (std::size_t r2 = 0; r2 < dim; ++r2) {
            double sum = grad[r2];
            for (std::size_t l = 0; l < r2; ++l) sum -= chol[r2 * dim + l] * step[l];
            step[r2] = sum / chol[r2 * dim + r2];
        }
        for (std::size_t r2 = dim; r2-- > 0;) {
            double sum = step[r2];
            for (std::size_t l = r2 + 1; l < dim; ++l) sum -= chol[l * dim + r2] * step[l];
            step[r2] = sum / chol[r2 * dim + r2];
        }

        double step_norm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            beta[d] += step[d];
            step_norm += step[d] * step[d];
        }
        if (!std::isfinite(step_norm)) return false;
        if (std::sqrt(step_norm) < 1e-8) return true;
    }
    return false;
}

} // namespace

NuisanceModel::NuisanceModel(const ObservationTable& table, FoldAssignment folds,
                             NuisanceConfig config)
    : folds_(std::move(folds)), config_(config), p_(table.p) {
    config_.validate();
    if (folds_.n() != table.n) throw ConfigError("nuisance: fold assignment does not match table");
    const int K = folds_.K;

    // --- propensity, per fold ---
    propensity_const_.assign(static_cast<std::size_t>(K), 0.5);
    propensity_beta_.assign(static_cast<std::size_t>(K), {});
    if (config_.propensity_mode == PropensityMode::Known) {
        double e = config_.known_e;
        if (e < 0.0) {
            if (!table.known_propensity)
                throw ConfigError("nuisance: known propensity requested but none supplied");
            e = *table.known_propensity;
        }
        for (int k = 0; k < K; ++k) propensity_const_[static_cast<std::size_t>(k)] = e;
    } else {
        for (int k = 0; k < K; ++k) {
            const auto rows = complement_rows(folds_, k);
            if (rows.empty()) throw ConfigError("nuisance: empty fold complement");
            double mean_a = 0.0;
            for (std::size_t r : rows) mean_a += table.a[r];
            mean_a /= static_cast<double>(rows.size());
            propensity_const_[static_cast<std::size_t>(k)] = mean_a;
            if (config_.propensity_mode == PropensityMode::Logistic) {
                const bool degenerate = (mean_a == 0.0 || mean_a == 1.0);
                std::vector<double> beta;
                if (!degenerate && fit_logistic(table, rows, beta)) {
                    propensity_beta_[static_cast<std::size_t>(k)] = std::move(beta);
                } else {
                    propensity_fallback_ = true;
                }
            }
        }
    }

    // --- outcome regressions, per fold and arm ---
    fits_.resize(static_cast<std::size_t>(K) * 2);
    if (config_.mu_mode == MuMode::Zero) return;

    for (int k = 0; k < K; ++k) {
        const auto comp = complement_rows(folds_, k);
        for (int arm = 0; arm < 2; ++arm) {
            FoldArmFit& f = fits_[static_cast<std::size_t>(k) * 2 + static_cast<std::size_t>(arm)];
            std::vector<std::size_t> rows;
            for (std::size_t r : comp)
                if (table.a[r] == arm) rows.push_back(r);
            if (rows.empty()) {
                // Fall back to the arm mean over the whole table; out-of-fold
                // purity is necessarily lost for this degenerate arm.
                for (std::size_t r = 0; r < table.n; ++r)
                    if (table.a[r] == arm) rows.push_back(r);
                if (rows.empty())
                    throw ConfigError("nuisance: no rows in arm " + std::to_string(arm));
                f.uniform_fallback = true;
            }
            if (config_.train_cap > 0 && rows.size() > config_.train_cap) {
                std::vector<std::size_t> thinned;
                thinned.reserve(config_.train_cap);
                const double stride =
                    static_cast<double>(rows.size()) / static_cast<double>(config_.train_cap);
                for (std::size_t t = 0; t < config_.train_cap; ++t)
                    thinned.push_back(rows[static_cast<std::size_t>(t * stride)]);
                rows = std::move(thinned);
            }
            std::sort(rows.begin(), rows.end(), [&](std::size_t lhs, std::size_t rhs) {
                return table.y[lhs] < table.y[rhs] || (table.y[lhs] == table.y[rhs] && lhs < rhs);
            });
            f.rows = std::move(rows);
            f.train_y.reserve(f.rows.size());
            for (std::size_t r : f.rows) f.train_y.push_back(table.y[r]);
            if (f.uniform_fallback) continue;

            const std::size_t m = f.rows.size();
            std::vector<double> center(p_, 0.0), var(p_, 0.0);
            for (std::size_t r : f.rows) {
                auto x = table.row(r);
                for (std::size_t j = 0; j < p_; ++j) center[j] += x[j];
            }
            for (std::size_t j = 0; j < p_; ++j) center[j] /= static_cast<double>(m);
            for (std::size_t r : f.rows) {
                auto x = table.row(r);
                for (std::size_t j = 0; j < p_; ++j) {
                    const double d = x[j] - center[j];
                    var[j] += d * d;
                }
            }
            const double rate =
                std::pow(static_cast<double>(m), -1.0 / (4.0 + static_cast<double>(p_)));
            f.inv_bandwidth.assign(p_, 0.0);
            for (std::size_t j = 0; j < p_; ++j) {
                const double sd = std::sqrt(var[j] / static_cast<double>(m));
                const double b = sd * rate * config_.bandwidth_multiplier;
                // A constant column carries no kernel distance.
                f.inv_bandwidth[j] = b > 0.0 ? 1.0 / b : 0.0;
            }
            f.train_x_scaled.resize(m * p_);
            for (std::size_t t = 0; t < m; ++t) {
                auto x = table.row(f.rows[t]);
                for (std::size_t j = 0; j < p_; ++j)
                    f.train_x_scaled[t * p_ + j] = x[j] * f.inv_bandwidth[j];
            }
        }
    }
}

double NuisanceModel::clip(double e) const {
    return std::clamp(e, config_.kappa, 1.0 - config_.kappa);
}

double NuisanceModel::propensity(int fold, std::span<const double> x) const {
    const auto& beta = propensity_beta_[static_cast<std::size_t>(fold)];
    if (beta.empty()) return clip(propensity_const_[static_cast<std::size_t>(fold)]);
    double lin = beta[0];
    for (std::size_t j = 0; j < p_; ++j) lin += beta[j + 1] * x[j];
    return clip(1.0 / (1.0 + std::exp(-lin)));
}

const NuisanceModel::FoldArmFit& NuisanceModel::fit(int fold, int arm) const {
    return fits_[static_cast<std::size_t>(fold) * 2 + static_cast<std::size_t>(arm)];
}

const std::vector<std::size_t>& NuisanceModel::training_rows(int fold, int arm) const {
    if (config_.mu_mode == MuMode::Zero)
        throw ConfigError("nuisance: no kernel training rows in mu-zero mode");
    return fit(fold, arm).rows;
}

void NuisanceModel::kernel_weights(int fold, int arm, std::span<const double> x,
                                   std::span<double> out) const {
    const FoldArmFit& f = fit(fold, arm);
    const std::size_t m = f.rows.size();
    if (out.size() != m) throw ComputeError("nuisance: weight span size mismatch");

    if (f.uniform_fallback) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(m));
        return;
    }
    // Squared kernel distances, shifted by the per-query minimum before
    // exponentiation: the normalized weights are unchanged algebraically and
    // the denominator cannot underflow to zero, so remote queries resolve to
    // a nearest-neighbour average instead of 0/0.
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
        double dist = 0.0;
        const double* xt = f.train_x_scaled.data() + t * p_;
        for (std::size_t j = 0; j < p_; ++j) {
            const double d = x[j] * f.inv_bandwidth[j] - xt[j];
            dist += d * d;
        }
        out[t] = dist;
        if (dist < min_dist) min_dist = dist;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        out[t] = std::exp(-0.5 * (out[t] - min_dist));
        total += out[t];
    }
    for (std::size_t t = 0; t < m; ++t) out[t] /= total;
}

double NuisanceModel::mu(int fold, int arm, std::span<const double> x, double eta) const {
    if (config_.mu_mode == MuMode::Zero) return config_.mu_shift;
    const FoldArmFit& f = fit(fold, arm);
    const std::size_t m = f.rows.size();
    std::vector<double> w(m);
    kernel_weights(fold, arm, x, w);
    double value = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        const double d = f.train_y[t] - eta;
        if (d < 0.0) value += w[t] * d;
    }
    return value + config_.mu_shift;
}

KernelProfile NuisanceModel::profile(int fold, int arm, std::span<const double> x) const {
    if (config_.mu_mode == MuMode::Zero)
        throw ConfigError("nuisance: no kernel profile in mu-zero mode");
    const FoldArmFit& f = fit(fold, arm);
    std::vector<double> w(f.rows.size());
    kernel_weights(fold, arm, x, w);
    return KernelProfile(f.train_y, std::move(w));
}

NuisanceModel fit_nuisances(const ObservationTable& table, const FoldAssignment& folds,
                            const NuisanceConfig& config) {
    return NuisanceModel(table, folds, config);
}

} // namespace aewm
