#include "aewm/score_engine.hpp"

#include "aewm/error.hpp"
#include "aewm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aewm {

ScoreEngine::ScoreEngine(const ObservationTable& table, const NuisanceModel& nuisance,
                         int eta_grid_points)
    : table_(table), nuisance_(nuisance) {
    if (nuisance.folds().n() != table.n)
        throw ConfigError("score engine: fold assignment does not match table");
    const std::size_t n = table.n;
    const int K = nuisance.folds().K;

    fold_of_ = nuisance.folds().fold_of;
    ipw_.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = nuisance.propensity(fold_of_[i], table.row(i));
        if (!(e > 0.0 && e < 1.0)) throw ComputeError("score engine: propensity at 0 or 1");
        ipw_[i * 2] = (1.0 - table.a[i]) / (1.0 - e);
        ipw_[i * 2 + 1] = table.a[i] / e;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return table.y[l] < table.y[r]; });
    rank_of_.resize(n);
    y_sorted_.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        rank_of_[order[pos]] = pos;
        y_sorted_[pos] = table.y[order[pos]];
    }

    interval_ = FeasibleEtaInterval::from_outcomes(table.y);
    candidates_ = eta_candidates(table.y, interval_, eta_grid_points);

    kernel_mu_ = nuisance.config().mu_mode == MuMode::Kernel;
    if (kernel_mu_) {
        train_y_.resize(static_cast<std::size_t>(K) * 2);
        train_rank_.resize(static_cast<std::size_t>(K) * 2);
        for (int k = 0; k < K; ++k) {
            for (int arm = 0; arm < 2; ++arm) {
                const auto& rows = nuisance.training_rows(k, arm);
                auto& ty = train_y_[static_cast<std::size_t>(k) * 2 + arm];
                auto& tr = train_rank_[static_cast<std::size_t>(k) * 2 + arm];
                ty.reserve(rows.size());
                tr.reserve(rows.size());
                for (std::size_t r : rows) {
                    ty.push_back(table.y[r]);
                    tr.push_back(rank_of_[r]);
                }
            }
        }

        weight_offset_.resize(n * 2);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int arm = 0; arm < 2; ++arm) {
                weight_offset_[i * 2 + arm] = total;
                total += nuisance.training_rows(fold_of_[i], arm).size();
            }
        }
        weights_.resize(total);
        par::parallel_for(0, n, 0, [&](std::size_t i) {
            for (int arm = 0; arm < 2; ++arm) {
                const std::size_t m = nuisance.training_rows(fold_of_[i], arm).size();
                nuisance.kernel_weights(fold_of_[i], arm, table.row(i),
                                        {weights_.data() + weight_offset_[i * 2 + arm], m});
            }
        });
    }
}

std::vector<std::uint8_t> ScoreEngine::decisions(const PolicyRule& policy) const {
    std::vector<std::uint8_t> d(table_.n);
    for (std::size_t i = 0; i < table_.n; ++i)
        d[i] = static_cast<std::uint8_t>(policy.decide(table_.row(i)));
    return d;
}

ScoreEngine::Core ScoreEngine::aggregate(const std::vector<std::uint8_t>& decisions,
                                         std::span<const double> multipliers) const {
    const std::size_t n = table_.n;
    if (decisions.size() != n) throw ConfigError("score engine: decision vector size mismatch");
    if (!multipliers.empty() && multipliers.size() != n)
        throw ConfigError("score engine: multiplier vector size mismatch");

    Core core;
    core.kappa_sorted.assign(n, 0.0);
    const double shift = nuisance_.config().mu_shift;
    double one_minus_c_sum = 0.0;

    if (kernel_mu_) {
        const int K = nuisance_.folds().K;
        // Accumulate regression coefficients in training-list space (dense,
        // contiguous), then scatter once into sorted-outcome space.
        std::vector<std::vector<double>> beta(static_cast<std::size_t>(K) * 2);
        for (std::size_t b = 0; b < beta.size(); ++b)
            beta[b].assign(train_y_[b].size(), 0.0);

        for (std::size_t i = 0; i < n; ++i) {
            const double m = multipliers.empty() ? 1.0 : multipliers[i];
            const int arm = decisions[i];
            const double c = ipw_[i * 2 + arm];
            const double u = m * (1.0 - c);
            one_minus_c_sum += m * (1.0 - c);
            core.linear += m;
            core.kappa_sorted[rank_of_[i]] += m * c;
            if (u != 0.0) {
                const std::size_t block =
                    static_cast<std::size_t>(fold_of_[i]) * 2 + static_cast<std::size_t>(arm);
                const double* w = weights_.data() + weight_offset_[i * 2 + arm];
                double* acc = beta[block].data();
                const std::size_t mlen = beta[block].size();
                for (std::size_t t = 0; t < mlen; ++t) acc[t] += u * w[t];
            }
        }
        for (std::size_t b = 0; b < beta.size(); ++b) {
            const auto& ranks = train_rank_[b];
            const auto& vals = beta[b];
            for (std::size_t t = 0; t < ranks.size(); ++t)
                core.kappa_sorted[ranks[t]] += vals[t];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = multipliers.empty() ? 1.0 : multipliers[i];
            const int arm = decisions[i];
            const double c = ipw_[i * 2 + arm];
            one_minus_c_sum += m * (1.0 - c);
            core.linear += m;
            core.kappa_sorted[rank_of_[i]] += m * c;
        }
    }
    core.constant = shift * one_minus_c_sum;
    return core;
}

ProfileResult ScoreEngine::profile(const std::vector<std::uint8_t>& decisions, double alpha,
                                   std::span<const double> multipliers) const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("score engine: alpha outside (0,1]");
    const Core core = aggregate(decisions, multipliers);
    const std::size_t n = table_.n;

    std::vector<double> pw(n + 1, 0.0), pwy(n + 1, 0.0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        pw[pos + 1] = pw[pos] + core.kappa_sorted[pos];
        pwy[pos + 1] = pwy[pos] + core.kappa_sorted[pos] * y_sorted_[pos];
    }

    ProfileResult best{candidates_.front(), -std::numeric_limits<double>::infinity()};
    std::size_t below = 0; // count of sorted outcomes strictly below eta
    for (double eta : candidates_) {
        while (below < n && y_sorted_[below] < eta) ++below;
        const double tail = pwy[below] - eta * pw[below];
        const double value =
            (core.linear * eta + (tail + core.constant) / alpha) / static_cast<double>(n);
        if (value > best.value) best = {eta, value};
    }
    return best;
}

double ScoreEngine::value_at(const std::vector<std::uint8_t>& decisions, double alpha, double eta,
                             std::span<const double> multipliers) const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("score engine: alpha outside (0,1]");
    const Core core = aggregate(decisions, multipliers);
    const std::size_t n = table_.n;
    double tail = 0.0;
    for (std::size_t pos = 0; pos < n && y_sorted_[pos] < eta; ++pos)
        tail += core.kappa_sorted[pos] * (y_sorted_[pos] - eta);
    return (core.linear * eta + (tail + core.constant) / alpha) / static_cast<double>(n);
}

std::vector<double> ScoreEngine::scores(const std::vector<std::uint8_t>& decisions, double alpha,
                                        double eta) const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("score engine: alpha outside (0,1]");
    if (decisions.size() != table_.n)
        throw ConfigError("score engine: decision vector size mismatch");
    const std::size_t n = table_.n;
    const double shift = nuisance_.config().mu_shift;
    std::vector<double> gamma(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int arm = decisions[i];
        const double c = ipw_[i * 2 + arm];
        double mu = shift;
        if (kernel_mu_) {
            const std::size_t block =
                static_cast<std::size_t>(fold_of_[i]) * 2 + static_cast<std::size_t>(arm);
            const auto& ty = train_y_[block];
            const double* w = weights_.data() + weight_offset_[i * 2 + arm];
            double acc = 0.0;
            for (std::size_t t = 0; t < ty.size(); ++t) {
                const double d = ty[t] - eta;
                if (d < 0.0) acc += w[t] * d;
            }
            mu += acc;
        }
        gamma[i] = eta + ((1.0 - c) * mu + c * neg_part(table_.y[i] - eta)) / alpha;
    }
    return gamma;
}

ScoreSet score_set(const ObservationTable& table, const Theta& theta,
                   const NuisanceModel& nuisance, double alpha, int workers) {
    if (nuisance.folds().n() != table.n)
        throw ConfigError("score_set: fold assignment does not match table");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("score_set: alpha outside (0,1]");

    ScoreSet set;
    set.alpha = alpha;
    set.theta = theta;
    set.gamma.resize(table.n);
    par::parallel_for(0, table.n, workers, [&](std::size_t i) {
        const auto x = table.row(i);
        const int fold = nuisance.folds().fold_of[i];
        const int pi_x = theta.policy.decide(x);
        const double e = nuisance.propensity(fold, x);
        // Only the selected arm's regression enters the score; the other
        // arm's terms carry zero weight.
        const double mu_sel = nuisance.mu(fold, pi_x, x, theta.eta);
        const double mu0 = pi_x == 0 ? mu_sel : 0.0;
        const double mu1 = pi_x == 1 ? mu_sel : 0.0;
        set.gamma[i] = dr_score(table.y[i], table.a[i], pi_x, theta.eta, mu0, mu1, e, alpha);
    });
    return set;
}

EstimateResult estimate_W(const ScoreEngine& engine, const PolicyRule& policy, double alpha) {
    const auto d = engine.decisions(policy);
    const ProfileResult prof = engine.profile(d, alpha);
    EstimateResult result;
    result.eta_hat = prof.eta;
    result.scores.alpha = alpha;
    result.scores.theta = Theta{policy, prof.eta};
    result.scores.gamma = engine.scores(d, alpha, prof.eta);
    result.w_hat = result.scores.mean();
    return result;
}

EstimateResult estimate_W(const ObservationTable& table, const PolicyRule& policy,
                          const NuisanceModel& nuisance, double alpha, int grid_points) {
    ScoreEngine engine(table, nuisance, grid_points);
    return estimate_W(engine, policy, alpha);
}

} // namespace aewm
