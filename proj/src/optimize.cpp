#include "aewm/optimize.hpp"

#include "aewm/error.hpp"
#include "aewm/parallel.hpp"
#include "aewm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aewm {

void SaConfig::validate() const {
    if (!(initial_temperature > 0.0)) throw ConfigError("sa: initial temperature must be > 0");
    if (!(cooling_rate > 0.0 && cooling_rate < 1.0))
        throw ConfigError("sa: cooling rate must lie in (0,1)");
    if (iterations < 1) throw ConfigError("sa: iterations must be >= 1");
    if (!(step_scale > 0.0)) throw ConfigError("sa: step scale must be > 0");
    if (restarts < 1) throw ConfigError("sa: restarts must be >= 1");
}

SaResult simulated_annealing(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> init, const SaConfig& config, int workers,
                             const std::function<void(std::span<double>)>& project) {
    config.validate();
    if (init.empty()) throw ConfigError("sa: empty initial point");
    const std::size_t dim = init.size();
    const rng::Stream root(config.seed);

    struct RestartOutcome {
        std::vector<double> best_x;
        double best_value = -std::numeric_limits<double>::infinity();
        long accepted = 0;
        long nonfinite = 0;
    };
    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));

    par::parallel_for(0, static_cast<std::size_t>(config.restarts), workers, [&](std::size_t r) {
        rng::Stream stream = root.child(r);
        RestartOutcome& out = outcomes[r];

        std::vector<double> x(init.begin(), init.end());
        if (r > 0) {
            // Deterministic multi-start: later restarts jitter the init.
            for (double& v : x) v += stream.normal();
        }
        if (project) project(x);

        double fx = objective(x);
        if (!std::isfinite(fx)) fx = -std::numeric_limits<double>::infinity();
        out.best_x = x;
        out.best_value = fx;

        std::vector<double> prop(dim);
        const double t0 = config.initial_temperature;
        double t = t0;
        for (int it = 0; it < config.iterations; ++it) {
            const double scale = config.step_scale * (t / t0);
            for (std::size_t j = 0; j < dim; ++j) prop[j] = x[j] + scale * stream.normal();
            if (project) project(prop);
            const double fp = objective(prop);
            if (!std::isfinite(fp)) {
                ++out.nonfinite;
            } else {
                const double delta = fp - fx;
                if (delta >= 0.0 || stream.uniform01() < std::exp(delta / t)) {
                    x = prop;
                    fx = fp;
                    ++out.accepted;
                    if (fx > out.best_value) {
                        out.best_value = fx;
                        out.best_x = x;
                    }
                }
            }
            t *= config.cooling_rate;
        }
    });

    SaResult result;
    result.diagnostics.restart_best.reserve(outcomes.size());
    std::size_t winner = 0;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        result.diagnostics.accepted += outcomes[r].accepted;
        result.diagnostics.nonfinite_rejected += outcomes[r].nonfinite;
        result.diagnostics.restart_best.push_back(outcomes[r].best_value);
        if (outcomes[r].best_value > outcomes[winner].best_value) winner = r;
    }
    result.diagnostics.evaluations =
        static_cast<long>(outcomes.size()) * (config.iterations + 1);
    result.argmax = outcomes[winner].best_x;
    result.value = outcomes[winner].best_value;
    return result;
}

namespace {

void normalize_inplace(std::span<double> beta) {
    double norm2 = 0.0;
    for (double b : beta) norm2 += b * b;
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& b : beta) b *= inv;
    }
}

std::vector<double> threshold_cutoffs(const ObservationTable& table,
                                      const PolicyClassSpec& spec) {
    std::vector<double> values;
    values.reserve(table.n);
    for (std::size_t i = 0; i < table.n; ++i) {
        const double v = table.x[i * table.p + spec.threshold_feature];
        if (v >= spec.cutoff_lo && v <= spec.cutoff_hi) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    std::vector<double> cuts;
    cuts.push_back(spec.cutoff_lo);
    const std::size_t want = static_cast<std::size_t>(spec.threshold_grid);
    if (!values.empty()) {
        if (values.size() <= want) {
            cuts.insert(cuts.end(), values.begin(), values.end());
        } else {
            const double stride = static_cast<double>(values.size()) / static_cast<double>(want);
            for (std::size_t t = 0; t < want; ++t)
                cuts.push_back(values[static_cast<std::size_t>(t * stride)]);
        }
    }
    cuts.push_back(spec.cutoff_hi);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

LearnResult finish_learn(const ScoreEngine& engine, const PolicyRule& policy, double alpha,
                         SaDiagnostics diagnostics) {
    LearnResult result;
    result.policy = canonicalize(policy);
    const auto d = engine.decisions(result.policy);
    const ProfileResult prof = engine.profile(d, alpha);
    result.eta_hat = prof.eta;
    result.scores.alpha = alpha;
    result.scores.theta = Theta{result.policy, prof.eta};
    result.scores.gamma = engine.scores(d, alpha, prof.eta);
    result.w_hat = result.scores.mean();
    result.treated_fraction = treated_fraction(result.policy, engine.table());
    result.diagnostics = std::move(diagnostics);
    return result;
}

} // namespace

LearnResult learn_policy(const ObservationTable& table, double alpha,
                         const PolicyClassSpec& class_spec, const NuisanceModel& nuisance,
                         const SaConfig& sa, int workers, EtaMode eta_mode) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("learn_policy: alpha must lie in (0,1); use a mean-welfare learner "
                          "for alpha = 1");
    class_spec.validate();
    sa.validate();
    if (table.n < 2 * static_cast<std::size_t>(nuisance.folds().K))
        throw ConfigError("learn_policy: table too small for the fold count");

    const ScoreEngine engine(table, nuisance);

    switch (class_spec.kind) {
        case PolicyClassSpec::Kind::ConstantPair: {
            const PolicyRule none = PolicyRule::constant(0);
            const PolicyRule all = PolicyRule::constant(1);
            const double v0 = engine.profile(engine.decisions(none), alpha).value;
            const double v1 = engine.profile(engine.decisions(all), alpha).value;
            SaDiagnostics diag;
            diag.evaluations = 2;
            diag.restart_best = {v0, v1};
            return finish_learn(engine, v1 > v0 ? all : none, alpha, std::move(diag));
        }
        case PolicyClassSpec::Kind::Threshold: {
            const auto cuts = threshold_cutoffs(table, class_spec);
            std::vector<double> vals(cuts.size());
            par::parallel_for(0, cuts.size(), workers, [&](std::size_t c) {
                const PolicyRule rule = PolicyRule::threshold(
                    class_spec.threshold_feature, cuts[c], ThresholdDirection::LessEqual);
                vals[c] = engine.profile(engine.decisions(rule), alpha).value;
            });
            std::size_t best = 0;
            for (std::size_t c = 1; c < cuts.size(); ++c)
                if (vals[c] > vals[best]) best = c;
            SaDiagnostics diag;
            diag.evaluations = static_cast<long>(cuts.size());
            diag.restart_best = {vals[best]};
            return finish_learn(engine,
                                PolicyRule::threshold(class_spec.threshold_feature, cuts[best],
                                                      ThresholdDirection::LessEqual),
                                alpha, std::move(diag));
        }
        case PolicyClassSpec::Kind::Linear: {
            const std::size_t dim = class_spec.param_dim();
            // The engine decides through PolicyRule, which rebuilds transforms;
            // precompute the design once instead.
            std::vector<double> design(table.n * (dim - 1));
            for (std::size_t i = 0; i < table.n; ++i) {
                const auto x = table.row(i);
                for (std::size_t t = 0; t + 1 < dim; ++t)
                    design[i * (dim - 1) + t] =
                        class_spec.transforms[t].apply(x[class_spec.transforms[t].feature]);
            }
            auto decide_into = [&](std::span<const double> beta, std::vector<std::uint8_t>& d) {
                d.resize(table.n);
                for (std::size_t i = 0; i < table.n; ++i) {
                    double s = beta[0];
                    const double* row = design.data() + i * (dim - 1);
                    for (std::size_t t = 0; t + 1 < dim; ++t) s += beta[t + 1] * row[t];
                    d[i] = s > 0.0 ? 1 : 0;
                }
            };

            SaResult res;
            if (eta_mode == EtaMode::Profiled) {
                auto objective = [&](std::span<const double> beta) {
                    thread_local std::vector<std::uint8_t> d;
                    decide_into(beta, d);
                    return engine.profile(d, alpha).value;
                };
                std::vector<double> init(dim, 0.0);
                init[0] = 1.0;
                res = simulated_annealing(objective, init, sa, workers,
                                          [](std::span<double> b) { normalize_inplace(b); });
            } else {
                // Joint search over (beta, eta). The beta block stays on the
                // unit sphere; eta is searched in units of the feasible
                // interval so one step scale fits both.
                const FeasibleEtaInterval box = engine.interval();
                const double eta_width = box.hi - box.lo;
                auto objective = [&](std::span<const double> v) {
                    thread_local std::vector<std::uint8_t> d;
                    decide_into(v.first(dim), d);
                    return engine.value_at(d, alpha, box.lo + v[dim] * eta_width);
                };
                auto project = [&](std::span<double> v) {
                    normalize_inplace(v.first(dim));
                    v[dim] = std::clamp(v[dim], 0.0, 1.0);
                };
                std::vector<double> init(dim + 1, 0.0);
                init[0] = 1.0;
                init[dim] = 0.5;
                res = simulated_annealing(objective, init, sa, workers, project);
            }
            const PolicyRule rule =
                class_spec.make_policy(std::span<const double>(res.argmax).first(dim));
            return finish_learn(engine, rule, alpha, std::move(res.diagnostics));
        }
    }
    throw ConfigError("learn_policy: unknown class kind");
}

LearnResult learn_policy(const ObservationTable& table, double alpha,
                         const PolicyClassSpec& class_spec, const NuisanceConfig& nuisance_config,
                         const SaConfig& sa, int workers, EtaMode eta_mode) {
    const FoldAssignment folds =
        partition_folds(table.n, nuisance_config.folds, nuisance_config.fold_seed);
    const NuisanceModel nuisance(table, folds, nuisance_config);
    return learn_policy(table, alpha, class_spec, nuisance, sa, workers, eta_mode);
}

WaldInterval make_wald_interval(double estimate, double se, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("wald: level outside (0,1)");
    const double z = rng::inverse_normal_cdf(0.5 * (1.0 + level));
    return {estimate, se, level, estimate - z * se, estimate + z * se};
}

std::vector<WelfareReport> evaluate_policy(const ObservationTable& table,
                                           const PolicyRule& policy,
                                           std::span<const double> alphas,
                                           const NuisanceModel& nuisance, double ci_level,
                                           int workers) {
    (void)workers;
    const ScoreEngine engine(table, nuisance);
    const auto d = engine.decisions(policy);
    const double frac = treated_fraction(policy, table);

    std::vector<WelfareReport> reports;
    reports.reserve(alphas.size());
    for (double alpha : alphas) {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ConfigError("evaluate_policy: alpha outside (0,1]");
        const ProfileResult prof = engine.profile(d, alpha);
        const auto gamma = engine.scores(d, alpha, prof.eta);
        double mean = 0.0;
        for (double g : gamma) mean += g;
        mean /= static_cast<double>(gamma.size());
        double ss = 0.0;
        for (double g : gamma) ss += (g - mean) * (g - mean);
        const std::size_t n = gamma.size();
        const double se =
            n >= 2 ? std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1))) : 0.0;

        WelfareReport report;
        report.alpha = alpha;
        report.estimate = mean;
        report.eta_hat = prof.eta;
        report.se = se;
        report.wald = make_wald_interval(mean, se, ci_level);
        report.treated_fraction = frac;
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<WelfareReport> evaluate_policy(const ObservationTable& table,
                                           const PolicyRule& policy,
                                           std::span<const double> alphas,
                                           const NuisanceConfig& nuisance_config, double ci_level,
                                           int workers) {
    const FoldAssignment folds =
        partition_folds(table.n, nuisance_config.folds, nuisance_config.fold_seed);
    const NuisanceModel nuisance(table, folds, nuisance_config);
    return evaluate_policy(table, policy, alphas, nuisance, ci_level, workers);
}

} // namespace aewm
