#include "aewm/inference.hpp"

#include "aewm/error.hpp"
#include "aewm/parallel.hpp"
#include "aewm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aewm {

WaldInterval wald_ci(std::span<const double> gammas, double level) {
    const std::size_t n = gammas.size();
    if (n < 2) throw ConfigError("wald_ci: needs at least two scores");
    double mean = 0.0;
    for (double g : gammas) mean += g;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double g : gammas) ss += (g - mean) * (g - mean);
    const double se = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
    return make_wald_interval(mean, se, level);
}

WaldInterval wald_ci(const ScoreSet& scores, double level) {
    return wald_ci(scores.gamma, level);
}

namespace {

// Order-statistic empirical quantile x_(ceil(q * B)).
double empirical_quantile(std::vector<double> draws, double q) {
    if (draws.empty()) throw ComputeError("bootstrap: no draws");
    std::size_t r = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(draws.size())));
    if (r < 1) r = 1;
    if (r > draws.size()) r = draws.size();
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(r - 1),
                     draws.end());
    return draws[r - 1];
}

// Maximizes the (multiplier-weighted) criterion over the class, warm-started
// at the learned parameters.
double perturbed_sup(const ScoreEngine& engine, double alpha, const PolicyClassSpec& class_spec,
                     const LearnResult& theta_hat, std::span<const double> multipliers,
                     const SaConfig& sa) {
    switch (class_spec.kind) {
        case PolicyClassSpec::Kind::ConstantPair: {
            const double v0 =
                engine.profile(engine.decisions(PolicyRule::constant(0)), alpha, multipliers)
                    .value;
            const double v1 =
                engine.profile(engine.decisions(PolicyRule::constant(1)), alpha, multipliers)
                    .value;
            return std::max(v0, v1);
        }
        case PolicyClassSpec::Kind::Threshold: {
            auto objective = [&](std::span<const double> c) {
                const PolicyRule rule = PolicyRule::threshold(
                    class_spec.threshold_feature, c[0], ThresholdDirection::LessEqual);
                return engine.profile(engine.decisions(rule), alpha, multipliers).value;
            };
            const double width = class_spec.cutoff_hi - class_spec.cutoff_lo;
            auto project = [&](std::span<double> c) {
                c[0] = std::clamp(c[0], class_spec.cutoff_lo, class_spec.cutoff_hi);
            };
            SaConfig local = sa;
            local.step_scale = sa.step_scale * width;
            const std::vector<double> init{theta_hat.policy.cutoff()};
            return simulated_annealing(objective, init, local, 1, project).value;
        }
        case PolicyClassSpec::Kind::Linear: {
            auto objective = [&](std::span<const double> beta) {
                thread_local std::vector<std::uint8_t> d;
                d.resize(engine.table().n);
                const PolicyRule rule = class_spec.make_policy(beta);
                for (std::size_t i = 0; i < engine.table().n; ++i)
                    d[i] = static_cast<std::uint8_t>(rule.decide(engine.table().row(i)));
                return engine.profile(d, alpha, multipliers).value;
            };
            auto project = [](std::span<double> beta) {
                double norm2 = 0.0;
                for (double b : beta) norm2 += b * b;
                if (norm2 > 0.0) {
                    const double inv = 1.0 / std::sqrt(norm2);
                    for (double& b : beta) b *= inv;
                }
            };
            return simulated_annealing(objective, theta_hat.policy.beta(), sa, 1, project).value;
        }
    }
    throw ConfigError("bootstrap: unknown class kind");
}

} // namespace

BootstrapResult bootstrap_optimal_welfare(const ObservationTable& table, double alpha,
                                          const PolicyClassSpec& class_spec,
                                          const NuisanceModel& nuisance,
                                          const LearnResult& theta_hat,
                                          const BootstrapConfig& config, int workers) {
    if (config.B < 2) throw ConfigError("bootstrap: B must be >= 2");
    if (!(config.level > 0.0 && config.level < 1.0))
        throw ConfigError("bootstrap: level outside (0,1)");
    const std::size_t n = table.n;
    const double eps =
        config.epsilon > 0.0 ? config.epsilon : std::pow(static_cast<double>(n), -0.25);

    const ScoreEngine engine(table, nuisance);
    // Unperturbed sup over the same candidate machinery the replicates use.
    const double sup_unperturbed =
        engine.profile(engine.decisions(theta_hat.policy), alpha).value;

    const rng::Stream root(config.seed);
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    std::vector<double> draws(static_cast<std::size_t>(config.B),
                              std::numeric_limits<double>::quiet_NaN());
    par::parallel_for(0, static_cast<std::size_t>(config.B), workers, [&](std::size_t b) {
        rng::Stream stream = root.child(b);
        std::vector<double> mult(n);
        double xi_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mult[i] = stream.normal();
            xi_sum += mult[i];
        }
        const double xi_bar = xi_sum / static_cast<double>(n);
        // Perturbed criterion (1/n) sum m_i g_i with m_i = 1 + eps sqrt(n) (xi_i - xi_bar).
        for (std::size_t i = 0; i < n; ++i) mult[i] = 1.0 + eps * sqrt_n * (mult[i] - xi_bar);

        SaConfig sa;
        sa.iterations = config.sa_iterations;
        sa.restarts = 1;
        sa.seed = stream.next_u64();
        const double sup_pert =
            perturbed_sup(engine, alpha, class_spec, theta_hat, mult, sa);
        draws[b] = (sup_pert - sup_unperturbed) / eps;
    });

    BootstrapResult result;
    result.B = config.B;
    result.epsilon_n = eps;
    result.level = config.level;
    result.estimate = sup_unperturbed;
    for (double d : draws) {
        if (std::isfinite(d))
            result.psi_prime.push_back(d);
        else
            ++result.dropped;
    }
    if (result.dropped * 10 > config.B)
        throw ComputeError("bootstrap: more than 10% of replicates failed");

    std::vector<double> abs_draws(result.psi_prime.size());
    for (std::size_t b = 0; b < result.psi_prime.size(); ++b)
        abs_draws[b] = std::fabs(result.psi_prime[b]);
    result.c_level = empirical_quantile(result.psi_prime, config.level);
    result.q_level = empirical_quantile(abs_draws, config.level);
    result.one_sided_lo = result.estimate - result.c_level / sqrt_n;
    result.two_sided_lo = result.estimate - result.q_level / sqrt_n;
    result.two_sided_hi = result.estimate + result.q_level / sqrt_n;
    return result;
}

SimulationMetrics run_coverage_experiment(const CoverageConfig& coverage,
                                          const PolicyClassSpec& class_spec,
                                          const NuisanceConfig& nuisance_config,
                                          const SaConfig& sa, int workers) {
    if (coverage.reps < 1) throw ConfigError("coverage: reps must be >= 1");

    double truth = coverage.truth;
    if (!std::isfinite(truth)) {
        DgpSpec pop;
        pop.kind = coverage.dgp;
        pop.n = coverage.truth_superpop_n;
        pop.seed = rng::Stream(coverage.base_seed).child(0x74727574).next_u64(); // "trut"
        const ObservationTable superpop = generate(pop, workers);
        truth = optimize_oracle(superpop, class_spec, Criterion::tail_average(coverage.alpha),
                                sa, workers)
                    .value;
    }

    struct RepOutcome {
        double w_hat = 0.0;
        double treated = 0.0;
        int hit = 0;
    };
    std::vector<RepOutcome> reps(static_cast<std::size_t>(coverage.reps));
    par::parallel_for(0, reps.size(), workers, [&](std::size_t r) {
        const std::uint64_t seed_r = coverage.base_seed + r;
        DgpSpec spec;
        spec.kind = coverage.dgp;
        spec.n = coverage.n;
        spec.seed = seed_r;
        const ObservationTable sample = generate(spec, 1);

        NuisanceConfig ncfg = nuisance_config;
        ncfg.fold_seed = rng::Stream(seed_r).child(0x666f6c64).next_u64();
        SaConfig rsa = sa;
        rsa.seed = rng::Stream(seed_r).child(0x6c6561726e).next_u64();
        const LearnResult learned =
            learn_policy(sample, coverage.alpha, class_spec, ncfg, rsa, 1);
        const WaldInterval ci = wald_ci(learned.scores, coverage.ci_level);
        reps[r].w_hat = learned.w_hat;
        reps[r].treated = learned.treated_fraction;
        reps[r].hit = (truth >= ci.lo && truth <= ci.hi) ? 1 : 0;
    });

    // Deterministic reduction in replicate order.
    double sum_w = 0.0, sum_treated = 0.0;
    long hits = 0;
    for (const auto& rep : reps) {
        sum_w += rep.w_hat;
        sum_treated += rep.treated;
        hits += rep.hit;
    }
    const double count = static_cast<double>(reps.size());
    const double mean_w = sum_w / count;
    double var = 0.0, mse = 0.0;
    for (const auto& rep : reps) {
        var += (rep.w_hat - mean_w) * (rep.w_hat - mean_w);
        mse += (rep.w_hat - truth) * (rep.w_hat - truth);
    }

    SimulationMetrics metrics;
    metrics.n = coverage.n;
    metrics.alpha = coverage.alpha;
    metrics.reps = coverage.reps;
    metrics.truth = truth;
    metrics.avg_treated_fraction = sum_treated / count;
    metrics.bias = mean_w - truth;
    metrics.variance = var / count;
    metrics.mse = mse / count;
    metrics.coverage_95 = static_cast<double>(hits) / count;
    return metrics;
}

} // namespace aewm
