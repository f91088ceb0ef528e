#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aewm/dgp.hpp"
#include "aewm/error.hpp"
#include "aewm/optimize.hpp"

#include <cmath>
#include <vector>

using namespace aewm;

TEST_CASE("simulated annealing finds a quadratic maximum") {
    auto f = [](std::span<const double> x) { return -(x[0] - 0.3) * (x[0] - 0.3); };
    SaConfig sa;
    sa.seed = 11;
    sa.step_scale = 0.5;
    const std::vector<double> init{0.0};
    const SaResult res = simulated_annealing(f, init, sa);
    CHECK(std::fabs(res.argmax[0] - 0.3) < 0.01);
    CHECK(res.value == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("simulated annealing on a constant objective keeps the initial value") {
    auto f = [](std::span<const double>) { return 4.25; };
    SaConfig sa;
    sa.seed = 2;
    sa.iterations = 100;
    const std::vector<double> init{1.0, -1.0};
    const SaResult res = simulated_annealing(f, init, sa);
    CHECK(res.value == 4.25);
}

TEST_CASE("identical seeds give identical runs") {
    auto f = [](std::span<const double> x) {
        return std::sin(3.0 * x[0]) - 0.2 * x[0] * x[0] + std::cos(x[1]);
    };
    SaConfig sa;
    sa.seed = 77;
    sa.iterations = 800;
    const std::vector<double> init{0.5, 0.5};
    const SaResult a = simulated_annealing(f, init, sa);
    const SaResult b = simulated_annealing(f, init, sa);
    CHECK(a.argmax == b.argmax);
    CHECK(a.value == b.value);
    CHECK(a.diagnostics.restart_best == b.diagnostics.restart_best);
    // reported value is the best of the per-restart bests
    double best = -1e300;
    for (double v : a.diagnostics.restart_best) best = std::max(best, v);
    CHECK(a.value == best);
}

TEST_CASE("non-finite proposals are rejected and counted") {
    auto f = [](std::span<const double> x) {
        if (x[0] > 0.5) return std::numeric_limits<double>::quiet_NaN();
        return -x[0] * x[0];
    };
    SaConfig sa;
    sa.seed = 5;
    sa.iterations = 500;
    sa.step_scale = 1.0;
    const std::vector<double> init{0.0};
    const SaResult res = simulated_annealing(f, init, sa);
    CHECK(res.diagnostics.nonfinite_rejected > 0);
    CHECK(std::isfinite(res.value));
}

TEST_CASE("learn rejects alpha = 1 and degenerate inputs") {
    const ObservationTable t = generate({DgpKind::Illustrative, 100, 1});
    NuisanceConfig ncfg;
    SaConfig sa;
    CHECK_THROWS_AS(learn_policy(t, 1.0, PolicyClassSpec::constants(), ncfg, sa), ConfigError);
    CHECK_THROWS_AS(learn_policy(t, 0.0, PolicyClassSpec::constants(), ncfg, sa), ConfigError);
    const ObservationTable tiny = generate({DgpKind::Illustrative, 3, 1});
    CHECK_THROWS_AS(learn_policy(tiny, 0.5, PolicyClassSpec::constants(), ncfg, sa), ConfigError);
}

TEST_CASE("learned welfare dominates the constant policies in the class") {
    const ObservationTable t = generate({DgpKind::Illustrative, 800, 19});
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    SaConfig sa;
    sa.seed = 3;
    sa.iterations = 1500;
    const LearnResult learned =
        learn_policy(t, 0.3, PolicyClassSpec::linear_identity(t.p), ncfg, sa);

    const FoldAssignment folds = partition_folds(t.n, ncfg.folds, ncfg.fold_seed);
    const NuisanceModel nuisance(t, folds, ncfg);
    const ScoreEngine engine(t, nuisance);
    const double v0 = engine.profile(engine.decisions(PolicyRule::constant(0)), 0.3).value;
    const double v1 = engine.profile(engine.decisions(PolicyRule::constant(1)), 0.3).value;
    const double learned_value = engine.profile(engine.decisions(learned.policy), 0.3).value;
    CHECK(learned_value >= std::max(v0, v1) - 1e-3);

    // returned policy is canonical and w_hat is the mean of the scores
    double norm2 = 0.0;
    for (double b : learned.policy.beta()) norm2 += b * b;
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(learned.w_hat == doctest::Approx(learned.scores.mean()).epsilon(1e-12));
}

TEST_CASE("profiled eta is optimal over the candidate set at the learned policy") {
    const ObservationTable t = generate({DgpKind::AwTau1, 300, 8});
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    SaConfig sa;
    sa.seed = 21;
    sa.iterations = 400;
    sa.restarts = 2;
    const LearnResult learned =
        learn_policy(t, 0.25, PolicyClassSpec::linear_identity(t.p), ncfg, sa);

    const FoldAssignment folds = partition_folds(t.n, ncfg.folds, ncfg.fold_seed);
    const NuisanceModel nuisance(t, folds, ncfg);
    const ScoreEngine engine(t, nuisance);
    const auto d = engine.decisions(learned.policy);
    const double at_hat = engine.value_at(d, 0.25, learned.eta_hat);
    for (double eta : engine.candidates())
        CHECK(engine.value_at(d, 0.25, eta) <= at_hat + 1e-12);
}

TEST_CASE("joint and profiled eta searches agree") {
    const ObservationTable t = generate({DgpKind::Illustrative, 500, 14});
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    SaConfig sa;
    sa.seed = 10;
    sa.iterations = 2500;
    const auto spec = PolicyClassSpec::linear_identity(t.p);
    const LearnResult prof = learn_policy(t, 0.3, spec, ncfg, sa, 0, EtaMode::Profiled);
    const LearnResult joint = learn_policy(t, 0.3, spec, ncfg, sa, 0, EtaMode::Joint);
    CHECK(std::fabs(prof.w_hat - joint.w_hat) < 0.15);
}

TEST_CASE("threshold learner tracks the superpopulation grid oracle") {
    // alpha = 0.5 on the illustrative design; the oracle cutoff comes from a
    // grid search on a one-million-row superpopulation.
    const ObservationTable superpop = generate({DgpKind::Illustrative, 1000000, 101});
    const PolicyClassSpec spec = PolicyClassSpec::threshold(0, 0.0, 1.0, 256);
    SaConfig sa;
    sa.seed = 1;
    const OracleOptimum oracle = optimize_oracle(superpop, spec, Criterion::tail_average(0.5), sa);

    const ObservationTable sample = generate({DgpKind::Illustrative, 5000, 707});
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    const LearnResult learned = learn_policy(sample, 0.5, spec, ncfg, sa);
    CHECK(std::fabs(learned.policy.cutoff() - oracle.policy.cutoff()) < 0.1);
}

TEST_CASE("evaluate_policy emits one report per alpha, deterministically") {
    const ObservationTable t = generate({DgpKind::AwTau1, 400, 55});
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    const std::vector<double> alphas{0.25, 0.3, 0.4, 0.5, 0.8};
    const PolicyRule rule = PolicyRule::linear({0.0, 1.0, 1.0, 0.0, -1.0});
    const auto reports = evaluate_policy(t, rule, alphas, ncfg);
    REQUIRE(reports.size() == 5);
    for (std::size_t r = 0; r < reports.size(); ++r) {
        CHECK(reports[r].alpha == alphas[r]);
        CHECK(reports[r].se > 0.0);
        CHECK(reports[r].wald.lo <= reports[r].estimate);
        CHECK(reports[r].wald.hi >= reports[r].estimate);
        CHECK(reports[r].treated_fraction == reports[0].treated_fraction);
    }
    const auto again = evaluate_policy(t, rule, alphas, ncfg);
    for (std::size_t r = 0; r < reports.size(); ++r) {
        CHECK(again[r].estimate == reports[r].estimate);
        CHECK(again[r].se == reports[r].se);
        CHECK(again[r].eta_hat == reports[r].eta_hat);
    }
}

TEST_CASE("pure tail-average evaluation is monotone in alpha") {
    // All-control sample with the propensity pinned near zero: the constant-0
    // policy's criterion is the plain empirical tail average.
    ObservationTable t = generate({DgpKind::Illustrative, 300, 61});
    for (std::size_t i = 0; i < t.n; ++i) {
        t.a[i] = 0;
        t.y[i] = (*t.y0)[i];
    }
    t.validate();
    NuisanceConfig ncfg;
    ncfg.propensity_mode = PropensityMode::Known;
    ncfg.known_e = 1e-9;
    ncfg.kappa = 1e-9;
    ncfg.mu_mode = MuMode::Zero;
    const std::vector<double> alphas{0.1, 0.3, 0.5, 0.9};
    const auto reports = evaluate_policy(t, PolicyRule::constant(0), alphas, ncfg);
    for (std::size_t r = 1; r < reports.size(); ++r)
        CHECK(reports[r].estimate >= reports[r - 1].estimate - 1e-9);
}
