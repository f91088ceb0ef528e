#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aewm/dgp.hpp"
#include "aewm/error.hpp"
#include "aewm/nuisance.hpp"
#include "aewm/random.hpp"

#include <cmath>
#include <vector>

using namespace aewm;

namespace {

ObservationTable small_table(std::size_t n, std::uint64_t seed, double treat_prob) {
    rng::Stream stream(seed);
    ObservationTable t;
    t.n = n;
    t.p = 2;
    t.x.resize(n * 2);
    t.y.resize(n);
    t.a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.x[i * 2] = stream.uniform(-1.0, 1.0);
        t.x[i * 2 + 1] = stream.normal();
        t.a[i] = stream.bernoulli(treat_prob);
        t.y[i] = 1.0 + t.x[i * 2] + 0.5 * t.a[i] + 0.3 * stream.normal();
    }
    t.validate();
    return t;
}

FoldAssignment two_folds_first_half(std::size_t n) {
    FoldAssignment f;
    f.K = 2;
    f.fold_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.fold_of[i] = i < n / 2 ? 0 : 1;
    return f;
}

} // namespace

TEST_CASE("known propensity is constant across folds") {
    const ObservationTable t = small_table(60, 1, 0.5);
    NuisanceConfig cfg;
    cfg.propensity_mode = PropensityMode::Known;
    cfg.known_e = 2.0 / 3.0;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < t.n; i += 7)
            CHECK(model.propensity(k, t.row(i)) == 2.0 / 3.0);
}

TEST_CASE("sample-mean propensity uses the fold complement") {
    // Fold 0 holds the first 100 rows; its complement has 60/100 treated.
    ObservationTable t;
    t.n = 200;
    t.p = 1;
    t.x.assign(200, 0.0);
    t.y.assign(200, 1.0);
    t.a.assign(200, 0);
    for (std::size_t i = 100; i < 160; ++i) t.a[i] = 1;
    for (std::size_t i = 0; i < 200; ++i) t.y[i] = static_cast<double>(i % 7);
    t.validate();
    NuisanceConfig cfg;
    cfg.propensity_mode = PropensityMode::SampleMean;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    CHECK(model.propensity(0, t.row(0)) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("all-treated complement clips to 1 - kappa") {
    ObservationTable t;
    t.n = 40;
    t.p = 1;
    t.x.assign(40, 0.0);
    t.y.assign(40, 1.0);
    t.a.assign(40, 1);
    for (std::size_t i = 0; i < 20; ++i) t.a[i] = 0; // fold 0 rows are control
    t.validate();
    NuisanceConfig cfg;
    cfg.propensity_mode = PropensityMode::SampleMean;
    cfg.kappa = 0.01;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    CHECK(model.propensity(0, t.row(0)) == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("logistic propensity stays clipped and falls back when degenerate") {
    const ObservationTable t = small_table(300, 3, 0.6);
    NuisanceConfig cfg;
    cfg.propensity_mode = PropensityMode::Logistic;
    cfg.kappa = 0.05;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    CHECK_FALSE(model.propensity_fallback());
    for (std::size_t i = 0; i < t.n; i += 11) {
        const double e = model.propensity(two_folds_first_half(t.n).fold_of[i], t.row(i));
        CHECK(e >= 0.05);
        CHECK(e <= 0.95);
    }

    ObservationTable all1;
    all1.n = 40;
    all1.p = 1;
    all1.x.assign(40, 0.0);
    all1.y.assign(40, 1.0);
    all1.a.assign(40, 1);
    all1.a[0] = 0; // keep both arms somewhere in the table
    all1.validate();
    FoldAssignment f;
    f.K = 2;
    f.fold_of.assign(40, 1);
    f.fold_of[0] = 0;
    NuisanceConfig cfg1;
    cfg1.propensity_mode = PropensityMode::Logistic;
    const NuisanceModel degen(all1, f, cfg1);
    CHECK(degen.propensity_fallback());
    CHECK(degen.propensity(0, all1.row(1)) == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("single training point: kernel average collapses to its pseudo-outcome") {
    ObservationTable t;
    t.n = 4;
    t.p = 1;
    t.x = {0.0, 5.0, -3.0, 2.0};
    t.y = {2.0, 7.0, 1.0, 4.0};
    t.a = {1, 0, 0, 0}; // only row 0 is treated; it sits in fold 1
    t.validate();
    FoldAssignment f;
    f.K = 2;
    f.fold_of = {1, 0, 0, 0};
    NuisanceConfig cfg;
    const NuisanceModel model(t, f, cfg);
    for (double q : {-10.0, 0.0, 100.0})
        for (double eta : {0.0, 2.5, 9.0}) {
            const std::vector<double> x{q};
            CHECK(model.mu(0, 1, x, eta) ==
                  doctest::Approx(std::min(2.0 - eta, 0.0)).epsilon(1e-13));
        }
}

TEST_CASE("eta outside the training outcome range") {
    const ObservationTable t = small_table(80, 9, 0.5);
    NuisanceConfig cfg;
    const FoldAssignment folds = two_folds_first_half(t.n);
    const NuisanceModel model(t, folds, cfg);
    const std::vector<double> q{0.2, -0.4};

    const KernelProfile prof = model.profile(0, 1, q);
    const double ymin = prof.sorted_y().front();
    const double ymax = prof.sorted_y().back();

    CHECK(model.mu(0, 1, q, ymin - 1.0) == 0.0);
    // above the maximum, every pseudo-outcome is y - eta
    double wmean = 0.0;
    for (std::size_t j = 0; j < prof.size(); ++j)
        wmean += prof.weights()[j] * prof.sorted_y()[j];
    const double eta_hi = ymax + 2.5;
    CHECK(model.mu(0, 1, q, eta_hi) == doctest::Approx(wmean - eta_hi).epsilon(1e-12));
}

TEST_CASE("plug-in identity: weighted cdf form equals the profile evaluation") {
    const ObservationTable t = small_table(120, 11, 0.45);
    NuisanceConfig cfg;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    rng::Stream stream(17);
    for (int rep = 0; rep < 50; ++rep) {
        const std::vector<double> q{stream.uniform(-1.0, 1.0), stream.normal()};
        const KernelProfile prof = model.profile(stream.index(2), stream.index(2), q);
        const double eta = stream.uniform(-2.0, 5.0);
        CHECK(std::fabs(plugin_identity_residual(prof, eta)) < 1e-12);
        // below/above the training range both sides agree trivially
        CHECK(std::fabs(plugin_identity_residual(prof, prof.sorted_y().front() - 1.0)) == 0.0);
        CHECK(std::fabs(plugin_identity_residual(prof, prof.sorted_y().back() + 1.0)) < 1e-12);
    }
}

TEST_CASE("profile is nonpositive, monotone and 1-Lipschitz in eta") {
    const ObservationTable t = small_table(150, 23, 0.5);
    NuisanceConfig cfg;
    const NuisanceModel model(t, two_folds_first_half(t.n), cfg);
    rng::Stream stream(29);
    for (int rep = 0; rep < 30; ++rep) {
        const std::vector<double> q{stream.uniform(-1.5, 1.5), stream.normal()};
        const KernelProfile prof = model.profile(stream.index(2), stream.index(2), q);
        double prev = 1.0;
        double prev_eta = 0.0;
        bool first = true;
        double lower = 0.0;
        for (std::size_t j = 0; j < prof.size(); ++j) lower = std::min(lower, prof.sorted_y()[j]);
        for (double eta = -4.0; eta <= 8.0; eta += 0.37) {
            const double m = prof.mu(eta);
            CHECK(m <= 0.0);
            CHECK(m >= std::min(lower - eta, 0.0) - 1e-12); // range bound
            if (!first) {
                CHECK(m <= prev + 1e-12); // non-increasing
                CHECK(std::fabs(m - prev) <= std::fabs(eta - prev_eta) + 1e-12);
            }
            prev = m;
            prev_eta = eta;
            first = false;
        }
    }
}

TEST_CASE("out-of-fold purity: in-fold rows never touch the fold's evaluators") {
    rng::Stream root(31);
    for (int rep = 0; rep < 40; ++rep) {
        rng::Stream stream = root.child(rep);
        ObservationTable t = small_table(40 + stream.index(40), stream.next_u64(), 0.5);
        const FoldAssignment folds = partition_folds(t.n, 2, stream.next_u64());
        NuisanceConfig cfg;
        cfg.propensity_mode = PropensityMode::SampleMean;
        const NuisanceModel before(t, folds, cfg);

        // Perturb one row inside fold 0.
        std::size_t victim = 0;
        while (folds.fold_of[victim] != 0) ++victim;
        ObservationTable tampered = t;
        tampered.y[victim] += 13.5;
        tampered.x[victim * t.p] -= 2.0;
        const NuisanceModel after(tampered, folds, cfg);

        const std::vector<double> q{stream.uniform(-1.0, 1.0), stream.normal()};
        const double eta = stream.uniform(-1.0, 4.0);
        for (int arm = 0; arm < 2; ++arm)
            CHECK(before.mu(0, arm, q, eta) == after.mu(0, arm, q, eta));
        CHECK(before.propensity(0, q) == after.propensity(0, q));
    }
}

TEST_CASE("empty arm in the complement falls back to the table-wide arm mean") {
    ObservationTable t;
    t.n = 6;
    t.p = 1;
    t.x = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    t.y = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    t.a = {1, 0, 0, 0, 0, 0}; // the only treated row sits in fold 0
    t.validate();
    FoldAssignment f;
    f.K = 2;
    f.fold_of = {0, 0, 0, 1, 1, 1};
    NuisanceConfig cfg;
    const NuisanceModel model(t, f, cfg);
    // Fold 1's complement has exactly one treated row (row 0); fold 0's
    // complement has none, so the arm-1 evaluator for fold 0 is the uniform
    // mean over every treated row in the table.
    const std::vector<double> q{2.5};
    const double eta = 3.0;
    CHECK(model.mu(0, 1, q, eta) == doctest::Approx(std::min(1.0 - eta, 0.0)).epsilon(1e-13));
}

TEST_CASE("config validation") {
    NuisanceConfig cfg;
    cfg.kappa = 0.7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.kappa = 0.01;
    cfg.folds = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
