#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aewm/error.hpp"
#include "aewm/json_io.hpp"
#include "aewm/policy.hpp"
#include "aewm/random.hpp"

#include <cmath>
#include <vector>

using namespace aewm;

TEST_CASE("decide") {
    const std::vector<double> x1{1.0};
    CHECK(PolicyRule::constant(1).decide(x1) == 1);
    CHECK(PolicyRule::constant(0).decide(x1) == 0);

    // beta = (-0.5, 1): score at x = 1 is 0.5 > 0
    CHECK(PolicyRule::linear({-0.5, 1.0}).decide(x1) == 1);
    // strict inequality: a zero score assigns control
    CHECK(PolicyRule::linear({-1.0, 1.0}).decide(x1) == 0);

    const std::vector<double> x07{0.7};
    CHECK(PolicyRule::threshold(0, 0.6, ThresholdDirection::LessEqual).decide(x07) == 0);
    CHECK(PolicyRule::threshold(0, 0.7, ThresholdDirection::LessEqual).decide(x07) == 1);
    CHECK(PolicyRule::threshold(0, 0.6, ThresholdDirection::Greater).decide(x07) == 1);

    CHECK_THROWS_AS(PolicyRule::linear({0.1, 0.2, 0.3}).decide(x1), ConfigError);
}

TEST_CASE("canonicalize") {
    CHECK(canonicalize(PolicyRule::linear({2.0, 0.0})).beta() == std::vector<double>{1.0, 0.0});
    CHECK(canonicalize(PolicyRule::linear({0.0, -3.0})).beta() == std::vector<double>{0.0, -1.0});
    const auto c = canonicalize(PolicyRule::linear({3.0, 4.0})).beta();
    CHECK(c[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(PolicyRule::linear({0.0, 0.0}), ConfigError);
}

TEST_CASE("decisions invariant under positive scaling") {
    rng::Stream root(6);
    for (int rep = 0; rep < 500; ++rep) {
        rng::Stream stream = root.child(rep);
        const std::size_t p = 1 + stream.index(5);
        std::vector<double> beta(p + 1);
        for (auto& b : beta) b = stream.uniform(-2.0, 2.0);
        bool nonzero = false;
        for (double b : beta) nonzero |= b != 0.0;
        if (!nonzero) beta[0] = 1.0;
        const double c = stream.uniform(0.01, 100.0);
        std::vector<double> scaled(beta);
        for (auto& b : scaled) b *= c;
        const PolicyRule rule = PolicyRule::linear(beta);
        const PolicyRule srule = PolicyRule::linear(scaled);
        std::vector<double> x(p);
        for (auto& v : x) v = stream.uniform(-3.0, 3.0);
        if (rule.score(x) != 0.0) CHECK(rule.decide(x) == srule.decide(x));
        // canonical form preserves decisions too
        if (rule.score(x) != 0.0) CHECK(canonicalize(rule).decide(x) == rule.decide(x));
    }
}

TEST_CASE("feature transforms build a cubic-augmented score") {
    std::vector<FeatureTransform> tf{{0, UnaryMap::Identity},
                                     {1, UnaryMap::Identity},
                                     {0, UnaryMap::Square},
                                     {0, UnaryMap::Cube}};
    const PolicyRule rule = PolicyRule::linear({1.0, 2.0, -1.0, 0.5, 0.25}, tf);
    const std::vector<double> x{2.0, 3.0};
    // 1 + 2*2 - 3 + 0.5*4 + 0.25*8 = 6
    CHECK(rule.score(x) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(rule.decide(x) == 1);
}

TEST_CASE("treated fraction") {
    ObservationTable t;
    t.n = 4;
    t.p = 1;
    t.x = {0.1, 0.4, 0.7, 1.0};
    t.y = {0, 0, 0, 0};
    t.a = {0, 0, 0, 0};
    t.validate();
    CHECK(treated_fraction(PolicyRule::constant(1), t) == 1.0);
    CHECK(treated_fraction(PolicyRule::constant(0), t) == 0.0);
    // cutoff at the max covariate treats everyone
    CHECK(treated_fraction(PolicyRule::threshold(0, 1.0, ThresholdDirection::LessEqual), t) ==
          1.0);
    CHECK(treated_fraction(PolicyRule::threshold(0, 0.5, ThresholdDirection::LessEqual), t) ==
          0.5);
}

TEST_CASE("policy json round trip") {
    const std::vector<PolicyRule> rules{
        PolicyRule::constant(1),
        PolicyRule::linear({0.3, -1.2, 0.8}),
        PolicyRule::linear({1.0, 2.0, 3.0},
                           {{0, UnaryMap::Identity}, {0, UnaryMap::Cube}}),
        PolicyRule::threshold(2, 0.25, ThresholdDirection::Greater)};
    for (const auto& rule : rules) {
        const nlohmann::json j = rule;
        const PolicyRule back = j.get<PolicyRule>();
        CHECK(back == rule);
    }
}

TEST_CASE("coefficient rescaling keeps the boundary") {
    const PolicyRule rule = PolicyRule::linear({-6371.583, 634.221, -1.0}, identity_transforms(2));
    const PolicyRule pinned = rescale_coefficient(rule, 2);
    CHECK(std::fabs(pinned.beta()[2]) == doctest::Approx(1.0).epsilon(1e-15));
    rng::Stream stream(3);
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> x{stream.uniform(0.0, 20.0), stream.uniform(0.0, 30000.0)};
        if (rule.score(x) != 0.0) CHECK(pinned.decide(x) == rule.decide(x));
    }
    CHECK_THROWS_AS(rescale_coefficient(PolicyRule::linear({0.0, 1.0}), 0), ConfigError);
    CHECK_THROWS_AS(rescale_coefficient(PolicyRule::constant(1), 0), ConfigError);
}

TEST_CASE("class spec validation") {
    CHECK_THROWS_AS(PolicyClassSpec::linear({}), ConfigError);
    CHECK_THROWS_AS(PolicyClassSpec::threshold(0, 1.0, 1.0), ConfigError);
    const auto spec = PolicyClassSpec::linear_identity(3);
    CHECK(spec.param_dim() == 4);
    const std::vector<double> params{0.5, 1.0, -1.0, 0.0};
    const PolicyRule rule = spec.make_policy(params);
    CHECK(rule.kind() == PolicyRule::Kind::LinearHalfSpace);
}
