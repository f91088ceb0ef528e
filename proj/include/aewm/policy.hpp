#pragma once

#include "aewm/dataset.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aewm {

// Named unary maps applied per covariate when building a linear eligibility
// score. Squares and cubes of a raw covariate enter as precomputed columns,
// so the optimizer always sees a plain linear score.
enum class UnaryMap { Identity, Square, Cube };

struct FeatureTransform {
    std::size_t feature = 0;
    UnaryMap map = UnaryMap::Identity;

    double apply(double v) const {
        switch (map) {
            case UnaryMap::Identity: return v;
            case UnaryMap::Square: return v * v;
            case UnaryMap::Cube: return v * v * v;
        }
        return v;
    }
    bool operator==(const FeatureTransform&) const = default;
};

// Identity transform on each of the p raw covariates.
std::vector<FeatureTransform> identity_transforms(std::size_t p);

enum class ThresholdDirection { LessEqual, Greater };

// Deterministic map from covariates to {0,1}. A score of exactly zero
// assigns control, matching the strict ">" convention for linear rules.
class PolicyRule {
  public:
    enum class Kind { Constant, LinearHalfSpace, FeatureThreshold };

    static PolicyRule constant(int value);
    // beta[0] is the intercept; beta[1 + t] multiplies transform t.
    static PolicyRule linear(std::vector<double> beta, std::vector<FeatureTransform> features);
    static PolicyRule linear(std::vector<double> beta); // identity features
    static PolicyRule threshold(std::size_t feature, double cutoff, ThresholdDirection direction);

    Kind kind() const { return kind_; }
    int constant_value() const { return constant_value_; }
    const std::vector<double>& beta() const { return beta_; }
    const std::vector<FeatureTransform>& features() const { return features_; }
    std::size_t threshold_feature() const { return feature_; }
    double cutoff() const { return cutoff_; }
    ThresholdDirection direction() const { return direction_; }

    int decide(std::span<const double> x) const;

    // Raw linear score (intercept + <beta[1..], features(x)>).
    double score(std::span<const double> x) const;

    bool operator==(const PolicyRule&) const = default;

  private:
    Kind kind_ = Kind::Constant;
    int constant_value_ = 0;
    std::vector<double> beta_;
    std::vector<FeatureTransform> features_;
    std::size_t feature_ = 0;
    double cutoff_ = 0.0;
    ThresholdDirection direction_ = ThresholdDirection::LessEqual;
};

// Scales a linear rule's coefficient vector to unit Euclidean norm; the
// decision boundary is unchanged. Non-linear rules pass through untouched.
PolicyRule canonicalize(const PolicyRule& policy);

// Alternative presentation of the same boundary: rescales so the chosen
// coefficient has absolute value 1 (e.g. pinning an earnings coefficient for
// readability). Requires beta[index] != 0.
PolicyRule rescale_coefficient(const PolicyRule& policy, std::size_t index);

double treated_fraction(const PolicyRule& policy, const ObservationTable& table);

// Restricted classes searched by the learner.
struct PolicyClassSpec {
    enum class Kind { ConstantPair, Linear, Threshold };

    Kind kind = Kind::ConstantPair;
    std::vector<FeatureTransform> transforms; // Linear
    std::size_t threshold_feature = 0;        // Threshold
    double cutoff_lo = 0.0;
    double cutoff_hi = 0.0;
    int threshold_grid = 512;

    static PolicyClassSpec constants();
    static PolicyClassSpec linear(std::vector<FeatureTransform> transforms);
    static PolicyClassSpec linear_identity(std::size_t p);
    static PolicyClassSpec threshold(std::size_t feature, double lo, double hi,
                                     int grid = 512);

    void validate() const;
    // Dimension of the search vector (linear: #transforms + intercept).
    std::size_t param_dim() const;
    PolicyRule make_policy(std::span<const double> params) const;
};

} // namespace aewm
