#include "aewm/policy.hpp"

#include "aewm/error.hpp"

#include <cmath>

namespace aewm {

std::vector<FeatureTransform> identity_transforms(std::size_t p) {
    std::vector<FeatureTransform> out(p);
    for (std::size_t j = 0; j < p; ++j) out[j] = {j, UnaryMap::Identity};
    return out;
}

PolicyRule PolicyRule::constant(int value) {
    if (value != 0 && value != 1) throw ConfigError("policy: constant value must be 0 or 1");
    PolicyRule rule;
    rule.kind_ = Kind::Constant;
    rule.constant_value_ = value;
    return rule;
}

PolicyRule PolicyRule::linear(std::vector<double> beta, std::vector<FeatureTransform> features) {
    if (beta.size() != features.size() + 1)
        throw ConfigError("policy: beta must have one entry per transform plus an intercept");
    double norm2 = 0.0;
    for (double b : beta) {
        if (!std::isfinite(b)) throw ConfigError("policy: non-finite coefficient");
        norm2 += b * b;
    }
    if (norm2 == 0.0) throw ConfigError("policy: zero coefficient vector");
    PolicyRule rule;
    rule.kind_ = Kind::LinearHalfSpace;
    rule.beta_ = std::move(beta);
    rule.features_ = std::move(features);
    return rule;
}

PolicyRule PolicyRule::linear(std::vector<double> beta) {
    if (beta.size() < 2) throw ConfigError("policy: linear rule needs at least one covariate");
    return linear(std::move(beta), identity_transforms(beta.size() - 1));
}

PolicyRule PolicyRule::threshold(std::size_t feature, double cutoff,
                                 ThresholdDirection direction) {
    if (!std::isfinite(cutoff)) throw ConfigError("policy: non-finite cutoff");
    PolicyRule rule;
    rule.kind_ = Kind::FeatureThreshold;
    rule.feature_ = feature;
    rule.cutoff_ = cutoff;
    rule.direction_ = direction;
    return rule;
}

double PolicyRule::score(std::span<const double> x) const {
    double s = beta_[0];
    for (std::size_t t = 0; t < features_.size(); ++t) {
        if (features_[t].feature >= x.size())
            throw ConfigError("policy: covariate dimension mismatch");
        s += beta_[t + 1] * features_[t].apply(x[features_[t].feature]);
    }
    return s;
}

int PolicyRule::decide(std::span<const double> x) const {
    switch (kind_) {
        case Kind::Constant: return constant_value_;
        case Kind::LinearHalfSpace: return score(x) > 0.0 ? 1 : 0;
        case Kind::FeatureThreshold: {
            if (feature_ >= x.size()) throw ConfigError("policy: covariate dimension mismatch");
            const double v = x[feature_];
            return direction_ == ThresholdDirection::LessEqual ? (v <= cutoff_ ? 1 : 0)
                                                               : (v > cutoff_ ? 1 : 0);
        }
    }
    return 0;
}

PolicyRule canonicalize(const PolicyRule& policy) {
    if (policy.kind() != PolicyRule::Kind::LinearHalfSpace) return policy;
    double norm2 = 0.0;
    for (double b : policy.beta()) norm2 += b * b;
    if (norm2 == 0.0) throw ConfigError("canonicalize: zero coefficient vector");
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<double> beta = policy.beta();
    for (double& b : beta) b *= inv;
    return PolicyRule::linear(std::move(beta), policy.features());
}

PolicyRule rescale_coefficient(const PolicyRule& policy, std::size_t index) {
    if (policy.kind() != PolicyRule::Kind::LinearHalfSpace)
        throw ConfigError("rescale: only linear rules carry coefficients");
    if (index >= policy.beta().size()) throw ConfigError("rescale: coefficient index out of range");
    const double pivot = std::fabs(policy.beta()[index]);
    if (pivot == 0.0) throw ConfigError("rescale: pivot coefficient is zero");
    std::vector<double> beta = policy.beta();
    for (double& b : beta) b /= pivot;
    return PolicyRule::linear(std::move(beta), policy.features());
}

double treated_fraction(const PolicyRule& policy, const ObservationTable& table) {
    std::size_t treated = 0;
    for (std::size_t i = 0; i < table.n; ++i) treated += policy.decide(table.row(i));
    return static_cast<double>(treated) / static_cast<double>(table.n);
}

PolicyClassSpec PolicyClassSpec::constants() {
    PolicyClassSpec spec;
    spec.kind = Kind::ConstantPair;
    return spec;
}

PolicyClassSpec PolicyClassSpec::linear(std::vector<FeatureTransform> transforms) {
    PolicyClassSpec spec;
    spec.kind = Kind::Linear;
    spec.transforms = std::move(transforms);
    spec.validate();
    return spec;
}

PolicyClassSpec PolicyClassSpec::linear_identity(std::size_t p) {
    return linear(identity_transforms(p));
}

PolicyClassSpec PolicyClassSpec::threshold(std::size_t feature, double lo, double hi, int grid) {
    PolicyClassSpec spec;
    spec.kind = Kind::Threshold;
    spec.threshold_feature = feature;
    spec.cutoff_lo = lo;
    spec.cutoff_hi = hi;
    spec.threshold_grid = grid;
    spec.validate();
    return spec;
}

void PolicyClassSpec::validate() const {
    switch (kind) {
        case Kind::ConstantPair: return;
        case Kind::Linear:
            if (transforms.empty())
                throw ConfigError("policy class: linear class needs a non-empty transform list");
            return;
        case Kind::Threshold:
            if (!(cutoff_lo < cutoff_hi))
                throw ConfigError("policy class: degenerate cutoff range");
            if (threshold_grid < 2) throw ConfigError("policy class: threshold grid too small");
            return;
    }
}

std::size_t PolicyClassSpec::param_dim() const {
    switch (kind) {
        case Kind::ConstantPair: return 1;
        case Kind::Linear: return transforms.size() + 1;
        case Kind::Threshold: return 1;
    }
    return 0;
}

PolicyRule PolicyClassSpec::make_policy(std::span<const double> params) const {
    if (params.size() != param_dim())
        throw ConfigError("policy class: parameter vector has the wrong dimension");
    switch (kind) {
        case Kind::ConstantPair: return PolicyRule::constant(params[0] > 0.5 ? 1 : 0);
        case Kind::Linear:
            return PolicyRule::linear(std::vector<double>(params.begin(), params.end()),
                                      transforms);
        case Kind::Threshold:
            return PolicyRule::threshold(threshold_feature, params[0],
                                         ThresholdDirection::LessEqual);
    }
    throw ConfigError("policy class: unknown kind");
}

} // namespace aewm
