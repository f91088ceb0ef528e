#include "aewm/json_io.hpp"

#include "aewm/error.hpp"

namespace aewm {

using nlohmann::json;

namespace {

std::string map_name(UnaryMap m) {
    switch (m) {
        case UnaryMap::Identity: return "identity";
        case UnaryMap::Square: return "square";
        case UnaryMap::Cube: return "cube";
    }
    return "?";
}

UnaryMap map_from_name(const std::string& s) {
    if (s == "identity") return UnaryMap::Identity;
    if (s == "square") return UnaryMap::Square;
    if (s == "cube") return UnaryMap::Cube;
    throw ConfigError("json: unknown feature map '" + s + "'");
}

} // namespace

void to_json(json& j, const FeatureTransform& t) {
    j = json{{"feature", t.feature}, {"map", map_name(t.map)}};
}

void from_json(const json& j, FeatureTransform& t) {
    t.feature = j.at("feature").get<std::size_t>();
    t.map = map_from_name(j.value("map", "identity"));
}

void to_json(json& j, const PolicyRule& p) {
    switch (p.kind()) {
        case PolicyRule::Kind::Constant:
            j = json{{"kind", "constant"}, {"value", p.constant_value()}};
            return;
        case PolicyRule::Kind::LinearHalfSpace:
            j = json{{"kind", "linear"}, {"beta", p.beta()}, {"features", p.features()}};
            return;
        case PolicyRule::Kind::FeatureThreshold:
            j = json{{"kind", "threshold"},
                     {"feature", p.threshold_feature()},
                     {"cutoff", p.cutoff()},
                     {"direction",
                      p.direction() == ThresholdDirection::LessEqual ? "le" : "gt"}};
            return;
    }
    throw ConfigError("json: unknown policy kind");
}

void from_json(const json& j, PolicyRule& p) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        p = PolicyRule::constant(j.at("value").get<int>());
    } else if (kind == "linear") {
        auto beta = j.at("beta").get<std::vector<double>>();
        if (j.contains("features")) {
            p = PolicyRule::linear(std::move(beta),
                                   j.at("features").get<std::vector<FeatureTransform>>());
        } else {
            p = PolicyRule::linear(std::move(beta));
        }
    } else if (kind == "threshold") {
        const std::string dir = j.value("direction", "le");
        p = PolicyRule::threshold(j.at("feature").get<std::size_t>(),
                                  j.at("cutoff").get<double>(),
                                  dir == "gt" ? ThresholdDirection::Greater
                                              : ThresholdDirection::LessEqual);
    } else {
        throw ConfigError("json: unknown policy kind '" + kind + "'");
    }
}

void to_json(json& j, const PolicyClassSpec& s) {
    switch (s.kind) {
        case PolicyClassSpec::Kind::ConstantPair:
            j = json{{"kind", "constants"}};
            return;
        case PolicyClassSpec::Kind::Linear:
            j = json{{"kind", "linear"}, {"transforms", s.transforms}};
            return;
        case PolicyClassSpec::Kind::Threshold:
            j = json{{"kind", "threshold"},
                     {"feature", s.threshold_feature},
                     {"lo", s.cutoff_lo},
                     {"hi", s.cutoff_hi},
                     {"grid", s.threshold_grid}};
            return;
    }
}

void from_json(const json& j, PolicyClassSpec& s) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constants") {
        s = PolicyClassSpec::constants();
    } else if (kind == "linear") {
        s = PolicyClassSpec::linear(j.at("transforms").get<std::vector<FeatureTransform>>());
    } else if (kind == "threshold") {
        s = PolicyClassSpec::threshold(j.at("feature").get<std::size_t>(),
                                       j.at("lo").get<double>(), j.at("hi").get<double>(),
                                       j.value("grid", 512));
    } else {
        throw ConfigError("json: unknown policy class kind '" + kind + "'");
    }
}

void to_json(json& j, const NuisanceConfig& c) {
    const char* mode = c.propensity_mode == PropensityMode::Known ? "known"
                       : c.propensity_mode == PropensityMode::SampleMean ? "sample-mean"
                                                                         : "logistic";
    j = json{{"propensity", mode},
             {"known_e", c.known_e},
             {"kappa", c.kappa},
             {"bandwidth_multiplier", c.bandwidth_multiplier},
             {"folds", c.folds},
             {"fold_seed", c.fold_seed},
             {"train_cap", c.train_cap},
             {"mu_mode", c.mu_mode == MuMode::Kernel ? "kernel" : "zero"},
             {"mu_shift", c.mu_shift}};
}

void from_json(const json& j, NuisanceConfig& c) {
    const std::string mode = j.value("propensity", "sample-mean");
    if (mode == "known")
        c.propensity_mode = PropensityMode::Known;
    else if (mode == "sample-mean")
        c.propensity_mode = PropensityMode::SampleMean;
    else if (mode == "logistic")
        c.propensity_mode = PropensityMode::Logistic;
    else
        throw ConfigError("json: unknown propensity mode '" + mode + "'");
    c.known_e = j.value("known_e", -1.0);
    c.kappa = j.value("kappa", 0.01);
    c.bandwidth_multiplier = j.value("bandwidth_multiplier", 1.0);
    c.folds = j.value("folds", 2);
    c.fold_seed = j.value("fold_seed", std::uint64_t{1});
    c.train_cap = j.value("train_cap", std::size_t{0});
    const std::string mu = j.value("mu_mode", "kernel");
    if (mu == "kernel")
        c.mu_mode = MuMode::Kernel;
    else if (mu == "zero")
        c.mu_mode = MuMode::Zero;
    else
        throw ConfigError("json: unknown mu mode '" + mu + "'");
    c.mu_shift = j.value("mu_shift", 0.0);
    c.validate();
}

void to_json(json& j, const SaConfig& c) {
    j = json{{"initial_temperature", c.initial_temperature},
             {"cooling_rate", c.cooling_rate},
             {"iterations", c.iterations},
             {"step_scale", c.step_scale},
             {"restarts", c.restarts},
             {"seed", c.seed}};
}

void from_json(const json& j, SaConfig& c) {
    c.initial_temperature = j.value("initial_temperature", 1.0);
    c.cooling_rate = j.value("cooling_rate", 0.995);
    c.iterations = j.value("iterations", 5000);
    c.step_scale = j.value("step_scale", 0.2);
    c.restarts = j.value("restarts", 4);
    c.seed = j.value("seed", std::uint64_t{0});
    c.validate();
}

void to_json(json& j, const CsvSchema& s) {
    j = json{{"covariates", s.covariates}, {"outcome", s.outcome}, {"treatment", s.treatment}};
    if (s.y0) j["y0"] = *s.y0;
    if (s.y1) j["y1"] = *s.y1;
}

void from_json(const json& j, CsvSchema& s) {
    s.covariates = j.at("covariates").get<std::vector<std::string>>();
    s.outcome = j.value("outcome", "y");
    s.treatment = j.value("treatment", "a");
    if (j.contains("y0")) s.y0 = j.at("y0").get<std::string>();
    if (j.contains("y1")) s.y1 = j.at("y1").get<std::string>();
}

void to_json(json& j, const BootstrapConfig& c) {
    j = json{{"B", c.B},
             {"epsilon", c.epsilon},
             {"level", c.level},
             {"seed", c.seed},
             {"sa_iterations", c.sa_iterations}};
}

void from_json(const json& j, BootstrapConfig& c) {
    c.B = j.value("B", 100);
    c.epsilon = j.value("epsilon", -1.0);
    c.level = j.value("level", 0.95);
    c.seed = j.value("seed", std::uint64_t{0});
    c.sa_iterations = j.value("sa_iterations", 1000);
}

void to_json(json& j, const WaldInterval& w) {
    j = json{{"estimate", w.estimate},
             {"se", w.se},
             {"level", w.level},
             {"lo", w.lo},
             {"hi", w.hi}};
}

void to_json(json& j, const SaDiagnostics& d) {
    j = json{{"evaluations", d.evaluations},
             {"accepted", d.accepted},
             {"nonfinite_rejected", d.nonfinite_rejected},
             {"restart_best", d.restart_best}};
}

void to_json(json& j, const LearnResult& r) {
    j = json{{"policy", r.policy},
             {"eta_hat", r.eta_hat},
             {"W_hat", r.w_hat},
             {"treated_fraction", r.treated_fraction},
             {"diagnostics", r.diagnostics}};
}

void to_json(json& j, const WelfareReport& r) {
    j = json{{"alpha", r.alpha},
             {"estimate", r.estimate},
             {"eta_hat", r.eta_hat},
             {"se", r.se},
             {"wald", r.wald},
             {"treated_fraction", r.treated_fraction}};
    if (r.has_bootstrap) {
        j["bootstrap_lo"] = r.bootstrap_lo;
        j["bootstrap_hi"] = r.bootstrap_hi;
    }
    if (!r.provenance.empty()) j["provenance"] = json::parse(r.provenance);
}

void to_json(json& j, const BootstrapResult& r) {
    j = json{{"B", r.B},
             {"epsilon_n", r.epsilon_n},
             {"level", r.level},
             {"multiplier_kind", r.multiplier_kind},
             {"estimate", r.estimate},
             {"c_level", r.c_level},
             {"q_level", r.q_level},
             {"one_sided", json{{"lo", r.one_sided_lo}}},
             {"two_sided", json{{"lo", r.two_sided_lo}, {"hi", r.two_sided_hi}}},
             {"dropped", r.dropped},
             {"psi_prime", r.psi_prime}};
}

void to_json(json& j, const SimulationMetrics& m) {
    j = json{{"n", m.n},
             {"alpha", m.alpha},
             {"reps", m.reps},
             {"truth", m.truth},
             {"avg_treated_fraction", m.avg_treated_fraction},
             {"bias", m.bias},
             {"variance", m.variance},
             {"mse", m.mse},
             {"coverage_95", m.coverage_95}};
}

} // namespace aewm
