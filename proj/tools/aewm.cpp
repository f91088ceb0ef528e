// Command-line front end: wires datasets, nuisance configuration, policy
// learning, evaluation, criterion comparison, inference and simulation into
// reproducible runs. Every output embeds the fully resolved configuration,
// so re-running with the embedded config reproduces the artifact bitwise.

#include "aewm/dgp.hpp"
#include "aewm/error.hpp"
#include "aewm/inference.hpp"
#include "aewm/json_io.hpp"
#include "aewm/optimize.hpp"
#include "aewm/parallel.hpp"
#include "aewm/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using nlohmann::json;

namespace {

constexpr const char* kSchemaVersion = "1";

struct GlobalArgs {
    std::string config_path;
    std::string out_path;
    int workers = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

json load_config(const GlobalArgs& args) {
    if (args.config_path.empty()) return json::object();
    std::ifstream in(args.config_path);
    if (!in) throw aewm::ConfigError("config: cannot open '" + args.config_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw aewm::ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return j;
}

// CLI flags override config keys; absent entries fall back to defaults.
template <typename T>
T resolved(const json& cfg, const std::string& key, std::optional<T> cli_value, T fallback) {
    if (cli_value) return *cli_value;
    if (cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw aewm::ConfigError("config: bad value for '" + key + "': " + e.what());
        }
    }
    return fallback;
}

void emit(const GlobalArgs& args, const std::string& command, json config, json result) {
    json out{{"schema_version", kSchemaVersion},
             {"command", command},
             {"config", std::move(config)},
             {"result", std::move(result)}};
    if (args.out_path.empty()) {
        std::cout << out.dump(2) << std::endl;
    } else {
        std::ofstream file(args.out_path);
        if (!file) throw aewm::ConfigError("output: cannot write '" + args.out_path + "'");
        file << out.dump(2) << '\n';
    }
}

// --- dataset / dgp resolution ------------------------------------------

struct DataArgs {
    std::string path;
    std::string covariates; // comma separated
    std::string outcome;
    std::string treatment;
    std::string y0, y1;
    std::string dgp;
    std::size_t dgp_n = 0;
};

void add_data_flags(CLI::App* cmd, DataArgs& d) {
    cmd->add_option("--data", d.path, "CSV dataset path");
    cmd->add_option("--covariates", d.covariates, "comma-separated covariate column names");
    cmd->add_option("--outcome", d.outcome, "outcome column name");
    cmd->add_option("--treatment", d.treatment, "treatment column name");
    cmd->add_option("--y0", d.y0, "control counterfactual column name");
    cmd->add_option("--y1", d.y1, "treated counterfactual column name");
    cmd->add_option("--dgp", d.dgp, "synthetic design: illustrative | aw-tau1 | aw-tau2");
    cmd->add_option("--n", d.dgp_n, "synthetic sample size");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

// Resolves the input table and echoes the resolved data block.
aewm::ObservationTable resolve_table(const json& cfg, const DataArgs& cli, std::uint64_t seed,
                                     int workers, json& echo) {
    json data_cfg = cfg.value("data", json::object());
    std::string path = !cli.path.empty() ? cli.path : data_cfg.value("path", "");
    std::string dgp = !cli.dgp.empty() ? cli.dgp : data_cfg.value("dgp", "");
    std::size_t n = cli.dgp_n != 0 ? cli.dgp_n : data_cfg.value("n", std::size_t{0});

    if (!path.empty() && !dgp.empty())
        throw aewm::ConfigError("data: give either a CSV path or a dgp, not both");

    if (!path.empty()) {
        aewm::CsvSchema schema;
        if (data_cfg.contains("schema")) schema = data_cfg.at("schema").get<aewm::CsvSchema>();
        if (!cli.covariates.empty()) schema.covariates = split_list(cli.covariates);
        if (!cli.outcome.empty()) schema.outcome = cli.outcome;
        if (!cli.treatment.empty()) schema.treatment = cli.treatment;
        if (!cli.y0.empty()) schema.y0 = cli.y0;
        if (!cli.y1.empty()) schema.y1 = cli.y1;
        if (schema.covariates.empty())
            throw aewm::ConfigError("data: schema needs covariate column names "
                                    "(--covariates or config data.schema)");
        echo = json{{"path", path}, {"schema", schema}};
        return aewm::load_table(path, schema);
    }
    if (dgp.empty()) throw aewm::ConfigError("data: neither --data nor --dgp given");
    if (n == 0) throw aewm::ConfigError("data: synthetic draw needs --n");
    aewm::DgpSpec spec;
    spec.kind = aewm::dgp_from_name(dgp);
    spec.n = n;
    spec.seed = seed;
    echo = json{{"dgp", dgp}, {"n", n}, {"seed", seed}};
    return aewm::generate(spec, workers);
}

// --- policy class resolution ---------------------------------------------

struct ClassArgs {
    std::string kind;
    std::string transforms; // "0,1,0:square,0:cube"
    std::optional<std::size_t> feature;
    std::optional<double> lo, hi;
    std::optional<int> grid;
};

void add_class_flags(CLI::App* cmd, ClassArgs& c) {
    cmd->add_option("--class", c.kind, "policy class: constants | linear | threshold");
    cmd->add_option("--transforms", c.transforms,
                    "linear class columns, e.g. '0,1,0:square,0:cube'");
    cmd->add_option("--feature", c.feature, "threshold class feature index");
    cmd->add_option("--lo", c.lo, "threshold cutoff range lower bound");
    cmd->add_option("--hi", c.hi, "threshold cutoff range upper bound");
    cmd->add_option("--grid", c.grid, "threshold cutoff grid size");
}

std::vector<aewm::FeatureTransform> parse_transforms(const std::string& text) {
    std::vector<aewm::FeatureTransform> out;
    for (const auto& entry : split_list(text)) {
        aewm::FeatureTransform t;
        const auto colon = entry.find(':');
        const std::string idx = entry.substr(0, colon);
        t.feature = static_cast<std::size_t>(std::stoul(idx));
        if (colon != std::string::npos) {
            const std::string map = entry.substr(colon + 1);
            if (map == "identity")
                t.map = aewm::UnaryMap::Identity;
            else if (map == "square")
                t.map = aewm::UnaryMap::Square;
            else if (map == "cube")
                t.map = aewm::UnaryMap::Cube;
            else
                throw aewm::ConfigError("policy class: unknown transform '" + map + "'");
        }
        out.push_back(t);
    }
    return out;
}

aewm::PolicyClassSpec resolve_class(const json& cfg, const ClassArgs& cli, std::size_t p,
                                    json& echo) {
    if (cli.kind.empty() && !cfg.contains("policy_class") && cli.transforms.empty()) {
        auto spec = aewm::PolicyClassSpec::linear_identity(p);
        echo = spec;
        return spec;
    }
    aewm::PolicyClassSpec spec;
    if (cfg.contains("policy_class")) spec = cfg.at("policy_class").get<aewm::PolicyClassSpec>();
    const std::string kind = !cli.kind.empty()
                                 ? cli.kind
                                 : (cfg.contains("policy_class")
                                        ? cfg.at("policy_class").value("kind", "linear")
                                        : "linear");
    if (kind == "constants") {
        spec = aewm::PolicyClassSpec::constants();
    } else if (kind == "linear") {
        std::vector<aewm::FeatureTransform> transforms =
            !cli.transforms.empty() ? parse_transforms(cli.transforms)
            : (spec.kind == aewm::PolicyClassSpec::Kind::Linear && !spec.transforms.empty())
                ? spec.transforms
                : aewm::identity_transforms(p);
        spec = aewm::PolicyClassSpec::linear(std::move(transforms));
    } else if (kind == "threshold") {
        std::size_t feature = cli.feature.value_or(
            spec.kind == aewm::PolicyClassSpec::Kind::Threshold ? spec.threshold_feature : 0);
        double lo = cli.lo.value_or(
            spec.kind == aewm::PolicyClassSpec::Kind::Threshold ? spec.cutoff_lo : 0.0);
        double hi = cli.hi.value_or(
            spec.kind == aewm::PolicyClassSpec::Kind::Threshold ? spec.cutoff_hi : 0.0);
        int grid = cli.grid.value_or(
            spec.kind == aewm::PolicyClassSpec::Kind::Threshold ? spec.threshold_grid : 512);
        spec = aewm::PolicyClassSpec::threshold(feature, lo, hi, grid);
    } else {
        throw aewm::ConfigError("policy class: unknown kind '" + kind + "'");
    }
    spec.validate();
    echo = spec;
    return spec;
}

// --- nuisance / sa resolution ---------------------------------------------

struct NuisanceArgs {
    std::string propensity;
    std::optional<double> known_e, kappa, bandwidth_multiplier, mu_shift;
    std::optional<int> folds;
    std::optional<std::size_t> train_cap;
    std::string mu_mode;
};

void add_nuisance_flags(CLI::App* cmd, NuisanceArgs& n) {
    cmd->add_option("--propensity", n.propensity, "known | sample-mean | logistic");
    cmd->add_option("--known-e", n.known_e, "known propensity value");
    cmd->add_option("--kappa", n.kappa, "propensity clipping constant");
    cmd->add_option("--bandwidth-multiplier", n.bandwidth_multiplier,
                    "kernel bandwidth multiplier");
    cmd->add_option("--folds", n.folds, "cross-fitting fold count K");
    cmd->add_option("--train-cap", n.train_cap, "cap on kernel training rows per fold/arm");
    cmd->add_option("--mu-mode", n.mu_mode, "kernel | zero (zero gives the IPW reduction)");
    cmd->add_option("--mu-shift", n.mu_shift, "additive corruption of the outcome regressions");
}

aewm::NuisanceConfig resolve_nuisance(const json& cfg, const NuisanceArgs& cli,
                                      std::uint64_t seed, json& echo) {
    aewm::NuisanceConfig ncfg;
    if (cfg.contains("nuisance")) ncfg = cfg.at("nuisance").get<aewm::NuisanceConfig>();
    if (!cli.propensity.empty()) {
        if (cli.propensity == "known")
            ncfg.propensity_mode = aewm::PropensityMode::Known;
        else if (cli.propensity == "sample-mean")
            ncfg.propensity_mode = aewm::PropensityMode::SampleMean;
        else if (cli.propensity == "logistic")
            ncfg.propensity_mode = aewm::PropensityMode::Logistic;
        else
            throw aewm::ConfigError("nuisance: unknown propensity mode '" + cli.propensity + "'");
    }
    if (cli.known_e) ncfg.known_e = *cli.known_e;
    if (cli.kappa) ncfg.kappa = *cli.kappa;
    if (cli.bandwidth_multiplier) ncfg.bandwidth_multiplier = *cli.bandwidth_multiplier;
    if (cli.folds) ncfg.folds = *cli.folds;
    if (cli.train_cap) ncfg.train_cap = *cli.train_cap;
    if (!cli.mu_mode.empty()) {
        if (cli.mu_mode == "kernel")
            ncfg.mu_mode = aewm::MuMode::Kernel;
        else if (cli.mu_mode == "zero")
            ncfg.mu_mode = aewm::MuMode::Zero;
        else
            throw aewm::ConfigError("nuisance: unknown mu mode '" + cli.mu_mode + "'");
    }
    if (cli.mu_shift) ncfg.mu_shift = *cli.mu_shift;
    if (!cfg.contains("nuisance") || !cfg.at("nuisance").contains("fold_seed"))
        ncfg.fold_seed = aewm::rng::Stream(seed).child(0x666f6c64).next_u64();
    ncfg.validate();
    echo = ncfg;
    return ncfg;
}

struct SaArgs {
    std::optional<double> t0, cooling, step;
    std::optional<int> iterations, restarts;
};

void add_sa_flags(CLI::App* cmd, SaArgs& s) {
    cmd->add_option("--sa-t0", s.t0, "simulated annealing initial temperature");
    cmd->add_option("--sa-cooling", s.cooling, "geometric cooling rate");
    cmd->add_option("--sa-iterations", s.iterations, "iterations per restart");
    cmd->add_option("--sa-step", s.step, "proposal step scale");
    cmd->add_option("--sa-restarts", s.restarts, "restart count");
}

aewm::SaConfig resolve_sa(const json& cfg, const SaArgs& cli, std::uint64_t seed, json& echo) {
    aewm::SaConfig sa;
    if (cfg.contains("sa")) sa = cfg.at("sa").get<aewm::SaConfig>();
    if (cli.t0) sa.initial_temperature = *cli.t0;
    if (cli.cooling) sa.cooling_rate = *cli.cooling;
    if (cli.iterations) sa.iterations = *cli.iterations;
    if (cli.step) sa.step_scale = *cli.step;
    if (cli.restarts) sa.restarts = *cli.restarts;
    if (!cfg.contains("sa") || !cfg.at("sa").contains("seed"))
        sa.seed = aewm::rng::Stream(seed).child(0x7361).next_u64();
    sa.validate();
    echo = sa;
    return sa;
}

aewm::PolicyRule load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aewm::ConfigError("policy: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw aewm::ConfigError(std::string("policy: invalid JSON: ") + e.what());
    }
    if (j.contains("result") && j.at("result").contains("policy"))
        return j.at("result").at("policy").get<aewm::PolicyRule>();
    if (j.contains("policy")) return j.at("policy").get<aewm::PolicyRule>();
    return j.get<aewm::PolicyRule>();
}

void write_csv(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw aewm::ConfigError("output: cannot write '" + path + "'");
    out << content;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --- subcommand bodies ---------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"alpha-expected welfare policy learning"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON run configuration; flags override keys");
    app.add_option("--out", g.out_path, "output JSON path (default stdout)");
    app.add_option("--workers", g.workers, "worker pool size (0 = hardware)");
    auto* seed_opt = app.add_option("--seed", g.seed, "base seed");

    // gen-dgp
    auto* gen = app.add_subcommand("gen-dgp", "draw a synthetic superpopulation to CSV");
    DataArgs gen_data;
    std::string gen_out;
    gen->add_option("--dgp", gen_data.dgp, "illustrative | aw-tau1 | aw-tau2")->required();
    gen->add_option("--n", gen_data.dgp_n, "rows")->required();
    gen->add_option("--csv", gen_out, "output CSV path")->required();

    // learn
    auto* learn = app.add_subcommand("learn", "learn the welfare-maximizing policy");
    DataArgs learn_data;
    ClassArgs learn_class;
    NuisanceArgs learn_nuis;
    SaArgs learn_sa;
    std::optional<double> learn_alpha;
    std::optional<double> learn_level;
    std::string learn_eta_mode, learn_policy_out, learn_scores_out;
    add_data_flags(learn, learn_data);
    add_class_flags(learn, learn_class);
    add_nuisance_flags(learn, learn_nuis);
    add_sa_flags(learn, learn_sa);
    learn->add_option("--alpha", learn_alpha, "tail fraction of interest");
    learn->add_option("--level", learn_level, "Wald CI level");
    learn->add_option("--eta-mode", learn_eta_mode, "profiled | joint");
    learn->add_option("--save-policy", learn_policy_out, "write the learned policy JSON here");
    learn->add_option("--scores-out", learn_scores_out,
                      "write the per-observation doubly robust scores as CSV");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "cross-alpha evaluation of fixed policies");
    DataArgs eval_data;
    NuisanceArgs eval_nuis;
    std::vector<std::string> eval_policies;
    std::string eval_alphas, eval_matrix_out, eval_loss_out;
    std::optional<double> eval_level;
    add_data_flags(evaluate, eval_data);
    add_nuisance_flags(evaluate, eval_nuis);
    evaluate->add_option("--policy", eval_policies,
                         "policy JSON path, optionally LABEL=PATH; repeatable");
    evaluate->add_option("--alphas", eval_alphas, "comma-separated alpha list");
    evaluate->add_option("--level", eval_level, "Wald CI level");
    evaluate->add_option("--matrix-out", eval_matrix_out, "estimate matrix CSV path");
    evaluate->add_option("--loss-out", eval_loss_out, "percentage-loss matrix CSV path");

    // compare
    auto* compare = app.add_subcommand(
        "compare", "per-criterion optimal policies on a counterfactual superpopulation");
    DataArgs cmp_data;
    ClassArgs cmp_class;
    SaArgs cmp_sa;
    std::string cmp_criteria, cmp_series_out;
    std::optional<int> cmp_quantile_points;
    add_data_flags(compare, cmp_data);
    add_class_flags(compare, cmp_class);
    add_sa_flags(compare, cmp_sa);
    compare->add_option("--criteria", cmp_criteria,
                        "comma list, e.g. 'tail:0.1,gini:3,quantile:0.1,mean'");
    compare->add_option("--series-out", cmp_series_out,
                        "CSV of outcome quantiles and pairwise differences");
    compare->add_option("--quantile-points", cmp_quantile_points, "series resolution");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "replicated coverage experiment");
    DataArgs sim_data;
    ClassArgs sim_class;
    NuisanceArgs sim_nuis;
    SaArgs sim_sa;
    std::optional<double> sim_alpha, sim_truth;
    std::optional<int> sim_reps;
    std::optional<std::size_t> sim_superpop;
    std::string sim_csv_out;
    simulate->add_option("--dgp", sim_data.dgp, "illustrative | aw-tau1 | aw-tau2");
    simulate->add_option("--n", sim_data.dgp_n, "sample size per replicate");
    add_class_flags(simulate, sim_class);
    add_nuisance_flags(simulate, sim_nuis);
    add_sa_flags(simulate, sim_sa);
    simulate->add_option("--alpha", sim_alpha, "tail fraction of interest");
    simulate->add_option("--reps", sim_reps, "replicate count");
    simulate->add_option("--truth", sim_truth, "superpopulation truth (else computed)");
    simulate->add_option("--superpop-n", sim_superpop, "superpopulation size for the truth");
    simulate->add_option("--csv-out", sim_csv_out, "append a metrics CSV row here");

    // infer
    auto* infer = app.add_subcommand("infer", "learn + multiplier-bootstrap uniform inference");
    DataArgs inf_data;
    ClassArgs inf_class;
    NuisanceArgs inf_nuis;
    SaArgs inf_sa;
    std::optional<double> inf_alpha, inf_level, inf_epsilon;
    std::optional<int> inf_B, inf_boot_iters;
    add_data_flags(infer, inf_data);
    add_class_flags(infer, inf_class);
    add_nuisance_flags(infer, inf_nuis);
    add_sa_flags(infer, inf_sa);
    infer->add_option("--alpha", inf_alpha, "tail fraction of interest");
    infer->add_option("--level", inf_level, "CI level");
    infer->add_option("--B", inf_B, "bootstrap replicates");
    infer->add_option("--epsilon", inf_epsilon, "delta-method step (default n^-1/4)");
    infer->add_option("--boot-iterations", inf_boot_iters,
                      "SA budget per bootstrap replicate");

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const json cfg = load_config(g);
    if (!(*seed_opt) && cfg.contains("seed")) g.seed = cfg.at("seed").get<std::uint64_t>();
    if (g.workers == 0 && cfg.contains("workers")) g.workers = cfg.at("workers").get<int>();
    if (g.out_path.empty() && cfg.contains("out")) g.out_path = cfg.at("out").get<std::string>();
    const int workers = aewm::par::resolve_workers(g.workers);

    // ---- gen-dgp ----
    if (gen->parsed()) {
        aewm::DgpSpec spec;
        spec.kind = aewm::dgp_from_name(gen_data.dgp);
        spec.n = gen_data.dgp_n;
        spec.seed = g.seed;
        const aewm::ObservationTable table = aewm::generate(spec, workers);
        aewm::save_table(table, gen_out);
        json config{{"seed", g.seed},
                    {"workers", workers},
                    {"data", json{{"dgp", gen_data.dgp}, {"n", gen_data.dgp_n}}},
                    {"csv", gen_out}};
        emit(g, "gen-dgp",
             std::move(config),
             json{{"rows", table.n},
                  {"covariates", table.p},
                  {"known_propensity", *table.known_propensity}});
        return 0;
    }

    // ---- learn ----
    if (learn->parsed()) {
        json data_echo, class_echo, nuis_echo, sa_echo;
        const auto table = resolve_table(cfg, learn_data, g.seed, workers, data_echo);
        const auto class_spec = resolve_class(cfg, learn_class, table.p, class_echo);
        const auto ncfg = resolve_nuisance(cfg, learn_nuis, g.seed, nuis_echo);
        const auto sa = resolve_sa(cfg, learn_sa, g.seed, sa_echo);
        const double alpha = resolved<double>(cfg, "alpha", learn_alpha, 0.25);
        const double level = resolved<double>(cfg, "level", learn_level, 0.95);
        std::string eta_mode = learn_eta_mode.empty() ? cfg.value("eta_mode", "profiled")
                                                      : learn_eta_mode;
        aewm::EtaMode mode;
        if (eta_mode == "profiled")
            mode = aewm::EtaMode::Profiled;
        else if (eta_mode == "joint")
            mode = aewm::EtaMode::Joint;
        else
            throw aewm::ConfigError("learn: unknown eta mode '" + eta_mode + "'");

        const aewm::LearnResult result =
            aewm::learn_policy(table, alpha, class_spec, ncfg, sa, workers, mode);
        const aewm::WaldInterval ci = aewm::wald_ci(result.scores, level);

        if (!learn_policy_out.empty()) {
            std::ofstream pf(learn_policy_out);
            if (!pf) throw aewm::ConfigError("output: cannot write '" + learn_policy_out + "'");
            pf << json(result.policy).dump(2) << '\n';
        }
        if (!learn_scores_out.empty()) {
            std::string csv = "row,gamma\n";
            for (std::size_t i = 0; i < result.scores.gamma.size(); ++i)
                csv += std::to_string(i) + "," + fmt(result.scores.gamma[i]) + "\n";
            write_csv(learn_scores_out, csv);
        }
        json config{{"seed", g.seed},          {"workers", workers},   {"data", data_echo},
                    {"alpha", alpha},          {"level", level},       {"policy_class", class_echo},
                    {"nuisance", nuis_echo},   {"sa", sa_echo},        {"eta_mode", eta_mode}};
        json res = result;
        res["wald"] = ci;
        emit(g, "learn", std::move(config), std::move(res));
        return 0;
    }

    // ---- evaluate ----
    if (evaluate->parsed()) {
        json data_echo, nuis_echo;
        const auto table = resolve_table(cfg, eval_data, g.seed, workers, data_echo);
        const auto ncfg = resolve_nuisance(cfg, eval_nuis, g.seed, nuis_echo);
        const double level = resolved<double>(cfg, "level", eval_level, 0.95);

        std::vector<double> alphas;
        if (!eval_alphas.empty())
            for (const auto& s : split_list(eval_alphas)) alphas.push_back(std::stod(s));
        else if (cfg.contains("alphas"))
            alphas = cfg.at("alphas").get<std::vector<double>>();
        if (alphas.empty()) throw aewm::ConfigError("evaluate: no alphas given");

        std::vector<std::pair<std::string, aewm::PolicyRule>> policies;
        if (!eval_policies.empty()) {
            for (const auto& entry : eval_policies) {
                const auto eq = entry.find('=');
                if (eq == std::string::npos)
                    policies.emplace_back(entry, load_policy(entry));
                else
                    policies.emplace_back(entry.substr(0, eq), load_policy(entry.substr(eq + 1)));
            }
        } else if (cfg.contains("evaluate") && cfg.at("evaluate").contains("policies")) {
            for (const auto& e : cfg.at("evaluate").at("policies")) {
                const std::string path = e.at("path").get<std::string>();
                policies.emplace_back(e.value("label", path), load_policy(path));
            }
        }
        if (policies.empty()) throw aewm::ConfigError("evaluate: no policies given");

        const aewm::FoldAssignment folds =
            aewm::partition_folds(table.n, ncfg.folds, ncfg.fold_seed);
        const aewm::NuisanceModel nuisance(table, folds, ncfg);

        json per_policy = json::array();
        // matrix[row = alpha][col = policy]
        std::vector<std::vector<double>> matrix(alphas.size(),
                                                std::vector<double>(policies.size(), 0.0));
        std::vector<std::vector<double>> ses(alphas.size(),
                                             std::vector<double>(policies.size(), 0.0));
        for (std::size_t c = 0; c < policies.size(); ++c) {
            const auto reports =
                aewm::evaluate_policy(table, policies[c].second, alphas, nuisance, level, workers);
            json rep_json = json::array();
            for (std::size_t r = 0; r < reports.size(); ++r) {
                matrix[r][c] = reports[r].estimate;
                ses[r][c] = reports[r].se;
                rep_json.push_back(reports[r]);
            }
            per_policy.push_back(json{{"label", policies[c].first}, {"reports", rep_json}});
        }

        if (!eval_matrix_out.empty()) {
            std::string csv = "alpha_of_interest";
            for (const auto& pol : policies) csv += ",alpha_for_selection=" + pol.first;
            csv += ",row_max_label\n";
            for (std::size_t r = 0; r < alphas.size(); ++r) {
                csv += fmt(alphas[r]);
                std::size_t best = 0;
                for (std::size_t c = 0; c < policies.size(); ++c) {
                    csv += "," + fmt(matrix[r][c]);
                    if (matrix[r][c] > matrix[r][best]) best = c;
                }
                csv += "," + policies[best].first + "\n";
            }
            write_csv(eval_matrix_out, csv);
        }
        if (!eval_loss_out.empty()) {
            // Percentage loss relative to the row maximum (the diagonal when
            // the matrix is a full alpha-by-alpha sweep).
            std::string csv = "alpha_of_interest";
            for (const auto& pol : policies) csv += ",alpha_for_selection=" + pol.first;
            csv += "\n";
            for (std::size_t r = 0; r < alphas.size(); ++r) {
                double best = matrix[r][0];
                for (double v : matrix[r]) best = std::max(best, v);
                csv += fmt(alphas[r]);
                for (std::size_t c = 0; c < policies.size(); ++c)
                    csv += "," + fmt(best != 0.0 ? 100.0 * (best - matrix[r][c]) / best : 0.0);
                csv += "\n";
            }
            write_csv(eval_loss_out, csv);
        }

        json config{{"seed", g.seed},        {"workers", workers}, {"data", data_echo},
                    {"alphas", alphas},      {"level", level},     {"nuisance", nuis_echo}};
        emit(g, "evaluate", std::move(config), json{{"policies", per_policy}});
        return 0;
    }

    // ---- compare ----
    if (compare->parsed()) {
        json data_echo, class_echo, sa_echo;
        const auto table = resolve_table(cfg, cmp_data, g.seed, workers, data_echo);
        const auto class_spec = resolve_class(cfg, cmp_class, table.p, class_echo);
        const auto sa = resolve_sa(cfg, cmp_sa, g.seed, sa_echo);

        std::string criteria_text = cmp_criteria;
        if (criteria_text.empty() && cfg.contains("compare"))
            criteria_text = cfg.at("compare").value("criteria", "");
        if (criteria_text.empty()) criteria_text = "tail:0.1,mean,gini:3,quantile:0.1";
        std::vector<aewm::Criterion> criteria;
        std::vector<std::string> labels;
        for (const auto& entry : split_list(criteria_text)) {
            const auto colon = entry.find(':');
            const std::string name = entry.substr(0, colon);
            const double param =
                colon == std::string::npos ? 0.0 : std::stod(entry.substr(colon + 1));
            if (name == "tail")
                criteria.push_back(aewm::Criterion::tail_average(param));
            else if (name == "mean")
                criteria.push_back(aewm::Criterion::mean());
            else if (name == "gini")
                criteria.push_back(aewm::Criterion::gini(param));
            else if (name == "quantile")
                criteria.push_back(aewm::Criterion::quantile(param));
            else
                throw aewm::ConfigError("compare: unknown criterion '" + name + "'");
            labels.push_back(entry);
        }

        const int points = cmp_quantile_points.value_or(
            cfg.contains("compare") ? cfg.at("compare").value("quantile_points", 512) : 512);

        json optima = json::array();
        std::vector<std::vector<double>> sorted_outcomes(criteria.size());
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            aewm::SaConfig csa = sa;
            csa.seed = aewm::rng::Stream(sa.seed).child(c).next_u64();
            const auto best = aewm::optimize_oracle(table, class_spec, criteria[c], csa, workers);
            auto& outs = sorted_outcomes[c];
            outs.resize(table.n);
            for (std::size_t i = 0; i < table.n; ++i)
                outs[i] = best.policy.decide(table.row(i)) == 1 ? (*table.y1)[i] : (*table.y0)[i];
            std::sort(outs.begin(), outs.end());
            double sum = 0.0, sum2 = 0.0;
            for (double v : outs) {
                sum += v;
                sum2 += v * v;
            }
            const double mean = sum / static_cast<double>(outs.size());
            const double sd = std::sqrt(std::max(0.0, sum2 / outs.size() - mean * mean));
            optima.push_back(json{{"criterion", labels[c]},
                                  {"policy", best.policy},
                                  {"value", best.value},
                                  {"treated_fraction", aewm::treated_fraction(best.policy, table)},
                                  {"post_treatment_sd", sd}});
        }

        if (!cmp_series_out.empty()) {
            std::string csv = "t";
            for (const auto& l : labels) csv += ",q_" + l;
            for (std::size_t a = 0; a < labels.size(); ++a)
                for (std::size_t b = 0; b < labels.size(); ++b)
                    if (a != b) csv += ",d_" + labels[a] + "_minus_" + labels[b];
            csv += "\n";
            for (int tpt = 1; tpt <= points; ++tpt) {
                const double t = static_cast<double>(tpt) / (points + 1);
                csv += fmt(t);
                std::vector<double> q(criteria.size());
                for (std::size_t c = 0; c < criteria.size(); ++c) {
                    const auto& outs = sorted_outcomes[c];
                    std::size_t r = static_cast<std::size_t>(
                        std::ceil(t * static_cast<double>(outs.size())));
                    r = std::min(std::max<std::size_t>(r, 1), outs.size());
                    q[c] = outs[r - 1];
                    csv += "," + fmt(q[c]);
                }
                for (std::size_t a = 0; a < labels.size(); ++a)
                    for (std::size_t b = 0; b < labels.size(); ++b)
                        if (a != b) csv += "," + fmt(q[a] - q[b]);
                csv += "\n";
            }
            write_csv(cmp_series_out, csv);
        }

        json config{{"seed", g.seed},
                    {"workers", workers},
                    {"data", data_echo},
                    {"policy_class", class_echo},
                    {"sa", sa_echo},
                    {"compare", json{{"criteria", criteria_text}, {"quantile_points", points}}}};
        emit(g, "compare", std::move(config), json{{"optima", optima}});
        return 0;
    }

    // ---- simulate ----
    if (simulate->parsed()) {
        json class_echo, nuis_echo, sa_echo;
        std::string dgp = !sim_data.dgp.empty()
                              ? sim_data.dgp
                              : cfg.value("data", json::object()).value("dgp", "");
        if (dgp.empty()) throw aewm::ConfigError("simulate: needs --dgp");
        aewm::CoverageConfig cov;
        cov.dgp = aewm::dgp_from_name(dgp);
        cov.n = sim_data.dgp_n != 0 ? sim_data.dgp_n
                                    : cfg.value("data", json::object()).value("n", std::size_t{0});
        if (cov.n == 0) throw aewm::ConfigError("simulate: needs --n");
        const json sim_cfg = cfg.value("simulate", json::object());
        cov.alpha = resolved<double>(cfg, "alpha", sim_alpha, 0.25);
        cov.reps = sim_reps.value_or(sim_cfg.value("reps", 1000));
        cov.base_seed = g.seed;
        if (sim_truth)
            cov.truth = *sim_truth;
        else if (sim_cfg.contains("truth") && !sim_cfg.at("truth").is_null())
            cov.truth = sim_cfg.at("truth").get<double>();
        cov.truth_superpop_n =
            sim_superpop.value_or(sim_cfg.value("superpop_n", std::size_t{1000000}));

        const std::size_t dim = aewm::covariate_dim(cov.dgp);
        const auto class_spec = resolve_class(cfg, sim_class, dim, class_echo);
        const auto ncfg = resolve_nuisance(cfg, sim_nuis, g.seed, nuis_echo);
        const auto sa = resolve_sa(cfg, sim_sa, g.seed, sa_echo);

        const aewm::SimulationMetrics metrics =
            aewm::run_coverage_experiment(cov, class_spec, ncfg, sa, workers);

        if (!sim_csv_out.empty()) {
            std::ifstream probe(sim_csv_out);
            const bool exists = probe.good();
            probe.close();
            std::ofstream out(sim_csv_out, std::ios::app);
            if (!out) throw aewm::ConfigError("output: cannot write '" + sim_csv_out + "'");
            if (!exists)
                out << "dgp,n,alpha,reps,truth,avg_treated_fraction,bias,variance,mse,"
                       "coverage_95\n";
            out << dgp << ',' << metrics.n << ',' << fmt(metrics.alpha) << ',' << metrics.reps
                << ',' << fmt(metrics.truth) << ',' << fmt(metrics.avg_treated_fraction) << ','
                << fmt(metrics.bias) << ',' << fmt(metrics.variance) << ',' << fmt(metrics.mse)
                << ',' << fmt(metrics.coverage_95) << '\n';
        }

        json config{{"seed", g.seed},
                    {"workers", workers},
                    {"data", json{{"dgp", dgp}, {"n", cov.n}}},
                    {"alpha", cov.alpha},
                    {"simulate",
                     json{{"reps", cov.reps},
                          {"truth", std::isfinite(cov.truth) ? json(cov.truth) : json()},
                          {"superpop_n", cov.truth_superpop_n}}},
                    {"policy_class", class_echo},
                    {"nuisance", nuis_echo},
                    {"sa", sa_echo}};
        emit(g, "simulate", std::move(config), json(metrics));
        return 0;
    }

    // ---- infer ----
    if (infer->parsed()) {
        json data_echo, class_echo, nuis_echo, sa_echo;
        const auto table = resolve_table(cfg, inf_data, g.seed, workers, data_echo);
        const auto class_spec = resolve_class(cfg, inf_class, table.p, class_echo);
        const auto ncfg = resolve_nuisance(cfg, inf_nuis, g.seed, nuis_echo);
        const auto sa = resolve_sa(cfg, inf_sa, g.seed, sa_echo);
        const double alpha = resolved<double>(cfg, "alpha", inf_alpha, 0.25);

        const json inf_cfg = cfg.value("inference", json::object());
        aewm::BootstrapConfig bcfg;
        if (!inf_cfg.empty()) bcfg = inf_cfg.get<aewm::BootstrapConfig>();
        if (inf_B) bcfg.B = *inf_B;
        if (inf_epsilon) bcfg.epsilon = *inf_epsilon;
        if (inf_level) bcfg.level = *inf_level;
        if (inf_boot_iters) bcfg.sa_iterations = *inf_boot_iters;
        if (!inf_cfg.contains("seed"))
            bcfg.seed = aewm::rng::Stream(g.seed).child(0x626f6f74).next_u64();

        const aewm::FoldAssignment folds =
            aewm::partition_folds(table.n, ncfg.folds, ncfg.fold_seed);
        const aewm::NuisanceModel nuisance(table, folds, ncfg);
        const aewm::LearnResult learned =
            aewm::learn_policy(table, alpha, class_spec, nuisance, sa, workers);
        const aewm::WaldInterval wald = aewm::wald_ci(learned.scores, bcfg.level);
        const aewm::BootstrapResult boot =
            aewm::bootstrap_optimal_welfare(table, alpha, class_spec, nuisance, learned, bcfg,
                                            workers);

        json config{{"seed", g.seed},        {"workers", workers},
                    {"data", data_echo},     {"alpha", alpha},
                    {"policy_class", class_echo}, {"nuisance", nuis_echo},
                    {"sa", sa_echo},         {"inference", bcfg}};
        json res{{"learn", learned}, {"wald", wald}, {"bootstrap", boot}};
        emit(g, "infer", std::move(config), std::move(res));
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const aewm::ConfigError& e) {
        std::cout << json{{"schema_version", kSchemaVersion},
                          {"error", json{{"type", "config"}, {"message", e.what()}}}}
                         .dump(2)
                  << std::endl;
        return 2;
    } catch (const json::exception& e) {
        // Malformed or mistyped config/policy JSON.
        std::cout << json{{"schema_version", kSchemaVersion},
                          {"error", json{{"type", "config"}, {"message", e.what()}}}}
                         .dump(2)
                  << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cout << json{{"schema_version", kSchemaVersion},
                          {"error", json{{"type", "runtime"}, {"message", e.what()}}}}
                         .dump(2)
                  << std::endl;
        return 1;
    }
}
