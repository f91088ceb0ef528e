#include "aewm/dgp.hpp"

#include "aewm/error.hpp"
#include "aewm/optimize.hpp"
#include "aewm/parallel.hpp"
#include "aewm/random.hpp"
#include "aewm/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aewm {

std::size_t covariate_dim(DgpKind kind) {
    return kind == DgpKind::Illustrative ? 1 : 4;
}

double dgp_propensity(DgpKind kind) {
    return kind == DgpKind::Illustrative ? 0.5 : 2.0 / 3.0;
}

std::string dgp_name(DgpKind kind) {
    switch (kind) {
        case DgpKind::Illustrative: return "illustrative";
        case DgpKind::AwTau1: return "aw-tau1";
        case DgpKind::AwTau2: return "aw-tau2";
    }
    return "?";
}

DgpKind dgp_from_name(const std::string& name) {
    if (name == "illustrative") return DgpKind::Illustrative;
    if (name == "aw-tau1") return DgpKind::AwTau1;
    if (name == "aw-tau2") return DgpKind::AwTau2;
    throw ConfigError("dgp: unknown kind '" + name + "'");
}

double cate_tau1(std::span<const double> x) {
    return (std::max(x[0], 0.0) + std::max(x[1], 0.0) - 1.0) / 2.0;
}

double cate_tau2(std::span<const double> x) {
    const double prod = x[0] * x[1];
    const double sign = prod > 0.0 ? 1.0 : (prod < 0.0 ? -1.0 : 0.0);
    return sign / 2.0;
}

void illustrative_outcomes(double x, double eps, double& y0, double& y1) {
    y0 = 20.0 + x + eps;
    y1 = 20.0 + 3.0 + x - 5.0 * x + (2.0 + 2.0 * x) * eps;
}

ObservationTable generate(const DgpSpec& spec, int workers) {
    if (spec.n == 0) throw ConfigError("dgp: n must be >= 1");
    const std::size_t p = covariate_dim(spec.kind);
    const double e = dgp_propensity(spec.kind);

    ObservationTable table;
    table.n = spec.n;
    table.p = p;
    table.x.resize(spec.n * p);
    table.y.resize(spec.n);
    table.a.resize(spec.n);
    table.y0.emplace(spec.n);
    table.y1.emplace(spec.n);
    table.known_propensity = e;

    const rng::Stream root(spec.seed);
    const DgpKind kind = spec.kind;
    par::parallel_for(0, spec.n, workers, [&](std::size_t i) {
        rng::Stream row = root.child(i);
        double* x = table.x.data() + i * p;
        double y0 = 0.0, y1 = 0.0;
        int a = 0;
        if (kind == DgpKind::Illustrative) {
            x[0] = row.uniform01();
            a = row.bernoulli(e);
            const double eps = row.normal();
            illustrative_outcomes(x[0], eps, y0, y1);
        } else {
            for (std::size_t j = 0; j < 4; ++j) x[j] = row.normal();
            a = row.bernoulli(e);
            const double eps = row.normal();
            const double base = 10.0 + std::max(x[2] + x[3], 0.0) + eps;
            const double tau = kind == DgpKind::AwTau1 ? cate_tau1({x, 4}) : cate_tau2({x, 4});
            y0 = base;
            y1 = base + tau;
        }
        (*table.y0)[i] = y0;
        (*table.y1)[i] = y1;
        table.a[i] = a;
        table.y[i] = a == 1 ? y1 : y0;
    });
    return table;
}

namespace {

void require_counterfactuals(const ObservationTable& table, const char* op) {
    if (!table.has_counterfactuals())
        throw ConfigError(std::string(op) + ": table lacks counterfactual columns");
}

void post_treatment_outcomes(const ObservationTable& table, const PolicyRule& policy,
                             std::vector<double>& out) {
    out.resize(table.n);
    const auto& y0 = *table.y0;
    const auto& y1 = *table.y1;
    for (std::size_t i = 0; i < table.n; ++i)
        out[i] = policy.decide(table.row(i)) == 1 ? y1[i] : y0[i];
}

} // namespace

double oracle_welfare(const ObservationTable& table, const PolicyRule& policy, double alpha) {
    require_counterfactuals(table, "oracle_welfare");
    std::vector<double> y;
    post_treatment_outcomes(table, policy, y);
    return empirical_cvar_inplace(y, alpha);
}

std::string Criterion::name() const {
    switch (kind) {
        case Kind::TailAverage: return "tail-average";
        case Kind::Mean: return "mean";
        case Kind::Gini: return "gini";
        case Kind::Quantile: return "quantile";
    }
    return "?";
}

double evaluate_criterion(std::span<const double> outcomes, const Criterion& criterion) {
    switch (criterion.kind) {
        case Criterion::Kind::TailAverage: return empirical_cvar(outcomes, criterion.param);
        case Criterion::Kind::Mean:
            return std::accumulate(outcomes.begin(), outcomes.end(), 0.0) /
                   static_cast<double>(outcomes.size());
        case Criterion::Kind::Gini: return gini_welfare(outcomes, criterion.param);
        case Criterion::Kind::Quantile: return quantile_welfare(outcomes, criterion.param);
    }
    throw ConfigError("criterion: unknown kind");
}

namespace {

// Candidate cutoffs for a threshold class: quantile-strided observed values
// inside the range, plus the range endpoints.
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

void normalize_inplace(std::span<double> beta) {
    double norm2 = 0.0;
    for (double b : beta) norm2 += b * b;
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& b : beta) b *= inv;
    }
}

} // namespace

OracleOptimum optimize_oracle(const ObservationTable& table, const PolicyClassSpec& class_spec,
                              const Criterion& criterion, const SaConfig& sa, int workers) {
    require_counterfactuals(table, "optimize_oracle");
    class_spec.validate();

    auto value_of = [&](const PolicyRule& rule) {
        std::vector<double> y;
        post_treatment_outcomes(table, rule, y);
        if (criterion.kind == Criterion::Kind::TailAverage)
            return empirical_cvar_inplace(y, criterion.param);
        return evaluate_criterion(y, criterion);
    };

    switch (class_spec.kind) {
        case PolicyClassSpec::Kind::ConstantPair: {
            const PolicyRule none = PolicyRule::constant(0);
            const PolicyRule all = PolicyRule::constant(1);
            const double v0 = value_of(none);
            const double v1 = value_of(all);
            return v1 > v0 ? OracleOptimum{all, v1} : OracleOptimum{none, v0};
        }
        case PolicyClassSpec::Kind::Threshold: {
            const auto cuts = threshold_cutoffs(table, class_spec);
            std::vector<double> vals(cuts.size());
            par::parallel_for(0, cuts.size(), workers, [&](std::size_t c) {
                vals[c] = value_of(PolicyRule::threshold(class_spec.threshold_feature, cuts[c],
                                                         ThresholdDirection::LessEqual));
            });
            std::size_t best = 0;
            for (std::size_t c = 1; c < cuts.size(); ++c)
                if (vals[c] > vals[best]) best = c;
            return {PolicyRule::threshold(class_spec.threshold_feature, cuts[best],
                                          ThresholdDirection::LessEqual),
                    vals[best]};
        }
        case PolicyClassSpec::Kind::Linear: {
            const std::size_t dim = class_spec.param_dim();
            const auto& y0 = *table.y0;
            const auto& y1 = *table.y1;
            // Transformed covariate columns precomputed once; the objective
            // sees a plain linear score.
            std::vector<double> design(table.n * (dim - 1));
            for (std::size_t i = 0; i < table.n; ++i) {
                const auto x = table.row(i);
                for (std::size_t t = 0; t + 1 < dim; ++t)
                    design[i * (dim - 1) + t] = class_spec.transforms[t].apply(
                        x[class_spec.transforms[t].feature]);
            }
            auto objective = [&](std::span<const double> beta) {
                thread_local std::vector<double> scratch;
                scratch.resize(table.n);
                for (std::size_t i = 0; i < table.n; ++i) {
                    double s = beta[0];
                    const double* row = design.data() + i * (dim - 1);
                    for (std::size_t t = 0; t + 1 < dim; ++t) s += beta[t + 1] * row[t];
                    scratch[i] = s > 0.0 ? y1[i] : y0[i];
                }
                if (criterion.kind == Criterion::Kind::TailAverage)
                    return empirical_cvar_inplace(scratch, criterion.param);
                return evaluate_criterion(scratch, criterion);
            };
            std::vector<double> init(dim, 0.0);
            init[0] = 1.0; // treat-all start
            const SaResult res = simulated_annealing(objective, init, sa, workers,
                                                     [](std::span<double> b) {
                                                         normalize_inplace(b);
                                                     });
            PolicyRule rule = canonicalize(class_spec.make_policy(res.argmax));
            return {rule, res.value};
        }
    }
    throw ConfigError("optimize_oracle: unknown class kind");
}

FirstBestResult oracle_first_best(const ObservationTable& table, double alpha,
                                  std::span<const double> eta_grid, double bandwidth,
                                  std::size_t train_cap, int workers) {
    require_counterfactuals(table, "oracle_first_best");
    if (eta_grid.empty()) throw ConfigError("oracle_first_best: empty eta grid");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("oracle_first_best: alpha outside (0,1]");
    if (!(bandwidth > 0.0)) throw ConfigError("oracle_first_best: bandwidth must be positive");

    const std::size_t n = table.n;
    const std::size_t p = table.p;
    const std::size_t G = eta_grid.size();
    const auto& y0 = *table.y0;
    const auto& y1 = *table.y1;

    // Strided training subsample for the smoother.
    std::size_t m = train_cap == 0 ? n : std::min(n, train_cap);
    std::vector<std::size_t> train(m);
    const double stride = static_cast<double>(n) / static_cast<double>(m);
    for (std::size_t t = 0; t < m; ++t) train[t] = static_cast<std::size_t>(t * stride);

    // Rule-of-thumb bandwidths over the training subsample.
    std::vector<double> center(p, 0.0), invb(p, 0.0);
    for (std::size_t t : train) {
        auto x = table.row(t);
        for (std::size_t j = 0; j < p; ++j) center[j] += x[j];
    }
    for (std::size_t j = 0; j < p; ++j) center[j] /= static_cast<double>(m);
    std::vector<double> var(p, 0.0);
    for (std::size_t t : train) {
        auto x = table.row(t);
        for (std::size_t j = 0; j < p; ++j) {
            const double d = x[j] - center[j];
            var[j] += d * d;
        }
    }
    const double rate = std::pow(static_cast<double>(m), -1.0 / (4.0 + static_cast<double>(p)));
    for (std::size_t j = 0; j < p; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(m));
        const double b = sd * rate * bandwidth;
        invb[j] = b > 0.0 ? 1.0 / b : 0.0;
    }
    std::vector<double> train_scaled(m * p);
    for (std::size_t t = 0; t < m; ++t) {
        auto x = table.row(train[t]);
        for (std::size_t j = 0; j < p; ++j) train_scaled[t * p + j] = x[j] * invb[j];
    }

    // Pseudo-outcome contrasts per training row and grid eta.
    std::vector<double> delta(m * G);
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t r = train[t];
        for (std::size_t g = 0; g < G; ++g)
            delta[t * G + g] =
                neg_part(y1[r] - eta_grid[g]) - neg_part(y0[r] - eta_grid[g]);
    }

    // Decide every row under every grid eta; accumulate the dual sums per
    // block so the reduction order is fixed.
    std::vector<std::uint8_t> treat_all(n * G);
    std::vector<double> neg_sums(G, 0.0);
    const std::size_t block = 512;
    const std::size_t nblocks = (n + block - 1) / block;
    std::vector<std::vector<double>> block_sums(nblocks, std::vector<double>(G, 0.0));
    par::parallel_for(0, nblocks, workers, [&](std::size_t bidx) {
        std::vector<double> w(m), tau(G);
        const std::size_t lo = bidx * block;
        const std::size_t hi = std::min(n, lo + block);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto x = table.row(i);
            double min_dist = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < m; ++t) {
                double dist = 0.0;
                const double* xt = train_scaled.data() + t * p;
                for (std::size_t j = 0; j < p; ++j) {
                    const double d = x[j] * invb[j] - xt[j];
                    dist += d * d;
                }
                w[t] = dist;
                if (dist < min_dist) min_dist = dist;
            }
            double total = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                w[t] = std::exp(-0.5 * (w[t] - min_dist));
                total += w[t];
            }
            std::fill(tau.begin(), tau.end(), 0.0);
            for (std::size_t t = 0; t < m; ++t) {
                const double wt = w[t];
                const double* drow = delta.data() + t * G;
                for (std::size_t g = 0; g < G; ++g) tau[g] += wt * drow[g];
            }
            for (std::size_t g = 0; g < G; ++g) {
                const bool tr = tau[g] > 0.0; // total > 0, sign of tau suffices
                treat_all[i * G + g] = tr;
                const double ysel = tr ? y1[i] : y0[i];
                block_sums[bidx][g] += neg_part(ysel - eta_grid[g]);
            }
        }
    });
    for (std::size_t bidx = 0; bidx < nblocks; ++bidx)
        for (std::size_t g = 0; g < G; ++g) neg_sums[g] += block_sums[bidx][g];

    std::size_t best_g = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < G; ++g) {
        const double dual =
            neg_sums[g] / (alpha * static_cast<double>(n)) + eta_grid[g];
        if (dual > best_value) {
            best_value = dual;
            best_g = g;
        }
    }

    FirstBestResult result;
    result.eta_star = eta_grid[best_g];
    result.treat.resize(n);
    std::size_t treated = 0;
    std::vector<double> ysel(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.treat[i] = treat_all[i * G + best_g];
        treated += result.treat[i];
        ysel[i] = result.treat[i] ? y1[i] : y0[i];
    }
    result.treated_fraction = static_cast<double>(treated) / static_cast<double>(n);
    // Report the deployed rule's tail average, which dominates the dual
    // value used for selection.
    result.value = empirical_cvar_inplace(ysel, alpha);
    return result;
}

double measure_regret(const ObservationTable& table, const PolicyRule& learned,
                      const PolicyClassSpec& class_spec, double alpha, const SaConfig& sa,
                      int workers) {
    const OracleOptimum best = optimize_oracle(table, class_spec,
                                               Criterion::tail_average(alpha), sa, workers);
    return best.value - oracle_welfare(table, learned, alpha);
}

} // namespace aewm
