#include "aewm/welfare.hpp"

#include "aewm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aewm {

namespace {

void check_values(std::span<const double> values, double alpha) {
    if (values.empty()) throw ConfigError("welfare: empty value list");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("welfare: alpha outside (0,1]");
}

} // namespace

double empirical_cvar_inplace(std::span<double> values, double alpha) {
    check_values(values, alpha);
    const std::size_t n = values.size();
    const double an = alpha * static_cast<double>(n);
    std::size_t m = static_cast<std::size_t>(std::floor(an));
    if (m > n) m = n;

    double sum = 0.0;
    if (m == n) {
        sum = std::accumulate(values.begin(), values.end(), 0.0);
    } else {
        // Partial selection is enough: the m smallest plus the boundary
        // order statistic v_(m+1).
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m),
                         values.end());
        sum = std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m),
                              0.0);
        const double frac = an - static_cast<double>(m);
        if (frac > 0.0) sum += frac * values[m];
    }
    return sum / an;
}

double empirical_cvar(std::span<const double> values, double alpha) {
    std::vector<double> v(values.begin(), values.end());
    return empirical_cvar_inplace(v, alpha);
}

double dual_value(std::span<const double> values, double alpha, double eta) {
    check_values(values, alpha);
    double sum = 0.0;
    for (double v : values) sum += neg_part(v - eta);
    return sum / (alpha * static_cast<double>(values.size())) + eta;
}

DualSup dual_sup(std::span<const double> values, double alpha) {
    check_values(values, alpha);
    const double eta_star = quantile_welfare(values, alpha);
    return {eta_star, dual_value(values, alpha, eta_star)};
}

std::vector<double> gini_rank_weights(std::size_t n, double k) {
    if (n == 0) throw ConfigError("gini: empty sample");
    if (!(k >= 2.0)) throw ConfigError("gini: k must be >= 2");
    const double scale = std::pow(static_cast<double>(n), k - 1.0);
    std::vector<double> w(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double hi = std::pow(static_cast<double>(n - i + 1), k - 1.0);
        const double lo = std::pow(static_cast<double>(n - i), k - 1.0);
        w[i - 1] = (hi - lo) / scale;
    }
    return w;
}

double gini_welfare(std::span<const double> values, double k) {
    if (values.empty()) throw ConfigError("gini: empty sample");
    if (!(k >= 2.0)) throw ConfigError("gini: k must be >= 2");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    if (k == 2.0) {
        // Weights are identically 1/n; this is the arithmetic mean.
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
    const std::size_t n = v.size();
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double hi = std::pow(static_cast<double>(n - i + 1), k - 1.0);
        const double lo = std::pow(static_cast<double>(n - i), k - 1.0);
        acc += v[i - 1] * (hi - lo);
    }
    return acc / std::pow(static_cast<double>(n), k - 1.0);
}

GiniIdentityCheck gini_integral_identity(std::span<const double> values, double k) {
    if (!(k > 2.0)) throw ConfigError("gini identity: requires k > 2");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) throw ConfigError("gini identity: empty sample");

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
    auto w_alpha = [&](double alpha) {
        const double an = alpha * static_cast<double>(n);
        std::size_t m = static_cast<std::size_t>(std::floor(an));
        if (m > n) m = n;
        double sum = prefix[m];
        if (m < n) sum += (an - static_cast<double>(m)) * v[m];
        return sum / an;
    };

    // Composite Simpson on a fine grid; the integrand vanishes at alpha = 0
    // and the (1-alpha)^{k-3} endpoint is integrable for k > 2.
    const int steps = 1 << 14;
    const double h = 1.0 / steps;
    auto f = [&](double alpha) {
        if (alpha <= 0.0) return 0.0;
        const double onem = 1.0 - alpha;
        if (onem <= 0.0) return 0.0;
        return w_alpha(alpha) * alpha * std::pow(onem, k - 3.0);
    };
    double integral = 0.0;
    for (int s = 0; s < steps; ++s) {
        const double a0 = s * h, a1 = (s + 1) * h;
        integral += (f(a0) + 4.0 * f(0.5 * (a0 + a1)) + f(a1)) * h / 6.0;
    }
    GiniIdentityCheck check;
    check.weight_form = gini_welfare(values, k);
    check.integral_form = (k - 2.0) * integral;
    check.raw_residual = check.integral_form - check.weight_form;
    check.scaled_residual = (k - 1.0) * check.integral_form - check.weight_form;
    return check;
}

double quantile_welfare(std::span<const double> values, double alpha) {
    check_values(values, alpha);
    const std::size_t n = values.size();
    std::size_t r = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
    if (r < 1) r = 1;
    if (r > n) r = n;
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r - 1), v.end());
    return v[r - 1];
}

FeasibleEtaInterval FeasibleEtaInterval::from_outcomes(std::span<const double> y) {
    if (y.empty()) throw ConfigError("welfare: empty outcome list");
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    return {*lo, *hi};
}

std::vector<double> eta_candidates(std::span<const double> y, const FeasibleEtaInterval& interval,
                                   int grid_points) {
    std::vector<double> cand(y.begin(), y.end());
    if (grid_points > 1 && interval.hi > interval.lo) {
        const double step = (interval.hi - interval.lo) / (grid_points - 1);
        for (int g = 0; g < grid_points; ++g) cand.push_back(interval.lo + g * step);
    } else {
        cand.push_back(interval.lo);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    return cand;
}

double dr_score(double y, int a, int pi_x, double eta, double mu0, double mu1, double e,
                double alpha) {
    if (!(e > 0.0 && e < 1.0)) throw ComputeError("dr_score: propensity at 0 or 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("dr_score: alpha outside (0,1]");
    const double pi = pi_x;
    const double pseudo = neg_part(y - eta);
    const double inv_alpha = 1.0 / alpha;
    double score = inv_alpha * ((1.0 - pi) * mu0 + pi * mu1) + eta;
    score += inv_alpha * (((1.0 - pi) * (1.0 - a)) / (1.0 - e) * (pseudo - mu0));
    score += inv_alpha * ((pi * a) / e * (pseudo - mu1));
    return score;
}

double ScoreSet::mean() const {
    if (gamma.empty()) return 0.0;
    return std::accumulate(gamma.begin(), gamma.end(), 0.0) / static_cast<double>(gamma.size());
}

} // namespace aewm
