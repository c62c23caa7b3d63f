#include "infosuff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "infosuff/util.hpp"

namespace infosuff {

// ---------------------------------------------------------------------------
// Distribution helpers

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Regularized incomplete gamma functions, series + continued fraction.
double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw StatsError("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

// Incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double chi2_sf(double x, double dof) { return gamma_q(dof / 2.0, x / 2.0); }

double student_t_two_sided(double t, double dof) {
    if (!std::isfinite(t)) return 0.0;
    return betai(dof / 2.0, 0.5, dof / (dof + t * t));
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (double(i + 1) + double(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

TestResult wilcoxon_signed_rank(const PairedSample& sample, WilcoxonMode mode) {
    std::vector<double> diffs;
    for (double d : sample.diffs) {
        if (!std::isfinite(d)) throw StatsError("wilcoxon: non-finite difference");
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n == 0) throw StatsError("no nonzero pairs");

    if (mode == WilcoxonMode::auto_select)
        mode = n <= 25 ? WilcoxonMode::exact : WilcoxonMode::normal_approx;
    if (mode == WilcoxonMode::normal_approx && n < 10)
        throw StatsError("wilcoxon normal approximation needs n >= 10");

    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
    std::vector<double> ranks = average_ranks(abs_diffs);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0.0) w_plus += ranks[i];
    const double s_total = double(n) * double(n + 1) / 2.0;
    const double w_minus = s_total - w_plus;

    TestResult result;
    result.n_effective = std::int64_t(n);
    result.statistic = w_plus;
    result.effect_size = w_plus / s_total - w_minus / s_total;

    if (mode == WilcoxonMode::exact) {
        // Distribution of W+ over all 2^n sign assignments, with the tied
        // ranks kept. Ranks are multiples of 0.5, so 2*rank is integral and
        // the polynomial product stays exact in doubles up to n ~ 50.
        std::vector<int> scaled(n);
        int total_scaled = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = int(std::llround(2.0 * ranks[i]));
            total_scaled += scaled[i];
        }
        std::vector<double> count(std::size_t(total_scaled) + 1, 0.0);
        count[0] = 1.0;
        int reached = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reached += scaled[i];
            for (int s = reached; s >= scaled[i]; --s) count[s] += count[s - scaled[i]];
        }
        int w_scaled = int(std::llround(2.0 * w_plus));
        double c_le = 0.0, c_ge = 0.0;
        for (int s = 0; s <= total_scaled; ++s) {
            if (s <= w_scaled) c_le += count[s];
            if (s >= w_scaled) c_ge += count[s];
        }
        double denom = std::ldexp(1.0, int(n));  // 2^n
        result.p_value = std::min(1.0, 2.0 * std::min(c_le, c_ge) / denom);
        result.method = "wilcoxon_signed_rank_exact";
    } else {
        // Tie-corrected moments: with midranks, Var(W+) = sum(r^2)/4, which
        // equals the classical n(n+1)(2n+1)/24 - sum(t^3-t)/48 form. A
        // kurtosis (Edgeworth) term sharpens the tail enough to stay within
        // 0.01 of the exact p down to n = 10.
        double mean = s_total / 2.0;
        double sum_r2 = 0.0, sum_r4 = 0.0;
        for (double r : ranks) {
            sum_r2 += r * r;
            sum_r4 += r * r * r * r;
        }
        double var = sum_r2 / 4.0;
        if (var <= 0.0) throw StatsError("wilcoxon: zero variance after tie correction");
        double sigma = std::sqrt(var);
        double excess_kurtosis = -2.0 * sum_r4 / (sum_r2 * sum_r2);
        auto cdf = [&](double z) {
            double pdf = std::exp(-z * z / 2.0) / std::sqrt(2.0 * M_PI);
            return normal_cdf(z) - pdf * (excess_kurtosis / 24.0) * (z * z * z - 3.0 * z);
        };
        // continuity-corrected lower and upper tails
        double p_lower = cdf((w_plus + 0.5 - mean) / sigma);
        double p_upper = 1.0 - cdf((w_plus - 0.5 - mean) / sigma);
        result.p_value =
            std::min(1.0, 2.0 * std::max(0.0, std::min(p_lower, p_upper)));
        result.method = "wilcoxon_signed_rank_normal_approx";
    }
    return result;
}

double bonferroni(double p, int m) {
    if (p < 0.0 || p > 1.0) throw StatsError("bonferroni: p outside [0,1]");
    if (m < 1) throw StatsError("bonferroni: m must be >= 1");
    return std::min(1.0, double(m) * p);
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw StatsError("kruskal_wallis: need >= 2 groups");
    for (const auto& g : groups)
        if (g.empty()) throw StatsError("kruskal_wallis: empty group");

    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    const double n_total = double(pooled.size());
    std::vector<double> ranks = average_ranks(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        offset += g.size();
        h += rank_sum * rank_sum / double(g.size());
    }
    h = 12.0 / (n_total * (n_total + 1.0)) * h - 3.0 * (n_total + 1.0);

    std::map<double, int> tie_counts;
    for (double v : pooled) tie_counts[v] += 1;
    double tie_sum = 0.0;
    for (const auto& [value, t] : tie_counts)
        if (t > 1) tie_sum += double(t) * t * t - t;
    double correction = 1.0 - tie_sum / (n_total * n_total * n_total - n_total);

    TestResult result;
    result.n_effective = std::int64_t(pooled.size());
    result.method = "kruskal_wallis";
    if (correction <= 0.0) {
        // every pooled value identical: no information, report the null
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    h /= correction;
    h = std::max(h, 0.0);  // H is nonnegative; clear rounding residue
    result.statistic = h;
    result.p_value = chi2_sf(h, double(groups.size() - 1));
    return result;
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha (interval)

double krippendorff_alpha_interval(const RatingsMatrix& m) {
    if (m.raters() < 2) throw StatsError("krippendorff: need >= 2 raters");
    for (const auto& row : m.ratings)
        if (row.size() != m.items()) throw StatsError("krippendorff: ragged matrix");

    // pairable values: items with >= 2 ratings
    std::vector<std::vector<double>> units;
    std::vector<double> all_values;
    for (std::size_t item = 0; item < m.items(); ++item) {
        std::vector<double> vals;
        for (std::size_t rater = 0; rater < m.raters(); ++rater)
            if (m.ratings[rater][item]) vals.push_back(*m.ratings[rater][item]);
        if (vals.size() >= 2) {
            all_values.insert(all_values.end(), vals.begin(), vals.end());
            units.push_back(std::move(vals));
        }
    }
    if (units.empty()) throw StatsError("krippendorff: no item with >= 2 ratings");

    const double n_pairable = double(all_values.size());

    double d_o = 0.0;
    for (const auto& vals : units) {
        double unit_sum = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t j = 0; j < vals.size(); ++j)
                if (i != j) unit_sum += (vals[i] - vals[j]) * (vals[i] - vals[j]);
        d_o += unit_sum / (double(vals.size()) - 1.0);
    }
    d_o /= n_pairable;

    double d_e = 0.0;
    for (std::size_t i = 0; i < all_values.size(); ++i)
        for (std::size_t j = 0; j < all_values.size(); ++j)
            if (i != j) d_e += (all_values[i] - all_values[j]) * (all_values[i] - all_values[j]);
    d_e /= n_pairable * (n_pairable - 1.0);

    if (d_e == 0.0) return 1.0;  // all ratings identical everywhere
    return 1.0 - d_o / d_e;
}

// ---------------------------------------------------------------------------
// Variance decomposition

namespace {

// Removes per-level means of one factor from the residual; returns the sum
// of squares captured by those means.
double remove_factor_means(std::vector<double>& residual,
                           const std::vector<std::string>& levels) {
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        auto& [sum, count] = sums[levels[i]];
        sum += residual[i];
        ++count;
    }
    double captured = 0.0;
    for (auto& [level, sc] : sums) {
        double mean = sc.first / double(sc.second);
        captured += double(sc.second) * mean * mean;
        sc.first = mean;  // reuse as the level mean
    }
    for (std::size_t i = 0; i < residual.size(); ++i)
        residual[i] -= sums[levels[i]].first;
    return captured;
}

}  // namespace

VarianceShares variance_decomposition(const std::vector<FactorObservation>& observations) {
    if (observations.empty()) throw StatsError("variance_decomposition: no observations");

    std::vector<std::string> scenarios, strategies, models;
    std::vector<double> response;
    for (const auto& o : observations) {
        scenarios.push_back(o.scenario);
        strategies.push_back(o.strategy);
        models.push_back(o.model);
        response.push_back(o.response);
    }
    for (const auto& [name, levels] :
         {std::pair<const char*, const std::vector<std::string>*>{"scenario", &scenarios},
          {"strategy", &strategies},
          {"model", &models}}) {
        std::map<std::string, int> distinct;
        for (const auto& l : *levels) distinct[l] = 1;
        if (distinct.size() < 2)
            throw StatsError(std::string("variance_decomposition: factor ") + name +
                             " has fewer than 2 levels");
    }

    const double n = double(response.size());
    double grand = std::accumulate(response.begin(), response.end(), 0.0) / n;
    std::vector<double> residual(response.size());
    double ss_total = 0.0;
    for (std::size_t i = 0; i < response.size(); ++i) {
        residual[i] = response[i] - grand;
        ss_total += residual[i] * residual[i];
    }

    VarianceShares shares;
    if (ss_total == 0.0) {
        shares.degenerate = true;
        return shares;
    }

    double ss_scenario = remove_factor_means(residual, scenarios);
    double ss_strategy = remove_factor_means(residual, strategies);
    double ss_model = remove_factor_means(residual, models);

    shares.scenario_share = ss_scenario / ss_total;
    shares.strategy_share = ss_strategy / ss_total;
    shares.model_share = ss_model / ss_total;
    shares.residual_share =
        1.0 - shares.scenario_share - shares.strategy_share - shares.model_share;
    return shares;
}

// ---------------------------------------------------------------------------
// Bootstrap

namespace {

// Type-7 quantile (linear interpolation) on a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw StatsError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    double h = double(sorted.size() - 1) * p;
    std::size_t lo = std::size_t(h);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = h - double(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, double level,
                                       int resamples, std::uint64_t seed) {
    if (values.empty()) throw StatsError("bootstrap_ci: empty sample");
    if (level <= 0.0 || level >= 1.0) throw StatsError("bootstrap_ci: level outside (0,1)");
    if (resamples < 1) throw StatsError("bootstrap_ci: resamples must be >= 1");

    const std::size_t n = values.size();
    std::uint64_t base = derive_seed(seed, "bootstrap");
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        SplitMix64 rng(base + std::uint64_t(r));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[rng.bounded(n)];
        means[std::size_t(r)] = sum / double(n);
    }
    std::sort(means.begin(), means.end());
    double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

// ---------------------------------------------------------------------------
// t tests

namespace {

std::pair<double, double> mean_and_var(const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? ss / double(v.size() - 1) : 0.0};
}

}  // namespace

TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw StatsError("paired_t: size mismatch");
    if (a.size() < 2) throw StatsError("paired_t: need n >= 2");
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    auto [mean, var] = mean_and_var(diffs);

    TestResult result;
    result.method = "paired_t";
    result.n_effective = std::int64_t(a.size());
    if (var == 0.0) {
        if (mean == 0.0) {
            result.statistic = 0.0;
            result.p_value = 1.0;
            return result;
        }
        throw StatsError("zero variance of differences");
    }
    double n = double(a.size());
    result.statistic = mean / std::sqrt(var / n);
    result.p_value = student_t_two_sided(result.statistic, n - 1.0);
    return result;
}

TestResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("welch_t: need n >= 2 per sample");
    auto [mean_a, var_a] = mean_and_var(a);
    auto [mean_b, var_b] = mean_and_var(b);
    double na = double(a.size()), nb = double(b.size());
    double se2 = var_a / na + var_b / nb;

    TestResult result;
    result.method = "welch_t";
    result.n_effective = std::int64_t(a.size() + b.size());
    if (se2 == 0.0) {
        if (mean_a == mean_b) {
            result.statistic = 0.0;
            result.p_value = 1.0;
            return result;
        }
        throw StatsError("zero variance in both samples");
    }
    result.statistic = (mean_a - mean_b) / std::sqrt(se2);
    double dof = se2 * se2 /
                 (var_a * var_a / (na * na * (na - 1.0)) + var_b * var_b / (nb * nb * (nb - 1.0)));
    result.p_value = student_t_two_sided(result.statistic, dof);
    return result;
}

}  // namespace infosuff
