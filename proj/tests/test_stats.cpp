#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "infosuff/stats.hpp"
#include "infosuff/util.hpp"

using namespace infosuff;

// ---------------------------------------------------------------------------
// Independent oracles

namespace {

// Midrank formula, independent of the library's ranking code.
std::vector<double> oracle_ranks(const std::vector<double>& values) {
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double below = 0.0, equal = 0.0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (values[j] < values[i]) below += 1.0;
            if (j != i && values[j] == values[i]) equal += 1.0;
        }
        ranks[i] = 1.0 + below + equal / 2.0;
    }
    return ranks;
}

// Full 2^n sign-flip enumeration of the signed-rank statistic.
double oracle_wilcoxon_exact_p(const std::vector<double>& raw_diffs) {
    std::vector<double> diffs;
    for (double d : raw_diffs)
        if (d != 0.0) diffs.push_back(d);
    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
    std::vector<double> ranks = oracle_ranks(abs_diffs);

    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0.0) w_obs += ranks[i];

    double c_le = 0.0, c_ge = 0.0;
    const std::uint64_t total = std::uint64_t(1) << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint64_t(1) << i)) w += ranks[i];
        if (w <= w_obs) c_le += 1.0;
        if (w >= w_obs) c_ge += 1.0;
    }
    double denom = std::ldexp(1.0, int(n));
    return std::min(1.0, 2.0 * std::min(c_le, c_ge) / denom);
}

// Two-sided Student t tail by Simpson quadrature over the density.
double oracle_t_two_sided(double t, double dof) {
    double a = std::fabs(t);
    double log_norm = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) -
                      0.5 * std::log(dof * M_PI);
    auto pdf = [&](double x) {
        return std::exp(log_norm - (dof + 1.0) / 2.0 * std::log1p(x * x / dof));
    };
    // integrate the central mass [-a, a] and take the complement
    const int steps = 200000;
    double h = 2.0 * a / steps;
    double sum = pdf(-a) + pdf(a);
    for (int i = 1; i < steps; ++i) sum += pdf(-a + i * h) * (i % 2 ? 4.0 : 2.0);
    double central = sum * h / 3.0;
    return 1.0 - central;
}

}  // namespace

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

TEST_CASE("wilcoxon [1,2,3]: W+=6, exact two-sided p=0.25, r=+1") {
    PairedSample sample{{1.0, 2.0, 3.0}};
    TestResult t = wilcoxon_signed_rank(sample, WilcoxonMode::exact);
    CHECK_EQ(t.statistic, 6.0);
    CHECK_EQ(t.p_value, 0.25);
    CHECK_EQ(*t.effect_size, 1.0);
    CHECK_EQ(t.n_effective, 3);
}

TEST_CASE("wilcoxon symmetric [-1,1] with tied ranks gives p=1") {
    PairedSample sample{{-1.0, 1.0}};
    TestResult t = wilcoxon_signed_rank(sample, WilcoxonMode::exact);
    CHECK_EQ(t.p_value, 1.0);
    CHECK_EQ(*t.effect_size, 0.0);
}

TEST_CASE("wilcoxon discards zero differences and errors when none remain") {
    PairedSample with_zero{{0.0, 1.0, 2.0, 3.0}};
    TestResult t = wilcoxon_signed_rank(with_zero, WilcoxonMode::exact);
    CHECK_EQ(t.n_effective, 3);
    CHECK_EQ(t.p_value, 0.25);

    PairedSample all_zero{{0.0, 0.0}};
    CHECK_THROWS_WITH_AS(wilcoxon_signed_rank(all_zero), doctest::Contains("no nonzero pairs"),
                         StatsError);
}

TEST_CASE("exact wilcoxon equals the sign-flip enumeration for random n <= 12") {
    SplitMix64 rng(20240811);
    int tested = 0;
    while (tested < 200) {
        std::size_t n = 1 + std::size_t(rng.bounded(12));
        std::vector<double> diffs(n);
        bool any_nonzero = false;
        for (auto& d : diffs) {
            d = double(std::int64_t(rng.bounded(9))) - 4.0;  // ties and zeros likely
            if (d != 0.0) any_nonzero = true;
        }
        if (!any_nonzero) continue;
        ++tested;
        PairedSample sample{diffs};
        TestResult t = wilcoxon_signed_rank(sample, WilcoxonMode::exact);
        double expected = oracle_wilcoxon_exact_p(diffs);
        CHECK_EQ(t.p_value, expected);  // exact equality, both sides count integers
        CHECK_GE(t.p_value, 0.0);
        CHECK_LE(t.p_value, 1.0);
    }
}

TEST_CASE("normal approximation tracks the exact test on tie-free data") {
    SplitMix64 rng(777);
    for (int rep = 0; rep < 60; ++rep) {
        std::size_t n = 10 + std::size_t(rng.bounded(16));  // 10..25
        std::vector<double> diffs;
        for (std::size_t i = 0; i < n; ++i) {
            double magnitude = double(i + 1);
            diffs.push_back(rng.bounded(2) ? magnitude : -magnitude);
        }
        PairedSample sample{diffs};
        double p_exact = wilcoxon_signed_rank(sample, WilcoxonMode::exact).p_value;
        double p_approx = wilcoxon_signed_rank(sample, WilcoxonMode::normal_approx).p_value;
        CHECK_LE(std::fabs(p_exact - p_approx), 0.01);
    }
}

TEST_CASE("wilcoxon auto mode selects exact for small n") {
    PairedSample sample{{1.0, 2.0, 3.0}};
    CHECK_EQ(wilcoxon_signed_rank(sample, WilcoxonMode::auto_select).method,
             "wilcoxon_signed_rank_exact");
}

// ---------------------------------------------------------------------------
// Bonferroni

TEST_CASE("bonferroni basics") {
    CHECK_EQ(bonferroni(0.01, 4), 0.04);
    CHECK_EQ(bonferroni(0.4, 4), 1.0);
    CHECK_EQ(bonferroni(0.0, 7), 0.0);
}

TEST_CASE("bonferroni is monotone in both arguments and capped") {
    SplitMix64 rng(5);
    for (int i = 0; i < 200; ++i) {
        double p = rng.uniform();
        double q = rng.uniform();
        if (p > q) std::swap(p, q);
        int m = 1 + int(rng.bounded(10));
        CHECK_LE(bonferroni(p, m), bonferroni(q, m));
        CHECK_LE(bonferroni(p, m), bonferroni(p, m + 1));
        CHECK_LE(bonferroni(q, m), 1.0);
    }
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis

TEST_CASE("kruskal_wallis on identical groups is the null") {
    TestResult t = kruskal_wallis({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
    CHECK_LE(std::fabs(t.statistic), 1e-9);
    CHECK_EQ(t.p_value, doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kruskal_wallis matches the hand rank-sum value on disjoint groups") {
    // pooled ranks 1..6, rank sums 6 and 15:
    // H = 12/42 * (36/3 + 225/3) - 21 = 27/7
    TestResult t = kruskal_wallis({{1.0, 2.0, 3.0}, {10.0, 11.0, 12.0}});
    CHECK_EQ(t.statistic, doctest::Approx(27.0 / 7.0).epsilon(1e-12));
    CHECK_EQ(t.p_value, doctest::Approx(chi2_sf(27.0 / 7.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("kruskal_wallis with ties matches a brute-force rank computation") {
    std::vector<std::vector<double>> groups = {{1.0, 2.0, 2.0}, {2.0, 5.0}, {3.0, 4.0, 4.0}};
    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    std::vector<double> ranks = oracle_ranks(pooled);

    double n = double(pooled.size());
    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        offset += g.size();
        h += rank_sum * rank_sum / double(g.size());
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    // each member of a tie group of size t contributes t^2 - 1, so the
    // total equals sum over groups of t^3 - t
    double tie_sum = 0.0;
    for (double v : pooled) {
        double t = 0.0;
        for (double w : pooled)
            if (w == v) t += 1.0;
        tie_sum += t * t - 1.0;
    }
    h /= 1.0 - tie_sum / (n * n * n - n);

    TestResult t = kruskal_wallis(groups);
    CHECK_EQ(t.statistic, doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("kruskal_wallis is invariant under strictly monotone transforms") {
    std::vector<std::vector<double>> groups = {{0.5, 1.5, 2.0}, {1.0, 3.0}, {2.5, 4.0, 5.0}};
    std::vector<std::vector<double>> cubed = groups;
    for (auto& g : cubed)
        for (auto& v : g) v = v * v * v;
    CHECK_EQ(kruskal_wallis(groups).statistic, kruskal_wallis(cubed).statistic);
}

TEST_CASE("kruskal_wallis rejects degenerate shapes") {
    CHECK_THROWS_AS(kruskal_wallis({{1.0}}), StatsError);
    CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), StatsError);
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

namespace {

RatingsMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
    RatingsMatrix m;
    for (const auto& row : rows) {
        std::vector<std::optional<double>> r;
        for (double v : row) r.push_back(v);
        m.ratings.push_back(r);
    }
    return m;
}

}  // namespace

TEST_CASE("krippendorff alpha is 1 on identical rater vectors") {
    CHECK_EQ(krippendorff_alpha_interval(matrix_from({{1, 2, 3, 4}, {1, 2, 3, 4}})), 1.0);
    // all-identical ratings: zero expected disagreement, defined as 1
    CHECK_EQ(krippendorff_alpha_interval(matrix_from({{2, 2}, {2, 2}})), 1.0);
}

TEST_CASE("krippendorff alpha matches the hand-computed 2x4 fixture") {
    // raters (1,2,3,4) and (1,2,4,4): D_o = 0.25, D_e = 190/56,
    // alpha = 1 - 14/190 = 176/190
    double alpha = krippendorff_alpha_interval(matrix_from({{1, 2, 3, 4}, {1, 2, 4, 4}}));
    CHECK_EQ(alpha, doctest::Approx(176.0 / 190.0).epsilon(1e-12));
}

TEST_CASE("krippendorff alpha near zero for independent ratings, against the definition") {
    // two raters drawing independently and uniformly from {1,2,3}
    SplitMix64 rng(31);
    std::vector<double> a, b;
    for (int i = 0; i < 120; ++i) {
        a.push_back(double(1 + rng.bounded(3)));
        b.push_back(double(1 + rng.bounded(3)));
    }

    // direct D_o / D_e computation from the definition
    double n = double(a.size() + b.size());
    double d_o = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d_o += 2.0 * (a[i] - b[i]) * (a[i] - b[i]);
    d_o /= n;
    std::vector<double> all;
    all.insert(all.end(), a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    double d_e = 0.0;
    for (double x : all)
        for (double y : all) d_e += (x - y) * (x - y);
    d_e /= n * (n - 1.0);
    double expected = 1.0 - d_o / d_e;

    double alpha = krippendorff_alpha_interval(matrix_from({a, b}));
    CHECK_EQ(alpha, doctest::Approx(expected).epsilon(1e-12));
    CHECK_LE(std::fabs(alpha), 0.2);  // independent raters hover near zero
}

TEST_CASE("krippendorff alpha ignores items with fewer than two ratings") {
    RatingsMatrix m = matrix_from({{1, 2, 3, 4}, {1, 2, 4, 4}});
    m.ratings[0].push_back(5.0);  // rated by one rater only
    m.ratings[1].push_back(std::nullopt);
    double alpha = krippendorff_alpha_interval(m);
    CHECK_EQ(alpha, doctest::Approx(176.0 / 190.0).epsilon(1e-12));
}

TEST_CASE("krippendorff alpha is shift and positive-scale invariant") {
    auto base = matrix_from({{1, 2, 3, 4, 2}, {2, 2, 4, 3, 1}});
    double alpha = krippendorff_alpha_interval(base);
    auto shifted = base;
    for (auto& row : shifted.ratings)
        for (auto& v : row) v = *v + 7.5;
    auto scaled = base;
    for (auto& row : scaled.ratings)
        for (auto& v : row) v = *v * 3.25;
    CHECK_EQ(krippendorff_alpha_interval(shifted), doctest::Approx(alpha).epsilon(1e-9));
    CHECK_EQ(krippendorff_alpha_interval(scaled), doctest::Approx(alpha).epsilon(1e-9));
}

// ---------------------------------------------------------------------------
// Variance decomposition

TEST_CASE("variance decomposition attributes a strategy-only effect to strategy") {
    std::vector<FactorObservation> obs;
    for (const std::string scenario : {"s1", "s2", "s3"})
        for (const std::string strategy : {"A", "B"})
            for (const std::string model : {"m1", "m2"})
                obs.push_back({scenario, strategy, model, strategy == "A" ? 1.0 : 2.0});
    VarianceShares shares = variance_decomposition(obs);
    CHECK_FALSE(shares.degenerate);
    CHECK_EQ(shares.scenario_share, doctest::Approx(0.0).epsilon(1e-12));
    CHECK_EQ(shares.strategy_share, doctest::Approx(1.0).epsilon(1e-12));
    CHECK_EQ(shares.model_share, doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("variance decomposition flags a constant response as degenerate") {
    std::vector<FactorObservation> obs;
    for (const std::string scenario : {"s1", "s2"})
        for (const std::string strategy : {"A", "B"})
            for (const std::string model : {"m1", "m2"})
                obs.push_back({scenario, strategy, model, 0.5});
    VarianceShares shares = variance_decomposition(obs);
    CHECK(shares.degenerate);
    CHECK_EQ(shares.scenario_share, 0.0);
    CHECK_EQ(shares.residual_share, 0.0);
}

TEST_CASE("variance decomposition matches hand-computed sums of squares on a 2x2x2 design") {
    // additive effects on a balanced design: the factors are orthogonal,
    // so sequential SS equals per-factor SS computed by hand
    std::vector<FactorObservation> obs;
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
            for (int m = 0; m < 2; ++m)
                obs.push_back({s ? "s1" : "s0", t ? "t1" : "t0", m ? "m1" : "m0",
                               s * 1.0 + t * 0.5 + m * 0.25});
    VarianceShares shares = variance_decomposition(obs);
    double ss_total = 2.0 + 0.5 + 0.125;
    CHECK_EQ(shares.scenario_share, doctest::Approx(2.0 / ss_total).epsilon(1e-12));
    CHECK_EQ(shares.strategy_share, doctest::Approx(0.5 / ss_total).epsilon(1e-12));
    CHECK_EQ(shares.model_share, doctest::Approx(0.125 / ss_total).epsilon(1e-12));
    CHECK_EQ(shares.residual_share, doctest::Approx(0.0).epsilon(1e-12));
    CHECK_EQ(shares.scenario_share + shares.strategy_share + shares.model_share +
                 shares.residual_share,
             doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance decomposition requires two levels per factor") {
    std::vector<FactorObservation> obs = {{"s1", "A", "m1", 1.0}, {"s2", "A", "m1", 2.0}};
    CHECK_THROWS_WITH_AS(variance_decomposition(obs), doctest::Contains("strategy"),
                         StatsError);
}

// ---------------------------------------------------------------------------
// Bootstrap

TEST_CASE("bootstrap on a constant sample is degenerate") {
    std::vector<double> values(20, 0.5);
    auto [lo, hi] = bootstrap_ci(values, 0.95, 10000, 1);
    CHECK_EQ(lo, 0.5);
    CHECK_EQ(hi, 0.5);
}

TEST_CASE("bootstrap is bit-identical for the same seed and narrows with level") {
    std::vector<double> values = {0.1, 0.4, 0.35, 0.8, 0.95, 0.2, 0.6};
    auto a = bootstrap_ci(values, 0.95, 2000, 42);
    auto b = bootstrap_ci(values, 0.95, 2000, 42);
    CHECK_EQ(a.first, b.first);
    CHECK_EQ(a.second, b.second);

    auto narrower = bootstrap_ci(values, 0.80, 2000, 42);
    CHECK_GE(narrower.first, a.first);
    CHECK_LE(narrower.second, a.second);

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    CHECK_LE(a.first, mean);
    CHECK_GE(a.second, mean);
}

TEST_CASE("bootstrap n=2 endpoints match the exhaustive resample enumeration") {
    // resamples of {0,1}: means 0, 0.5, 0.5, 1 with probability 1/4 each.
    // Exact distribution quantiles: q(0.025) = 0, q(0.975) = 1.
    auto [lo, hi] = bootstrap_ci({0.0, 1.0}, 0.95, 10000, 9);
    CHECK_EQ(lo, 0.0);
    CHECK_EQ(hi, 1.0);
}

TEST_CASE("bootstrap rejects bad arguments") {
    CHECK_THROWS_AS(bootstrap_ci({}, 0.95, 100, 1), StatsError);
    CHECK_THROWS_AS(bootstrap_ci({1.0}, 1.5, 100, 1), StatsError);
}

// ---------------------------------------------------------------------------
// t tests

TEST_CASE("paired t on identical samples is the null") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    TestResult t = paired_t(a, a);
    CHECK_EQ(t.statistic, 0.0);
    CHECK_EQ(t.p_value, 1.0);
}

TEST_CASE("paired t errors on a constant nonzero shift") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = {2.0, 3.0, 4.0};
    CHECK_THROWS_WITH_AS(paired_t(a, b), doctest::Contains("zero variance of differences"),
                         StatsError);
}

TEST_CASE("paired t matches the hand formula and a quadrature oracle") {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> b = {0.0, 0.0, 1.0, 5.0};
    // diffs 1,2,2,-1: mean 1, sample var 2, t = 1/sqrt(2/4) = sqrt(2), dof 3
    TestResult t = paired_t(a, b);
    CHECK_EQ(t.statistic, doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_EQ(t.p_value, doctest::Approx(oracle_t_two_sided(t.statistic, 3.0)).epsilon(1e-7));
}

TEST_CASE("welch t matches the hand formula and a quadrature oracle") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = {2.0, 4.0, 6.0, 8.0};
    // mean 2 vs 5, var 1 vs 20/3, se^2 = 1/3 + 5/3 = 2
    TestResult t = welch_t(a, b);
    CHECK_EQ(t.statistic, doctest::Approx(-3.0 / std::sqrt(2.0)).epsilon(1e-12));
    double va = 1.0, vb = 20.0 / 3.0, na = 3.0, nb = 4.0;
    double dof = (va / na + vb / nb) * (va / na + vb / nb) /
                 (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    CHECK_EQ(t.p_value, doctest::Approx(oracle_t_two_sided(t.statistic, dof)).epsilon(1e-7));
}

TEST_CASE("welch t on identical constant samples is the null") {
    std::vector<double> a = {2.0, 2.0, 2.0};
    TestResult t = welch_t(a, a);
    CHECK_EQ(t.statistic, 0.0);
    CHECK_EQ(t.p_value, 1.0);
}

// ---------------------------------------------------------------------------
// Distribution helpers against closed-form anchors

TEST_CASE("normal cdf anchors") {
    CHECK_EQ(normal_cdf(0.0), doctest::Approx(0.5).epsilon(1e-12));
    CHECK_EQ(normal_cdf(1.959963984540054), doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("chi-squared survival anchors") {
    // chi2(1) survival is 2*(1 - Phi(sqrt(x)))
    for (double x : {0.5, 1.0, 3.84, 10.0}) {
        double expected = 2.0 * (1.0 - normal_cdf(std::sqrt(x)));
        CHECK_EQ(chi2_sf(x, 1.0), doctest::Approx(expected).epsilon(1e-9));
    }
    // chi2(2) survival is exp(-x/2)
    for (double x : {0.2, 1.0, 5.0}) {
        CHECK_EQ(chi2_sf(x, 2.0), doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("student t two-sided anchors") {
    // dof=1 is Cauchy: two-sided p = 1 - 2*atan(t)/pi
    for (double t : {0.5, 1.0, 3.0}) {
        double expected = 1.0 - 2.0 * std::atan(t) / M_PI;
        CHECK_EQ(student_t_two_sided(t, 1.0), doctest::Approx(expected).epsilon(1e-9));
    }
}
