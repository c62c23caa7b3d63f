#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infosuff {

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> effect_size;  // rank-biserial r for Wilcoxon
    std::string method;
    std::int64_t n_effective = 0;
};

// Per-scenario metric differences A-B. Zero differences are discarded
// before ranking (classical convention); n_effective reports what is left.
struct PairedSample {
    std::vector<double> diffs;
};

enum class WilcoxonMode { exact, normal_approx, auto_select };

// Two-sided signed-rank test. Exact mode computes the full sign-flip
// distribution (tied ranks kept); approx uses the tie-corrected normal
// approximation with continuity correction. auto_select picks exact for
// n <= 25. Effect size is rank-biserial r = W+/S - W-/S, S = n(n+1)/2.
TestResult wilcoxon_signed_rank(const PairedSample& sample,
                                WilcoxonMode mode = WilcoxonMode::auto_select);

// min(1, m*p)
double bonferroni(double p, int m);

// Tie-corrected H with chi-squared p on k-1 degrees of freedom.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// raters x items grid; missing ratings allowed.
struct RatingsMatrix {
    std::vector<std::vector<std::optional<double>>> ratings;  // [rater][item]

    std::size_t raters() const { return ratings.size(); }
    std::size_t items() const { return ratings.empty() ? 0 : ratings[0].size(); }
};

// alpha = 1 - D_o/D_e with the squared-difference (interval) metric.
// Items with fewer than two ratings are excluded; all-identical ratings
// give alpha = 1.0 by convention.
double krippendorff_alpha_interval(const RatingsMatrix& m);

struct FactorObservation {
    std::string scenario;
    std::string strategy;
    std::string model;
    double response = 0.0;
};

struct VarianceShares {
    double scenario_share = 0.0;
    double strategy_share = 0.0;
    double model_share = 0.0;
    double residual_share = 0.0;
    bool degenerate = false;  // constant response, no variance to attribute
};

// Sequential sums of squares over factor means, in the order
// scenario -> strategy -> model. Shares plus residual sum to 1 exactly
// (each step is an orthogonal projection). Order-sensitive by design.
VarianceShares variance_decomposition(const std::vector<FactorObservation>& observations);

// Percentile bootstrap of the mean. Deterministic given the seed;
// resample streams are derived by counter so runs can parallelize.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values, double level,
                                       int resamples, std::uint64_t seed);

TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b);
TestResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

// Shared distribution helpers (exposed for the test oracles).
double normal_cdf(double z);
double chi2_sf(double x, double dof);        // upper tail
double student_t_two_sided(double t, double dof);

// Average ranks with ties, 1-based.
std::vector<double> average_ranks(const std::vector<double>& values);

}  // namespace infosuff
