#pragma once

#include "core/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace dkm {

struct ContingencyTable {
    // counts(i, j) = number of samples in cluster i and class j.
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
    long n_total = 0;
};

/// Builds the cluster-vs-class contingency table; labels must be dense ids.
ContingencyTable contingency(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Normalized mutual information I(C,S) / sqrt(H(C) H(S)), natural logs.
/// If either partition has zero entropy the result is 0, except when both
/// are the same single-cluster partition, which scores 1.
double nmi(const ContingencyTable& table);

/// Clustering accuracy under the best cluster-to-class mapping, computed by
/// the Hungarian algorithm on the (zero-padded square) contingency matrix.
double accuracy_hungarian(const ContingencyTable& table);

/// Adjusted Rand index, in [-1, 1].
double ari(const ContingencyTable& table);

/// Min-cost assignment for a square cost matrix; returns the column chosen
/// for each row. O(n^3) potentials-and-augmenting-paths implementation.
std::vector<int> hungarian_min_cost(const Matrix& cost);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    // Set when the pooled variance is zero with unequal means (infinite t,
    // reported as p = 0).
    bool degenerate = false;
};

/// Two-sample pooled-variance Student's t-test, two-sided p-value.
TTestResult t_test(const std::vector<double>& samples_a, const std::vector<double>& samples_b);

/// Regularized incomplete beta function I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);

struct MetricSample {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    std::uint64_t seed = 0;
};

struct VariantStats {
    std::string variant;
    int n_runs = 0;
    double acc_mean = 0.0, acc_std = 0.0;
    double nmi_mean = 0.0, nmi_std = 0.0;
    double ari_mean = 0.0, ari_std = 0.0;
};

struct PairwiseTest {
    std::string variant_a;
    std::string variant_b;
    std::string metric;  // "acc" | "nmi" | "ari"
    double t = 0.0;
    double p = 1.0;
    bool significant = false;  // p <= 0.05
};

struct AggregateReport {
    std::vector<VariantStats> stats;
    std::vector<PairwiseTest> tests;  // empty unless both variants have >= 2 runs
};

/// Sample mean and (n-1)-denominator standard deviation per metric, plus all
/// pairwise two-sample t-tests between variants.
AggregateReport aggregate(const std::map<std::string, std::vector<MetricSample>>& runs_by_variant);

}  // namespace dkm
