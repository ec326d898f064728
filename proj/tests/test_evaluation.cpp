#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/common.hpp"
#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace dkm;

namespace {

ContingencyTable table_from(std::initializer_list<std::initializer_list<long>> rows) {
    ContingencyTable t;
    const auto r = rows.size();
    const auto c = rows.begin()->size();
    t.counts.setZero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (long v : row) {
            t.counts(i, j) = v;
            t.n_total += v;
            ++j;
        }
        ++i;
    }
    return t;
}

// Direct summation of the mutual-information / entropy formulas, written
// independently of the implementation.
double nmi_oracle(const ContingencyTable& t) {
    const double n = static_cast<double>(t.n_total);
    double mutual = 0.0, h_row = 0.0, h_col = 0.0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        const double a = static_cast<double>(t.counts.row(i).sum());
        if (a > 0) h_row -= a / n * std::log(a / n);
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            const double nij = static_cast<double>(t.counts(i, j));
            const double b = static_cast<double>(t.counts.col(j).sum());
            if (nij > 0) mutual += nij / n * std::log(n * nij / (a * b));
        }
    }
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
        const double b = static_cast<double>(t.counts.col(j).sum());
        if (b > 0) h_col -= b / n * std::log(b / n);
    }
    return mutual / std::sqrt(h_row * h_col);
}

// Pair-counting ARI evaluated straight from the definition.
double ari_oracle(const ContingencyTable& t) {
    auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        sum_rows += comb2(static_cast<double>(t.counts.row(i).sum()));
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            sum_cells += comb2(static_cast<double>(t.counts(i, j)));
        }
    }
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
        sum_cols += comb2(static_cast<double>(t.counts.col(j).sum()));
    }
    const double total = comb2(static_cast<double>(t.n_total));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    return (sum_cells - expected) / (max_index - expected);
}

// Exhaustive best-mapping accuracy over all permutations of the padded
// square table.
double accuracy_bruteforce(const ContingencyTable& t) {
    const auto size = std::max(t.counts.rows(), t.counts.cols());
    std::vector<int> perm(static_cast<std::size_t>(size));
    std::iota(perm.begin(), perm.end(), 0);
    long best = 0;
    do {
        long matched = 0;
        for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
            const int j = perm[static_cast<std::size_t>(i)];
            if (j < t.counts.cols()) matched += t.counts(i, j);
        }
        best = std::max(best, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(t.n_total);
}

ContingencyTable random_table(Rng& rng) {
    const auto rows = 1 + rng.uniform_index(6);
    const auto cols = 1 + rng.uniform_index(6);
    ContingencyTable t;
    t.counts.setZero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            const long v = static_cast<long>(rng.uniform_index(21));
            t.counts(i, j) = v;
            t.n_total += v;
        }
    }
    if (t.n_total < 2) {
        t.counts(0, 0) += 2;
        t.n_total += 2;
    }
    return t;
}

std::vector<int> random_partition(Rng& rng, std::size_t n, int k) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    return labels;
}

}  // namespace

TEST_CASE("contingency construction and errors") {
    const ContingencyTable diag = contingency({0, 0, 1, 1}, {0, 0, 1, 1});
    CHECK(diag.counts(0, 0) == 2);
    CHECK(diag.counts(1, 1) == 2);
    CHECK(diag.counts(0, 1) == 0);
    CHECK(diag.n_total == 4);

    const ContingencyTable row = contingency({0, 0, 0, 0}, {0, 1, 0, 1});
    CHECK(row.counts.rows() == 1);
    CHECK(row.counts(0, 0) == 2);
    CHECK(row.counts(0, 1) == 2);

    CHECK_THROWS_AS(contingency({0, 1}, {0}), InvalidArgument);
    CHECK_THROWS_AS(contingency({-1}, {0}), InvalidArgument);
}

TEST_CASE("contingency marginals match label histograms") {
    Rng rng(5);
    const auto pred = random_partition(rng, 1000, 7);
    const auto truth = random_partition(rng, 1000, 4);
    const ContingencyTable t = contingency(pred, truth);
    std::vector<long> pred_hist(7, 0), truth_hist(4, 0);
    for (int l : pred) pred_hist[static_cast<std::size_t>(l)] += 1;
    for (int l : truth) truth_hist[static_cast<std::size_t>(l)] += 1;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        CHECK(t.counts.row(i).sum() == pred_hist[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
        CHECK(t.counts.col(j).sum() == truth_hist[static_cast<std::size_t>(j)]);
    }
}

TEST_CASE("nmi endpoints") {
    CHECK(nmi(table_from({{3, 0}, {0, 5}})) == doctest::Approx(1.0));
    // Product table: statistically independent partitions.
    CHECK(nmi(table_from({{25, 25}, {25, 25}})) == doctest::Approx(0.0));
    CHECK_THROWS_AS(nmi(ContingencyTable{}), InvalidArgument);
}

TEST_CASE("nmi degenerate conventions") {
    // Single-cluster vs multi-class: zero entropy on one side only.
    CHECK(nmi(table_from({{4, 6}})) == 0.0);
    // Both single-group partitions: identical, scores 1.
    CHECK(nmi(table_from({{10}})) == 1.0);
}

TEST_CASE("nmi matches the direct-summation oracle") {
    const ContingencyTable t = table_from({{10, 2}, {3, 15}});
    CHECK(nmi(t) == doctest::Approx(nmi_oracle(t)).epsilon(1e-12));
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const ContingencyTable r = random_table(rng);
        if (r.counts.rows() < 2 || r.counts.cols() < 2) continue;
        const double expected = nmi_oracle(r);
        if (!std::isfinite(expected)) continue;  // oracle's 0-entropy division
        CHECK(std::fabs(nmi(r) - expected) < 1e-10);
    }
}

TEST_CASE("nmi is symmetric in the partitions") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ContingencyTable t = random_table(rng);
        ContingencyTable transposed;
        transposed.counts = t.counts.transpose();
        transposed.n_total = t.n_total;
        CHECK(std::fabs(nmi(t) - nmi(transposed)) < 1e-12);
    }
}

TEST_CASE("hungarian equals exhaustive search on random square matrices") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 2 + rng.uniform_index(5);  // up to 6x6
        Matrix cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < cost.rows(); ++i) {
            for (Eigen::Index j = 0; j < cost.cols(); ++j) {
                cost(i, j) = static_cast<double>(rng.uniform_index(50));
            }
        }
        const auto mapping = hungarian_min_cost(cost);
        double hungarian_total = 0.0;
        std::vector<char> used(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            hungarian_total += cost(static_cast<Eigen::Index>(i), mapping[i]);
            CHECK(!used[static_cast<std::size_t>(mapping[i])]);  // valid matching
            used[static_cast<std::size_t>(mapping[i])] = 1;
        }
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                total += cost(static_cast<Eigen::Index>(i), perm[i]);
            }
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(hungarian_total == best);
    }
}

TEST_CASE("accuracy endpoints and label-permutation invariance") {
    CHECK(accuracy_hungarian(table_from({{3, 0}, {0, 5}})) == 1.0);
    // Relabeled perfect clustering: permutation absorbed by the mapping.
    CHECK(accuracy_hungarian(table_from({{0, 4}, {6, 0}})) == 1.0);
}

TEST_CASE("accuracy equals brute-force permutation search") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const ContingencyTable t = random_table(rng);
        CHECK(accuracy_hungarian(t) == accuracy_bruteforce(t));
    }
}

TEST_CASE("accuracy dominates any fixed mapping") {
    Rng rng(19);
    const auto pred = random_partition(rng, 300, 5);
    const auto truth = random_partition(rng, 300, 5);
    const ContingencyTable t = contingency(pred, truth);
    const double best = accuracy_hungarian(t);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> mapping(5);
        for (auto& m : mapping) m = static_cast<int>(rng.uniform_index(5));
        long matched = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (truth[i] == mapping[static_cast<std::size_t>(pred[i])]) ++matched;
        }
        CHECK(best >= static_cast<double>(matched) / 300.0);
    }
}

TEST_CASE("ari endpoints") {
    CHECK(ari(table_from({{3, 0}, {0, 5}})) == doctest::Approx(1.0));
    // Everything in one cluster vs a 2-class truth: chance level exactly.
    CHECK(ari(table_from({{4, 6}})) == doctest::Approx(0.0));
    CHECK_THROWS_AS(ari(table_from({{1}})), InvalidArgument);
}

TEST_CASE("ari matches the direct-formula oracle") {
    const ContingencyTable t = table_from({{10, 2}, {3, 15}});
    CHECK(ari(t) == doctest::Approx(ari_oracle(t)).epsilon(1e-12));
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const ContingencyTable r = random_table(rng);
        const double expected = ari_oracle(r);
        if (!std::isfinite(expected)) continue;
        CHECK(std::fabs(ari(r) - expected) < 1e-10);
        CHECK(ari(r) <= 1.0 + 1e-12);
        CHECK(ari(r) >= -1.0 - 1e-12);
    }
}

TEST_CASE("all metrics are invariant to cluster relabeling") {
    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(5));
        const auto pred = random_partition(rng, 120, k);
        const auto truth = random_partition(rng, 120, 3);
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<int> relabeled(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            relabeled[i] = perm[static_cast<std::size_t>(pred[i])];
        }
        const ContingencyTable a = contingency(pred, truth);
        const ContingencyTable b = contingency(relabeled, truth);
        CHECK(accuracy_hungarian(a) == accuracy_hungarian(b));
        CHECK(std::fabs(nmi(a) - nmi(b)) < 1e-12);
        CHECK(std::fabs(ari(a) - ari(b)) < 1e-12);
    }
}

TEST_CASE("incomplete beta sanity") {
    CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(incomplete_beta(0.5, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("t-test on identical nonconstant samples") {
    const std::vector<double> xs{1.0, 2.0, 3.0};
    const TTestResult r = t_test(xs, xs);
    CHECK(r.t == 0.0);
    CHECK(r.p == doctest::Approx(1.0));
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("t-test degenerate zero-variance case") {
    const TTestResult r = t_test({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
    CHECK(r.degenerate);
    CHECK(r.p == 0.0);
    const TTestResult same = t_test({2.0, 2.0}, {2.0, 2.0});
    CHECK(same.t == 0.0);
    CHECK(same.p == 1.0);
    CHECK_FALSE(same.degenerate);
}

TEST_CASE("t-test matches the standard-table example") {
    const TTestResult r = t_test({1, 2, 3, 4, 5}, {2, 3, 4, 5, 6});
    CHECK(r.t == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::fabs(r.p - 0.3466) < 1e-3);
}

TEST_CASE("t-test rejects too-short samples") {
    CHECK_THROWS_AS(t_test({1.0}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("aggregate single run and identical variants") {
    std::map<std::string, std::vector<MetricSample>> runs;
    runs["solo"] = {MetricSample{0.9, 0.8, 0.7, 1}};
    const AggregateReport solo = aggregate(runs);
    REQUIRE(solo.stats.size() == 1);
    CHECK(solo.stats[0].acc_mean == doctest::Approx(0.9));
    CHECK(solo.stats[0].acc_std == 0.0);
    CHECK(solo.tests.empty());

    std::map<std::string, std::vector<MetricSample>> twin;
    twin["a"] = {MetricSample{0.5, 0.4, 0.3, 1}, MetricSample{0.7, 0.6, 0.5, 2}};
    twin["b"] = twin["a"];
    const AggregateReport both = aggregate(twin);
    REQUIRE(both.tests.size() == 3);
    for (const auto& t : both.tests) {
        CHECK(t.p == doctest::Approx(1.0));
        CHECK_FALSE(t.significant);
    }
}

TEST_CASE("aggregate reproduces known moments") {
    std::map<std::string, std::vector<MetricSample>> runs;
    runs["v"] = {MetricSample{0.2, 0, 0, 1}, MetricSample{0.4, 0, 0, 2},
                 MetricSample{0.6, 0, 0, 3}};
    const AggregateReport report = aggregate(runs);
    CHECK(report.stats[0].acc_mean == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(report.stats[0].acc_std == doctest::Approx(0.2).epsilon(1e-12));
}
