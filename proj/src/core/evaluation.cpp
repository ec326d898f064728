#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dkm {

ContingencyTable contingency(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size()) {
        throw InvalidArgument("contingency: predicted and truth lengths differ (" +
                              std::to_string(predicted.size()) + " vs " +
                              std::to_string(truth.size()) + ")");
    }
    int max_pred = -1, max_truth = -1;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 0 || truth[i] < 0) {
            throw InvalidArgument("contingency: labels must be nonnegative dense ids");
        }
        max_pred = std::max(max_pred, predicted[i]);
        max_truth = std::max(max_truth, truth[i]);
    }
    ContingencyTable table;
    table.n_total = static_cast<long>(predicted.size());
    table.counts.setZero(max_pred + 1, max_truth + 1);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        table.counts(predicted[i], truth[i]) += 1;
    }
    return table;
}

double nmi(const ContingencyTable& table) {
    if (table.n_total <= 0) throw InvalidArgument("nmi: empty table");
    const double n = static_cast<double>(table.n_total);
    const auto rows = table.counts.rows();
    const auto cols = table.counts.cols();

    std::vector<double> row_sum(static_cast<std::size_t>(rows), 0.0);
    std::vector<double> col_sum(static_cast<std::size_t>(cols), 0.0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            row_sum[static_cast<std::size_t>(i)] += static_cast<double>(table.counts(i, j));
            col_sum[static_cast<std::size_t>(j)] += static_cast<double>(table.counts(i, j));
        }
    }
    auto entropy = [&](const std::vector<double>& marginal) {
        double h = 0.0;
        for (double m : marginal) {
            if (m > 0.0) h -= (m / n) * std::log(m / n);
        }
        return h;
    };
    const double h_rows = entropy(row_sum);
    const double h_cols = entropy(col_sum);
    if (h_rows == 0.0 || h_cols == 0.0) {
        // Zero entropy means a single-group partition. Two single-group
        // partitions are the same partition: score 1. Otherwise 0.
        return (h_rows == 0.0 && h_cols == 0.0) ? 1.0 : 0.0;
    }
    double mutual = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double nij = static_cast<double>(table.counts(i, j));
            if (nij > 0.0) {
                mutual += (nij / n) *
                          std::log(n * nij / (row_sum[static_cast<std::size_t>(i)] *
                                              col_sum[static_cast<std::size_t>(j)]));
            }
        }
    }
    return mutual / std::sqrt(h_rows * h_cols);
}

std::vector<int> hungarian_min_cost(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    if (n == 0 || cost.cols() != n) {
        throw InvalidArgument("hungarian_min_cost: cost matrix must be square and nonempty");
    }
    const double inf = std::numeric_limits<double>::infinity();
    // Potentials-and-augmenting-paths formulation, 1-indexed with column 0
    // as the virtual start.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> min_reduced(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double reduced = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                       v[static_cast<std::size_t>(j)];
                if (reduced < min_reduced[static_cast<std::size_t>(j)]) {
                    min_reduced[static_cast<std::size_t>(j)] = reduced;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (min_reduced[static_cast<std::size_t>(j)] < delta) {
                    delta = min_reduced[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    min_reduced[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (match[static_cast<std::size_t>(j)] > 0) {
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
        }
    }
    return row_to_col;
}

double accuracy_hungarian(const ContingencyTable& table) {
    if (table.n_total <= 0) throw InvalidArgument("accuracy_hungarian: empty table");
    const auto rows = table.counts.rows();
    const auto cols = table.counts.cols();
    const auto size = std::max(rows, cols);
    const double max_cell = static_cast<double>(table.counts.maxCoeff());
    // Zero-padded square matrix; max-weight matching via min-cost on
    // (max_cell - count). Integer-valued costs keep the solve exact.
    Matrix cost = Matrix::Constant(size, size, max_cell);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            cost(i, j) = max_cell - static_cast<double>(table.counts(i, j));
        }
    }
    const std::vector<int> mapping = hungarian_min_cost(cost);
    long matched = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const int j = mapping[static_cast<std::size_t>(i)];
        if (j < cols) matched += table.counts(i, j);
    }
    return static_cast<double>(matched) / static_cast<double>(table.n_total);
}

double ari(const ContingencyTable& table) {
    if (table.n_total < 2) throw InvalidArgument("ari: needs at least 2 samples");
    auto comb2 = [](long x) -> long double {
        return static_cast<long double>(x) * static_cast<long double>(x - 1) / 2.0L;
    };
    long double sum_cells = 0.0L;
    long double sum_rows = 0.0L;
    long double sum_cols = 0.0L;
    for (Eigen::Index i = 0; i < table.counts.rows(); ++i) {
        long row_total = 0;
        for (Eigen::Index j = 0; j < table.counts.cols(); ++j) {
            sum_cells += comb2(table.counts(i, j));
            row_total += table.counts(i, j);
        }
        sum_rows += comb2(row_total);
    }
    for (Eigen::Index j = 0; j < table.counts.cols(); ++j) {
        long col_total = 0;
        for (Eigen::Index i = 0; i < table.counts.rows(); ++i) {
            col_total += table.counts(i, j);
        }
        sum_cols += comb2(col_total);
    }
    const long double total_pairs = comb2(table.n_total);
    const long double expected = sum_rows * sum_cols / total_pairs;
    const long double max_index = (sum_rows + sum_cols) / 2.0L;
    if (max_index == expected) return 1.0;  // both partitions trivially agree
    return static_cast<double>((sum_cells - expected) / (max_index - expected));
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0) throw InvalidArgument("incomplete_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

TTestResult t_test(const std::vector<double>& samples_a, const std::vector<double>& samples_b) {
    const std::size_t na = samples_a.size();
    const std::size_t nb = samples_b.size();
    if (na < 2 || nb < 2) {
        throw InvalidArgument("t_test: each sample list needs at least 2 values");
    }
    auto mean = [](const std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    };
    auto sum_sq_dev = [](const std::vector<double>& xs, double m) {
        double s = 0.0;
        for (double x : xs) s += (x - m) * (x - m);
        return s;
    };
    const double mean_a = mean(samples_a);
    const double mean_b = mean(samples_b);
    const double df = static_cast<double>(na + nb - 2);
    const double pooled_var =
        (sum_sq_dev(samples_a, mean_a) + sum_sq_dev(samples_b, mean_b)) / df;

    TTestResult result;
    if (pooled_var == 0.0) {
        if (mean_a == mean_b) {
            result.t = 0.0;
            result.p = 1.0;
        } else {
            result.t = mean_a > mean_b ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            result.p = 0.0;
            result.degenerate = true;
        }
        return result;
    }
    const double se = std::sqrt(pooled_var * (1.0 / static_cast<double>(na) +
                                              1.0 / static_cast<double>(nb)));
    result.t = (mean_a - mean_b) / se;
    // Two-sided p-value from the t CDF: P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
    result.p = incomplete_beta(df / 2.0, 0.5, df / (df + result.t * result.t));
    return result;
}

AggregateReport aggregate(const std::map<std::string, std::vector<MetricSample>>& runs_by_variant) {
    AggregateReport report;
    for (const auto& [variant, runs] : runs_by_variant) {
        if (runs.empty()) {
            throw InvalidArgument("aggregate: variant '" + variant + "' has no runs");
        }
        VariantStats stats;
        stats.variant = variant;
        stats.n_runs = static_cast<int>(runs.size());
        auto moments = [&](auto metric, double& out_mean, double& out_std) {
            double s = 0.0;
            for (const auto& r : runs) s += metric(r);
            out_mean = s / static_cast<double>(runs.size());
            if (runs.size() > 1) {
                double dev = 0.0;
                for (const auto& r : runs) {
                    dev += (metric(r) - out_mean) * (metric(r) - out_mean);
                }
                out_std = std::sqrt(dev / static_cast<double>(runs.size() - 1));
            } else {
                out_std = 0.0;
            }
        };
        moments([](const MetricSample& r) { return r.acc; }, stats.acc_mean, stats.acc_std);
        moments([](const MetricSample& r) { return r.nmi; }, stats.nmi_mean, stats.nmi_std);
        moments([](const MetricSample& r) { return r.ari; }, stats.ari_mean, stats.ari_std);
        report.stats.push_back(std::move(stats));
    }

    auto collect = [](const std::vector<MetricSample>& runs, auto metric) {
        std::vector<double> xs;
        xs.reserve(runs.size());
        for (const auto& r : runs) xs.push_back(metric(r));
        return xs;
    };
    for (auto it_a = runs_by_variant.begin(); it_a != runs_by_variant.end(); ++it_a) {
        for (auto it_b = std::next(it_a); it_b != runs_by_variant.end(); ++it_b) {
            if (it_a->second.size() < 2 || it_b->second.size() < 2) continue;
            const std::pair<const char*, double MetricSample::*> metrics[] = {
                {"acc", &MetricSample::acc}, {"nmi", &MetricSample::nmi}, {"ari", &MetricSample::ari}};
            for (const auto& [name, member] : metrics) {
                const auto xs_a = collect(it_a->second, [&](const MetricSample& r) { return r.*member; });
                const auto xs_b = collect(it_b->second, [&](const MetricSample& r) { return r.*member; });
                const TTestResult tt = t_test(xs_a, xs_b);
                PairwiseTest pt;
                pt.variant_a = it_a->first;
                pt.variant_b = it_b->first;
                pt.metric = name;
                pt.t = tt.t;
                pt.p = tt.p;
                pt.significant = tt.p <= 0.05;
                report.tests.push_back(std::move(pt));
            }
        }
    }
    return report;
}

}  // namespace dkm
