// Acceptance suite: runs every gate criterion and prints one line per
// criterion. Exit code = number of failed criteria.
//
// Usage: acceptance <path-to-dkm-cli>

#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/evaluation.hpp"
#include "core/runner.hpp"
#include "core/training.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace dkm;
using namespace dkm::testutil;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool passed, const std::string& detail) {
    std::printf("%s  %d. %s (%s)\n", passed ? "PASS" : "FAIL", number, name, detail.c_str());
    if (!passed) ++g_failures;
}

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------------------
// 1. Analytic gradients of the joint objective match central finite
//    differences on 20 random small configurations.
void criterion_gradients() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(20240501);
    const double alphas[] = {0.0, 1.0, 50.0};
    const double lambdas[] = {0.0, 0.1, 10.0};
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 3 + static_cast<int>(rng.uniform_index(8));   // <= 10
        const int p = 2 + static_cast<int>(rng.uniform_index(3));   // <= 4
        const int k = 2 + static_cast<int>(rng.uniform_index(3));   // <= 4
        const int b = 2 + static_cast<int>(rng.uniform_index(7));   // <= 8
        const int h = 3 + static_cast<int>(rng.uniform_index(4));
        Rng net_rng(rng.next_u64());
        DenseNetwork net = make_autoencoder(d, p, {h}, net_rng);
        const Matrix batch = random_matrix(b, d, net_rng);
        ClusterModel model;
        model.representatives = random_matrix(k, p, net_rng);
        const double alpha = alphas[trial % 3];
        const double lambda = lambdas[(trial / 3) % 3];

        const GradientBundle analytic = dkm_gradients(batch, net, model, alpha, lambda);
        auto loss = [&]() { return dkm_objective(batch, net, model, alpha, lambda); };
        const auto params = parameter_pointers(net, &model.representatives);
        const auto numeric = finite_difference_gradient(params, loss);
        worst = std::max(worst,
                         gradient_relative_error(flatten_bundle(analytic, true), numeric));
    }
    const double seconds = elapsed_seconds(start);
    std::ostringstream detail;
    detail << "20 configs, max rel err " << worst << ", " << seconds << " s";
    report(1, "gradient correctness vs finite differences", worst < 1e-5 && seconds < 10.0,
           detail.str());
}

// --------------------------------------------------------------------------
// 2. Softmax membership limits: alpha = 1e4 is one-hot at the argmin within
//    1e-9; alpha = 0 is exactly uniform.
void criterion_membership_limits() {
    Rng rng(77001);
    double worst_hot = 0.0;
    bool uniform_exact = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(9));
        Vector d(k);
        // Distinct distances: the two smallest at least 0.01 apart.
        while (true) {
            for (int i = 0; i < k; ++i) d[i] = rng.uniform(0.0, 1.0);
            Vector sorted = d;
            std::sort(sorted.data(), sorted.data() + k);
            if (sorted[1] - sorted[0] >= 0.01) break;
        }
        int argmin = 0;
        for (int i = 1; i < k; ++i) {
            if (d[i] < d[argmin]) argmin = i;
        }
        const Vector hot = softmax_membership(d, 1e4);
        for (int i = 0; i < k; ++i) {
            const double target = i == argmin ? 1.0 : 0.0;
            worst_hot = std::max(worst_hot, std::fabs(hot[i] - target));
        }
        const Vector uniform = softmax_membership(d, 0.0);
        for (int i = 0; i < k; ++i) {
            if (uniform[i] != 1.0 / k) uniform_exact = false;
        }
    }
    std::ostringstream detail;
    detail << "100 rows, max one-hot deviation " << worst_hot << ", alpha=0 exact: "
           << (uniform_exact ? "yes" : "no");
    report(2, "parameterized softmax limits", worst_hot < 1e-9 && uniform_exact, detail.str());
}

// --------------------------------------------------------------------------
// 3. Metric oracles: Hungarian accuracy equals brute force; NMI and ARI
//    match direct-summation oracles.
ContingencyTable random_table(Rng& rng) {
    const auto rows = 1 + rng.uniform_index(6);
    const auto cols = 1 + rng.uniform_index(6);
    ContingencyTable t;
    t.counts.setZero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            const long v = static_cast<long>(rng.uniform_index(25));
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

double nmi_oracle(const ContingencyTable& t) {
    const double n = static_cast<double>(t.n_total);
    double mutual = 0.0, h_row = 0.0, h_col = 0.0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        const double a = static_cast<double>(t.counts.row(i).sum());
        if (a > 0) h_row -= a / n * std::log(a / n);
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            const double nij = static_cast<double>(t.counts(i, j));
            const double c = static_cast<double>(t.counts.col(j).sum());
            if (nij > 0) mutual += nij / n * std::log(n * nij / (a * c));
        }
    }
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
        const double c = static_cast<double>(t.counts.col(j).sum());
        if (c > 0) h_col -= c / n * std::log(c / n);
    }
    return mutual / std::sqrt(h_row * h_col);
}

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
    if (max_index == expected) return 1.0;
    return (sum_cells - expected) / (max_index - expected);
}

void criterion_metric_oracles() {
    Rng rng(515001);
    bool acc_exact = true;
    double worst_info = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const ContingencyTable t = random_table(rng);
        if (accuracy_hungarian(t) != accuracy_bruteforce(t)) acc_exact = false;
        const double nmi_expected = nmi_oracle(t);
        if (std::isfinite(nmi_expected)) {
            worst_info = std::max(worst_info, std::fabs(nmi(t) - nmi_expected));
        }
        const double ari_expected = ari_oracle(t);
        if (std::isfinite(ari_expected)) {
            worst_info = std::max(worst_info, std::fabs(ari(t) - ari_expected));
        }
    }
    // Identical-partition endpoints.
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 1, 0};
    const ContingencyTable ident = contingency(labels, labels);
    const bool endpoints = accuracy_hungarian(ident) == 1.0 &&
                           std::fabs(nmi(ident) - 1.0) < 1e-12 &&
                           std::fabs(ari(ident) - 1.0) < 1e-12;
    std::ostringstream detail;
    detail << "200 tables, ACC exact: " << (acc_exact ? "yes" : "no")
           << ", max NMI/ARI dev " << worst_info;
    report(3, "metric oracles (ACC brute force, NMI/ARI direct)",
           acc_exact && worst_info < 1e-10 && endpoints, detail.str());
}

// --------------------------------------------------------------------------
// 4. At a converged Lloyd solution the clustering-loss gradient wrt R at
//    alpha = 1e3 is stationary (inf-norm < 1e-6 x data scale).
DenseNetwork identity_network(int dim) {
    DenseNetwork net;
    DenseLayer layer;
    layer.weights = Matrix::Identity(dim, dim);
    layer.bias = Vector::Zero(dim);
    layer.activation = Activation::identity;
    net.encoder.push_back(layer);
    net.decoder.push_back(layer);
    net.input_dim = dim;
    net.embedding_dim = dim;
    net.version = 1;
    return net;
}

void criterion_lloyd_stationarity() {
    double worst_ratio = 0.0;
    int datasets_checked = 0;
    std::uint64_t seed = 1;
    while (datasets_checked < 20) {
        const std::uint64_t this_seed = seed++;
        const int k = 2 + static_cast<int>(this_seed % 3);
        const LabeledDataset blobs =
            make_blobs(12, k, 2 + static_cast<int>(this_seed % 2), 5.0, 0.3, this_seed);
        Rng rng(derive_seed(this_seed, kSaltRepresentatives));
        const KMeansResult km = lloyd_kmeans(
            blobs.samples, k, kmeans_pp_init(blobs.samples, k, rng), 500, 1e-14);

        // The finite-alpha gradient is only near-zero when assignments are
        // unambiguous; require a healthy margin between each point's two
        // closest centers, regenerating otherwise (hard-assignment regime).
        double min_gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < blobs.samples.rows(); ++i) {
            std::vector<double> dists;
            for (int j = 0; j < k; ++j) {
                dists.push_back(
                    (blobs.samples.row(i) - km.representatives.row(j)).squaredNorm());
            }
            std::sort(dists.begin(), dists.end());
            min_gap = std::min(min_gap, dists[1] - dists[0]);
        }
        if (min_gap < 0.05) continue;
        ++datasets_checked;

        const DenseNetwork net = identity_network(static_cast<int>(blobs.samples.cols()));
        ClusterModel model;
        model.representatives = km.representatives;
        const GradientBundle grads =
            dkm_gradients(blobs.samples, net, model, 1e3, 1.0);
        const double grad_norm = grads.representatives.cwiseAbs().maxCoeff();
        const double data_scale = blobs.samples.cwiseAbs().maxCoeff();
        worst_ratio = std::max(worst_ratio, grad_norm / data_scale);
    }
    std::ostringstream detail;
    detail << "20 converged solutions, max |grad|_inf / scale " << worst_ratio;
    report(4, "Lloyd fixpoint implies clustering-gradient stationarity", worst_ratio < 1e-6,
           detail.str());
}

// --------------------------------------------------------------------------
// 5. Desk-scale synthetic clustering: annealed training on 3 blobs reaches
//    test ACC >= 0.95 on at least 9 of 10 seeds in under 2 minutes.
void criterion_desk_blobs() {
    const auto start = std::chrono::steady_clock::now();
    const LabeledDataset blobs = make_blobs(100, 3, 10, 10.0, 0.5, 2024);
    const SplitIndices split = validation_split(static_cast<int>(blobs.n()), 42);
    int passed_seeds = 0;
    std::ostringstream accs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng net_rng(derive_seed(seed, kSaltNetworkInit));
        DenseNetwork net = make_autoencoder(10, 3, {32, 16}, net_rng);
        ClusterModel model;
        model.representatives = init_representatives(Variant::dkm_a, 3, 3, nullptr, seed);
        TrainPlan plan;
        plan.variant = Variant::dkm_a;
        plan.lambda = 1.0;
        plan.batch_size = 32;
        plan.learning_rate = 0.02;
        plan.seed = seed;
        plan.schedule = build_annealing_sequence(40, 0.1, 5);
        const RunRecord record = train(net, model, blobs.samples, plan);
        std::vector<int> pred, truth;
        for (int i : split.test) {
            pred.push_back(record.assignment[static_cast<std::size_t>(i)]);
            truth.push_back((*blobs.labels)[static_cast<std::size_t>(i)]);
        }
        const double acc = accuracy_hungarian(contingency(pred, truth));
        accs << (seed > 1 ? " " : "") << acc;
        if (acc >= 0.95) ++passed_seeds;
    }
    const double seconds = elapsed_seconds(start);
    std::ostringstream detail;
    detail << passed_seeds << "/10 seeds >= 0.95 [" << accs.str() << "], " << seconds << " s";
    report(5, "desk-scale annealed clustering on blobs", passed_seeds >= 9 && seconds < 120.0,
           detail.str());
}

// --------------------------------------------------------------------------
// 7. Annealing schedule shape and endpoints.
void criterion_annealing() {
    const AnnealingSchedule s = build_annealing_sequence(40, 0.1, 5);
    bool increasing = s.terms.size() == 40 && s.terms.front() == 0.1;
    for (std::size_t i = 1; i < s.terms.size(); ++i) {
        if (s.terms[i] <= s.terms[i - 1]) increasing = false;
    }
    const double log2 = std::log(2.0);
    const double alpha2_expected = 0.1 * std::pow(2.0, 1.0 / (log2 * log2));
    const bool alpha2_ok = std::fabs(s.terms[1] - alpha2_expected) < 1e-15;
    // Regression lock from the first computation of the sequence.
    const bool alpha40_ok = std::fabs(s.terms.back() - 28.132578147468969) < 1e-12;
    std::ostringstream detail;
    detail << "alpha_2 = " << s.terms[1] << ", alpha_40 = " << s.terms.back();
    report(7, "annealing schedule endpoints", increasing && alpha2_ok && alpha40_ok,
           detail.str());
}

// --------------------------------------------------------------------------
// 8. Byte-identical traces and assignments across two CLI executions.
std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path.string() + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_cli_determinism(const std::string& cli_path) {
    if (cli_path.empty()) {
        report(8, "CLI determinism", false, "no CLI path given on the command line");
        return;
    }
    const fs::path work = fs::temp_directory_path() / "dkm_acceptance_determinism";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path config_path = work / "exp.conf";
    {
        std::ofstream out(config_path);
        out << "dataset.kind = blobs\n"
               "blobs.per_cluster = 40\nblobs.k = 3\nblobs.dim = 8\n"
               "blobs.spread = 10\nblobs.sigma = 0.5\nblobs.seed = 11\n"
               "model.clusters = 3\nmodel.hidden = 16,8\n"
               "train.variant = dkm_a\ntrain.lambda = 1\ntrain.batch_size = 32\n"
               "train.alpha_terms = 8\ntrain.epochs_per_term = 2\n"
               "seeds = 5\nsplit_seed = 42\n";
    }
    bool ok = true;
    std::string detail;
    for (const char* run : {"run_a", "run_b"}) {
        std::ostringstream cmd;
        cmd << '"' << cli_path << '"' << " --config " << config_path.string() << " train --out "
            << (work / run).string() << " > /dev/null 2>&1";
        if (std::system(cmd.str().c_str()) != 0) {
            ok = false;
            detail = "CLI invocation failed";
        }
    }
    if (ok) {
        const std::string trace_a = read_file_bytes(work / "run_a" / "dkm_a_seed5" / "trace.csv");
        const std::string trace_b = read_file_bytes(work / "run_b" / "dkm_a_seed5" / "trace.csv");
        const std::string asg_a =
            read_file_bytes(work / "run_a" / "dkm_a_seed5" / "assignments.csv");
        const std::string asg_b =
            read_file_bytes(work / "run_b" / "dkm_a_seed5" / "assignments.csv");
        ok = !trace_a.empty() && trace_a == trace_b && asg_a == asg_b;
        detail = ok ? "trace.csv and assignments.csv byte-identical across reruns"
                    : "outputs differ between identical executions";
    }
    fs::remove_all(work);
    report(8, "CLI determinism", ok, detail);
}

// --------------------------------------------------------------------------
// 9. Student's t-test against the standard-table example.
void criterion_t_test() {
    const TTestResult r = t_test({1, 2, 3, 4, 5}, {2, 3, 4, 5, 6});
    const bool ok = std::fabs(std::fabs(r.t) - 1.0) < 1e-12 && std::fabs(r.p - 0.3466) < 1e-3;
    std::ostringstream detail;
    detail << "t = " << r.t << ", p = " << r.p;
    report(9, "t-test table example (df = 8)", ok, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli_path = argc > 1 ? argv[1] : "";
    std::printf("deep k-means acceptance suite\n");
    criterion_gradients();
    criterion_membership_limits();
    criterion_metric_oracles();
    criterion_lloyd_stationarity();
    criterion_desk_blobs();
    std::printf("SKIP  6. USPS real-data clustering (run the 'acceptance_usps' binary; "
                "see its output for details)\n");
    criterion_annealing();
    criterion_cli_determinism(cli_path);
    criterion_t_test();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
    } else {
        std::printf("%d criteria FAILED\n", g_failures);
    }
    return g_failures;
}
