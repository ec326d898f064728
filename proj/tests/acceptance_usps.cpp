// Real-data acceptance run: DKM with pretraining on USPS.
//
// Looks for the dataset at $DKM_USPS_CSV (9298 rows, 256 feature columns in
// [-1, 1] plus the class label as the last column). When the file is absent
// the binary exits with code 77 so ctest records a SKIP instead of a
// failure. Expect a runtime of tens of minutes on a desktop CPU.

#include "core/dataset.hpp"
#include "core/evaluation.hpp"
#include "core/runner.hpp"
#include "core/training.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

using namespace dkm;

int main() {
    const char* csv_path = std::getenv("DKM_USPS_CSV");
    if (!csv_path || !std::filesystem::exists(csv_path)) {
        std::printf(
            "SKIP  6. USPS real-data clustering: set DKM_USPS_CSV to a 9298x257 CSV\n"
            "      (256 pixel columns in [-1,1], class label last) to run this criterion.\n");
        return 77;
    }

    const auto started = std::chrono::steady_clock::now();
    set_compute_threads(0);
    const LabeledDataset usps = load_dense_csv(csv_path, true);
    std::printf("loaded %lld x %lld, %d classes\n", static_cast<long long>(usps.n()),
                static_cast<long long>(usps.dim()), usps.n_classes());
    if (usps.dim() != 256 || usps.n_classes() != 10) {
        std::printf("FAIL  6. USPS real-data clustering (unexpected shape)\n");
        return 1;
    }

    const int k = 10;
    const SplitIndices split = validation_split(static_cast<int>(usps.n()), 42);

    double acc_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TrainPlan plan;
        plan.variant = Variant::dkm_p;
        plan.lambda = 1.0;  // validation-line-search optimum for this dataset
        plan.batch_size = 256;
        plan.learning_rate = 1e-3;
        plan.pretrain_epochs = 50;
        plan.seed = seed;
        plan.schedule.terms = {1000.0};
        plan.schedule.epochs_per_term = 100;

        Rng net_rng(derive_seed(seed, kSaltNetworkInit));
        DenseNetwork net = make_autoencoder(256, k, {500, 500, 2000}, net_rng);
        pretrain(net, usps.samples, plan);
        const Matrix embeddings = forward(net, usps.samples).embeddings;
        ClusterModel model;
        model.representatives = init_representatives(Variant::dkm_p, k, k, &embeddings, seed);
        const RunRecord record = train(net, model, usps.samples, plan);

        std::vector<int> pred, truth;
        for (int i : split.test) {
            pred.push_back(record.assignment[static_cast<std::size_t>(i)]);
            truth.push_back((*usps.labels)[static_cast<std::size_t>(i)]);
        }
        const double acc = accuracy_hungarian(contingency(pred, truth));
        acc_sum += acc;
        std::printf("seed %llu: test ACC %.4f\n", static_cast<unsigned long long>(seed), acc);
        std::fflush(stdout);
    }
    const double mean_acc = acc_sum / 10.0;
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() / 60.0;
    const bool ok = mean_acc >= 0.70;
    std::printf("%s  6. USPS real-data clustering (mean test ACC %.4f over 10 seeds, %.1f min)\n",
                ok ? "PASS" : "FAIL", mean_acc, minutes);
    return ok ? 0 : 1;
}
