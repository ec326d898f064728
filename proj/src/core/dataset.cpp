#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dkm {

const char* normalization_name(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::unit_interval: return "unit_interval";
        case Normalization::signed_unit: return "signed_unit";
    }
    return "unknown";
}

int LabeledDataset::n_classes() const {
    if (!labels) return 0;
    int max_label = -1;
    for (int l : *labels) max_label = std::max(max_label, l);
    return max_label + 1;
}

std::string LabeledDataset::fingerprint() const {
    Fnv1a hash;
    const std::int64_t dims[2] = {samples.rows(), samples.cols()};
    hash.update(dims, sizeof(dims));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            const double v = samples(i, j);
            hash.update(&v, sizeof(v));
        }
    }
    if (labels) {
        hash.update(labels->data(), labels->size() * sizeof(int));
    }
    return hash.hex();
}

namespace {

void check_finite_dataset(const LabeledDataset& ds, const std::string& source) {
    if (!ds.samples.allFinite()) {
        throw FormatError(source + ": dataset contains non-finite values");
    }
}

void densify_labels(std::vector<int>& labels) {
    std::set<int> distinct(labels.begin(), labels.end());
    int next = 0;
    std::map<int, int> remap;
    for (int l : distinct) remap[l] = next++;
    for (int& l : labels) l = remap[l];
}

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t offset) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) {
        throw FormatError(path + ": truncated at offset " + std::to_string(offset));
    }
    return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
           (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path,
                               Normalization normalization) {
    if (normalization == Normalization::none) {
        throw InvalidArgument("load_idx_images: choose unit_interval or signed_unit");
    }
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open: " + images_path);
    const std::uint32_t img_magic = read_be_u32(img, images_path, 0);
    if (img_magic != 0x00000803u) {
        throw FormatError(images_path + ": bad magic 0x" + [&] {
            char buf[9];
            std::snprintf(buf, sizeof(buf), "%08x", img_magic);
            return std::string(buf);
        }() + " at offset 0 (expected 00000803)");
    }
    const std::uint32_t n = read_be_u32(img, images_path, 4);
    const std::uint32_t rows = read_be_u32(img, images_path, 8);
    const std::uint32_t cols = read_be_u32(img, images_path, 12);
    const std::size_t pixel_count = std::size_t(n) * rows * cols;
    std::vector<unsigned char> pixels(pixel_count);
    img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixel_count));
    if (static_cast<std::size_t>(img.gcount()) != pixel_count) {
        throw FormatError(images_path + ": truncated at offset " +
                          std::to_string(16 + img.gcount()) + " (expected " +
                          std::to_string(pixel_count) + " pixel bytes)");
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open: " + labels_path);
    const std::uint32_t lab_magic = read_be_u32(lab, labels_path, 0);
    if (lab_magic != 0x00000801u) {
        throw FormatError(labels_path + ": bad magic at offset 0 (expected 00000801)");
    }
    const std::uint32_t n_labels = read_be_u32(lab, labels_path, 4);
    if (n_labels != n) {
        throw FormatError(labels_path + ": label count " + std::to_string(n_labels) +
                          " does not match image count " + std::to_string(n));
    }
    std::vector<unsigned char> raw_labels(n_labels);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n_labels));
    if (static_cast<std::size_t>(lab.gcount()) != n_labels) {
        throw FormatError(labels_path + ": truncated at offset " + std::to_string(8 + lab.gcount()));
    }

    LabeledDataset ds;
    ds.samples.resize(n, std::size_t(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < rows * cols; ++j) {
            const double v = static_cast<double>(pixels[std::size_t(i) * rows * cols + j]) / 255.0;
            ds.samples(i, j) = normalization == Normalization::unit_interval ? v : 2.0 * v - 1.0;
        }
    }
    ds.labels = std::vector<int>(raw_labels.begin(), raw_labels.end());
    densify_labels(*ds.labels);
    ds.name = images_path;
    ds.preprocessing.source = images_path + " + " + labels_path;
    ds.preprocessing.normalization = normalization;
    check_finite_dataset(ds, images_path);
    return ds;
}

namespace {

std::vector<std::vector<double>> parse_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) {
                    ++pos;
                }
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw FormatError(path + ": non-numeric cell '" + cell + "' at line " +
                                  std::to_string(line_no));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError(path + ": ragged row at line " + std::to_string(line_no) + " (" +
                              std::to_string(row.size()) + " cells, expected " +
                              std::to_string(rows.front().size()) + ")");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path + ": empty file");
    return rows;
}

}  // namespace

LabeledDataset load_dense_csv(const std::string& path, bool has_labels) {
    const auto rows = parse_numeric_csv(path);
    const std::size_t width = rows.front().size();
    if (has_labels && width < 2) {
        throw FormatError(path + ": need at least one feature column plus the label column");
    }
    const std::size_t d = has_labels ? width - 1 : width;
    LabeledDataset ds;
    ds.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    if (has_labels) ds.labels = std::vector<int>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        if (has_labels) {
            const double raw = rows[i][width - 1];
            const int label = static_cast<int>(std::llround(raw));
            if (std::fabs(raw - label) > 1e-9 || label < 0) {
                throw FormatError(path + ": label column must hold nonnegative integers (line " +
                                  std::to_string(i + 1) + ")");
            }
            (*ds.labels)[i] = label;
        }
    }
    if (ds.labels) densify_labels(*ds.labels);
    ds.name = path;
    ds.preprocessing.source = path;
    check_finite_dataset(ds, path);
    return ds;
}

void save_dense_csv(const std::string& path, const LabeledDataset& dataset, bool with_labels) {
    if (with_labels && !dataset.labels) {
        throw InvalidArgument("save_dense_csv: dataset has no labels");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (Eigen::Index i = 0; i < dataset.samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < dataset.samples.cols(); ++j) {
            if (j) out << ',';
            out << format_double(dataset.samples(i, j));
        }
        if (with_labels) out << ',' << (*dataset.labels)[static_cast<std::size_t>(i)];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<int> load_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            std::size_t pos = 0;
            const int value = std::stoi(line, &pos);
            if (pos != line.size() || value < 0) throw std::invalid_argument(line);
            labels.push_back(value);
        } catch (const std::exception&) {
            throw FormatError(path + ": bad label at line " + std::to_string(line_no));
        }
    }
    if (labels.empty()) throw FormatError(path + ": no labels");
    return labels;
}

SparseCounts load_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    SparseCounts counts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int doc, term;
        long count;
        if (!(ss >> doc >> term >> count) || doc < 0 || term < 0 || count < 0) {
            throw FormatError(path + ": bad triplet at line " + std::to_string(line_no));
        }
        counts.n_docs = std::max(counts.n_docs, doc + 1);
        counts.n_terms = std::max(counts.n_terms, term + 1);
        counts.entries.emplace_back(doc, term, count);
    }
    if (counts.entries.empty()) throw FormatError(path + ": no triplets");
    return counts;
}

LabeledDataset tfidf_select(const SparseCounts& counts, int top_k,
                            const std::optional<std::vector<int>>& labels) {
    if (top_k < 1) throw InvalidArgument("tfidf_select: top_k must be positive");
    if (top_k > counts.n_terms) {
        throw InvalidArgument("tfidf_select: top_k=" + std::to_string(top_k) + " exceeds " +
                              std::to_string(counts.n_terms) + " terms");
    }
    if (labels && static_cast<int>(labels->size()) != counts.n_docs) {
        throw InvalidArgument("tfidf_select: label count does not match document count");
    }
    const double n_docs = static_cast<double>(counts.n_docs);

    std::vector<long> df(static_cast<std::size_t>(counts.n_terms), 0);
    {
        std::set<std::pair<int, int>> seen;
        for (const auto& [doc, term, count] : counts.entries) {
            if (count > 0 && seen.insert({term, doc}).second) {
                df[static_cast<std::size_t>(term)] += 1;
            }
        }
    }
    std::vector<double> idf(static_cast<std::size_t>(counts.n_terms), 0.0);
    for (int t = 0; t < counts.n_terms; ++t) {
        if (df[static_cast<std::size_t>(t)] > 0) {
            idf[static_cast<std::size_t>(t)] =
                std::log(n_docs / static_cast<double>(df[static_cast<std::size_t>(t)]));
        }
    }
    // Per-term score: max tf-idf over documents.
    std::vector<double> score(static_cast<std::size_t>(counts.n_terms), 0.0);
    for (const auto& [doc, term, count] : counts.entries) {
        score[static_cast<std::size_t>(term)] =
            std::max(score[static_cast<std::size_t>(term)],
                     static_cast<double>(count) * idf[static_cast<std::size_t>(term)]);
    }
    std::vector<int> order(static_cast<std::size_t>(counts.n_terms));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)]) {
            return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
        }
        return a < b;
    });
    order.resize(static_cast<std::size_t>(top_k));
    std::vector<int> column_of(static_cast<std::size_t>(counts.n_terms), -1);
    for (int c = 0; c < top_k; ++c) {
        column_of[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = c;
    }

    LabeledDataset ds;
    ds.samples = Matrix::Zero(counts.n_docs, top_k);
    for (const auto& [doc, term, count] : counts.entries) {
        const int col = column_of[static_cast<std::size_t>(term)];
        if (col >= 0) {
            ds.samples(doc, col) = static_cast<double>(count) * idf[static_cast<std::size_t>(term)];
        }
    }
    ds.labels = labels;
    if (ds.labels) densify_labels(*ds.labels);
    ds.name = "tfidf";
    ds.preprocessing.source = "term counts";
    ds.preprocessing.tfidf_top_k = top_k;
    ds.preprocessing.notes = "tf-idf = tf * ln(N/df), term score = max over documents";
    check_finite_dataset(ds, "tfidf_select");
    return ds;
}

SplitIndices validation_split(int n, std::uint64_t seed) {
    if (n < 10) throw InvalidArgument("validation_split: need at least 10 samples");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, kSaltSplit));
    rng.shuffle(order);
    const std::size_t n_validation = static_cast<std::size_t>(n / 10);
    SplitIndices split;
    split.seed = seed;
    split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_validation));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_validation), order.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

LabeledDataset make_blobs(int n_per_cluster, int k, int dim, double center_spread,
                          double noise_sigma, std::uint64_t seed) {
    if (n_per_cluster < 1 || k < 1 || dim < 1) {
        throw InvalidArgument("make_blobs: n_per_cluster, k and dim must be positive");
    }
    if (center_spread < 0.0 || noise_sigma < 0.0) {
        throw InvalidArgument("make_blobs: spread and sigma must be nonnegative");
    }
    Rng rng(derive_seed(seed, kSaltBlobs));
    Matrix centers(k, dim);
    for (int c = 0; c < k; ++c) {
        for (int j = 0; j < dim; ++j) {
            centers(c, j) = rng.uniform(-center_spread, center_spread);
        }
    }
    LabeledDataset ds;
    ds.samples.resize(static_cast<Eigen::Index>(n_per_cluster) * k, dim);
    ds.labels = std::vector<int>(static_cast<std::size_t>(n_per_cluster) * k);
    Eigen::Index row = 0;
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < n_per_cluster; ++i, ++row) {
            for (int j = 0; j < dim; ++j) {
                ds.samples(row, j) = centers(c, j) + noise_sigma * rng.normal();
            }
            (*ds.labels)[static_cast<std::size_t>(row)] = c;
        }
    }
    ds.name = "blobs";
    ds.preprocessing.source = "synthetic blobs seed=" + std::to_string(seed);
    return ds;
}

LabeledDataset subsample(const LabeledDataset& dataset, int m, std::uint64_t seed) {
    if (m < 1 || m > dataset.n()) {
        throw InvalidArgument("subsample: m must be in [1, n]");
    }
    std::vector<int> order(static_cast<std::size_t>(dataset.n()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, kSaltSplit, 1));
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(m));
    std::sort(order.begin(), order.end());
    LabeledDataset out;
    out.samples.resize(m, dataset.dim());
    if (dataset.labels) out.labels = std::vector<int>(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        out.samples.row(i) = dataset.samples.row(order[static_cast<std::size_t>(i)]);
        if (dataset.labels) {
            (*out.labels)[static_cast<std::size_t>(i)] =
                (*dataset.labels)[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        }
    }
    out.name = dataset.name + "-subsample";
    out.preprocessing = dataset.preprocessing;
    out.preprocessing.notes += " subsample m=" + std::to_string(m);
    return out;
}

}  // namespace dkm
