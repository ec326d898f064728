#include "core/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dkm {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config field '" + key + "': expected an integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config field '" + key + "': expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidArgument("config field '" + key + "': expected a boolean, got '" + value + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse(key, item));
    }
    if (out.empty()) throw InvalidArgument("config field '" + key + "': empty list");
    return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_value_text(const std::string& text,
                                                                      const std::string& origin) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;  // cosmetic section header
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(origin + ": expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw FormatError(origin + ": empty key at line " + std::to_string(line_no));
        }
        pairs.emplace_back(key, value);
    }
    return pairs;
}

std::vector<std::pair<std::string, std::string>> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_value_text(buffer.str(), path);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    ExperimentConfig config;
    for (const auto& [key, value] : parse_key_value_file(path)) {
        config.apply(key, value);
    }
    return config;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
    if (key == "dataset.kind") {
        if (value != "blobs" && value != "csv" && value != "idx" && value != "triplets") {
            throw InvalidArgument("config field 'dataset.kind': unknown kind '" + value + "'");
        }
        dataset_kind = value;
    } else if (key == "dataset.path") {
        dataset_path = value;
    } else if (key == "dataset.labels") {
        dataset_labels_path = value;
    } else if (key == "dataset.has_labels") {
        csv_has_labels = parse_bool(key, value);
    } else if (key == "dataset.normalization") {
        if (value == "unit_interval") {
            normalization = Normalization::unit_interval;
        } else if (value == "signed_unit") {
            normalization = Normalization::signed_unit;
        } else {
            throw InvalidArgument("config field 'dataset.normalization': unknown value '" + value + "'");
        }
    } else if (key == "dataset.top_k") {
        tfidf_top_k = static_cast<int>(parse_long(key, value));
    } else if (key == "dataset.subsample") {
        subsample_n = static_cast<int>(parse_long(key, value));
    } else if (key == "dataset.subsample_seed") {
        subsample_seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "blobs.per_cluster") {
        blobs_per_cluster = static_cast<int>(parse_long(key, value));
    } else if (key == "blobs.k") {
        blobs_k = static_cast<int>(parse_long(key, value));
    } else if (key == "blobs.dim") {
        blobs_dim = static_cast<int>(parse_long(key, value));
    } else if (key == "blobs.spread") {
        blobs_spread = parse_real(key, value);
    } else if (key == "blobs.sigma") {
        blobs_sigma = parse_real(key, value);
    } else if (key == "blobs.seed") {
        blobs_seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "model.clusters") {
        clusters = static_cast<int>(parse_long(key, value));
    } else if (key == "model.hidden") {
        hidden.clear();
        for (long v : parse_list<long>(key, value, parse_long)) {
            hidden.push_back(static_cast<int>(v));
        }
    } else if (key == "model.embedding_dim") {
        embedding_dim = static_cast<int>(parse_long(key, value));
    } else if (key == "model.distance") {
        if (value == "squared_euclidean") {
            distance = DistanceKind::squared_euclidean;
        } else if (value == "cosine") {
            distance = DistanceKind::cosine;
        } else {
            throw InvalidArgument("config field 'model.distance': unknown value '" + value + "'");
        }
    } else if (key == "model.membership") {
        if (value == "softmax") {
            membership = MembershipKind::parameterized_softmax;
        } else if (value == "fuzzy") {
            membership = MembershipKind::fuzzy_cmeans;
        } else {
            throw InvalidArgument("config field 'model.membership': unknown value '" + value + "'");
        }
    } else if (key == "train.variant") {
        variant = variant_from_name(value);
    } else if (key == "train.lambda") {
        lambda = parse_real(key, value);
    } else if (key == "train.batch_size") {
        batch_size = static_cast<int>(parse_long(key, value));
    } else if (key == "train.learning_rate") {
        learning_rate = parse_real(key, value);
    } else if (key == "train.pretrain_epochs") {
        pretrain_epochs = static_cast<int>(parse_long(key, value));
    } else if (key == "train.epochs_per_term") {
        epochs_per_term = static_cast<int>(parse_long(key, value));
    } else if (key == "train.alpha_terms") {
        alpha_terms = static_cast<int>(parse_long(key, value));
    } else if (key == "train.alpha_start") {
        alpha_start = parse_real(key, value);
    } else if (key == "train.alpha") {
        alpha_constant = parse_real(key, value);
    } else if (key == "train.weight_decay") {
        weight_decay = parse_real(key, value);
    } else if (key == "seeds") {
        seeds.clear();
        for (long v : parse_list<long>(key, value, parse_long)) {
            seeds.push_back(static_cast<std::uint64_t>(v));
        }
    } else if (key == "split_seed") {
        split_seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "threads") {
        threads = static_cast<int>(parse_long(key, value));
    } else if (key == "output.dir") {
        output_dir = value;
    } else {
        throw InvalidArgument("config field '" + key + "': unknown key");
    }
}

int ExperimentConfig::effective_epochs_per_term() const {
    if (epochs_per_term > 0) return epochs_per_term;
    return variant == Variant::dkm_p ? 100 : 5;
}

void ExperimentConfig::validate_for_training() const {
    if (dataset_kind.empty()) throw InvalidArgument("config field 'dataset.kind': required");
    if (dataset_kind != "blobs" && dataset_path.empty()) {
        throw InvalidArgument("config field 'dataset.path': required for kind '" + dataset_kind + "'");
    }
    if (clusters < 2) {
        throw InvalidArgument("config field 'model.clusters': must be >= 2, got " +
                              std::to_string(clusters));
    }
    for (int h : hidden) {
        if (h < 1) throw InvalidArgument("config field 'model.hidden': dims must be positive");
    }
    if (effective_embedding_dim() < 1) {
        throw InvalidArgument("config field 'model.embedding_dim': must be positive");
    }
    if (seeds.empty()) throw InvalidArgument("config field 'seeds': at least one seed required");
    if (membership == MembershipKind::fuzzy_cmeans) {
        if (variant == Variant::dkm_a) {
            throw InvalidArgument(
                "config field 'model.membership': fuzzy membership requires a constant alpha "
                "(use dkm_p); the annealing schedule is designed for the softmax");
        }
        if (!(alpha_constant > 1.0)) {
            throw InvalidArgument("config field 'train.alpha': fuzzy membership needs alpha > 1");
        }
    }
    // Builds the plan to run the TrainPlan invariants as well.
    make_plan(seeds.front());
}

TrainPlan ExperimentConfig::make_plan(std::uint64_t seed) const {
    TrainPlan plan;
    plan.variant = variant;
    plan.lambda = lambda;
    plan.batch_size = batch_size;
    plan.learning_rate = learning_rate;
    plan.weight_decay = weight_decay;
    plan.seed = seed;
    plan.pretrain_epochs = variant == Variant::dkm_a || variant == Variant::km ? 0 : pretrain_epochs;
    if (variant == Variant::dkm_a) {
        plan.schedule = build_annealing_sequence(alpha_terms, alpha_start,
                                                 effective_epochs_per_term());
    } else {
        plan.schedule.terms = {alpha_constant};
        plan.schedule.epochs_per_term = effective_epochs_per_term();
    }
    plan.validate();
    return plan;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["dataset.kind"] = dataset_kind;
    m["dataset.path"] = dataset_path;
    m["dataset.labels"] = dataset_labels_path;
    m["dataset.has_labels"] = csv_has_labels ? "true" : "false";
    m["dataset.normalization"] = normalization_name(normalization);
    m["dataset.top_k"] = std::to_string(tfidf_top_k);
    if (subsample_n > 0) {
        m["dataset.subsample"] = std::to_string(subsample_n);
        m["dataset.subsample_seed"] = std::to_string(subsample_seed);
    }
    if (dataset_kind == "blobs") {
        m["blobs.per_cluster"] = std::to_string(blobs_per_cluster);
        m["blobs.k"] = std::to_string(blobs_k);
        m["blobs.dim"] = std::to_string(blobs_dim);
        m["blobs.spread"] = format_double(blobs_spread);
        m["blobs.sigma"] = format_double(blobs_sigma);
        m["blobs.seed"] = std::to_string(blobs_seed);
    }
    m["model.clusters"] = std::to_string(clusters);
    {
        std::string dims;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            if (i) dims += ',';
            dims += std::to_string(hidden[i]);
        }
        m["model.hidden"] = dims;
    }
    m["model.embedding_dim"] = std::to_string(effective_embedding_dim());
    m["model.distance"] =
        distance == DistanceKind::squared_euclidean ? "squared_euclidean" : "cosine";
    m["model.membership"] =
        membership == MembershipKind::parameterized_softmax ? "softmax" : "fuzzy";
    m["train.variant"] = variant_name(variant);
    m["train.lambda"] = format_double(lambda);
    m["train.batch_size"] = std::to_string(batch_size);
    m["train.learning_rate"] = format_double(learning_rate);
    m["train.pretrain_epochs"] = std::to_string(pretrain_epochs);
    m["train.epochs_per_term"] = std::to_string(effective_epochs_per_term());
    m["train.alpha_terms"] = std::to_string(alpha_terms);
    m["train.alpha_start"] = format_double(alpha_start);
    m["train.alpha"] = format_double(alpha_constant);
    m["train.weight_decay"] = format_double(weight_decay);
    {
        std::string list;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (i) list += ',';
            list += std::to_string(seeds[i]);
        }
        m["seeds"] = list;
    }
    m["split_seed"] = std::to_string(split_seed);
    m["threads"] = std::to_string(threads);
    m["output.dir"] = output_dir;
    return m;
}

}  // namespace dkm
