#include "core/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dkm {

namespace {

void validate_model(const ClusterModel& model) {
    if (model.k() < 2) {
        throw InvalidArgument("cluster model: K must be >= 2, got " + std::to_string(model.k()));
    }
    if (!model.representatives.allFinite()) {
        throw NumericError("cluster model: representatives contain non-finite values");
    }
}

constexpr double kFuzzyDistanceFloor = 1e-12;

}  // namespace

double distance(const Vector& h, const Vector& r, DistanceKind kind) {
    if (h.size() != r.size()) {
        throw InvalidArgument("distance: dimension mismatch (" + std::to_string(h.size()) +
                              " vs " + std::to_string(r.size()) + ")");
    }
    switch (kind) {
        case DistanceKind::squared_euclidean:
            return (h - r).squaredNorm();
        case DistanceKind::cosine: {
            const double nh = h.norm();
            const double nr = r.norm();
            if (nh == 0.0 || nr == 0.0) {
                throw InvalidArgument("distance: cosine distance undefined for zero vectors");
            }
            return 1.0 - h.dot(r) / (nh * nr);
        }
    }
    throw InvalidArgument("distance: unknown kind");
}

int closest_representative(const Vector& h, const ClusterModel& model) {
    validate_model(model);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.k(); ++j) {
        const double d = distance(h, model.representatives.row(j).transpose(), model.distance);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::vector<int> assign_all(const Matrix& points, const ClusterModel& model) {
    std::vector<int> assignment(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        assignment[static_cast<std::size_t>(i)] =
            closest_representative(points.row(i).transpose(), model);
    }
    return assignment;
}

Vector softmax_membership(const Vector& distances, double alpha) {
    if (alpha < 0.0) throw InvalidArgument("softmax_membership: alpha must be nonnegative");
    if (distances.size() == 0) throw InvalidArgument("softmax_membership: empty distance vector");
    if (!distances.allFinite()) throw NumericError("softmax_membership: distances must be finite");
    // Shift by the row minimum: every exponent is <= 0, so arbitrarily large
    // alpha underflows to zero instead of overflowing.
    const double shift = distances.minCoeff();
    Vector row = (-alpha * (distances.array() - shift)).exp().matrix();
    return row / row.sum();
}

Vector fuzzy_membership(const Vector& distances, double alpha) {
    if (!(alpha > 1.0)) throw InvalidArgument("fuzzy_membership: alpha must be > 1");
    if (distances.size() == 0) throw InvalidArgument("fuzzy_membership: empty distance vector");
    if (distances.minCoeff() < kFuzzyDistanceFloor) {
        throw DegenerateInput(
            "fuzzy_membership: membership undefined when a representative coincides with an object");
    }
    // G_k = d_k^(-e) / sum_k' d_k'^(-e) with e = 2/(alpha-1); evaluated in
    // log space to survive the e -> inf regime near alpha = 1.
    const double e = 2.0 / (alpha - 1.0);
    Vector logits = (-e * distances.array().log()).matrix();
    const double shift = logits.maxCoeff();
    Vector row = (logits.array() - shift).exp().matrix();
    return row / row.sum();
}

Vector membership_row(const Vector& distances, double alpha, MembershipKind kind) {
    return kind == MembershipKind::parameterized_softmax ? softmax_membership(distances, alpha)
                                                         : fuzzy_membership(distances, alpha);
}

namespace {

// d/dd_j of C = sum_k d_k G_k(d), the per-sample clustering loss, for either
// membership family. Both derivatives follow from the softmax-style Jacobian
// dG_k/dd_j collapsing against the weighted sum.
Vector clustering_distance_derivative(const Vector& d, const Vector& g, double alpha,
                                      MembershipKind kind) {
    const double c = d.dot(g);
    Vector out(d.size());
    if (kind == MembershipKind::parameterized_softmax) {
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            out[j] = g[j] * (1.0 + alpha * (c - d[j]));
        }
    } else {
        const double e = 2.0 / (alpha - 1.0);
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            out[j] = g[j] * (1.0 + e * (c / d[j] - 1.0));
        }
    }
    return out;
}

double dkm_evaluate(const Matrix& batch, const DenseNetwork& net, const ClusterModel& model,
                    double alpha, double lambda, GradientBundle* out_grads, DkmTerms* out_terms) {
    validate_model(model);
    if (lambda < 0.0) throw InvalidArgument("dkm objective: lambda must be nonnegative");
    if (model.dim() != net.embedding_dim) {
        throw InvalidArgument("dkm objective: representative dim " + std::to_string(model.dim()) +
                              " does not match embedding dim " + std::to_string(net.embedding_dim));
    }
    const auto b = batch.rows();
    if (b == 0) throw InvalidArgument("dkm objective: empty batch");
    const int k = model.k();
    const double inv_b = 1.0 / static_cast<double>(b);

    ForwardCache cache;
    const ForwardResult fwd = forward(net, batch, out_grads ? &cache : nullptr);

    Matrix embedding_grad;
    Matrix rep_grad;
    if (out_grads) {
        embedding_grad = Matrix::Zero(b, net.embedding_dim);
        rep_grad = Matrix::Zero(k, model.dim());
    }

    double recon_sum = 0.0;
    double cluster_sum = 0.0;
    Vector dists(k);
    for (Eigen::Index i = 0; i < b; ++i) {
        recon_sum += (batch.row(i) - fwd.reconstructions.row(i)).squaredNorm();

        const Vector h = fwd.embeddings.row(i).transpose();
        for (int j = 0; j < k; ++j) {
            dists[j] = distance(h, model.representatives.row(j).transpose(), model.distance);
        }
        const Vector g = membership_row(dists, alpha, model.membership);
        cluster_sum += dists.dot(g);

        if (out_grads) {
            const Vector dc = clustering_distance_derivative(dists, g, alpha, model.membership);
            const double scale = lambda * inv_b;
            if (model.distance == DistanceKind::squared_euclidean) {
                for (int j = 0; j < k; ++j) {
                    const Vector diff = h - model.representatives.row(j).transpose();
                    embedding_grad.row(i) += (scale * dc[j] * 2.0) * diff.transpose();
                    rep_grad.row(j) -= (scale * dc[j] * 2.0) * diff.transpose();
                }
            } else {
                const double nh = h.norm();
                for (int j = 0; j < k; ++j) {
                    const Vector r = model.representatives.row(j).transpose();
                    const double nr = r.norm();
                    const double s = h.dot(r);
                    const Vector dd_dh = -r / (nh * nr) + (s / (nh * nh * nh * nr)) * h;
                    const Vector dd_dr = -h / (nh * nr) + (s / (nr * nr * nr * nh)) * r;
                    embedding_grad.row(i) += (scale * dc[j]) * dd_dh.transpose();
                    rep_grad.row(j) += (scale * dc[j]) * dd_dr.transpose();
                }
            }
        }
    }

    if (out_grads) {
        const Matrix recon_grad = (2.0 * inv_b) * (fwd.reconstructions - batch);
        *out_grads = backward(net, cache, embedding_grad, recon_grad);
        out_grads->representatives = std::move(rep_grad);
    }
    if (out_terms) {
        out_terms->reconstruction = recon_sum * inv_b;
        out_terms->clustering = cluster_sum * inv_b;
    }
    return recon_sum * inv_b + lambda * cluster_sum * inv_b;
}

}  // namespace

double dkm_objective(const Matrix& batch, const DenseNetwork& net, const ClusterModel& model,
                     double alpha, double lambda, DkmTerms* terms) {
    return dkm_evaluate(batch, net, model, alpha, lambda, nullptr, terms);
}

GradientBundle dkm_gradients(const Matrix& batch, const DenseNetwork& net,
                             const ClusterModel& model, double alpha, double lambda,
                             DkmTerms* terms) {
    GradientBundle bundle;
    dkm_evaluate(batch, net, model, alpha, lambda, &bundle, terms);
    return bundle;
}

Matrix kmeans_pp_init(const Matrix& data, int k, Rng& rng) {
    const auto n = data.rows();
    if (k < 1) throw InvalidArgument("kmeans_pp_init: k must be positive");
    if (n < k) {
        throw InvalidArgument("kmeans_pp_init: need at least k=" + std::to_string(k) +
                              " points, got " + std::to_string(n));
    }
    Matrix centers(k, data.cols());
    const auto first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    centers.row(0) = data.row(first);

    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2[i] = (data.row(i) - centers.row(0)).squaredNorm();
    }
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        if (!(total > 0.0)) {
            throw DegenerateInput(
                "kmeans_pp_init: remaining points all coincide with chosen centers");
        }
        const double u = rng.uniform() * total;
        double cumulative = 0.0;
        Eigen::Index chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            cumulative += d2[i];
            if (u < cumulative) {
                chosen = i;
                break;
            }
        }
        centers.row(c) = data.row(chosen);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (data.row(i) - centers.row(c)).squaredNorm());
        }
    }
    return centers;
}

namespace {

std::pair<std::vector<int>, double> assign_squared(const Matrix& data, const Matrix& reps) {
    std::vector<int> assignment(static_cast<std::size_t>(data.rows()));
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < reps.rows(); ++j) {
            const double d = (data.row(i) - reps.row(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        assignment[static_cast<std::size_t>(i)] = best;
        inertia += best_d;
    }
    return {std::move(assignment), inertia};
}

}  // namespace

KMeansResult lloyd_kmeans(const Matrix& data, int k, Matrix init, int max_iters, double tol) {
    const auto n = data.rows();
    if (k < 1) throw InvalidArgument("lloyd_kmeans: k must be positive");
    if (n < k) throw InvalidArgument("lloyd_kmeans: need at least k points");
    if (init.rows() != k || init.cols() != data.cols()) {
        throw InvalidArgument("lloyd_kmeans: init must be k x dim");
    }

    KMeansResult result;
    result.representatives = std::move(init);
    auto [assignment, inertia] = assign_squared(data, result.representatives);
    result.inertia_trace.push_back(inertia);

    for (int iter = 0; iter < max_iters; ++iter) {
        Matrix sums = Matrix::Zero(k, data.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assignment[static_cast<std::size_t>(i)]) += data.row(i);
            counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] += 1;
        }
        Matrix new_reps(k, data.cols());
        std::vector<char> taken(static_cast<std::size_t>(n), 0);
        for (int j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) {
                new_reps.row(j) =
                    sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
            } else {
                // Reseed an empty cluster to the point farthest from its
                // current centroid; one point per empty cluster per round.
                Eigen::Index farthest = -1;
                double best = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (taken[static_cast<std::size_t>(i)]) continue;
                    const double d = (data.row(i) - result.representatives.row(j)).squaredNorm();
                    if (d > best) {
                        best = d;
                        farthest = i;
                    }
                }
                new_reps.row(j) = data.row(farthest);
                taken[static_cast<std::size_t>(farthest)] = 1;
            }
        }
        const double shift = (new_reps - result.representatives).rowwise().norm().maxCoeff();
        result.representatives = std::move(new_reps);
        auto [new_assignment, new_inertia] = assign_squared(data, result.representatives);
        result.inertia_trace.push_back(new_inertia);
        result.iterations = iter + 1;
        const bool fixpoint = (new_assignment == assignment);
        assignment = std::move(new_assignment);
        inertia = new_inertia;
        if (fixpoint || shift < tol) break;
    }

    result.assignment = std::move(assignment);
    result.inertia = inertia;
    return result;
}

void save_representatives_csv(const std::string& path, const Matrix& representatives) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (Eigen::Index i = 0; i < representatives.rows(); ++i) {
        for (Eigen::Index j = 0; j < representatives.cols(); ++j) {
            if (j) out << ',';
            out << format_double(representatives(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Matrix load_representatives_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw FormatError("representatives csv: non-numeric cell at line " +
                                  std::to_string(line_no));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("representatives csv: ragged row at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("representatives csv: empty file: " + path);
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.front().size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

}  // namespace dkm
