#pragma once

#include "core/nn.hpp"

#include <string>
#include <vector>

namespace dkm {

enum class DistanceKind { squared_euclidean, cosine };

// parameterized_softmax hardens as alpha -> +inf; fuzzy_cmeans as alpha -> 1+.
enum class MembershipKind { parameterized_softmax, fuzzy_cmeans };

struct ClusterModel {
    Matrix representatives;  // K x p
    DistanceKind distance = DistanceKind::squared_euclidean;
    MembershipKind membership = MembershipKind::parameterized_softmax;

    int k() const { return static_cast<int>(representatives.rows()); }
    int dim() const { return static_cast<int>(representatives.cols()); }
};

/// squared_euclidean: |h - r|^2. cosine: 1 - h.r / (|h||r|), in [0, 2];
/// requires both vectors nonzero.
double distance(const Vector& h, const Vector& r, DistanceKind kind);

/// Index of the representative with minimal distance; ties broken by lowest
/// index.
int closest_representative(const Vector& h, const ClusterModel& model);

/// Hard assignment of every row of points.
std::vector<int> assign_all(const Matrix& points, const ClusterModel& model);

/// Soft membership exp(-alpha d_k) / sum_k' exp(-alpha d_k'), computed with
/// a min-distance shift so that large alpha cannot overflow. alpha = 0 gives
/// the exactly uniform row.
Vector softmax_membership(const Vector& distances, double alpha);

/// Fuzzy C-Means membership (sum_k' (d_k/d_k')^(2/(alpha-1)))^-1, alpha > 1.
/// Distances below 1e-12 raise DegenerateInput: the membership is undefined
/// when a representative coincides with an object.
Vector fuzzy_membership(const Vector& distances, double alpha);

Vector membership_row(const Vector& distances, double alpha, MembershipKind kind);

struct DkmTerms {
    double reconstruction = 0.0;  // mean over batch of |x - A(x)|^2
    double clustering = 0.0;      // mean over batch of sum_k d_k * G_k (lambda excluded)
};

/// Joint loss: reconstruction + lambda * clustering, both averaged over the
/// batch.
double dkm_objective(const Matrix& batch, const DenseNetwork& net, const ClusterModel& model,
                     double alpha, double lambda, DkmTerms* terms = nullptr);

/// Exact gradients of dkm_objective wrt all network parameters and all
/// representatives, including the full membership Jacobian.
GradientBundle dkm_gradients(const Matrix& batch, const DenseNetwork& net,
                             const ClusterModel& model, double alpha, double lambda,
                             DkmTerms* terms = nullptr);

/// k-means++ seeding: first center uniform, subsequent centers sampled
/// proportionally to the squared distance to the nearest chosen center.
Matrix kmeans_pp_init(const Matrix& data, int k, Rng& rng);

struct KMeansResult {
    Matrix representatives;
    std::vector<int> assignment;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // after every assignment step
    int iterations = 0;
};

/// Lloyd iterations until assignment fixpoint, centroid shift below tol, or
/// max_iters. Empty clusters are reseeded to the point farthest from their
/// current centroid.
KMeansResult lloyd_kmeans(const Matrix& data, int k, Matrix init,
                          int max_iters = 300, double tol = 1e-9);

/// Full-precision CSV round trip for representatives (K rows x p columns).
void save_representatives_csv(const std::string& path, const Matrix& representatives);
Matrix load_representatives_csv(const std::string& path);

}  // namespace dkm
