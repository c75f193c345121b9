#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "elinspect/features.hpp"

namespace elinspect {

/// k-means centroids over descriptor space; the anchor points of one VLAD
/// vocabulary.
struct Codebook {
  Eigen::MatrixXf centroids;  // K x d
  std::uint64_t seed = 0;

  Eigen::Index K() const { return centroids.rows(); }
  Eigen::Index dim() const { return centroids.cols(); }
};

struct MiniBatchKMeansParams {
  int batch_size = 1024;
  int iterations = 200;
};

/**
 * Mini-batch k-means. Centers are seeded k-means++ style from `seed`; each
 * iteration draws batch_size points with replacement (the full pool in index
 * order when batch_size >= pool size) and moves each point's nearest center
 * toward it with per-center learning rate 1/count. Deterministic for a
 * fixed seed. Requires at least K distinct rows.
 */
Codebook fit_codebook(const Eigen::MatrixXf& sample, int K, int batch_size, int iterations,
                      std::uint64_t seed);

/// Fits m codebooks on disjoint contiguous shards of a seeded shuffle of the
/// pool; shard j trains with seed seed+1+j.
std::vector<Codebook> fit_codebooks(const Eigen::MatrixXf& pool, int m, int K,
                                    const MiniBatchKMeansParams& params, std::uint64_t seed);

/**
 * VLAD aggregation: nu_k = sum over descriptors assigned to centroid k of
 * (x - mu_k), with nearest-centroid assignment (ties to the lowest centroid
 * index), concatenated to a K*d vector. Accumulation is Kahan-compensated so
 * the result is invariant to descriptor order up to ~1e-10.
 */
Eigen::VectorXd vlad_aggregate(const DescriptorSet& X, const Codebook& cb);

/// Elementwise signed power: sign(v) * |v|^rho, rho in (0,1].
Eigen::VectorXd power_normalize(const Eigen::VectorXd& v, double rho);

/// Scales to unit L2 norm; a zero vector is a NumericError.
Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v);

/**
 * PCA whitening fitted on rows of a training matrix: subtract the mean,
 * project on the eigenvectors of the (1/N-normalized) covariance and divide
 * by sqrt(lambda + eps_abs), where eps_abs = epsilon * lambda_max.
 * Components with lambda <= eps_abs are dropped, and max_rank (when
 * positive) caps the kept components, which fixes the output rank r. When
 * the dimension exceeds N the eigenproblem is solved through the N x N Gram
 * matrix, which yields the same nonzero spectrum.
 *
 * The cap matters whenever the input dimension reaches the row count: at
 * r = N-1 the whitened training rows form a regular simplex (their Gram is
 * N*I - 1*1' for any data), so every fitted direction past the informative
 * spectrum destroys held-out geometry. Callers fitting on N rows should cap
 * well below N; the pipeline defaults to N/2.
 */
struct WhiteningTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;   // D x r
  Eigen::VectorXd scales;  // r, sqrt(lambda + eps_abs)
  double epsilon = 0.0;    // the absolute regularizer eps_abs

  Eigen::Index rank() const { return basis.cols(); }
  Eigen::Index input_dim() const { return mean.size(); }
};

WhiteningTransform fit_whitener(const Eigen::MatrixXd& train_encodings, double epsilon = 1e-9,
                                Eigen::Index max_rank = 0);

Eigen::VectorXd whiten(const WhiteningTransform& wt, const Eigen::VectorXd& x);

/// Fitted encoder: m codebooks + power-norm exponent + joint whitening.
struct VladEncoder {
  std::vector<Codebook> codebooks;
  double rho = 0.5;
  WhiteningTransform whitening;

  Eigen::Index pre_dim() const {
    if (codebooks.empty()) return 0;
    return static_cast<Eigen::Index>(codebooks.size()) * codebooks[0].K() * codebooks[0].dim();
  }
  Eigen::Index output_dim() const { return whitening.rank(); }
  bool fitted() const { return !codebooks.empty() && whitening.rank() > 0; }
};

/**
 * Pre-whitening encoding: per codebook vlad_aggregate -> power_normalize ->
 * L2-normalize (a zero aggregate stays zero), concatenated over the m
 * codebooks to an m*K*d vector.
 */
Eigen::VectorXd pre_whitening_encoding(const DescriptorSet& X,
                                       const std::vector<Codebook>& codebooks, double rho);

/// Full encoding of one descriptor set: pre-whitening encoding, whitening,
/// final L2 normalization. A fully degenerate input yields the zero vector.
Eigen::VectorXd encode(const DescriptorSet& X, const VladEncoder& enc);

}  // namespace elinspect
