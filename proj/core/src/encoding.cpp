#include "elinspect/encoding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "elinspect/errors.hpp"
#include "elinspect/rng.hpp"

namespace elinspect {

namespace {

Eigen::Index nearest_centroid(const Eigen::MatrixXf& centroids,
                              const Eigen::RowVectorXf& x) {
  Eigen::Index best = 0;
  double best_dist = (x - centroids.row(0)).cast<double>().squaredNorm();
  for (Eigen::Index k = 1; k < centroids.rows(); ++k) {
    const double d = (x - centroids.row(k)).cast<double>().squaredNorm();
    if (d < best_dist) {  // strict: ties stay with the lowest index
      best_dist = d;
      best = k;
    }
  }
  return best;
}

// k-means++ seeding: first center uniform, then squared-distance weighted.
Eigen::MatrixXf kmeanspp_init(const Eigen::MatrixXf& sample, int K, Rng& rng) {
  const Eigen::Index n = sample.rows();
  Eigen::MatrixXf centers(K, sample.cols());
  centers.row(0) = sample.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dist[i] = (sample.row(i) - centers.row(0)).cast<double>().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = dist.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform_real() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass at already-chosen points; fall back to uniform.
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(k) = sample.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      dist[i] = std::min(dist[i], (sample.row(i) - centers.row(k)).cast<double>().squaredNorm());
  }
  return centers;
}

std::size_t count_distinct_rows(const Eigen::MatrixXf& m, std::size_t needed) {
  std::set<std::vector<float>> seen;
  for (Eigen::Index i = 0; i < m.rows() && seen.size() < needed; ++i) {
    std::vector<float> row(m.row(i).data(), m.row(i).data() + m.cols());
    seen.insert(std::move(row));
  }
  return seen.size();
}

}  // namespace

Codebook fit_codebook(const Eigen::MatrixXf& sample, int K, int batch_size, int iterations,
                      std::uint64_t seed) {
  if (K < 1) throw ConfigError("codebook size K must be >= 1");
  if (sample.rows() < K) throw DataError("fewer sample rows than clusters");
  if (count_distinct_rows(sample, static_cast<std::size_t>(K)) < static_cast<std::size_t>(K))
    throw DataError("fewer distinct points than clusters");

  Rng rng(seed);
  const Eigen::Index n = sample.rows();
  Eigen::MatrixXd centers = kmeanspp_init(sample, K, rng).cast<double>();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(K), 0);
  const bool full_sweep = batch_size >= n;
  const Eigen::Index batch = full_sweep ? n : batch_size;

  Eigen::MatrixXf centers_f = centers.cast<float>();
  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(batch));
  for (int it = 0; it < iterations; ++it) {
    // Assign the whole batch against the centers frozen at batch start.
    std::vector<Eigen::Index> members(static_cast<std::size_t>(batch));
    for (Eigen::Index b = 0; b < batch; ++b) {
      members[static_cast<std::size_t>(b)] =
          full_sweep ? b
                     : static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      assignment[static_cast<std::size_t>(b)] =
          nearest_centroid(centers_f, sample.row(members[static_cast<std::size_t>(b)]));
    }
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto k = assignment[static_cast<std::size_t>(b)];
      const double lr = 1.0 / static_cast<double>(++counts[static_cast<std::size_t>(k)]);
      centers.row(k) += lr * (sample.row(members[static_cast<std::size_t>(b)]).cast<double>() - centers.row(k));
    }
    centers_f = centers.cast<float>();
  }

  Codebook cb;
  cb.centroids = centers_f;
  cb.seed = seed;
  return cb;
}

std::vector<Codebook> fit_codebooks(const Eigen::MatrixXf& pool, int m, int K,
                                    const MiniBatchKMeansParams& params, std::uint64_t seed) {
  if (m < 1) throw ConfigError("codebook count m must be >= 1");
  if (pool.rows() < static_cast<Eigen::Index>(m) * K)
    throw DataError("descriptor pool too small for m disjoint codebook shards");

  Rng rng(seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(pool.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  const Eigen::Index shard_rows = pool.rows() / m;
  std::vector<Codebook> books;
  books.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXf shard(shard_rows, pool.cols());
    for (Eigen::Index r = 0; r < shard_rows; ++r)
      shard.row(r) = pool.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(j) * static_cast<std::size_t>(shard_rows) + static_cast<std::size_t>(r)]));
    books.push_back(fit_codebook(shard, K, params.batch_size, params.iterations, seed + 1 + static_cast<std::uint64_t>(j)));
  }
  return books;
}

Eigen::VectorXd vlad_aggregate(const DescriptorSet& X, const Codebook& cb) {
  if (X.rows() == 0) throw DataError("vlad_aggregate on an empty descriptor set");
  if (X.dim() != cb.dim()) throw ConfigError("descriptor/codebook dimensionality mismatch");

  const Eigen::Index K = cb.K(), d = cb.dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(K * d);
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(K * d);  // Kahan compensation
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    const Eigen::Index k = nearest_centroid(cb.centroids, X.descriptors.row(t));
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::Index idx = k * d + j;
      const double term = static_cast<double>(X.descriptors(t, j)) - static_cast<double>(cb.centroids(k, j));
      const double y = term - comp[idx];
      const double s = sum[idx] + y;
      comp[idx] = (s - sum[idx]) - y;
      sum[idx] = s;
    }
  }
  return sum;
}

Eigen::VectorXd power_normalize(const Eigen::VectorXd& v, double rho) {
  if (rho <= 0.0 || rho > 1.0) throw ConfigError("power-norm exponent must lie in (0,1]");
  if (rho == 1.0) return v;
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = v[i] == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v[i]), rho), v[i]);
  return out;
}

Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw NumericError("cannot L2-normalize a zero vector");
  return v / norm;
}

WhiteningTransform fit_whitener(const Eigen::MatrixXd& train_encodings, double epsilon,
                                Eigen::Index max_rank) {
  const Eigen::Index n = train_encodings.rows();
  const Eigen::Index dim = train_encodings.cols();
  if (n < 2) throw DataError("whitening needs at least 2 training rows");

  WhiteningTransform wt;
  wt.mean = train_encodings.colwise().mean();
  const Eigen::MatrixXd centered = train_encodings.rowwise() - wt.mean.transpose();

  const bool dual_route = dim > n;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;  // covariance eigvecs, or Gram eigvecs on the dual route
  {
    const Eigen::MatrixXd small = dual_route
                                      ? Eigen::MatrixXd(centered * centered.transpose() / static_cast<double>(n))
                                      : Eigen::MatrixXd(centered.transpose() * centered / static_cast<double>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
    if (solver.info() != Eigen::Success) throw NumericError("whitening eigendecomposition failed");
    eigenvalues = solver.eigenvalues().reverse();
    vectors = solver.eigenvectors().rowwise().reverse();
  }

  const double lambda_max = eigenvalues.size() > 0 ? std::max(eigenvalues[0], 0.0) : 0.0;
  if (lambda_max <= 0.0) throw DataError("zero covariance: all training rows identical");
  const double eps_abs = epsilon * lambda_max;

  Eigen::Index rank = 0;
  while (rank < eigenvalues.size() && eigenvalues[rank] > eps_abs) ++rank;
  if (max_rank > 0) rank = std::min(rank, max_rank);
  if (rank == 0) throw NumericError("whitening rank collapsed to zero");

  if (dual_route) {
    // The N x N Gram spectrum equals the covariance spectrum; lift the kept
    // Gram eigenvectors u into data space as X' u / sqrt(n lambda).
    wt.basis = centered.transpose() *
               (vectors.leftCols(rank) *
                (static_cast<double>(n) * eigenvalues.head(rank).array()).rsqrt().matrix().asDiagonal());
  } else {
    wt.basis = vectors.leftCols(rank);
  }
  wt.scales = (eigenvalues.head(rank).array() + eps_abs).sqrt();
  wt.epsilon = eps_abs;
  return wt;
}

Eigen::VectorXd whiten(const WhiteningTransform& wt, const Eigen::VectorXd& x) {
  if (x.size() != wt.input_dim()) throw ConfigError("whitening input dimension mismatch");
  return ((x - wt.mean).transpose() * wt.basis).transpose().cwiseQuotient(wt.scales);
}

Eigen::VectorXd pre_whitening_encoding(const DescriptorSet& X,
                                       const std::vector<Codebook>& codebooks, double rho) {
  if (codebooks.empty()) throw ConfigError("encoder has no codebooks");
  for (const auto& cb : codebooks)
    if (cb.K() != codebooks[0].K() || cb.dim() != codebooks[0].dim())
      throw ConfigError("codebooks disagree on K or descriptor dimension");
  const Eigen::Index Kd = codebooks[0].K() * codebooks[0].dim();
  Eigen::VectorXd out(static_cast<Eigen::Index>(codebooks.size()) * Kd);
  for (std::size_t j = 0; j < codebooks.size(); ++j) {
    Eigen::VectorXd block = power_normalize(vlad_aggregate(X, codebooks[j]), rho);
    const double norm = block.norm();
    if (norm > 0.0) block /= norm;  // degenerate aggregates stay zero
    out.segment(static_cast<Eigen::Index>(j) * Kd, Kd) = block;
  }
  return out;
}

Eigen::VectorXd encode(const DescriptorSet& X, const VladEncoder& enc) {
  if (!enc.fitted()) throw ConfigError("encoder is not fitted");
  const Eigen::VectorXd pre = pre_whitening_encoding(X, enc.codebooks, enc.rho);
  Eigen::VectorXd out = whiten(enc.whitening, pre);
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

}  // namespace elinspect
