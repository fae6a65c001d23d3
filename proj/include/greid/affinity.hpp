#pragma once

#include "greid/feature_store.hpp"

namespace greid {

/// Pairwise person affinity in [0, 1]. The default maps cosine similarity of
/// the (unit) features to [0, 1]; the bilinear form squashes a learnable
/// quadratic form through a sigmoid. Both are exactly symmetric in (a, b).
struct AffinityScorer {
  enum class Kind { cosine, bilinear };

  Kind kind = Kind::cosine;
  Mat matrix;  // bilinear only, D x D

  double score(const Vec& a, const Vec& b) const {
    if (a.size() != b.size()) {
      throw ConfigError("affinity scorer: feature dimensions differ (" +
                        std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    switch (kind) {
      case Kind::cosine:
        return (a.dot(b) + 1.0) / 2.0;
      case Kind::bilinear: {
        if (matrix.rows() != a.size() || matrix.cols() != a.size()) {
          throw ConfigError("affinity scorer: bilinear matrix shape does not match features");
        }
        // (a'Mb + b'Ma)/2 keeps the score symmetric for any M.
        const double q = (a.dot(matrix * b) + b.dot(matrix * a)) / 2.0;
        return 1.0 / (1.0 + std::exp(-q));
      }
    }
    throw ConfigError("affinity scorer: unknown kind");
  }

  double score(const PersonDescriptor& a, const PersonDescriptor& b) const {
    return score(a.feature, b.feature);
  }
};

inline double score_affinity(const PersonDescriptor& a, const PersonDescriptor& b,
                             const AffinityScorer& scorer) {
  return scorer.score(a, b);
}

/// Raw pairwise scores S and their row-normalized walk matrix W. W has a zero
/// diagonal and each row softmaxed over its off-diagonal entries, so rows are
/// convex-combination weights.
struct AffinityMatrix {
  Mat raw;
  Mat normalized;

  Eigen::Index size() const { return normalized.rows(); }
};

/// Row-softmax normalization excluding the diagonal. Stabilized by shifting
/// each row by its off-diagonal maximum before exponentiation (the shift
/// cancels, so the result is mathematically unchanged).
inline AffinityMatrix normalize_affinities(const Mat& raw) {
  const Eigen::Index n = raw.rows();
  if (n != raw.cols()) throw ConfigError("affinity matrix must be square");
  if (n < 2) throw ConfigError("affinity matrix needs at least 2 nodes");
  if (!raw.allFinite()) throw NumericError("affinity matrix has non-finite entries");

  AffinityMatrix out;
  out.raw = raw;
  out.normalized = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row_max = std::max(row_max, raw(i, j));
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) denom += std::exp(raw(i, j) - row_max);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) out.normalized(i, j) = std::exp(raw(i, j) - row_max) / denom;
    }
  }
  return out;
}

/// Raw affinity matrix over a list of descriptors; symmetric by construction.
inline Mat pairwise_affinities(const std::vector<const PersonDescriptor*>& people,
                               const AffinityScorer& scorer) {
  const Eigen::Index n = static_cast<Eigen::Index>(people.size());
  Mat s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = scorer.score(*people[i], *people[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = scorer.score(*people[i], *people[j]);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace greid
