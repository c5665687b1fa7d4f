#pragma once

// Similarity measures and the contrastive objective. Per anchor i the loss is
//
//   -log [ sum_{j=1..P} e^{Sim(z+_i, z+_{i-j})/tau}
//          / ( sum_{j=0..K} e^{Sim(z+_i, z-_{i,j})/tau}
//              + sum_{j=1..P} e^{Sim(z+_i, z+_{i-j})/tau} ) ]
//
// summed over the anchor range. Computed as lse(all) - lse(positives) with
// max-shifted log-sum-exp, so it stays finite for any bounded similarities.

#include <cmath>
#include <string>
#include <vector>

#include "igcl/errors.hpp"
#include "igcl/mat.hpp"

namespace igcl {

enum class SimilarityKind { Cosine, NegEuclidean };

inline const char* to_string(SimilarityKind k) {
  return k == SimilarityKind::Cosine ? "cosine" : "negative-euclidean";
}

inline SimilarityKind similarity_kind_from_string(const std::string& s) {
  if (s == "cosine") return SimilarityKind::Cosine;
  if (s == "negative-euclidean") return SimilarityKind::NegEuclidean;
  throw ConfigError("unknown similarity kind '" + s + "'");
}

constexpr double kCosineGuard = 1e-12;

inline double similarity(const double* a, const double* b, int n, SimilarityKind kind) {
  if (kind == SimilarityKind::Cosine) {
    double denom = norm2(a, n) * norm2(b, n);
    return dot(a, b, n) / (denom < kCosineGuard ? kCosineGuard : denom);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return -std::sqrt(s);
}

inline double similarity(const Vec& a, const Vec& b, SimilarityKind kind) {
  if (a.size() != b.size()) throw ShapeMismatch("similarity inputs differ in dimension");
  return similarity(a.data(), b.data(), static_cast<int>(a.size()), kind);
}

/// Accumulates d_sim * dSim/da into da and d_sim * dSim/db into db.
inline void similarity_backward(const double* a, const double* b, int n, SimilarityKind kind,
                                double d_sim, double* da, double* db) {
  if (kind == SimilarityKind::Cosine) {
    const double na = norm2(a, n), nb = norm2(b, n);
    const double prod = na * nb;
    if (prod < kCosineGuard) {
      // Guarded region: denominator is the constant guard.
      const double inv = 1.0 / kCosineGuard;
      axpy(d_sim * inv, b, da, n);
      axpy(d_sim * inv, a, db, n);
      return;
    }
    const double s = dot(a, b, n) / prod;
    const double inv = 1.0 / prod;
    for (int i = 0; i < n; ++i) {
      da[i] += d_sim * (b[i] * inv - s * a[i] / (na * na));
      db[i] += d_sim * (a[i] * inv - s * b[i] / (nb * nb));
    }
    return;
  }
  double dist = 0.0;
  for (int i = 0; i < n; ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
  dist = std::sqrt(dist);
  if (dist == 0.0) return;
  const double inv = 1.0 / dist;
  for (int i = 0; i < n; ++i) {
    const double diff = a[i] - b[i];
    da[i] += d_sim * (-diff * inv);
    db[i] += d_sim * (diff * inv);
  }
}

struct ObjectiveConfig {
  double tau = 0.1;
  int positives = 3;  // P
  double lambda = 0.1;
  SimilarityKind similarity = SimilarityKind::Cosine;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (positives < 1) throw ConfigError("P must be at least 1");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  }
};

/// Loss given precomputed similarities: pos_sims is anchors x P, neg_sims is
/// anchors x (K+1). Optional gradients with respect to the similarities.
inline double info_nce_from_sims(const Mat& pos_sims, const Mat& neg_sims, double tau,
                                 Mat* d_pos = nullptr, Mat* d_neg = nullptr) {
  if (pos_sims.rows != neg_sims.rows) throw ShapeMismatch("anchor counts differ");
  if (pos_sims.cols < 1 || neg_sims.cols < 1) throw ShapeMismatch("need positives and negatives");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (d_pos) *d_pos = Mat(pos_sims.rows, pos_sims.cols);
  if (d_neg) *d_neg = Mat(neg_sims.rows, neg_sims.cols);

  const int P = pos_sims.cols, M = neg_sims.cols;
  double total = 0.0;
  for (int a = 0; a < pos_sims.rows; ++a) {
    const double* sp = pos_sims.row(a);
    const double* sn = neg_sims.row(a);
    double m_all = sp[0] / tau, m_pos = sp[0] / tau;
    for (int j = 1; j < P; ++j) m_pos = std::max(m_pos, sp[j] / tau);
    m_all = m_pos;
    for (int j = 0; j < M; ++j) m_all = std::max(m_all, sn[j] / tau);
    double z_pos_at_all = 0.0, z_pos = 0.0, z_all = 0.0;
    for (int j = 0; j < P; ++j) {
      z_pos += std::exp(sp[j] / tau - m_pos);
      z_pos_at_all += std::exp(sp[j] / tau - m_all);
    }
    z_all = z_pos_at_all;
    for (int j = 0; j < M; ++j) z_all += std::exp(sn[j] / tau - m_all);
    const double lse_all = m_all + std::log(z_all);
    const double lse_pos = m_pos + std::log(z_pos);
    total += lse_all - lse_pos;
    if (d_pos && d_neg) {
      for (int j = 0; j < P; ++j) {
        const double p_all = std::exp(sp[j] / tau - m_all) / z_all;
        const double p_pos = std::exp(sp[j] / tau - m_pos) / z_pos;
        (*d_pos)(a, j) = (p_all - p_pos) / tau;
      }
      for (int j = 0; j < M; ++j) (*d_neg)(a, j) = std::exp(sn[j] / tau - m_all) / z_all / tau;
    }
  }
  return total;
}

/// Contrastive loss over representation tracks. Anchors are the rows of
/// `clean` in [anchor_begin, anchor_end]; anchor c takes rows c-1..c-P of
/// `clean` as positives and row c of every track in `negatives` as its K+1
/// negatives. Anchors whose positives fall outside the valid mask are
/// skipped; if nothing remains the history is insufficient.
inline double contrastive_loss(const Mat& clean, const std::vector<const Mat*>& negatives,
                               int anchor_begin, int anchor_end, const ObjectiveConfig& cfg,
                               const std::vector<uint8_t>* valid = nullptr, Mat* d_clean = nullptr,
                               std::vector<Mat>* d_negatives = nullptr) {
  cfg.validate();
  if (negatives.empty()) throw ShapeMismatch("need at least one negative track");
  for (const Mat* neg : negatives)
    if (!neg->same_shape(clean)) throw ShapeMismatch("negative track shape differs from clean");
  if (anchor_begin < 0 || anchor_end >= clean.rows || anchor_begin > anchor_end)
    throw OutOfRange("anchor range [" + std::to_string(anchor_begin) + ", " +
                     std::to_string(anchor_end) + "]");
  const int P = cfg.positives;
  const int M = static_cast<int>(negatives.size());
  const int d = clean.cols;

  std::vector<int> anchors;
  for (int c = anchor_begin; c <= anchor_end; ++c) {
    if (c - P < 0) continue;
    bool ok = true;
    if (valid)
      for (int j = 1; j <= P && ok; ++j) ok = (*valid)[c - j] != 0;
    if (ok) anchors.push_back(c);
  }
  if (anchors.empty())
    throw InsufficientHistory("no anchor has " + std::to_string(P) + " valid prior columns");

  const int A = static_cast<int>(anchors.size());
  Mat pos_sims(A, P), neg_sims(A, M);
  for (int a = 0; a < A; ++a) {
    const int c = anchors[a];
    const double* zc = clean.row(c);
    for (int j = 1; j <= P; ++j)
      pos_sims(a, j - 1) = similarity(zc, clean.row(c - j), d, cfg.similarity);
    for (int j = 0; j < M; ++j)
      neg_sims(a, j) = similarity(zc, negatives[j]->row(c), d, cfg.similarity);
  }

  const bool want_grads = d_clean || d_negatives;
  Mat d_pos, d_neg;
  double loss = info_nce_from_sims(pos_sims, neg_sims, cfg.tau, want_grads ? &d_pos : nullptr,
                                   want_grads ? &d_neg : nullptr);
  if (want_grads) {
    if (d_clean) *d_clean = Mat(clean.rows, d);
    if (d_negatives) {
      d_negatives->assign(M, Mat(clean.rows, d));
    }
    Mat ignored(clean.rows, d);
    Mat& dc = d_clean ? *d_clean : ignored;
    for (int a = 0; a < A; ++a) {
      const int c = anchors[a];
      const double* zc = clean.row(c);
      for (int j = 1; j <= P; ++j)
        similarity_backward(zc, clean.row(c - j), d, cfg.similarity, d_pos(a, j - 1), dc.row(c),
                            dc.row(c - j));
      for (int j = 0; j < M; ++j) {
        double* dn = d_negatives ? (*d_negatives)[j].row(c) : ignored.row(c);
        similarity_backward(zc, negatives[j]->row(c), d, cfg.similarity, d_neg(a, j), dc.row(c), dn);
      }
    }
  }
  return loss;
}

inline double total_loss(double contrastive, double regularization, double lambda) {
  return contrastive + lambda * regularization;
}

}  // namespace igcl
