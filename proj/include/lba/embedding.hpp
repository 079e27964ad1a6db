#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lba/common.hpp"
#include "lba/knowledge_store.hpp"

namespace lba {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Object-side encoder: f_o = normalize(weights * raw), with a positive
/// temperature that scales cosine similarity before the sigmoid.
/// `weights` is d x d_raw.
template <typename Scalar>
struct BasicProjection {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  MatrixType weights;
  Scalar temperature = Scalar(10);

  Eigen::Index dim() const { return weights.rows(); }
  Eigen::Index raw_dim() const { return weights.cols(); }

  bool operator==(const BasicProjection& o) const {
    return temperature == o.temperature && weights.rows() == o.weights.rows() &&
           weights.cols() == o.weights.cols() && weights == o.weights;
  }
};

using Projection = BasicProjection<double>;

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u,
                                 const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) throw Error("cosine undefined for a zero vector");
  if (u.size() != v.size()) throw Error("cosine: dimension mismatch");
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// sigma(temperature * sim)
template <typename Scalar>
Scalar confidence(Scalar sim, Scalar temperature) {
  return Scalar(1) / (Scalar(1) + std::exp(-temperature * sim));
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> encode_object(const BasicProjection<Scalar>& proj,
                                                       const Eigen::MatrixBase<Derived>& raw) {
  if (raw.size() != proj.raw_dim()) throw Error("encode_object: raw feature has wrong length");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = proj.weights * raw;
  const Scalar n = z.norm();
  if (!(n > Scalar(0))) throw Error("encode_object: degenerate projection (zero output)");
  return z / n;
}

/// Identity on the leading min(d, d_raw) block plus seeded gaussian noise of
/// standard deviation `noise`.
Projection make_projection(Eigen::Index raw_dim, Eigen::Index dim, std::uint64_t seed,
                           double noise = 0.0, double temperature = 10.0);

/// Deterministic stand-in text encoder: each (relation, tail) maps to a unit
/// vector drawn from a generator keyed on (seed, relation, tail). Heads never
/// enter the encoding, so a triplet and its head-masked form coincide.
class ConceptTable {
 public:
  ConceptTable(std::uint64_t seed, Eigen::Index dim);

  Vector vector(std::string_view relation, std::string_view tail) const;
  Vector encode(const Triplet& t) const { return vector(t.relation, t.tail); }
  /// Throws for the exploration pattern [MASK, r, MASK].
  Vector encode(const MaskedTriplet& m) const;

  /// Row i is vector(pairs[i]).
  Matrix stack(std::span<const RelationTail> pairs) const;

  std::uint64_t seed() const { return seed_; }
  Eigen::Index dim() const { return dim_; }

 private:
  std::uint64_t seed_;
  Eigen::Index dim_;
};

/// One knowledge item of a training example: a row of the knowledge feature
/// matrix and its binary target.
struct LabeledItem {
  Eigen::Index row;
  double label;
};

struct Example {
  Vector raw;
  std::vector<LabeledItem> items;
};

struct Gradient {
  Matrix weights;
  double temperature = 0.0;
};

constexpr double kLogClamp = 1e-12;

/// -sum_i [y_i log s_i + (1 - y_i) log(1 - s_i)], s_i = sigma(tau * cos(f_o, k_i)).
double bce_loss(const Projection& proj, const Vector& raw, const Matrix& knowledge,
                std::span<const LabeledItem> items);

/// Analytic gradient of bce_loss with respect to weights and temperature.
Gradient bce_gradient(const Projection& proj, const Vector& raw, const Matrix& knowledge,
                      std::span<const LabeledItem> items);

/// Mean of bce_loss over the batch.
double batch_loss(const Projection& proj, std::span<const Example> batch,
                  const Matrix& knowledge);

/// One gradient-descent step on the batch-mean loss. Returns the pre-update
/// loss. Throws Error on a non-finite gradient and leaves `proj` untouched.
double train_step(Projection& proj, std::span<const Example> batch, const Matrix& knowledge,
                  double learning_rate);

constexpr double kMinTemperature = 1e-3;

/// Checkpoint: header line, `d_raw`, `d`, `temperature` lines, then d rows of
/// d_raw weights, 17 significant digits.
void write_projection(std::ostream& out, const Projection& proj);
Projection read_projection(std::istream& in);
void save_projection(const Projection& proj, const std::filesystem::path& path);
Projection load_projection(const std::filesystem::path& path);

}  // namespace lba
