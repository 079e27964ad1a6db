#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lba/embedding.hpp"
#include "lba/knowledge_store.hpp"
#include "lba/world.hpp"

namespace lba {

struct KnowledgePrediction {
  MaskedTriplet masked;  // [MASK, r, t]
  double sim = 0.0;
  double conf = 0.0;
  int rank = 0;  // 1-based
};

struct LabelPrediction {
  std::string head;
  std::set<std::string> candidates;
  double score = 0.0;
  int from_rank = 1;  // rank of the prediction the label was resolved from
};

/// A scoring snapshot of a knowledge source: the distinct (relation, tail)
/// pairs with their concept vectors stacked row-wise. Read-only; the source
/// must outlive the scorer and must not change while it is in use.
class KnowledgeScorer {
 public:
  KnowledgeScorer(const KnowledgeSource& source, const ConceptTable& concepts);
  /// Scores `candidates` but resolves labels against `source`.
  KnowledgeScorer(const KnowledgeSource& source, const ConceptTable& concepts,
                  std::vector<RelationTail> candidates);

  /// One entry per pair, sim descending, ties in canonical pair order.
  std::vector<KnowledgePrediction> score_all(const Projection& proj, const Vector& raw) const;

  /// Walks the ranking until a pair resolves to at least one head. Several
  /// heads are re-ranked by the summed confidence of all their triplets;
  /// remaining ties go to the lexicographically smallest head.
  LabelPrediction predict_label(const Projection& proj, const Vector& raw) const;

  const std::vector<RelationTail>& pairs() const { return pairs_; }
  const Matrix& features() const { return features_; }

 private:
  Vector similarities(const Vector& f_o) const;

  const KnowledgeSource* source_;
  ConceptTable concepts_;
  std::vector<RelationTail> pairs_;
  Matrix features_;
};

std::vector<KnowledgePrediction> score_all(const ObjectInstance& object,
                                           const KnowledgeSource& source,
                                           const Projection& proj,
                                           const ConceptTable& concepts);

LabelPrediction predict_label(const ObjectInstance& object, const KnowledgeSource& source,
                              const Projection& proj, const ConceptTable& concepts);

struct AccuracyReport {
  double overall = 0.0;
  double known = 0.0;
  double novel = 0.0;
  std::size_t n_known = 0;
  std::size_t n_novel = 0;
};

/// Accuracy over `dataset`, partitioned by whether the true head is in
/// `known_heads`. An empty partition reports 0.
AccuracyReport evaluate(std::span<const ObjectInstance> dataset, const KnowledgeSource& source,
                        const Projection& proj, const ConceptTable& concepts,
                        const std::set<std::string>& known_heads);

/// Examples for training against every pair of `source`: label 1 for pairs
/// the object's head holds, 0 for the rest. Negatives are subsampled per
/// epoch by `train`.
struct TrainingSet {
  std::vector<RelationTail> pairs;
  Matrix knowledge;
  std::vector<Example> examples;
};

TrainingSet make_training_set(std::span<const ObjectInstance> objects,
                              const KnowledgeSource& source, const ConceptTable& concepts);

struct TrainOptions {
  int epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  /// Negatives drawn per example each epoch; 0 keeps all of them.
  std::size_t negatives = 5;
  /// When nonzero, overrides `negatives` with this multiple of the example's
  /// positive count.
  std::size_t negatives_per_positive = 0;
  std::uint64_t seed = 7;
};

/// Mini-batch gradient descent. Negatives are resampled and batches
/// reshuffled each epoch from seeded streams. Returns the mean pre-update
/// batch loss of each epoch.
std::vector<double> train(Projection& proj, const TrainingSet& data, const TrainOptions& opts);

/// An object paired with one triplet acquired for it.
struct AcquiredPair {
  ObjectInstance object;
  Triplet triplet;
};

struct FineTuneOptions {
  int epochs = 20;
  double learning_rate = 0.01;
  std::size_t negatives_per_positive = 5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 7;
};

/// Training set for fine-tuning: per object, its acquired triplets as
/// positives and every pair of `source` its head does not hold as negatives.
TrainingSet make_fine_tune_set(std::span<const AcquiredPair> pairs, const KnowledgeSource& source,
                               const ConceptTable& concepts);

/// Throws Error on an empty pair set.
std::vector<double> fine_tune(Projection& proj, std::span<const AcquiredPair> pairs,
                              const KnowledgeSource& source, const ConceptTable& concepts,
                              const FineTuneOptions& opts);

}  // namespace lba
