#include "lba/classifier.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace lba {

KnowledgeScorer::KnowledgeScorer(const KnowledgeSource& source, const ConceptTable& concepts)
    : KnowledgeScorer(source, concepts, source.pairs()) {}

KnowledgeScorer::KnowledgeScorer(const KnowledgeSource& source, const ConceptTable& concepts,
                                 std::vector<RelationTail> candidates)
    : source_(&source), concepts_(concepts), pairs_(std::move(candidates)) {
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
  if (pairs_.empty()) throw Error("no knowledge to score");
  features_ = concepts_.stack(pairs_);
}

Vector KnowledgeScorer::similarities(const Vector& f_o) const {
  // Rows of features_ and f_o are unit vectors.
  return (features_ * f_o).cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<KnowledgePrediction> KnowledgeScorer::score_all(const Projection& proj,
                                                            const Vector& raw) const {
  const Vector sims = similarities(encode_object(proj, raw));
  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sims[static_cast<Eigen::Index>(a)] > sims[static_cast<Eigen::Index>(b)];
  });
  std::vector<KnowledgePrediction> out;
  out.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [rel, tail] = pairs_[order[i]];
    const double s = sims[static_cast<Eigen::Index>(order[i])];
    out.push_back({MaskedTriplet::confirmation(rel, tail), s, confidence(s, proj.temperature),
                   static_cast<int>(i + 1)});
  }
  return out;
}

LabelPrediction KnowledgeScorer::predict_label(const Projection& proj, const Vector& raw) const {
  const Vector f_o = encode_object(proj, raw);
  const auto ranked = score_all(proj, raw);

  for (const auto& pred : ranked) {
    auto candidates = source_->lookup_heads(pred.masked.relation, *pred.masked.tail);
    if (candidates.empty()) continue;

    LabelPrediction best;
    best.candidates = candidates;
    best.from_rank = pred.rank;
    bool first = true;
    for (const auto& head : candidates) {
      double score = 0.0;
      for (const auto& t : source_->triplets_of(head)) {
        score += confidence(std::clamp(f_o.dot(concepts_.encode(t)), -1.0, 1.0), proj.temperature);
      }
      if (first || score > best.score) {
        best.head = head;
        best.score = score;
        first = false;
      }
    }
    return best;
  }
  throw Error("knowledge source unresolvable");
}

std::vector<KnowledgePrediction> score_all(const ObjectInstance& object,
                                           const KnowledgeSource& source,
                                           const Projection& proj,
                                           const ConceptTable& concepts) {
  return KnowledgeScorer(source, concepts).score_all(proj, object.raw);
}

LabelPrediction predict_label(const ObjectInstance& object, const KnowledgeSource& source,
                              const Projection& proj, const ConceptTable& concepts) {
  return KnowledgeScorer(source, concepts).predict_label(proj, object.raw);
}

AccuracyReport evaluate(std::span<const ObjectInstance> dataset, const KnowledgeSource& source,
                        const Projection& proj, const ConceptTable& concepts,
                        const std::set<std::string>& known_heads) {
  if (dataset.empty()) throw Error("evaluate: empty dataset");
  const KnowledgeScorer scorer(source, concepts);
  std::size_t hit_known = 0;
  std::size_t hit_novel = 0;
  AccuracyReport r;
  for (const auto& obj : dataset) {
    bool correct = false;
    try {
      correct = scorer.predict_label(proj, obj.raw).head == obj.truth_head;
    } catch (const Error&) {
      correct = false;
    }
    if (known_heads.contains(obj.truth_head)) {
      ++r.n_known;
      hit_known += correct;
    } else {
      ++r.n_novel;
      hit_novel += correct;
    }
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  r.known = ratio(hit_known, r.n_known);
  r.novel = ratio(hit_novel, r.n_novel);
  r.overall = ratio(hit_known + hit_novel, r.n_known + r.n_novel);
  return r;
}

namespace {

constexpr std::uint64_t kNegativeTag = 0x4e454701;
constexpr std::uint64_t kShuffleTag = 0x53485546;

std::map<RelationTail, Eigen::Index> row_index(const std::vector<RelationTail>& pairs) {
  std::map<RelationTail, Eigen::Index> idx;
  for (std::size_t i = 0; i < pairs.size(); ++i) idx[pairs[i]] = static_cast<Eigen::Index>(i);
  return idx;
}

void add_negatives(std::vector<LabeledItem>& items, const std::set<Eigen::Index>& positive,
                   Eigen::Index n_rows) {
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    if (!positive.contains(r)) items.push_back({r, 0.0});
  }
}

/// Copy of `ex` keeping all positives and `count` random negatives (all when
/// count is 0 or exceeds what is available).
Example subsample(const Example& ex, std::size_t count, std::mt19937_64& rng) {
  Example out{ex.raw, {}};
  std::vector<LabeledItem> negatives;
  for (const auto& it : ex.items) {
    if (it.label > 0.0) {
      out.items.push_back(it);
    } else {
      negatives.push_back(it);
    }
  }
  if (count > 0 && count < negatives.size()) {
    std::shuffle(negatives.begin(), negatives.end(), rng);
    negatives.resize(count);
  }
  out.items.insert(out.items.end(), negatives.begin(), negatives.end());
  return out;
}

}  // namespace

TrainingSet make_training_set(std::span<const ObjectInstance> objects,
                              const KnowledgeSource& source, const ConceptTable& concepts) {
  TrainingSet set;
  set.pairs = source.pairs();
  if (set.pairs.empty()) throw Error("training needs a nonempty knowledge source");
  set.knowledge = concepts.stack(set.pairs);
  const auto idx = row_index(set.pairs);
  for (const auto& obj : objects) {
    std::set<Eigen::Index> positive;
    for (const auto& t : source.triplets_of(obj.truth_head)) positive.insert(idx.at({t.relation, t.tail}));
    Example ex{obj.raw, {}};
    for (auto r : positive) ex.items.push_back({r, 1.0});
    add_negatives(ex.items, positive, set.knowledge.rows());
    set.examples.push_back(std::move(ex));
  }
  return set;
}

std::vector<double> train(Projection& proj, const TrainingSet& data, const TrainOptions& opts) {
  if (opts.epochs < 0) throw Error("epochs must be >= 0");
  if (opts.batch_size == 0) throw Error("batch size must be positive");
  std::vector<double> losses;
  if (opts.epochs == 0 || data.examples.empty()) return losses;

  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(opts.seed, kShuffleTag, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    std::mt19937_64 neg_rng(derive_seed(opts.seed, kNegativeTag, static_cast<std::uint64_t>(epoch)));
    double total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = data.examples[order[i]];
        std::size_t count = opts.negatives;
        if (opts.negatives_per_positive > 0) {
          const auto positives = static_cast<std::size_t>(std::count_if(
              ex.items.begin(), ex.items.end(), [](const LabeledItem& it) { return it.label > 0.0; }));
          count = std::max<std::size_t>(1, opts.negatives_per_positive * positives);
        }
        batch.push_back(subsample(ex, count, neg_rng));
      }
      total += train_step(proj, batch, data.knowledge, opts.learning_rate);
      ++n_batches;
    }
    losses.push_back(total / static_cast<double>(n_batches));
  }
  return losses;
}

TrainingSet make_fine_tune_set(std::span<const AcquiredPair> pairs, const KnowledgeSource& source,
                               const ConceptTable& concepts) {
  TrainingSet set;
  set.pairs = source.pairs();
  for (const auto& p : pairs) set.pairs.push_back({p.triplet.relation, p.triplet.tail});
  std::sort(set.pairs.begin(), set.pairs.end());
  set.pairs.erase(std::unique(set.pairs.begin(), set.pairs.end()), set.pairs.end());
  set.knowledge = concepts.stack(set.pairs);
  const auto idx = row_index(set.pairs);

  // Group by object id, preserving first-seen order.
  std::vector<int> order;
  std::map<int, std::pair<const ObjectInstance*, std::set<Eigen::Index>>> grouped;
  for (const auto& p : pairs) {
    auto [it, fresh] = grouped.try_emplace(p.object.id, &p.object, std::set<Eigen::Index>{});
    if (fresh) order.push_back(p.object.id);
    it->second.second.insert(idx.at({p.triplet.relation, p.triplet.tail}));
  }

  for (int id : order) {
    const auto& [obj, positive] = grouped.at(id);
    std::set<Eigen::Index> excluded = positive;
    for (const auto& t : source.triplets_of(obj->truth_head)) {
      excluded.insert(idx.at({t.relation, t.tail}));
    }
    Example ex{obj->raw, {}};
    for (auto r : positive) ex.items.push_back({r, 1.0});
    add_negatives(ex.items, excluded, set.knowledge.rows());
    set.examples.push_back(std::move(ex));
  }
  return set;
}

std::vector<double> fine_tune(Projection& proj, std::span<const AcquiredPair> pairs,
                              const KnowledgeSource& source, const ConceptTable& concepts,
                              const FineTuneOptions& opts) {
  if (pairs.empty()) throw Error("fine_tune: no acquired pairs");
  const TrainingSet set = make_fine_tune_set(pairs, source, concepts);
  TrainOptions t;
  t.epochs = opts.epochs;
  t.learning_rate = opts.learning_rate;
  t.batch_size = opts.batch_size;
  t.negatives_per_positive = opts.negatives_per_positive;
  t.seed = opts.seed;
  return train(proj, set, t);
}

}  // namespace lba
