#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lba/classifier.hpp"

namespace lba {

enum class Mode { Confirmation, Exploration };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

/// Statistics the utility needs: the mean rank-1 similarity over the training
/// data and the relation distribution r* is drawn from.
struct PolicyContext {
  double mean_sim = 0.0;
  std::map<std::string, double> relation_dist;

  /// Throws unless mean_sim lies in [-1, 1] and relation_dist is a
  /// distribution.
  void validate() const;
};

double estimate_mean_similarity(std::span<const ObjectInstance> train_set,
                                const KnowledgeSource& source, const Projection& proj,
                                const ConceptTable& concepts);

PolicyContext make_context(std::span<const ObjectInstance> train_set,
                           const KnowledgeSource& source, const Projection& proj,
                           const ConceptTable& concepts);

/// Confirmation: conf + sim. Exploration: 1 + mean_sim.
double utility(Mode mode, double conf, double sim, const PolicyContext& ctx);

/// Draws r* proportionally to ctx.relation_dist from the given stream.
std::string sample_relation(const PolicyContext& ctx, std::uint64_t stream_seed);

struct Decision {
  Mode mode;
  MaskedTriplet target;
};

/// Target for `mode`: [MASK, r, t] from the prediction, or [MASK, r*, MASK].
Decision make_decision(Mode mode, const KnowledgePrediction& top, const PolicyContext& ctx,
                       std::uint64_t stream_seed);

/// Per-instance argmax of the two branch utilities; ties go to Confirmation.
Decision select_mode(const KnowledgePrediction& top, const PolicyContext& ctx,
                     std::uint64_t stream_seed);

enum class PolicyKind { Ours, AllConf, AllExp, Random };

std::string_view to_string(PolicyKind k);
/// Accepts the CLI names `ours`, `all-conf`, `all-exp`, `random`.
std::optional<PolicyKind> parse_policy(std::string_view name);
std::vector<std::string> policy_names();

/// Question-mode policy. Each instance index gets its own sampling stream, so
/// decisions do not depend on evaluation order.
class QuestionPolicy {
 public:
  QuestionPolicy(PolicyKind kind, PolicyContext ctx, std::uint64_t seed);

  PolicyKind kind() const { return kind_; }
  const PolicyContext& context() const { return ctx_; }

  Decision decide(const KnowledgePrediction& top, std::uint64_t instance) const;

  /// Global variant of Ours: one mode for the whole batch, whichever has the
  /// larger mean utility over `tops` (ties to Confirmation).
  static Mode global_mode(std::span<const KnowledgePrediction> tops, const PolicyContext& ctx);

  /// Pins every decision to `mode` (used by the global variant).
  void pin(Mode mode) { pinned_ = mode; }

 private:
  PolicyKind kind_;
  PolicyContext ctx_;
  std::uint64_t seed_;
  std::optional<Mode> pinned_;
};

/// A policy that always emits `mode` (All-Conf / All-Exp).
QuestionPolicy forced_mode(Mode mode, PolicyContext ctx, std::uint64_t seed);
/// Uniform per-instance mode choice.
QuestionPolicy random_policy(PolicyContext ctx, std::uint64_t seed);

}  // namespace lba
