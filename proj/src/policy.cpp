#include "lba/policy.hpp"

#include <cmath>
#include <random>

namespace lba {

namespace {

constexpr std::uint64_t kModeTag = 0x4d4f4445;
constexpr std::uint64_t kRelationTag = 0x52454c53;

}  // namespace

std::string_view to_string(Mode m) {
  return m == Mode::Confirmation ? "confirmation" : "exploration";
}

Mode mode_from_string(std::string_view s) {
  if (s == "confirmation") return Mode::Confirmation;
  if (s == "exploration") return Mode::Exploration;
  throw Error("unknown mode '" + std::string(s) + "'");
}

void PolicyContext::validate() const {
  if (!(mean_sim >= -1.0 && mean_sim <= 1.0)) throw Error("policy context: mean_sim outside [-1, 1]");
  if (relation_dist.empty()) throw Error("policy context: empty relation distribution");
  double sum = 0.0;
  for (const auto& [_, p] : relation_dist) {
    if (!(p >= 0.0)) throw Error("policy context: negative relation probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("policy context: relation distribution must sum to 1");
}

double estimate_mean_similarity(std::span<const ObjectInstance> train_set,
                                const KnowledgeSource& source, const Projection& proj,
                                const ConceptTable& concepts) {
  if (train_set.empty()) throw Error("estimate_mean_similarity: empty training set");
  const KnowledgeScorer scorer(source, concepts);
  double total = 0.0;
  for (const auto& obj : train_set) total += scorer.score_all(proj, obj.raw).front().sim;
  return total / static_cast<double>(train_set.size());
}

PolicyContext make_context(std::span<const ObjectInstance> train_set,
                           const KnowledgeSource& source, const Projection& proj,
                           const ConceptTable& concepts) {
  PolicyContext ctx{estimate_mean_similarity(train_set, source, proj, concepts),
                    source.relation_frequencies()};
  ctx.validate();
  return ctx;
}

double utility(Mode mode, double conf, double sim, const PolicyContext& ctx) {
  return mode == Mode::Confirmation ? conf + sim : 1.0 + ctx.mean_sim;
}

std::string sample_relation(const PolicyContext& ctx, std::uint64_t stream_seed) {
  if (ctx.relation_dist.empty()) throw Error("cannot sample a relation from an empty distribution");
  std::vector<double> weights;
  std::vector<const std::string*> names;
  for (const auto& [rel, p] : ctx.relation_dist) {
    names.push_back(&rel);
    weights.push_back(p);
  }
  std::mt19937_64 rng(derive_seed(stream_seed, kRelationTag));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return *names[pick(rng)];
}

Decision make_decision(Mode mode, const KnowledgePrediction& top, const PolicyContext& ctx,
                       std::uint64_t stream_seed) {
  if (mode == Mode::Confirmation) return {mode, top.masked};
  return {mode, MaskedTriplet::exploration(sample_relation(ctx, stream_seed))};
}

Decision select_mode(const KnowledgePrediction& top, const PolicyContext& ctx,
                     std::uint64_t stream_seed) {
  const double conf_u = utility(Mode::Confirmation, top.conf, top.sim, ctx);
  const double exp_u = utility(Mode::Exploration, top.conf, top.sim, ctx);
  const Mode mode = conf_u >= exp_u ? Mode::Confirmation : Mode::Exploration;
  return make_decision(mode, top, ctx, stream_seed);
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Ours: return "ours";
    case PolicyKind::AllConf: return "all-conf";
    case PolicyKind::AllExp: return "all-exp";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (auto k : {PolicyKind::Ours, PolicyKind::AllConf, PolicyKind::AllExp, PolicyKind::Random}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> policy_names() { return {"ours", "all-conf", "all-exp", "random"}; }

QuestionPolicy::QuestionPolicy(PolicyKind kind, PolicyContext ctx, std::uint64_t seed)
    : kind_(kind), ctx_(std::move(ctx)), seed_(seed) {}

Decision QuestionPolicy::decide(const KnowledgePrediction& top, std::uint64_t instance) const {
  const std::uint64_t stream = derive_seed(seed_, kModeTag, instance);
  if (pinned_) return make_decision(*pinned_, top, ctx_, stream);
  switch (kind_) {
    case PolicyKind::Ours:
      return select_mode(top, ctx_, stream);
    case PolicyKind::AllConf:
      return make_decision(Mode::Confirmation, top, ctx_, stream);
    case PolicyKind::AllExp:
      return make_decision(Mode::Exploration, top, ctx_, stream);
    case PolicyKind::Random: {
      std::mt19937_64 rng(stream);
      const Mode m = std::bernoulli_distribution(0.5)(rng) ? Mode::Confirmation : Mode::Exploration;
      return make_decision(m, top, ctx_, stream);
    }
  }
  throw Error("unreachable policy kind");
}

Mode QuestionPolicy::global_mode(std::span<const KnowledgePrediction> tops,
                                 const PolicyContext& ctx) {
  if (tops.empty()) return Mode::Confirmation;
  double conf_u = 0.0;
  double exp_u = 0.0;
  for (const auto& t : tops) {
    conf_u += utility(Mode::Confirmation, t.conf, t.sim, ctx);
    exp_u += utility(Mode::Exploration, t.conf, t.sim, ctx);
  }
  return conf_u >= exp_u ? Mode::Confirmation : Mode::Exploration;
}

QuestionPolicy forced_mode(Mode mode, PolicyContext ctx, std::uint64_t seed) {
  return QuestionPolicy(mode == Mode::Confirmation ? PolicyKind::AllConf : PolicyKind::AllExp,
                        std::move(ctx), seed);
}

QuestionPolicy random_policy(PolicyContext ctx, std::uint64_t seed) {
  return QuestionPolicy(PolicyKind::Random, std::move(ctx), seed);
}

}  // namespace lba
