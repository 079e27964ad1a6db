#include <doctest.h>

#include <random>

#include "lba/policy.hpp"

using namespace lba;

namespace {

PolicyContext ctx(double mean_sim) {
  return PolicyContext{mean_sim, {{"UsedFor", 0.5}, {"IsA", 0.25}, {"MadeOf", 0.25}}};
}

KnowledgePrediction top(double conf, double sim) {
  return KnowledgePrediction{MaskedTriplet::confirmation("IsA", "mammal"), sim, conf, 1};
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(to_string(Mode::Confirmation) == "confirmation");
  CHECK(mode_from_string("exploration") == Mode::Exploration);
  CHECK_THROWS_AS(mode_from_string("both"), Error);
  CHECK(policy_names() == std::vector<std::string>{"ours", "all-conf", "all-exp", "random"});
  for (const auto& n : policy_names()) CHECK(to_string(*parse_policy(n)) == n);
  CHECK_FALSE(parse_policy("foo"));
}

TEST_CASE("context validation") {
  CHECK_NOTHROW(ctx(0.4).validate());
  CHECK_THROWS_AS(ctx(1.5).validate(), Error);
  CHECK_THROWS_AS((PolicyContext{0.0, {}}).validate(), Error);
  CHECK_THROWS_AS((PolicyContext{0.0, {{"IsA", 0.7}}}).validate(), Error);
}

TEST_CASE("mean similarity estimate") {
  const ConceptTable concepts(1, 8);
  const Projection id = make_projection(8, 8, 0);
  KnowledgeSource k;
  k.insert(make_triplet(k.vocabulary(), "dog", "IsA", "mammal"));
  CHECK_THROWS_AS(estimate_mean_similarity({}, k, id, concepts), Error);

  ObjectInstance exact;
  exact.raw = concepts.vector("IsA", "mammal");
  const std::vector<ObjectInstance> ones{exact, exact};
  CHECK(estimate_mean_similarity(ones, k, id, concepts) == doctest::Approx(1.0));

  // Rank-1 sims 0.8 and 0.4: blend the concept with an orthogonal direction.
  const Vector c = concepts.vector("IsA", "mammal");
  Vector ortho = Vector::Unit(8, 0) - c[0] * c;
  ortho.normalize();
  auto at = [&](double s) {
    ObjectInstance o;
    o.raw = s * c + std::sqrt(1 - s * s) * ortho;
    return o;
  };
  const std::vector<ObjectInstance> mixed{at(0.8), at(0.4)};
  CHECK(estimate_mean_similarity(mixed, k, id, concepts) == doctest::Approx(0.6));
}

TEST_CASE("utility") {
  CHECK(utility(Mode::Confirmation, 0.9, 0.7, ctx(0.4)) == doctest::Approx(1.6));
  CHECK(utility(Mode::Exploration, 0.9, 0.7, ctx(0.4)) == doctest::Approx(1.4));
  CHECK(utility(Mode::Exploration, 0.1, -0.3, ctx(0.4)) == doctest::Approx(1.4));
  CHECK(utility(Mode::Confirmation, 0.3, 0.2, ctx(0.4)) <
        utility(Mode::Exploration, 0.3, 0.2, ctx(0.4)));
}

TEST_CASE("select_mode") {
  const auto c = select_mode(top(0.9, 0.7), ctx(0.4), 1);
  CHECK(c.mode == Mode::Confirmation);
  CHECK(c.target == MaskedTriplet::confirmation("IsA", "mammal"));

  const auto e = select_mode(top(0.3, 0.2), ctx(0.4), 1);
  CHECK(e.mode == Mode::Exploration);
  CHECK(e.target.tail_masked());
  CHECK(ctx(0.4).relation_dist.contains(e.target.relation));

  // 0.75 + 0.25 == 1 + 0.0 exactly in binary floating point.
  CHECK(select_mode(top(0.75, 0.25), ctx(0.0), 1).mode == Mode::Confirmation);
}

TEST_CASE("relation sampling matches the frequency distribution") {
  const PolicyContext c = ctx(0.0);
  std::map<std::string, double> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[sample_relation(c, derive_seed(3, 1, i))] += 1.0;
  double tv = 0.0;
  for (const auto& [r, p] : c.relation_dist) tv += std::abs(counts[r] / n - p);
  for (const auto& [r, k] : counts) {
    if (!c.relation_dist.contains(r)) tv += k / n;
  }
  CHECK(tv / 2.0 <= 0.03);
  CHECK(sample_relation(c, 77) == sample_relation(c, 77));
}

TEST_CASE("policies") {
  const PolicyContext c = ctx(0.4);
  const auto confident = top(0.99, 0.9);
  const auto unsure = top(0.2, 0.1);

  QuestionPolicy all_conf(PolicyKind::AllConf, c, 1);
  QuestionPolicy all_exp(PolicyKind::AllExp, c, 1);
  QuestionPolicy ours(PolicyKind::Ours, c, 1);
  for (std::uint64_t i = 0; i < 50; ++i) {
    CHECK(all_conf.decide(unsure, i).mode == Mode::Confirmation);
    CHECK(all_exp.decide(confident, i).mode == Mode::Exploration);
  }
  CHECK(ours.decide(confident, 0).mode == Mode::Confirmation);
  CHECK(ours.decide(unsure, 0).mode == Mode::Exploration);
  CHECK(forced_mode(Mode::Exploration, c, 1).decide(confident, 3).mode == Mode::Exploration);

  const QuestionPolicy r1 = random_policy(c, 42);
  const QuestionPolicy r2 = random_policy(c, 42);
  int conf = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto a = r1.decide(confident, static_cast<std::uint64_t>(i));
    const auto b = r2.decide(confident, static_cast<std::uint64_t>(i));
    CHECK(a.mode == b.mode);
    CHECK(a.target == b.target);
    if (a.mode == Mode::Confirmation) ++conf;
  }
  CHECK(std::abs(conf / static_cast<double>(n) - 0.5) <= 0.02);

  const std::vector<KnowledgePrediction> mostly_sure{confident, confident};
  const std::vector<KnowledgePrediction> mostly_unsure{unsure, unsure, confident};
  CHECK(QuestionPolicy::global_mode(mostly_sure, c) == Mode::Confirmation);
  CHECK(QuestionPolicy::global_mode(mostly_unsure, c) == Mode::Exploration);
  QuestionPolicy pinned(PolicyKind::Ours, c, 1);
  pinned.pin(Mode::Confirmation);
  CHECK(pinned.decide(unsure, 0).mode == Mode::Confirmation);
}

TEST_CASE("select_mode agrees with brute-force branch comparison") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u01(0.0, 1.0), u11(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double conf = u01(rng), sim = u11(rng), mean = u11(rng);
    const Mode expected = conf + sim >= 1.0 + mean ? Mode::Confirmation : Mode::Exploration;
    CHECK(select_mode(top(conf, sim), ctx(mean), static_cast<std::uint64_t>(i)).mode == expected);
  }
}
