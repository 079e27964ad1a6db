#include <doctest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "lba/oracle.hpp"

using namespace lba;

namespace {

const RelationVocabulary& vocab() {
  static const RelationVocabulary v = RelationVocabulary::defaults();
  return v;
}

World scene() {
  KnowledgeSource kb;
  kb.insert(make_triplet(vocab(), "dog", "IsA", "mammal"));
  kb.insert(make_triplet(vocab(), "dog", "CapableOf", "barking"));
  kb.insert(make_triplet(vocab(), "cup", "UsedFor", "drinking"));
  kb.insert(make_triplet(vocab(), "cup", "MadeOf", "glass"));
  return lba::testing::tiny_world(
      kb, {{{"dog", {10, 10, 100, 100}}, {"cup", {300, 200, 80, 60}}}}, {"dog", "cup"});
}

Question ask(const World& w, int object, const MaskedTriplet& target, Mode mode) {
  return realize(target, w.object(object), w, mode, NoiseParams{0.0, 0.0}, 1, "q");
}

}  // namespace

TEST_CASE("iobb") {
  const RegionBox target{0, 0, 10, 10};
  CHECK(iobb(target, target) == 1.0);
  CHECK(iobb(RegionBox{20, 20, 5, 5}, target) == 0.0);
  CHECK(iobb(RegionBox{5, 0, 10, 10}, target) == 0.5);
  CHECK(iobb(RegionBox{10, 0, 5, 5}, target) == 0.0);
  CHECK(iobb(RegionBox{-50, -50, 500, 500}, target) == 1.0);
  CHECK(iobb(target, RegionBox{0, 0, 0, 5}) == 0.0);
}

TEST_CASE("iobb properties on random boxes") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0.0, 100.0), size(0.5, 60.0), shift(-500.0, 500.0);
  auto box = [&] { return RegionBox{pos(rng), pos(rng), size(rng), size(rng)}; };
  for (int i = 0; i < 1000; ++i) {
    const RegionBox a = box(), b = box();
    CHECK(iobb(a, a) == doctest::Approx(1.0));
    const double v = iobb(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    const double dx = shift(rng), dy = shift(rng);
    CHECK(iobb(RegionBox{a.x + dx, a.y + dy, a.w, a.h}, RegionBox{b.x + dx, b.y + dy, b.w, b.h}) ==
          doctest::Approx(v).epsilon(1e-9));
    const RegionBox far{b.x + b.w + 1.0 + size(rng), a.y, a.w, a.h};
    CHECK(iobb(far, b) == 0.0);
  }
}

TEST_CASE("gates") {
  CHECK(relation_gate("IsA", "IsA"));
  CHECK_FALSE(relation_gate("IsA", "UsedFor"));
  const RegionBox target{0, 0, 10, 10};
  CHECK(region_gate(RegionBox{5, 0, 10, 10}, target).valid);
  CHECK_FALSE(region_gate(RegionBox{6, 0, 10, 10}, target).valid);
  CHECK(region_gate(RegionBox{6, 0, 10, 10}, target).iobb == doctest::Approx(0.4));
  CHECK_FALSE(region_gate(RegionBox{0, 0, 4, 10}, target).valid);
  CHECK_FALSE(region_gate(RegionBox{50, 50, 4, 4}, target).valid);

  const World w = scene();
  CHECK(head_gate(w, 0, w.object(0).box, 0, 0.0, 1).valid);
  CHECK(head_gate(w, 0, w.object(0).box, 0, 0.0, 1).predicted_head == "dog");
  CHECK_FALSE(head_gate(w, 0, w.object(1).box, 0, 0.0, 1).valid);
  for (std::uint64_t s = 0; s < 50; ++s) CHECK_FALSE(head_gate(w, 0, w.object(0).box, 0, 1.0, s).valid);

  World empty = w;
  empty.images[0].objects.clear();
  CHECK_THROWS_AS(head_gate(empty, 0, w.object(0).box, 0, 0.0, 1), Error);
}

TEST_CASE("answer") {
  const World w = scene();
  const OracleConfig exact{0.0};

  SUBCASE("exploration returns every triplet for the relation") {
    const auto q = ask(w, 1, MaskedTriplet::exploration("UsedFor"), Mode::Exploration);
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE(is_valid(r));
    CHECK(std::get<Answer>(r).triplets ==
          std::vector<Triplet>{make_triplet(vocab(), "cup", "UsedFor", "drinking")});
  }
  SUBCASE("confirmation returns the asked triplet") {
    const auto q = ask(w, 0, MaskedTriplet::confirmation("IsA", "mammal"), Mode::Confirmation);
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE(is_valid(r));
    CHECK(std::get<Answer>(r).triplets ==
          std::vector<Triplet>{make_triplet(vocab(), "dog", "IsA", "mammal")});
    CHECK(std::get<Answer>(r).gates.all_valid());
  }
  SUBCASE("confirmation of a tail the head lacks is valid but empty") {
    const auto q = ask(w, 0, MaskedTriplet::confirmation("IsA", "reptile"), Mode::Confirmation);
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE(is_valid(r));
    CHECK(std::get<Answer>(r).triplets.empty());
  }
  SUBCASE("swapped region") {
    Question q = ask(w, 0, MaskedTriplet::confirmation("IsA", "mammal"), Mode::Confirmation);
    q.claimed_region = 2;
    q.claimed_box = w.object(1).box;
    q.surface = "What is the mammal in region r2?";
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE_FALSE(is_valid(r));
    const auto& g = std::get<Rejection>(r).gates;
    CHECK_FALSE(g.region_valid);
    CHECK_FALSE(g.head_valid);
    CHECK(g.iobb.has_value());
  }
  SUBCASE("swapped frame") {
    Question q = ask(w, 1, MaskedTriplet::exploration("UsedFor"), Mode::Exploration);
    q.surface = "What is the object in region r2 made of?";
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE_FALSE(is_valid(r));
    CHECK_FALSE(std::get<Rejection>(r).gates.relation_valid);
    CHECK(std::get<Rejection>(r).gates.region_valid);
  }
  SUBCASE("unparseable or unknown region") {
    Question q = ask(w, 1, MaskedTriplet::exploration("UsedFor"), Mode::Exploration);
    q.surface = "Gibberish?";
    const auto r = answer(q, w.oracle_kb, w, exact, 1);
    REQUIRE_FALSE(is_valid(r));
    CHECK_FALSE(std::get<Rejection>(r).gates.parsed);
    CHECK_FALSE(std::get<Rejection>(r).gates.iobb.has_value());
    q.surface = "What is the object in region r9 used for?";
    CHECK_FALSE(is_valid(answer(q, w.oracle_kb, w, exact, 1)));
  }
  SUBCASE("head noise") {
    const auto q = ask(w, 0, MaskedTriplet::confirmation("IsA", "mammal"), Mode::Confirmation);
    CHECK_FALSE(is_valid(answer(q, w.oracle_kb, w, OracleConfig{1.0}, 1)));
  }
}

TEST_CASE("noise-free oracle answers every generated question from its own knowledge") {
  const World w = generate(WorldConfig{.seed = 9, .heads = 40, .images = 80});
  const auto pairs = w.oracle_kb.pairs();
  std::mt19937_64 rng(2);
  for (const auto& o : w.objects) {
    for (Mode mode : {Mode::Confirmation, Mode::Exploration}) {
      const auto& [rel, tail] = pairs[rng() % pairs.size()];
      const MaskedTriplet target =
          mode == Mode::Confirmation ? MaskedTriplet::confirmation(rel, tail)
                                     : MaskedTriplet::exploration(rel);
      const auto q = realize(target, o, w, mode, NoiseParams{0.0, 0.0}, rng(), "q");
      const auto r = answer(q, w.oracle_kb, w, OracleConfig{0.0}, rng());
      REQUIRE(is_valid(r));
      for (const auto& t : std::get<Answer>(r).triplets) {
        CHECK(w.oracle_kb.contains(t));
        CHECK(t.head == o.truth_head);
        CHECK(t.relation == rel);
      }
    }
  }
}

TEST_CASE("interactive answers") {
  const World w = scene();
  const auto q = ask(w, 0, MaskedTriplet::confirmation("IsA", "mammal"), Mode::Confirmation);
  std::ostringstream out;

  std::istringstream typed("dog\tIsA\tmammal\n");
  const auto a = interactive_answer(q, vocab(), typed, out);
  REQUIRE(a);
  REQUIRE(is_valid(*a));
  CHECK(std::get<Answer>(*a).triplets ==
        std::vector<Triplet>{make_triplet(vocab(), "dog", "IsA", "mammal")});

  std::istringstream rej("reject\n");
  const auto b = interactive_answer(q, vocab(), rej, out);
  REQUIRE(b);
  CHECK_FALSE(is_valid(*b));

  std::istringstream junk("dog IsA mammal\ndog\tEats\tbone\nnope\ndog\tIsA\tmammal\n");
  std::vector<std::string> responses;
  const auto c = interactive_answer(q, vocab(), junk, out, &responses);
  REQUIRE(c);
  CHECK_FALSE(is_valid(*c));
  CHECK(responses.size() == 3);

  std::istringstream closed("");
  CHECK_FALSE(interactive_answer(q, vocab(), closed, out));
}

TEST_CASE("audit record") {
  const World w = scene();
  const auto q = ask(w, 0, MaskedTriplet::confirmation("IsA", "mammal"), Mode::Confirmation);
  const std::string rec = audit_record(q, answer(q, w.oracle_kb, w, OracleConfig{0.0}, 1));
  CHECK(rec.find(R"("valid":true)") != std::string::npos);
  CHECK(rec.find(R"("iobb":1.0)") != std::string::npos);
  CHECK(rec.find(R"("triplets":[["dog","IsA","mammal"]])") != std::string::npos);
}
