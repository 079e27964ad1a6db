#include "lba/oracle.hpp"

#include <istream>
#include <ostream>
#include <random>

#include <json.hpp>

namespace lba {

namespace {

constexpr std::uint64_t kHeadNoiseTag = 0x48454144;
constexpr int kInteractiveAttempts = 3;

}  // namespace

HeadGate head_gate(const World& world, int image, const RegionBox& claimed, int target_object,
                   double epsilon, std::uint64_t stream_seed) {
  const Image& img = world.image(image);
  if (img.objects.empty()) throw Error("head gate: image " + std::to_string(image) + " has no objects");

  // Highest IoBB wins; among boxes the claim fully covers, the one that
  // fills most of the claim.
  const ObjectInstance* best = nullptr;
  std::pair<double, double> best_score{-1.0, -1.0};
  for (int oid : img.objects) {
    const ObjectInstance& o = world.object(oid);
    const std::pair<double, double> score{iobb(claimed, o.box), iobb(o.box, claimed)};
    if (score > best_score) {
      best_score = score;
      best = &o;
    }
  }
  HeadGate g{best->truth_head, false};

  std::mt19937_64 rng(derive_seed(stream_seed, kHeadNoiseTag));
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    std::vector<const std::string*> wrong;
    for (const auto& h : world.heads) {
      if (h != g.predicted_head) wrong.push_back(&h);
    }
    if (!wrong.empty()) {
      g.predicted_head = *wrong[std::uniform_int_distribution<std::size_t>(0, wrong.size() - 1)(rng)];
    }
  }
  g.valid = g.predicted_head == world.object(target_object).truth_head;
  return g;
}

OracleResult answer(const Question& q, const KnowledgeSource& oracle_kb, const World& world,
                    const OracleConfig& config, std::uint64_t stream_seed,
                    const TemplateBook& book) {
  GateReport gates;
  const auto parsed = book.parse(q.surface);
  if (!parsed) {
    gates.reason = "no template frame matches the question";
    return Rejection{gates};
  }
  gates.parsed = true;
  gates.predicted_relation = parsed->relation;

  const Image& img = world.image(q.image);
  const ObjectInstance* claimed = nullptr;
  for (int oid : img.objects) {
    if (world.object(oid).region == parsed->region) claimed = &world.object(oid);
  }
  if (!claimed) {
    gates.parsed = false;
    gates.reason = "question names region " + region_ref(parsed->region) + " absent from the image";
    return Rejection{gates};
  }
  const ObjectInstance& target = world.object(q.target_object);

  try {
    const HeadGate hg = head_gate(world, q.image, claimed->box, q.target_object,
                                  config.head_error, stream_seed);
    gates.predicted_head = hg.predicted_head;
    gates.head_valid = hg.valid;
  } catch (const Error& e) {
    gates.reason = e.what();
    return Rejection{gates};
  }
  gates.relation_valid = relation_gate(parsed->relation, q.target.relation);
  const RegionGate rg = region_gate(claimed->box, target.box);
  gates.iobb = rg.iobb;
  gates.region_valid = rg.valid;

  if (!gates.all_valid()) {
    gates.reason = !gates.head_valid ? "head" : (!gates.relation_valid ? "relation" : "region");
    return Rejection{gates};
  }

  Answer a{{}, gates};
  if (parsed->tail) {
    const Triplet asked{target.truth_head, parsed->relation, *parsed->tail};
    if (oracle_kb.contains(asked)) a.triplets.push_back(asked);
  } else {
    for (const auto& t : oracle_kb.triplets_of(target.truth_head)) {
      if (t.relation == parsed->relation) a.triplets.push_back(t);
    }
  }
  return a;
}

std::optional<OracleResult> interactive_answer(const Question& q, const RelationVocabulary& vocab,
                                               std::istream& in, std::ostream& out,
                                               std::vector<std::string>* responses) {
  out << "[" << q.id << "] image " << q.image << ", region " << region_ref(q.claimed_region)
      << " (x=" << q.claimed_box.x << ", y=" << q.claimed_box.y << ", w=" << q.claimed_box.w
      << ", h=" << q.claimed_box.h << ")\n"
      << q.surface << "\n";
  GateReport manual;
  manual.parsed = true;
  for (int attempt = 0; attempt < kInteractiveAttempts; ++attempt) {
    out << "answer (head<TAB>relation<TAB>tail, or 'reject')> " << std::flush;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (responses) responses->push_back(line);
    if (normalize_text(line) == "reject") {
      manual.reason = "rejected by human";
      return OracleResult{Rejection{manual}};
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      out << "expected three tab-separated fields\n";
      continue;
    }
    try {
      Triplet t = make_triplet(vocab, fields[0], fields[1], fields[2]);
      manual.head_valid = manual.relation_valid = manual.region_valid = true;
      manual.predicted_head = t.head;
      manual.predicted_relation = t.relation;
      return OracleResult{Answer{{std::move(t)}, manual}};
    } catch (const Error& e) {
      out << e.what() << "\n";
    }
  }
  manual.reason = "too many malformed answers";
  return OracleResult{Rejection{manual}};
}

std::string audit_record(const Question& q, const OracleResult& result) {
  const GateReport& g = std::visit([](const auto& r) -> const GateReport& { return r.gates; }, result);
  nlohmann::ordered_json j;
  j["question"] = q.id;
  j["object"] = q.target_object;
  j["mode"] = to_string(q.mode);
  j["target"] = to_string(q.target);
  j["surface"] = q.surface;
  j["valid"] = is_valid(result);
  j["parsed"] = g.parsed;
  j["head_valid"] = g.head_valid;
  j["relation_valid"] = g.relation_valid;
  j["region_valid"] = g.region_valid;
  j["predicted_head"] = g.predicted_head;
  j["predicted_relation"] = g.predicted_relation;
  if (g.iobb) {
    j["iobb"] = *g.iobb;
  } else {
    j["iobb"] = nullptr;
  }
  j["reason"] = g.reason;
  auto triplets = nlohmann::ordered_json::array();
  if (const auto* a = std::get_if<Answer>(&result)) {
    for (const auto& t : a->triplets) triplets.push_back({t.head, t.relation, t.tail});
  }
  j["triplets"] = std::move(triplets);
  return j.dump();
}

}  // namespace lba
