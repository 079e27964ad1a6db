#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lba/geometry.hpp"
#include "lba/knowledge_store.hpp"
#include "lba/realizer.hpp"
#include "lba/world.hpp"

namespace lba {

/// Strict: a region passes only when IoBB exceeds this.
constexpr double kRegionThreshold = 0.4;

struct OracleConfig {
  double head_error = 0.02;  // epsilon: chance the head classifier answers a wrong label
};

struct GateReport {
  bool parsed = false;
  bool head_valid = false;
  bool relation_valid = false;
  bool region_valid = false;
  std::string predicted_head;
  std::string predicted_relation;
  std::optional<double> iobb;  // present iff the region parsed
  std::string reason;

  bool all_valid() const { return parsed && head_valid && relation_valid && region_valid; }
};

struct Rejection {
  GateReport gates;
};

struct Answer {
  std::vector<Triplet> triplets;  // may be empty: the question was valid but nothing matched
  GateReport gates;
};

using OracleResult = std::variant<Answer, Rejection>;

inline bool is_valid(const OracleResult& r) { return std::holds_alternative<Answer>(r); }

struct HeadGate {
  std::string predicted_head;
  bool valid = false;
};

/// Head classifier stand-in: the label of the image object whose box has the
/// highest IoBB against `claimed` (first object on ties), replaced by a
/// uniformly drawn wrong label with probability `epsilon`.
HeadGate head_gate(const World& world, int image, const RegionBox& claimed, int target_object,
                   double epsilon, std::uint64_t stream_seed);

inline bool relation_gate(std::string_view parsed, std::string_view target) {
  return parsed == target;
}

struct RegionGate {
  double iobb = 0.0;
  bool valid = false;
};

inline RegionGate region_gate(const RegionBox& predicted, const RegionBox& target) {
  const double v = iobb(predicted, target);
  return {v, v > kRegionThreshold};
}

/// Parses the surface, runs the head, relation and region gates, and on full
/// validity returns oracle triplets <h, r, *> for the target object's true
/// head. Confirmation answers are restricted to the asked tail.
OracleResult answer(const Question& q, const KnowledgeSource& oracle_kb, const World& world,
                    const OracleConfig& config, std::uint64_t stream_seed,
                    const TemplateBook& book = default_templates());

/// Human stand-in for the oracle. Shows the question, then reads either
/// `reject` or one `head<TAB>relation<TAB>tail` line; up to three malformed
/// lines are re-prompted before giving up. Returns nullopt if the input
/// stream closes.
std::optional<OracleResult> interactive_answer(const Question& q, const RelationVocabulary& vocab,
                                               std::istream& in, std::ostream& out,
                                               std::vector<std::string>* responses = nullptr);

/// One JSON object per line: question id, gate fields, returned triplets.
std::string audit_record(const Question& q, const OracleResult& result);

}  // namespace lba
