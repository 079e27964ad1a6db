#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lba/common.hpp"

namespace lba {

/// Closed set of relation names. Lookups are case- and whitespace-insensitive
/// and always resolve to the spelling given at construction.
class RelationVocabulary {
 public:
  RelationVocabulary() = default;
  explicit RelationVocabulary(std::vector<std::string> names);

  /// UsedFor, IsA, MadeOf, AtLocation, HasProperty, PartOf, CapableOf.
  static RelationVocabulary defaults();

  std::optional<std::string> canonical(std::string_view name) const;
  bool contains(std::string_view name) const { return canonical(name).has_value(); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const RelationVocabulary&) const = default;

 private:
  std::vector<std::string> names_;
};

/// A knowledge item <head, relation, tail>. Ordering is lexicographic over
/// (head, relation, tail), which is also the canonical file order.
struct Triplet {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const Triplet&) const = default;
  bool operator==(const Triplet&) const = default;
};

/// Normalizes all fields and resolves the relation against `vocab`.
/// Throws Error naming the offending field.
Triplet make_triplet(const RelationVocabulary& vocab, std::string_view head,
                     std::string_view relation, std::string_view tail);

std::string to_string(const Triplet& t);

using RelationTail = std::pair<std::string, std::string>;

/// Question target with the head always masked: [MASK, r, t] or [MASK, r, MASK].
struct MaskedTriplet {
  std::string relation;
  std::optional<std::string> tail;

  static MaskedTriplet confirmation(std::string relation, std::string tail) {
    return {std::move(relation), std::move(tail)};
  }
  static MaskedTriplet exploration(std::string relation) {
    return {std::move(relation), std::nullopt};
  }

  bool tail_masked() const { return !tail.has_value(); }
  bool operator==(const MaskedTriplet&) const = default;
};

std::string to_string(const MaskedTriplet& m);

struct MergeStats {
  std::size_t added = 0;
  std::size_t duplicates = 0;
};

/// The classifier's knowledge source K: a set of triplets plus two indexes,
/// (relation, tail) -> heads and head -> triplets.
///
/// Reads are safe to share between threads; insert and merge need exclusive
/// access.
class KnowledgeSource {
 public:
  KnowledgeSource() : KnowledgeSource(RelationVocabulary::defaults()) {}
  explicit KnowledgeSource(RelationVocabulary vocab);

  /// Returns true iff `t` was not present. Throws Error on a malformed triplet.
  bool insert(const Triplet& t);

  /// K+ = K u acquired. All triplets are validated before any is inserted.
  MergeStats merge(std::span<const Triplet> acquired);
  MergeStats merge(const std::set<Triplet>& acquired);

  std::set<std::string> lookup_heads(std::string_view relation,
                                     std::string_view tail) const;
  std::vector<Triplet> match(const MaskedTriplet& pattern) const;

  /// count(relation) / |entries|. Throws on an empty source.
  std::map<std::string, double> relation_frequencies() const;

  bool contains(const Triplet& t) const { return entries_.contains(t); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const std::set<Triplet>& entries() const { return entries_; }
  const RelationVocabulary& vocabulary() const { return vocab_; }

  std::set<std::string> heads() const;
  /// Triplets with this head; empty set when the head is unknown.
  const std::set<Triplet>& triplets_of(std::string_view head) const;
  /// Distinct (relation, tail) pairs in canonical order.
  std::vector<RelationTail> pairs() const;
  bool has_pair(std::string_view relation, std::string_view tail) const;

  /// Rebuilds both indexes from entries and compares. Test hook.
  bool indexes_coherent() const;

 private:
  Triplet validated(const Triplet& t) const;
  void index(const Triplet& t);

  RelationVocabulary vocab_;
  std::set<Triplet> entries_;
  std::map<RelationTail, std::set<std::string>> index_rt_;
  std::map<std::string, std::set<Triplet>, std::less<>> index_head_;
};

/// Triplet line format: `head<TAB>relation<TAB>tail`, LF, canonical order,
/// `#` lines are comments.
void write_triplets(std::ostream& out, const KnowledgeSource& source);
void save(const KnowledgeSource& source, const std::filesystem::path& path);

struct LoadedKnowledge {
  KnowledgeSource source;
  std::size_t duplicates = 0;
};

LoadedKnowledge read_triplets(std::istream& in, const RelationVocabulary& vocab);
LoadedKnowledge load(const std::filesystem::path& path,
                     const RelationVocabulary& vocab = RelationVocabulary::defaults());

}  // namespace lba
