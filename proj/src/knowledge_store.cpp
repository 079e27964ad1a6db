#include "lba/knowledge_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lba {

RelationVocabulary::RelationVocabulary(std::vector<std::string> names)
    : names_(std::move(names)) {
  for (const auto& n : names_) {
    if (normalize_text(n).empty()) throw Error("relation vocabulary: empty relation name");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (normalize_text(names_[i]) == normalize_text(names_[j])) {
        throw Error("relation vocabulary: duplicate relation '" + names_[i] + "'");
      }
    }
  }
}

RelationVocabulary RelationVocabulary::defaults() {
  return RelationVocabulary({"UsedFor", "IsA", "MadeOf", "AtLocation", "HasProperty",
                             "PartOf", "CapableOf"});
}

std::optional<std::string> RelationVocabulary::canonical(std::string_view name) const {
  const std::string key = normalize_text(name);
  for (const auto& n : names_) {
    if (normalize_text(n) == key) return n;
  }
  return std::nullopt;
}

Triplet make_triplet(const RelationVocabulary& vocab, std::string_view head,
                     std::string_view relation, std::string_view tail) {
  Triplet t{normalize_text(head), normalize_text(relation), normalize_text(tail)};
  if (t.head.empty()) throw Error("malformed triplet: empty head");
  if (t.relation.empty()) throw Error("malformed triplet: empty relation");
  if (t.tail.empty()) throw Error("malformed triplet: empty tail");
  auto rel = vocab.canonical(relation);
  if (!rel) throw Error("malformed triplet: unknown relation '" + std::string(relation) + "'");
  t.relation = *rel;
  return t;
}

std::string to_string(const Triplet& t) {
  return "<" + t.head + ", " + t.relation + ", " + t.tail + ">";
}

std::string to_string(const MaskedTriplet& m) {
  return "[MASK, " + m.relation + ", " + (m.tail ? *m.tail : std::string("MASK")) + "]";
}

KnowledgeSource::KnowledgeSource(RelationVocabulary vocab) : vocab_(std::move(vocab)) {}

Triplet KnowledgeSource::validated(const Triplet& t) const {
  return make_triplet(vocab_, t.head, t.relation, t.tail);
}

void KnowledgeSource::index(const Triplet& t) {
  index_rt_[{t.relation, t.tail}].insert(t.head);
  index_head_[t.head].insert(t);
}

bool KnowledgeSource::insert(const Triplet& t) {
  Triplet v = validated(t);
  auto [it, inserted] = entries_.insert(v);
  if (inserted) index(*it);
  return inserted;
}

MergeStats KnowledgeSource::merge(std::span<const Triplet> acquired) {
  std::vector<Triplet> checked;
  checked.reserve(acquired.size());
  for (const auto& t : acquired) checked.push_back(validated(t));

  MergeStats stats;
  for (auto& t : checked) {
    if (insert(t)) {
      ++stats.added;
    } else {
      ++stats.duplicates;
    }
  }
  return stats;
}

MergeStats KnowledgeSource::merge(const std::set<Triplet>& acquired) {
  std::vector<Triplet> v(acquired.begin(), acquired.end());
  return merge(std::span<const Triplet>(v));
}

std::set<std::string> KnowledgeSource::lookup_heads(std::string_view relation,
                                                    std::string_view tail) const {
  auto rel = vocab_.canonical(relation);
  if (!rel) return {};
  auto it = index_rt_.find({*rel, normalize_text(tail)});
  if (it == index_rt_.end()) return {};
  return it->second;
}

std::vector<Triplet> KnowledgeSource::match(const MaskedTriplet& pattern) const {
  std::vector<Triplet> out;
  auto rel = vocab_.canonical(pattern.relation);
  if (!rel) return out;
  if (pattern.tail) {
    const std::string tail = normalize_text(*pattern.tail);
    for (const auto& h : lookup_heads(*rel, tail)) out.push_back({h, *rel, tail});
    return out;
  }
  for (const auto& t : entries_) {
    if (t.relation == *rel) out.push_back(t);
  }
  return out;
}

std::map<std::string, double> KnowledgeSource::relation_frequencies() const {
  if (entries_.empty()) throw Error("relation frequencies undefined for an empty knowledge source");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : entries_) ++counts[t.relation];
  std::map<std::string, double> freq;
  const double n = static_cast<double>(entries_.size());
  for (const auto& [rel, c] : counts) freq[rel] = static_cast<double>(c) / n;
  return freq;
}

std::set<std::string> KnowledgeSource::heads() const {
  std::set<std::string> out;
  for (const auto& [h, _] : index_head_) out.insert(h);
  return out;
}

const std::set<Triplet>& KnowledgeSource::triplets_of(std::string_view head) const {
  static const std::set<Triplet> kEmpty;
  auto it = index_head_.find(normalize_text(head));
  return it == index_head_.end() ? kEmpty : it->second;
}

std::vector<RelationTail> KnowledgeSource::pairs() const {
  std::vector<RelationTail> out;
  out.reserve(index_rt_.size());
  for (const auto& [rt, _] : index_rt_) out.push_back(rt);
  return out;
}

bool KnowledgeSource::has_pair(std::string_view relation, std::string_view tail) const {
  return !lookup_heads(relation, tail).empty();
}

bool KnowledgeSource::indexes_coherent() const {
  std::map<RelationTail, std::set<std::string>> rt;
  std::map<std::string, std::set<Triplet>, std::less<>> by_head;
  for (const auto& t : entries_) {
    rt[{t.relation, t.tail}].insert(t.head);
    by_head[t.head].insert(t);
  }
  return rt == index_rt_ && by_head == index_head_;
}

void write_triplets(std::ostream& out, const KnowledgeSource& source) {
  for (const auto& t : source.entries()) {
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
}

void save(const KnowledgeSource& source, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_triplets(out, source);
  if (!out) throw Error("write failed: '" + path.string() + "'");
}

LoadedKnowledge read_triplets(std::istream& in, const RelationVocabulary& vocab) {
  LoadedKnowledge result{KnowledgeSource(vocab), 0};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw Error("line " + std::to_string(lineno) + ": expected 3 tab-separated fields, got " +
                  std::to_string(fields.size()));
    }
    try {
      if (!result.source.insert(make_triplet(vocab, fields[0], fields[1], fields[2]))) {
        ++result.duplicates;
      }
    } catch (const Error& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return result;
}

LoadedKnowledge load(const std::filesystem::path& path, const RelationVocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open triplet file '" + path.string() + "'");
  return read_triplets(in, vocab);
}

}  // namespace lba
