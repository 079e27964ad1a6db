#include "lba/realizer.hpp"

#include <random>

#include <json.hpp>

namespace lba {

namespace {

constexpr std::uint64_t kCorruptTag = 0x434f5252;

std::string regex_escape(std::string_view s) {
  static const std::string special = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace

TemplateBook::TemplateBook()
    : TemplateBook({
          {"IsA", {"What is the {tail} {region}?", "What kind of thing is the object {region}?"}},
          {"UsedFor", {"What is used for {tail} {region}?", "What is the object {region} used for?"}},
          {"MadeOf", {"What is made of {tail} {region}?", "What is the object {region} made of?"}},
          {"AtLocation",
           {"What is typically found at {tail} {region}?",
            "Where is the object {region} typically found?"}},
          {"HasProperty",
           {"Which thing has the property {tail} {region}?",
            "What property does the object {region} have?"}},
          {"PartOf", {"What is a part of {tail} {region}?", "What is the object {region} a part of?"}},
          {"CapableOf",
           {"What is capable of {tail} {region}?", "What is the object {region} capable of?"}},
      }) {}

TemplateBook::TemplateBook(std::map<std::string, Frames> frames) : frames_(std::move(frames)) {
  for (const auto& [rel, f] : frames_) {
    for (Mode mode : {Mode::Confirmation, Mode::Exploration}) {
      const std::string& frame = mode == Mode::Confirmation ? f.confirmation : f.exploration;
      const auto region_at = frame.find("{region}");
      const auto tail_at = frame.find("{tail}");
      if (region_at == std::string::npos || frame.find("{region}", region_at + 1) != std::string::npos) {
        throw Error("template for " + rel + " needs exactly one {region} slot");
      }
      const bool want_tail = mode == Mode::Confirmation;
      if (want_tail != (tail_at != std::string::npos) ||
          (want_tail && frame.find("{tail}", tail_at + 1) != std::string::npos)) {
        throw Error("template for " + rel + " has the wrong number of {tail} slots");
      }
      std::string re = regex_escape(frame);
      re = replace_all(re, regex_escape("{region}"), "in region r([0-9]+)");
      re = replace_all(re, regex_escape("{tail}"), "(.+)");
      int tail_group = 0;
      int region_group = 1;
      if (want_tail) {
        tail_group = tail_at < region_at ? 1 : 2;
        region_group = tail_at < region_at ? 2 : 1;
      }
      patterns_.push_back({rel, mode, std::regex(re), tail_group, region_group});
    }
  }
}

const Frames& TemplateBook::templates(std::string_view relation) const {
  auto it = frames_.find(std::string(relation));
  if (it == frames_.end()) throw Error("no question template for relation '" + std::string(relation) + "'");
  return it->second;
}

bool TemplateBook::covers(const RelationVocabulary& vocab) const {
  for (const auto& r : vocab.names()) {
    if (!frames_.contains(r)) return false;
  }
  return true;
}

std::vector<std::string> TemplateBook::relations() const {
  std::vector<std::string> out;
  for (const auto& [r, _] : frames_) out.push_back(r);
  return out;
}

std::string TemplateBook::render(Mode mode, std::string_view relation,
                                 const std::optional<std::string>& tail, int region) const {
  const Frames& f = templates(relation);
  std::string s = mode == Mode::Confirmation ? f.confirmation : f.exploration;
  if (mode == Mode::Confirmation) {
    if (!tail) throw Error("confirmation question needs an unmasked tail");
    s = replace_all(s, "{tail}", *tail);
  }
  return replace_all(s, "{region}", "in region " + region_ref(region));
}

std::optional<ParsedQuestion> TemplateBook::parse(const std::string& surface) const {
  std::optional<ParsedQuestion> found;
  for (const auto& p : patterns_) {
    std::smatch m;
    if (!std::regex_match(surface, m, p.re)) continue;
    if (found) return std::nullopt;  // ambiguous
    ParsedQuestion q{p.mode, p.relation, std::nullopt, 0};
    if (p.tail_group) q.tail = normalize_text(m[p.tail_group].str());
    try {
      q.region = std::stoi(m[p.region_group].str());
    } catch (const std::exception&) {
      return std::nullopt;
    }
    found = std::move(q);
  }
  return found;
}

const TemplateBook& default_templates() {
  static const TemplateBook book;
  return book;
}

Question realize(const MaskedTriplet& target, const ObjectInstance& object, const World& world,
                 Mode mode, const NoiseParams& noise, std::uint64_t stream_seed, std::string id,
                 const TemplateBook& book) {
  if (mode == Mode::Confirmation && target.tail_masked()) {
    throw Error("confirmation target must have an unmasked tail");
  }
  if (mode == Mode::Exploration && !target.tail_masked()) {
    throw Error("exploration target must have a masked tail");
  }
  book.templates(target.relation);

  Question q;
  q.id = std::move(id);
  q.image = object.image;
  q.target_object = object.id;
  q.claimed_region = object.region;
  q.claimed_box = object.box;
  q.mode = mode;
  q.target = target;
  std::string relation = target.relation;

  std::mt19937_64 rng(derive_seed(stream_seed, kCorruptTag));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < noise.for_mode(mode)) {
    const Image& img = world.image(object.image);
    std::vector<int> others;
    for (int oid : img.objects) {
      if (oid != object.id) others.push_back(oid);
    }
    std::vector<std::string> relations;
    for (const auto& r : book.relations()) {
      if (r != target.relation) relations.push_back(r);
    }
    bool swap_region = std::bernoulli_distribution(0.5)(rng);
    if (others.empty()) swap_region = false;
    if (!swap_region && relations.empty()) swap_region = !others.empty();
    if (swap_region) {
      const ObjectInstance& other =
          world.object(others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)]);
      q.claimed_region = other.region;
      q.claimed_box = other.box;
      q.corrupted = true;
    } else if (!relations.empty()) {
      relation = relations[std::uniform_int_distribution<std::size_t>(0, relations.size() - 1)(rng)];
      q.corrupted = true;
    }
  }
  q.surface = book.render(mode, relation, target.tail, q.claimed_region);
  return q;
}

std::string question_record(const Question& q) {
  nlohmann::ordered_json j;
  j["id"] = q.id;
  j["image"] = q.image;
  j["region"] = region_ref(q.claimed_region);
  j["box"] = {q.claimed_box.x, q.claimed_box.y, q.claimed_box.w, q.claimed_box.h};
  j["mode"] = to_string(q.mode);
  j["relation"] = q.target.relation;
  j["tail"] = q.target.tail ? *q.target.tail : std::string("MASK");
  j["surface"] = q.surface;
  return j.dump();
}

}  // namespace lba
