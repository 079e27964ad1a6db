#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "lba/knowledge_store.hpp"
#include "lba/policy.hpp"
#include "lba/world.hpp"

namespace lba {

/// Per-relation surface frames. `{region}` expands to "in region r<k>";
/// confirmation frames also carry a `{tail}` slot.
struct Frames {
  std::string confirmation;
  std::string exploration;
};

struct NoiseParams {
  double p_confirmation = 0.05;
  double p_exploration = 0.45;

  double for_mode(Mode m) const {
    return m == Mode::Confirmation ? p_confirmation : p_exploration;
  }
};

struct Question {
  std::string id;
  int image = 0;
  int target_object = 0;  // the object the question is meant to be about
  int claimed_region = 0;
  RegionBox claimed_box;
  Mode mode = Mode::Confirmation;
  MaskedTriplet target;
  std::string surface;
  bool corrupted = false;  // ground truth for tests; the oracle never reads it
};

struct ParsedQuestion {
  Mode mode;
  std::string relation;
  std::optional<std::string> tail;
  int region;

  bool operator==(const ParsedQuestion&) const = default;
};

/// Closed template grammar shared by the realizer and the oracle's parser.
class TemplateBook {
 public:
  /// Frames for every relation of RelationVocabulary::defaults().
  TemplateBook();
  explicit TemplateBook(std::map<std::string, Frames> frames);

  /// Throws Error for a relation without frames.
  const Frames& templates(std::string_view relation) const;
  bool covers(const RelationVocabulary& vocab) const;
  std::vector<std::string> relations() const;

  std::string render(Mode mode, std::string_view relation, const std::optional<std::string>& tail,
                     int region) const;

  /// The unique frame matching `surface`, with its slots; nullopt when no
  /// frame or more than one frame matches.
  std::optional<ParsedQuestion> parse(const std::string& surface) const;

 private:
  struct Pattern {
    std::string relation;
    Mode mode;
    std::regex re;
    int tail_group;
    int region_group;
  };

  std::map<std::string, Frames> frames_;
  std::vector<Pattern> patterns_;
};

const TemplateBook& default_templates();

/// Renders `target` about `object`. With probability noise.for_mode(mode) the
/// question is corrupted: with equal odds the claimed region moves to another
/// region of the same image, or the frame of another relation is used.
/// The target itself is never altered.
Question realize(const MaskedTriplet& target, const ObjectInstance& object, const World& world,
                 Mode mode, const NoiseParams& noise, std::uint64_t stream_seed,
                 std::string id, const TemplateBook& book = default_templates());

/// One JSON object per line: id, image, region, box, mode, relation, tail, surface.
std::string question_record(const Question& q);

}  // namespace lba
