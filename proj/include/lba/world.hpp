#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "lba/embedding.hpp"
#include "lba/geometry.hpp"
#include "lba/knowledge_store.hpp"

namespace lba {

struct ObjectInstance {
  int id = 0;
  int image = 0;
  int region = 0;  // 1-based index within the image; rendered as "r<region>"
  RegionBox box;
  std::string truth_head;
  Vector raw;
};

std::string region_ref(int region);

struct Image {
  int id = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<int> objects;  // ordered by region index
};

struct WorldConfig {
  std::uint64_t seed = 7;
  int dim = 32;
  int heads = 100;
  double novel_fraction = 0.1;
  int images = 345;
  int min_regions = 2;
  int max_regions = 5;
  int min_triplets = 1;
  int max_triplets = 4;
  /// Chance that a new triplet reuses a tail already drawn for the same
  /// relation instead of a fresh one.
  double tail_share_probability = 0.2;
  double feature_noise = 0.05;
  double image_width = 640.0;
  double image_height = 480.0;
  double train_fraction = 0.60;
  double query_fraction = 0.25;
  /// Share of query/test objects drawn from novel heads.
  double novel_object_fraction = 0.35;
  /// Relation names and sampling weights, parallel arrays.
  std::vector<std::string> relations = RelationVocabulary::defaults().names();
  std::vector<double> relation_weights = default_relation_weights();

  static std::vector<double> default_relation_weights();
  /// Throws Error describing the first infeasible setting.
  void validate() const;
  int novel_heads() const;
};

struct World {
  WorldConfig config;
  RelationVocabulary vocab;
  std::uint64_t concept_seed = 0;
  std::vector<std::string> heads;  // sorted
  std::set<std::string> known_heads;
  std::set<std::string> novel_heads;
  std::vector<Image> images;
  std::vector<ObjectInstance> objects;  // objects[i].id == i
  KnowledgeSource oracle_kb;
  std::vector<int> train;
  std::vector<int> query;
  std::vector<int> test;

  ConceptTable concepts() const { return ConceptTable(concept_seed, config.dim); }
  const ObjectInstance& object(int id) const { return objects.at(static_cast<std::size_t>(id)); }
  const Image& image(int id) const { return images.at(static_cast<std::size_t>(id)); }
  std::vector<ObjectInstance> split(const std::vector<int>& ids) const;
};

/// Pure function of the config (including its seed).
World generate(const WorldConfig& config);

/// Oracle triplets whose head is known: the classifier's starting knowledge.
KnowledgeSource train_knowledge(const World& world);

void write_world(std::ostream& out, const World& world);
World read_world(std::istream& in);
void save_world(const World& world, const std::filesystem::path& path);
World load_world(const std::filesystem::path& path);

}  // namespace lba
