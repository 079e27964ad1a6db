// Hand-built worlds small enough to reason about in a test.
#pragma once

#include <string>
#include <vector>

#include "lba/world.hpp"

namespace lba::testing {

struct ObjectSpec {
  std::string head;
  RegionBox box;
};

/// One image per entry of `images`; every object's raw feature is the
/// normalized sum of its head's concept vectors in `kb`.
inline World tiny_world(const KnowledgeSource& kb, const std::vector<std::vector<ObjectSpec>>& images,
                        const std::set<std::string>& known, int dim = 16) {
  World w;
  w.config.dim = dim;
  w.vocab = kb.vocabulary();
  w.concept_seed = 99;
  w.oracle_kb = kb;
  const ConceptTable concepts = w.concepts();
  for (const auto& h : kb.heads()) {
    w.heads.push_back(h);
    (known.contains(h) ? w.known_heads : w.novel_heads).insert(h);
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    Image img{static_cast<int>(i), 640.0, 480.0, {}};
    int region = 0;
    for (const auto& spec : images[i]) {
      ObjectInstance o;
      o.id = static_cast<int>(w.objects.size());
      o.image = img.id;
      o.region = ++region;
      o.box = spec.box;
      o.truth_head = spec.head;
      o.raw = Vector::Zero(dim);
      for (const auto& t : kb.triplets_of(spec.head)) o.raw += concepts.encode(t);
      o.raw.normalize();
      img.objects.push_back(o.id);
      w.query.push_back(o.id);
      w.objects.push_back(std::move(o));
    }
    w.images.push_back(std::move(img));
  }
  return w;
}

}  // namespace lba::testing
