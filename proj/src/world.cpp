#include "lba/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

namespace lba {

namespace {

using json = nlohmann::json;

// Images per train and query split; the rest go to test.
std::pair<long, long> split_sizes(const WorldConfig& c) {
  return {std::max<long>(1, std::lround(c.images * c.train_fraction)),
          std::max<long>(1, std::lround(c.images * c.query_fraction))};
}

constexpr const char* kWorldFormat = "lba-world/1";

enum StreamTag : std::uint64_t {
  kNames = 1,
  kHeadSplit,
  kKnowledge,
  kConcepts,
  kImages,
  kFeatures,
};

class NameMaker {
 public:
  explicit NameMaker(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    static constexpr char kConsonants[] = "bdfgklmnprstvz";
    static constexpr char kVowels[] = "aeiou";
    std::uniform_int_distribution<int> syllables(2, 3);
    std::uniform_int_distribution<int> cons(0, sizeof(kConsonants) - 2);
    std::uniform_int_distribution<int> vow(0, sizeof(kVowels) - 2);
    while (true) {
      std::string s;
      const int n = syllables(rng_);
      for (int i = 0; i < n; ++i) {
        s.push_back(kConsonants[cons(rng_)]);
        s.push_back(kVowels[vow(rng_)]);
      }
      if (used_.insert(s).second) return s;
    }
  }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

}  // namespace

std::string region_ref(int region) { return "r" + std::to_string(region); }

std::vector<double> WorldConfig::default_relation_weights() {
  // UsedFor and IsA dominate; the remaining relations share the rest evenly.
  return {0.50, 0.25, 0.05, 0.05, 0.05, 0.05, 0.05};
}

int WorldConfig::novel_heads() const {
  return static_cast<int>(std::lround(heads * novel_fraction));
}

void WorldConfig::validate() const {
  if (dim < 1) throw Error("world config: dim must be >= 1");
  if (heads < 2) throw Error("world config: need at least 2 heads");
  if (relations.empty()) throw Error("world config: need at least 1 relation");
  if (relations.size() != relation_weights.size()) {
    throw Error("world config: relations and relation_weights differ in length");
  }
  double wsum = 0.0;
  for (double w : relation_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("world config: relation weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw Error("world config: relation weights sum to zero");
  if (!(novel_fraction > 0.0 && novel_fraction < 1.0)) {
    throw Error("world config: novel fraction must lie strictly between 0 and 1");
  }
  const int novel = novel_heads();
  if (novel < 1 || novel >= heads) {
    throw Error("world config: novel fraction yields " + std::to_string(novel) + " novel of " +
                std::to_string(heads) + " heads");
  }
  if (images < 3) throw Error("world config: need at least 3 images (one per split)");
  if (min_regions < 2 || max_regions < min_regions) {
    throw Error("world config: regions per image must satisfy 2 <= min <= max");
  }
  if (min_triplets < 1 || max_triplets < min_triplets) {
    throw Error("world config: triplets per head must satisfy 1 <= min <= max");
  }
  if (!(tail_share_probability >= 0.0 && tail_share_probability <= 1.0)) {
    throw Error("world config: tail share probability must lie in [0, 1]");
  }
  if (!(feature_noise >= 0.0)) throw Error("world config: feature noise must be >= 0");
  if (!(image_width > 0.0 && image_height > 0.0)) throw Error("world config: empty image frame");
  if (!(train_fraction > 0.0 && query_fraction > 0.0 && train_fraction + query_fraction < 1.0)) {
    throw Error("world config: train/query fractions must be positive and leave room for test");
  }
  if (!(novel_object_fraction > 0.0 && novel_object_fraction < 1.0)) {
    throw Error("world config: novel object fraction must lie strictly between 0 and 1");
  }
  const auto [n_train, n_query] = split_sizes(*this);
  if (n_train + n_query >= images) throw Error("world config: no images left for test");
  RelationVocabulary check(relations);
  (void)check;
}

std::vector<ObjectInstance> World::split(const std::vector<int>& ids) const {
  std::vector<ObjectInstance> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(object(id));
  return out;
}

World generate(const WorldConfig& config) {
  config.validate();

  World w;
  w.config = config;
  w.vocab = RelationVocabulary(config.relations);
  w.oracle_kb = KnowledgeSource(w.vocab);
  w.concept_seed = derive_seed(config.seed, kConcepts);

  NameMaker names(derive_seed(config.seed, kNames));
  for (int i = 0; i < config.heads; ++i) w.heads.push_back(names.next());

  std::sort(w.heads.begin(), w.heads.end());

  {
    std::mt19937_64 rng(derive_seed(config.seed, kHeadSplit));
    std::vector<std::string> shuffled = w.heads;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const int novel = config.novel_heads();
    w.novel_heads.insert(shuffled.begin(), shuffled.begin() + novel);
    w.known_heads.insert(shuffled.begin() + novel, shuffled.end());
  }

  {
    std::mt19937_64 rng(derive_seed(config.seed, kKnowledge));
    std::discrete_distribution<std::size_t> pick_rel(config.relation_weights.begin(),
                                                     config.relation_weights.end());
    std::uniform_int_distribution<int> count(config.min_triplets, config.max_triplets);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<std::string>> used(config.relations.size());
    for (const auto& head : w.heads) {
      const int n = count(rng);
      std::set<Triplet> mine;
      for (int attempt = 0; static_cast<int>(mine.size()) < n && attempt < 64 * n; ++attempt) {
        const std::size_t r = pick_rel(rng);
        auto& pool = used[r];
        std::string tail;
        if (!pool.empty() && unit(rng) < config.tail_share_probability) {
          tail = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        } else {
          tail = names.next();
          pool.push_back(tail);
        }
        mine.insert(make_triplet(w.vocab, head, config.relations[r], tail));
      }
      w.oracle_kb.merge(mine);
    }
  }

  const ConceptTable concepts = w.concepts();
  std::vector<std::string> known(w.known_heads.begin(), w.known_heads.end());
  std::vector<std::string> novel(w.novel_heads.begin(), w.novel_heads.end());

  std::mt19937_64 rng(derive_seed(config.seed, kImages));
  std::vector<int> order(static_cast<std::size_t>(config.images));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto [n_train, n_query] = split_sizes(config);
  enum class Split { Train, Query, Test };
  std::vector<Split> split_of(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto pos = static_cast<long>(i);
    split_of[static_cast<std::size_t>(order[i])] =
        pos < n_train ? Split::Train : (pos < n_train + n_query ? Split::Query : Split::Test);
  }

  std::mt19937_64 noise_rng(derive_seed(config.seed, kFeatures));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> regions(config.min_regions, config.max_regions);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double W = config.image_width;
  const double H = config.image_height;

  for (int img = 0; img < config.images; ++img) {
    Image image{img, W, H, {}};
    const Split split = split_of[static_cast<std::size_t>(img)];
    const int n = regions(rng);
    for (int k = 1; k <= n; ++k) {
      ObjectInstance obj;
      obj.id = static_cast<int>(w.objects.size());
      obj.image = img;
      obj.region = k;
      const bool is_novel = split != Split::Train && unit(rng) < config.novel_object_fraction;
      const auto& pool = is_novel ? novel : known;
      obj.truth_head = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      obj.box.w = W * (0.15 + 0.35 * unit(rng));
      obj.box.h = H * (0.15 + 0.35 * unit(rng));
      obj.box.x = (W - obj.box.w) * unit(rng);
      obj.box.y = (H - obj.box.h) * unit(rng);

      Vector sum = Vector::Zero(config.dim);
      for (const auto& t : w.oracle_kb.triplets_of(obj.truth_head)) sum += concepts.encode(t);
      if (config.feature_noise > 0.0) {
        for (int i = 0; i < config.dim; ++i) sum[i] += config.feature_noise * gauss(noise_rng);
      }
      obj.raw = sum / sum.norm();

      image.objects.push_back(obj.id);
      switch (split) {
        case Split::Train: w.train.push_back(obj.id); break;
        case Split::Query: w.query.push_back(obj.id); break;
        case Split::Test: w.test.push_back(obj.id); break;
      }
      w.objects.push_back(std::move(obj));
    }
    w.images.push_back(std::move(image));
  }
  return w;
}

KnowledgeSource train_knowledge(const World& world) {
  KnowledgeSource k(world.vocab);
  std::vector<Triplet> keep;
  for (const auto& t : world.oracle_kb.entries()) {
    if (world.known_heads.contains(t.head)) keep.push_back(t);
  }
  k.merge(std::span<const Triplet>(keep));
  return k;
}

namespace {

json config_to_json(const WorldConfig& c) {
  return json{{"seed", c.seed},
              {"dim", c.dim},
              {"heads", c.heads},
              {"novel_fraction", c.novel_fraction},
              {"images", c.images},
              {"min_regions", c.min_regions},
              {"max_regions", c.max_regions},
              {"min_triplets", c.min_triplets},
              {"max_triplets", c.max_triplets},
              {"tail_share_probability", c.tail_share_probability},
              {"feature_noise", c.feature_noise},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"train_fraction", c.train_fraction},
              {"query_fraction", c.query_fraction},
              {"novel_object_fraction", c.novel_object_fraction},
              {"relations", c.relations},
              {"relation_weights", c.relation_weights}};
}

WorldConfig config_from_json(const json& j) {
  WorldConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.dim = j.at("dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.novel_fraction = j.at("novel_fraction").get<double>();
  c.images = j.at("images").get<int>();
  c.min_regions = j.at("min_regions").get<int>();
  c.max_regions = j.at("max_regions").get<int>();
  c.min_triplets = j.at("min_triplets").get<int>();
  c.max_triplets = j.at("max_triplets").get<int>();
  c.tail_share_probability = j.at("tail_share_probability").get<double>();
  c.feature_noise = j.at("feature_noise").get<double>();
  c.image_width = j.at("image_width").get<double>();
  c.image_height = j.at("image_height").get<double>();
  c.train_fraction = j.at("train_fraction").get<double>();
  c.query_fraction = j.at("query_fraction").get<double>();
  c.novel_object_fraction = j.at("novel_object_fraction").get<double>();
  c.relations = j.at("relations").get<std::vector<std::string>>();
  c.relation_weights = j.at("relation_weights").get<std::vector<double>>();
  return c;
}

}  // namespace

void write_world(std::ostream& out, const World& w) {
  json doc;
  doc["format"] = kWorldFormat;
  doc["config"] = config_to_json(w.config);
  doc["concept_seed"] = w.concept_seed;
  doc["heads"] = w.heads;
  doc["known_heads"] = w.known_heads;
  doc["novel_heads"] = w.novel_heads;
  json images = json::array();
  for (const auto& img : w.images) {
    images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height},
                      {"objects", img.objects}});
  }
  doc["images"] = std::move(images);
  json objects = json::array();
  for (const auto& o : w.objects) {
    objects.push_back({{"id", o.id},
                       {"image", o.image},
                       {"region", o.region},
                       {"box", {o.box.x, o.box.y, o.box.w, o.box.h}},
                       {"head", o.truth_head},
                       {"raw", std::vector<double>(o.raw.data(), o.raw.data() + o.raw.size())}});
  }
  doc["objects"] = std::move(objects);
  json triplets = json::array();
  for (const auto& t : w.oracle_kb.entries()) triplets.push_back({t.head, t.relation, t.tail});
  doc["oracle_triplets"] = std::move(triplets);
  doc["splits"] = {{"train", w.train}, {"query", w.query}, {"test", w.test}};
  out << doc.dump(1) << '\n';
}

World read_world(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(std::string("world file: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kWorldFormat) {
      throw Error("world file: unsupported format '" + doc.at("format").get<std::string>() + "'");
    }
    World w;
    w.config = config_from_json(doc.at("config"));
    w.config.validate();
    w.vocab = RelationVocabulary(w.config.relations);
    w.oracle_kb = KnowledgeSource(w.vocab);
    w.concept_seed = doc.at("concept_seed").get<std::uint64_t>();
    w.heads = doc.at("heads").get<std::vector<std::string>>();
    w.known_heads = doc.at("known_heads").get<std::set<std::string>>();
    w.novel_heads = doc.at("novel_heads").get<std::set<std::string>>();
    for (const auto& j : doc.at("images")) {
      w.images.push_back({j.at("id").get<int>(), j.at("width").get<double>(),
                          j.at("height").get<double>(), j.at("objects").get<std::vector<int>>()});
    }
    for (const auto& j : doc.at("objects")) {
      ObjectInstance o;
      o.id = j.at("id").get<int>();
      o.image = j.at("image").get<int>();
      o.region = j.at("region").get<int>();
      const auto box = j.at("box").get<std::vector<double>>();
      if (box.size() != 4) throw Error("world file: object box needs 4 numbers");
      o.box = {box[0], box[1], box[2], box[3]};
      o.truth_head = j.at("head").get<std::string>();
      const auto raw = j.at("raw").get<std::vector<double>>();
      if (static_cast<int>(raw.size()) != w.config.dim) throw Error("world file: raw length != dim");
      o.raw = Eigen::Map<const Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
      if (o.id != static_cast<int>(w.objects.size())) throw Error("world file: object ids not dense");
      w.objects.push_back(std::move(o));
    }
    for (const auto& t : doc.at("oracle_triplets")) {
      w.oracle_kb.insert(make_triplet(w.vocab, t.at(0).get<std::string>(),
                                      t.at(1).get<std::string>(), t.at(2).get<std::string>()));
    }
    const auto& s = doc.at("splits");
    w.train = s.at("train").get<std::vector<int>>();
    w.query = s.at("query").get<std::vector<int>>();
    w.test = s.at("test").get<std::vector<int>>();
    for (const auto* ids : {&w.train, &w.query, &w.test}) {
      for (int id : *ids) {
        if (id < 0 || id >= static_cast<int>(w.objects.size())) {
          throw Error("world file: split references unknown object " + std::to_string(id));
        }
      }
    }
    return w;
  } catch (const json::exception& e) {
    throw Error(std::string("world file: ") + e.what());
  }
}

void save_world(const World& world, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_world(out, world);
}

World load_world(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open world file '" + path.string() + "'");
  return read_world(in);
}

}  // namespace lba
