#include "lba/harness.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace lba {

namespace {

constexpr std::uint64_t kRealizeTag = 0x5245414c;
constexpr std::uint64_t kOracleTag = 0x4f52434c;
constexpr std::uint64_t kFineTuneTag = 0x46494e45;

std::string question_id(int round, std::size_t index) {
  std::ostringstream s;
  s << 'q' << round << '-' << std::setw(5) << std::setfill('0') << index;
  return s.str();
}

bool same(const AccuracyReport& a, const AccuracyReport& b) {
  return a.overall == b.overall && a.known == b.known && a.novel == b.novel &&
         a.n_known == b.n_known && a.n_novel == b.n_novel;
}

}  // namespace

bool EpisodeReport::operator==(const EpisodeReport& o) const {
  if (fine_tuned.has_value() != o.fine_tuned.has_value()) return false;
  if (fine_tuned && !same(*fine_tuned, *o.fine_tuned)) return false;
  return policy == o.policy && same(zero_shot, o.zero_shot) && n_questions == o.n_questions &&
         n_valid_q == o.n_valid_q && n_knowledge == o.n_knowledge && seed == o.seed;
}

EpisodeReport run_baseline(const World& world, const Projection& proj) {
  const KnowledgeSource k = train_knowledge(world);
  const auto test = world.split(world.test);
  EpisodeReport r;
  r.policy = "baseline";
  r.zero_shot = evaluate(test, k, proj, world.concepts(), world.known_heads);
  return r;
}

EpisodeResult run_episode(const World& world, const Projection& proj, const EpisodeConfig& config) {
  if (config.rounds < 1) throw Error("episode needs at least one round");
  const ConceptTable concepts = world.concepts();
  const KnowledgeSource initial = train_knowledge(world);
  const auto train_set = world.split(world.train);
  const auto query = world.split(world.query);
  const auto test = world.split(world.test);

  QuestionPolicy policy(config.policy, make_context(train_set, initial, proj, concepts), config.seed);

  EpisodeResult result{{}, initial, {}, {}, {}};
  EpisodeReport& rep = result.report;
  rep.policy = std::string(to_string(config.policy));
  rep.seed = config.seed;

  for (int round = 0; round < config.rounds; ++round) {
    // Read-only phase: every question of the round is scored against the
    // same K+ snapshot.
    std::vector<Triplet> acquired;
    {
      const KnowledgeScorer scorer(result.expanded, concepts);
      std::vector<KnowledgePrediction> tops;
      tops.reserve(query.size());
      for (const auto& obj : query) tops.push_back(scorer.score_all(proj, obj.raw).front());
      if (config.global_mode && config.policy == PolicyKind::Ours) {
        policy.pin(QuestionPolicy::global_mode(tops, policy.context()));
      }

      for (std::size_t i = 0; i < query.size(); ++i) {
        const auto instance = static_cast<std::uint64_t>(round) * query.size() + i;
        const Decision d = policy.decide(tops[i], instance);
        const Question q =
            realize(d.target, query[i], world, d.mode, config.noise,
                    derive_seed(config.seed, kRealizeTag, instance), question_id(round, i));
        OracleResult res = Rejection{};
        try {
          res = answer(q, world.oracle_kb, world, config.oracle,
                       derive_seed(config.seed, kOracleTag, instance));
        } catch (const Error& e) {
          GateReport g;
          g.reason = e.what();
          res = Rejection{g};
        }
        ++rep.n_questions;
        if (const auto* a = std::get_if<Answer>(&res)) {
          ++rep.n_valid_q;
          for (const auto& t : a->triplets) {
            acquired.push_back(t);
            result.acquired.push_back({query[i], t});
          }
        }
        result.questions.push_back(question_record(q));
        result.audit.push_back(audit_record(q, res));
      }
    }
    // Single-writer expansion phase.
    result.expanded.merge(std::span<const Triplet>(acquired));
  }

  for (const auto& t : result.expanded.entries()) {
    if (!initial.contains(t)) ++rep.n_knowledge;
  }

  const Projection frozen = proj;
  rep.zero_shot = evaluate(test, result.expanded, proj, concepts, world.known_heads);
  if (!(frozen == proj)) throw Error("projection changed during zero-shot evaluation");

  if (result.acquired.empty()) {
    rep.fine_tuned = rep.zero_shot;
    return result;
  }
  std::vector<AcquiredPair> pairs = result.acquired;
  if (config.replay) {
    for (const auto& obj : train_set) {
      for (const auto& t : initial.triplets_of(obj.truth_head)) pairs.push_back({obj, t});
    }
  }
  Projection tuned = proj;
  FineTuneOptions ft = config.fine_tune;
  ft.seed = derive_seed(config.seed, kFineTuneTag);
  fine_tune(tuned, pairs, result.expanded, concepts, ft);
  rep.fine_tuned = evaluate(test, result.expanded, tuned, concepts, world.known_heads);
  return result;
}

std::string row_label(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::AllConf: return "All Conf.";
    case PolicyKind::AllExp: return "All Exp.";
    case PolicyKind::Random: return "Random";
    case PolicyKind::Ours: return "Ours";
  }
  return "?";
}

TableRow to_row(const EpisodeReport& r, std::string label) {
  return aggregate(std::span<const EpisodeReport>(&r, 1), std::move(label));
}

TableRow aggregate(std::span<const EpisodeReport> reports, std::string label) {
  if (reports.empty()) throw Error("aggregate: no reports");
  const bool spread = reports.size() > 1;
  auto stat = [&](auto get) {
    double mean = 0.0;
    for (const auto& r : reports) mean += get(r);
    mean /= static_cast<double>(reports.size());
    Stat s{mean, std::nullopt};
    if (spread) {
      double ss = 0.0;
      for (const auto& r : reports) ss += (get(r) - mean) * (get(r) - mean);
      s.stddev = std::sqrt(ss / static_cast<double>(reports.size() - 1));
    }
    return s;
  };
  TableRow row;
  row.label = std::move(label);
  row.policy = reports.front().policy;
  row.overall_zs = stat([](const EpisodeReport& r) { return r.zero_shot.overall; });
  row.known_zs = stat([](const EpisodeReport& r) { return r.zero_shot.known; });
  row.novel_zs = stat([](const EpisodeReport& r) { return r.zero_shot.novel; });
  if (reports.front().fine_tuned) {
    row.overall_ft = stat([](const EpisodeReport& r) { return r.fine_tuned->overall; });
    row.known_ft = stat([](const EpisodeReport& r) { return r.fine_tuned->known; });
    row.novel_ft = stat([](const EpisodeReport& r) { return r.fine_tuned->novel; });
  }
  row.n_valid_q = stat([](const EpisodeReport& r) { return static_cast<double>(r.n_valid_q); });
  row.n_knowledge = stat([](const EpisodeReport& r) { return static_cast<double>(r.n_knowledge); });
  for (const auto& r : reports) row.seeds.push_back(r.seed);
  return row;
}

std::vector<TableRow> compare_policies(const World& world, const Projection& proj,
                                       std::span<const std::uint64_t> seeds,
                                       const EpisodeConfig& base) {
  if (seeds.size() < 3) {
    throw Error("compare needs at least 3 seeds: the random policy is run once per seed");
  }
  std::vector<TableRow> rows;
  EpisodeReport baseline = run_baseline(world, proj);
  baseline.seed = seeds.front();
  rows.push_back(to_row(baseline, kBaselineLabel));

  auto run = [&](PolicyKind kind, std::uint64_t seed) {
    EpisodeConfig cfg = base;
    cfg.policy = kind;
    cfg.seed = seed;
    return run_episode(world, proj, cfg).report;
  };
  rows.push_back(to_row(run(PolicyKind::AllConf, seeds.front()), row_label(PolicyKind::AllConf)));
  rows.push_back(to_row(run(PolicyKind::AllExp, seeds.front()), row_label(PolicyKind::AllExp)));
  std::vector<EpisodeReport> random_runs;
  for (auto s : seeds) random_runs.push_back(run(PolicyKind::Random, s));
  rows.push_back(aggregate(random_runs, row_label(PolicyKind::Random)));
  rows.push_back(to_row(run(PolicyKind::Ours, seeds.front()), row_label(PolicyKind::Ours)));
  return rows;
}

namespace {

std::string cell(const Stat& s, int precision) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(precision) << s.mean;
  if (s.stddev) o << "±" << std::setprecision(precision) << *s.stddev;
  return o.str();
}

std::string cell(const std::optional<Stat>& s, int precision) {
  return s ? cell(*s, precision) : std::string("-");
}

std::string seeds_cell(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(seeds[i]);
  }
  return out;
}

nlohmann::ordered_json stat_json(const Stat& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  if (s.stddev) j["std"] = *s.stddev;
  return j;
}

nlohmann::ordered_json stat_json(const std::optional<Stat>& s) {
  return s ? stat_json(*s) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void write_table_csv(std::ostream& out, std::span<const TableRow> rows) {
  out << "policy,overall_zs,overall_ft,known_zs,known_ft,novel_zs,novel_ft,n_valid_q,n_knowledge,seeds\n";
  for (const auto& r : rows) {
    out << r.label << ',' << cell(r.overall_zs, 4) << ',' << cell(r.overall_ft, 4) << ','
        << cell(r.known_zs, 4) << ',' << cell(r.known_ft, 4) << ',' << cell(r.novel_zs, 4) << ','
        << cell(r.novel_ft, 4) << ',' << cell(r.n_valid_q, r.n_valid_q.stddev ? 2 : 0) << ','
        << cell(r.n_knowledge, r.n_knowledge.stddev ? 2 : 0) << ',' << seeds_cell(r.seeds) << '\n';
  }
}

void write_table_json(std::ostream& out, std::span<const TableRow> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["policy"] = r.label;
    j["overall_zs"] = stat_json(r.overall_zs);
    j["overall_ft"] = stat_json(r.overall_ft);
    j["known_zs"] = stat_json(r.known_zs);
    j["known_ft"] = stat_json(r.known_ft);
    j["novel_zs"] = stat_json(r.novel_zs);
    j["novel_ft"] = stat_json(r.novel_ft);
    j["n_valid_q"] = stat_json(r.n_valid_q);
    j["n_knowledge"] = stat_json(r.n_knowledge);
    j["seeds"] = r.seeds;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["rows"] = std::move(arr);
  out << doc.dump(2) << '\n';
}

}  // namespace lba
