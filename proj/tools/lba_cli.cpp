// lba: command-line driver for the learning-by-asking simulator.
//
//   lba gen-world --seed 7 --out world.json
//   lba train --world world.json --out proj.ckpt
//   lba run --world world.json --checkpoint proj.ckpt --policy ours --out run/
//   lba compare --world world.json --checkpoint proj.ckpt --seeds 7,13,29 --out cmp/
//   lba ask --interactive --world world.json --checkpoint proj.ckpt --out session/
//   lba --config lba.toml run ...
//
// Data goes to files and stdout; diagnostics go to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lba/harness.hpp"

namespace fs = std::filesystem;

namespace {

/// Everything a command can be configured with. Probabilities lie in [0, 1].
struct RunConfig {
  lba::WorldConfig world;
  std::string world_path;
  std::string checkpoint_path;
  std::uint64_t seed = 7;
  std::string policy = "ours";
  lba::NoiseParams noise;
  double head_eps = 0.02;
  int rounds = 1;
  bool global_mode = false;
  bool replay = false;
  lba::TrainOptions train;
  double init_noise = 0.3;
  double temperature = 10.0;
  lba::FineTuneOptions fine_tune;
  std::string out;
  std::vector<std::uint64_t> seeds;
  bool interactive = false;
  std::string replay_transcript;
  int limit = 0;
};


std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lba::Error("cannot open '" + path.string() + "' for writing");
  return out;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  fs::create_directories(p);
  return p;
}

lba::EpisodeConfig episode_config(const RunConfig& rc) {
  lba::EpisodeConfig cfg;
  cfg.policy = *lba::parse_policy(rc.policy);
  cfg.noise = rc.noise;
  cfg.oracle.head_error = rc.head_eps;
  cfg.seed = rc.seed;
  cfg.rounds = rc.rounds;
  cfg.global_mode = rc.global_mode;
  cfg.replay = rc.replay;
  cfg.fine_tune = rc.fine_tune;
  return cfg;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << l << '\n';
}

int cmd_gen_world(const RunConfig& rc) {
  lba::WorldConfig cfg = rc.world;
  cfg.seed = rc.seed;
  const lba::World world = lba::generate(cfg);
  const fs::path out = rc.out.empty() ? fs::path("world.json") : fs::path(rc.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  lba::save_world(world, out);
  std::cout << "heads " << world.heads.size() << "\n"
            << "known_heads " << world.known_heads.size() << "\n"
            << "novel_heads " << world.novel_heads.size() << "\n"
            << "images " << world.images.size() << "\n"
            << "objects " << world.objects.size() << "\n"
            << "triplets " << world.oracle_kb.size() << "\n"
            << "train_objects " << world.train.size() << "\n"
            << "query_objects " << world.query.size() << "\n"
            << "test_objects " << world.test.size() << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  const lba::World world = lba::load_world(rc.world_path);
  lba::Projection proj = lba::make_projection(world.config.dim, world.config.dim, rc.seed,
                                              rc.init_noise, rc.temperature);
  const lba::KnowledgeSource k = lba::train_knowledge(world);
  const auto data = lba::make_training_set(world.split(world.train), k, world.concepts());
  lba::TrainOptions opts = rc.train;
  opts.seed = rc.seed;
  const auto losses = lba::train(proj, data, opts);
  std::cout << std::setprecision(8);
  for (std::size_t e = 0; e < losses.size(); ++e) {
    std::cout << "epoch " << (e + 1) << " loss " << losses[e] << "\n";
  }
  const fs::path out = rc.out.empty() ? fs::path("projection.ckpt") : fs::path(rc.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  lba::save_projection(proj, out);
  return 0;
}

int cmd_run(const RunConfig& rc) {
  const lba::World world = lba::load_world(rc.world_path);
  const lba::Projection proj = lba::load_projection(rc.checkpoint_path);
  const auto result = lba::run_episode(world, proj, episode_config(rc));
  const auto& rep = result.report;

  const fs::path dir = ensure_dir(rc.out);
  const std::vector<lba::TableRow> rows{
      lba::to_row(rep, lba::row_label(*lba::parse_policy(rc.policy)))};
  {
    auto csv = open_out(dir / "report.csv");
    lba::write_table_csv(csv, rows);
    auto js = open_out(dir / "report.json");
    lba::write_table_json(js, rows);
  }
  write_lines(dir / "questions.jsonl", result.questions);
  write_lines(dir / "audit.jsonl", result.audit);
  lba::save(result.expanded, dir / "knowledge_plus.tsv");
  lba::write_table_csv(std::cout, rows);
  return 0;
}

int cmd_compare(const RunConfig& rc) {
  if (rc.seeds.size() < 3) {
    std::cerr << "compare: the random policy must run with at least 3 different seeds (got "
              << rc.seeds.size() << ")\n";
    return 1;
  }
  const lba::World world = lba::load_world(rc.world_path);
  const lba::Projection proj = lba::load_projection(rc.checkpoint_path);
  const auto rows = lba::compare_policies(world, proj, rc.seeds, episode_config(rc));
  const fs::path dir = ensure_dir(rc.out);
  {
    auto csv = open_out(dir / "comparison.csv");
    lba::write_table_csv(csv, rows);
    auto js = open_out(dir / "comparison.json");
    lba::write_table_json(js, rows);
  }
  lba::write_table_csv(std::cout, rows);
  return 0;
}

/// Responses recorded in a transcript, in question order, as one input stream.
std::string transcript_responses(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lba::Error("cannot open transcript '" + path.string() + "'");
  std::string out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      for (const auto& r : j.at("responses")) out += r.get<std::string>() + "\n";
    } catch (const nlohmann::json::exception& e) {
      throw lba::Error("transcript line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

int cmd_ask(const RunConfig& rc) {
  if (!rc.interactive && rc.replay_transcript.empty()) {
    std::cerr << "ask: pass --interactive or --replay-transcript\n";
    return 1;
  }
  const lba::World world = lba::load_world(rc.world_path);
  const lba::Projection proj = lba::load_projection(rc.checkpoint_path);
  const lba::ConceptTable concepts = world.concepts();
  const lba::KnowledgeSource initial = lba::train_knowledge(world);
  const auto train_set = world.split(world.train);
  lba::QuestionPolicy policy(*lba::parse_policy(rc.policy),
                             lba::make_context(train_set, initial, proj, concepts), rc.seed);

  std::istringstream replayed;
  std::istream* in = &std::cin;
  if (!rc.replay_transcript.empty()) {
    replayed.str(transcript_responses(rc.replay_transcript));
    in = &replayed;
  }
  // Prompts go to stderr so stdout stays free for data.
  std::ostream& prompt = std::cerr;

  const fs::path dir = ensure_dir(rc.out);
  auto transcript = open_out(dir / "transcript.jsonl");
  std::vector<lba::Triplet> accepted;
  const lba::KnowledgeScorer scorer(initial, concepts);
  auto query = world.split(world.query);
  if (rc.limit > 0 && static_cast<std::size_t>(rc.limit) < query.size()) {
    query.resize(static_cast<std::size_t>(rc.limit));
  }

  bool closed = false;
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto top = scorer.score_all(proj, query[i].raw).front();
    const auto d = policy.decide(top, i);
    // A human reads the question; realizer corruption is off.
    const auto q = lba::realize(d.target, query[i], world, d.mode, lba::NoiseParams{0.0, 0.0},
                                lba::derive_seed(rc.seed, 0x41534b, i), "h-" + std::to_string(i));
    std::vector<std::string> responses;
    const auto res = lba::interactive_answer(q, world.vocab, *in, prompt, &responses);

    nlohmann::ordered_json rec;
    rec["question"] = q.id;
    rec["object"] = q.target_object;
    rec["mode"] = lba::to_string(q.mode);
    rec["surface"] = q.surface;
    rec["responses"] = responses;
    if (!res) {
      rec["outcome"] = "closed";
      transcript << rec.dump() << '\n';
      closed = true;
      break;
    }
    auto triplets = nlohmann::ordered_json::array();
    if (const auto* a = std::get_if<lba::Answer>(&*res)) {
      ++n_valid;
      for (const auto& t : a->triplets) {
        accepted.push_back(t);
        triplets.push_back({t.head, t.relation, t.tail});
      }
      rec["outcome"] = "answered";
    } else {
      rec["outcome"] = "rejected";
    }
    rec["triplets"] = std::move(triplets);
    transcript << rec.dump() << '\n';
  }

  lba::KnowledgeSource expanded = initial;
  const auto stats = expanded.merge(std::span<const lba::Triplet>(accepted));
  lba::save(expanded, dir / "knowledge_plus.tsv");
  std::cout << "questions_answered " << n_valid << "\n"
            << "knowledge_added " << stats.added << "\n"
            << "knowledge_total " << expanded.size() << "\n";
  if (closed) {
    std::cerr << "ask: input closed mid-session; partial knowledge and transcript written\n";
    return 3;
  }
  return 0;
}

void add_world_flags(CLI::App* app, RunConfig& rc) {
  auto& w = rc.world;
  app->add_option("--dim", w.dim, "embedding dimension")->capture_default_str();
  app->add_option("--heads", w.heads, "number of object classes")->capture_default_str();
  app->add_option("--novel-fraction", w.novel_fraction, "share of heads held out as novel")
      ->capture_default_str();
  app->add_option("--images", w.images, "number of images")->capture_default_str();
  app->add_option("--min-regions", w.min_regions)->capture_default_str();
  app->add_option("--max-regions", w.max_regions)->capture_default_str();
  app->add_option("--min-triplets", w.min_triplets)->capture_default_str();
  app->add_option("--max-triplets", w.max_triplets)->capture_default_str();
  app->add_option("--tail-share", w.tail_share_probability,
                  "chance a triplet reuses an existing tail")
      ->capture_default_str();
  app->add_option("--feature-noise", w.feature_noise)->capture_default_str();
  app->add_option("--novel-object-fraction", w.novel_object_fraction,
                  "share of query/test objects with novel heads")
      ->capture_default_str();
  app->add_option("--train-fraction", w.train_fraction)->capture_default_str();
  app->add_option("--query-fraction", w.query_fraction)->capture_default_str();
}

void add_episode_flags(CLI::App* app, RunConfig& rc) {
  app->add_option("--world", rc.world_path, "world file")->required()->check(CLI::ExistingFile);
  app->add_option("--checkpoint", rc.checkpoint_path, "projection checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--policy", rc.policy, "question policy")
      ->check(CLI::IsMember(lba::policy_names()))
      ->capture_default_str();
  app->add_option("--p-conf", rc.noise.p_confirmation, "corruption rate of confirmation questions")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--p-exp", rc.noise.p_exploration, "corruption rate of exploration questions")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--head-eps", rc.head_eps, "head classifier error rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--rounds", rc.rounds, "questions per query object")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--global-mode", rc.global_mode, "ours: one mode for the whole query batch");
  app->add_flag("--replay", rc.replay, "fine-tune on the train split as well");
  app->add_option("--ft-epochs", rc.fine_tune.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--ft-lr", rc.fine_tune.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--ft-negatives", rc.fine_tune.negatives_per_positive,
                  "negatives per acquired positive")
      ->capture_default_str();
  app->add_option("--out", rc.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-by-asking knowledge acquisition simulator"};
  app.require_subcommand(1);
  // One [section] per command, e.g. [run] policy = "all-exp".
  app.set_config("--config", "", "TOML/INI file with flag values; flags override it");

  RunConfig rc;

  auto* gen = app.add_subcommand("gen-world", "generate a synthetic world");
  gen->add_option("--seed", rc.seed)->capture_default_str();
  gen->add_option("--out", rc.out, "world file (default world.json)");
  add_world_flags(gen, rc);

  auto* train = app.add_subcommand("train", "train the object projection on the train split");
  train->add_option("--world", rc.world_path, "world file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", rc.seed)->capture_default_str();
  train->add_option("--epochs", rc.train.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--lr", rc.train.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch-size", rc.train.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--negatives", rc.train.negatives, "negatives per example and epoch; 0 = all")
      ->capture_default_str();
  train->add_option("--init-noise", rc.init_noise)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--temperature", rc.temperature, "initial temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--out", rc.out, "checkpoint file (default projection.ckpt)");

  auto* run = app.add_subcommand("run", "run one knowledge-acquisition episode");
  run->add_option("--seed", rc.seed)->capture_default_str();
  add_episode_flags(run, rc);

  auto* cmp = app.add_subcommand("compare", "compare all policies against the baseline");
  cmp->add_option("--seeds", rc.seeds, "comma-separated seeds; at least 3")
      ->delimiter(',')
      ->required();
  add_episode_flags(cmp, rc);

  auto* ask = app.add_subcommand("ask", "answer generated questions yourself");
  ask->add_flag("--interactive", rc.interactive, "read answers from stdin");
  ask->add_option("--replay-transcript", rc.replay_transcript, "replay answers from a transcript")
      ->check(CLI::ExistingFile);
  ask->add_option("--limit", rc.limit, "ask about at most this many query objects")
      ->check(CLI::NonNegativeNumber);
  ask->add_option("--seed", rc.seed)->capture_default_str();
  ask->add_option("--world", rc.world_path, "world file")->required()->check(CLI::ExistingFile);
  ask->add_option("--checkpoint", rc.checkpoint_path, "projection checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ask->add_option("--policy", rc.policy)
      ->check(CLI::IsMember(lba::policy_names()))
      ->capture_default_str();
  ask->add_option("--out", rc.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_world(rc);
    if (*train) return cmd_train(rc);
    if (*run) return cmd_run(rc);
    if (*cmp) return cmd_compare(rc);
    if (*ask) return cmd_ask(rc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
