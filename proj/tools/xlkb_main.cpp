// Command-line front end for the cross-lingual KB retrieval toolkit:
// split / mine / augment / train / eval / bench / ablate.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xlkb/ablation.hpp"
#include "xlkb/adapter.hpp"
#include "xlkb/benchmark.hpp"
#include "xlkb/common.hpp"
#include "xlkb/embedder.hpp"
#include "xlkb/kb.hpp"
#include "xlkb/label_sim.hpp"
#include "xlkb/manifest.hpp"
#include "xlkb/pair_miner.hpp"
#include "xlkb/retrieval.hpp"
#include "xlkb/text_gen.hpp"
#include "xlkb/trainer.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config file support: one JSON document with per-command sections; values
// fill in flags the user did not pass explicitly (flags always win).

json load_config_doc(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(xlkb::read_file(path));
  } catch (const json::exception& e) {
    throw xlkb::UsageError(path + ": bad config file: " + e.what());
  }
}

json config_section(const json& doc, const std::string& command) {
  if (doc.contains(command) && doc.at(command).is_object()) return doc.at(command);
  return json::object();
}

template <typename T>
void overlay(const CLI::App& cmd, const json& section, const std::string& flag,
             const std::string& key, T& var) {
  if (cmd.count(flag) > 0 || !section.contains(key)) return;
  try {
    var = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw xlkb::UsageError("config key \"" + key + "\": " + e.what());
  }
}

// Seed resolution order: --seed flag, command section, top-level "seed".
void overlay_seed(const CLI::App& cmd, const json& doc, const json& section, std::uint64_t& seed) {
  if (cmd.count("--seed") > 0) return;
  if (section.contains("seed")) {
    seed = section.at("seed").get<std::uint64_t>();
  } else if (doc.contains("seed") && doc.at("seed").is_number()) {
    seed = doc.at("seed").get<std::uint64_t>();
  }
}

xlkb::ProviderConfig resolve_provider(const std::string& provider_path, const json& doc) {
  if (!provider_path.empty()) return xlkb::ProviderConfig::from_file(provider_path);
  if (doc.contains("provider") && doc.at("provider").is_object()) {
    return xlkb::ProviderConfig::from_json(doc.at("provider"));
  }
  return xlkb::ProviderConfig{};  // deterministic stub
}

// ---------------------------------------------------------------------------
// Embedding plumbing shared by train and eval.

struct EmbedderArgs {
  std::string mode = "hashed";  // hashed | table
  std::size_t dim = 256;
  std::uint64_t seed = 0;
};

void add_embedder_flags(CLI::App* cmd, EmbedderArgs& args) {
  cmd->add_option("--embedder", args.mode, "Embedding source: hashed | table")
      ->check(CLI::IsMember({"hashed", "table"}));
  cmd->add_option("--emb-dim", args.dim, "Hashed embedder dimension");
  cmd->add_option("--emb-seed", args.seed, "Hashed embedder seed");
}

// Returns a (id, text) -> vector function over either a hashed text embedder
// or a loaded table; keeps the owning objects alive via shared_ptr capture.
xlkb::TextEmbedFn make_embed_fn(const EmbedderArgs& args, const std::string& table_path) {
  if (args.mode == "table") {
    if (table_path.empty()) {
      throw xlkb::UsageError("--embedder table needs an embedding table path");
    }
    auto table = std::make_shared<xlkb::EmbeddingTable>(xlkb::EmbeddingTable::load(table_path));
    return [table](const std::string& id, const std::string&) { return table->at(id); };
  }
  auto embedder = std::make_shared<xlkb::HashedNgramEmbedder>(args.dim, args.seed);
  return [embedder](const std::string&, const std::string& text) {
    return embedder->embed(text);
  };
}

std::vector<xlkb::EvalCase> load_eval_cases(const std::string& queries_path,
                                            const xlkb::TextEmbedFn& embed) {
  auto truth = xlkb::load_truth(queries_path);
  auto queries = xlkb::load_unlabeled(queries_path);
  if (truth.size() != queries.queries.size()) {
    throw xlkb::DataError(queries_path + ": truth and query counts differ");
  }
  std::vector<xlkb::EvalCase> cases;
  cases.reserve(queries.queries.size());
  for (std::size_t i = 0; i < queries.queries.size(); ++i) {
    xlkb::EvalCase c;
    c.query_id = queries.queries[i].id;
    c.truth = truth[i].second;
    c.vector = embed(c.query_id, queries.queries[i].text);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::string describe_report(const xlkb::EvalReport& report) {
  std::string line = "n=" + std::to_string(report.n_queries);
  for (const auto& [k, v] : report.recall_at) {
    line += " recall@" + std::to_string(k) + "=" + xlkb::format_double(v);
  }
  line += " mrr=" + xlkb::format_double(report.mrr);
  return line;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string kb;
  std::string out;
  std::string config;
  std::string lang = "und";
  double index_frac = 0.1;
  std::uint64_t seed = 0;
  bool no_stratify = false;
};

void run_split(const CLI::App& cmd, SplitArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "split");
  overlay(cmd, section, "--kb", "kb", a.kb);
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--index-frac", "index_fraction", a.index_frac);
  overlay(cmd, section, "--lang", "language", a.lang);
  overlay(cmd, section, "--no-stratify", "no_stratify", a.no_stratify);
  overlay_seed(cmd, doc, section, a.seed);
  if (a.kb.empty()) throw xlkb::UsageError("split needs --kb");
  if (a.out.empty()) throw xlkb::UsageError("split needs --out");

  const xlkb::KnowledgeBase kb = xlkb::load_kb(a.kb, a.lang);
  const xlkb::ValidationReport validation = xlkb::validate_kb(kb);

  xlkb::SplitOptions options;
  options.index_fraction = a.index_frac;
  options.seed = a.seed;
  options.stratified = !a.no_stratify;
  const xlkb::SplitResult result = xlkb::split_kb(kb, options);

  const std::filesystem::path out_dir(a.out);
  std::filesystem::create_directories(out_dir);
  xlkb::save_split(result.split, out_dir, a.seed, a.index_frac);
  xlkb::write_file_atomic(out_dir / "validation.json", validation.to_json().dump(2) + "\n");

  xlkb::RunManifest manifest("split");
  manifest.set_seed(a.seed);
  manifest.set_config({{"kb", a.kb},
                       {"index_fraction", a.index_frac},
                       {"stratified", !a.no_stratify},
                       {"language", a.lang}});
  manifest.add_input("kb", a.kb);
  manifest.add_output("index", out_dir / "index.jsonl");
  manifest.add_output("train", out_dir / "train.jsonl");
  manifest.add_output("split", out_dir / "split.json");
  manifest.add_output("validation", out_dir / "validation.json");
  manifest.write(out_dir / "manifest.json");

  std::cout << "split: " << kb.entries.size() << " entries -> " << result.split.index_set.size()
            << " index / " << result.split.training_set.size() << " train ("
            << result.singleton_labels.size() << " singleton labels pinned to index)\n";
}

// ---------------------------------------------------------------------------
// mine

struct MineArgs {
  std::string index;
  std::string train;
  std::string out;
  std::string report;
  std::string config;
  std::string strategy = "hybrid";
  int k = -1;
  int negatives = 3;
  int pool_m = 3;
  std::uint64_t seed = 0;
  std::string label_sim = "lexical";
  std::string label_emb;
  std::string translations;
  std::string provider;
  std::string target_lang = "xx";
  std::string lang = "und";
};

void run_mine(const CLI::App& cmd, MineArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "mine");
  overlay(cmd, section, "--index", "index", a.index);
  overlay(cmd, section, "--train", "train", a.train);
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--report", "report", a.report);
  overlay(cmd, section, "--strategy", "strategy", a.strategy);
  overlay(cmd, section, "--k", "k", a.k);
  overlay(cmd, section, "--negatives", "negatives_per_anchor", a.negatives);
  overlay(cmd, section, "--pool-m", "hardest_pool_m", a.pool_m);
  overlay(cmd, section, "--label-sim", "label_sim", a.label_sim);
  overlay(cmd, section, "--label-emb", "label_emb", a.label_emb);
  overlay(cmd, section, "--translations", "translations", a.translations);
  overlay(cmd, section, "--provider", "provider", a.provider);
  overlay(cmd, section, "--target-lang", "target_language", a.target_lang);
  overlay_seed(cmd, doc, section, a.seed);
  if (a.index.empty() || a.train.empty()) throw xlkb::UsageError("mine needs --index and --train");
  if (a.out.empty()) throw xlkb::UsageError("mine needs --out");
  if (a.report.empty()) a.report = a.out + ".report.json";

  const xlkb::KnowledgeBaseSplit split = xlkb::load_split(a.index, a.train, a.lang);

  std::vector<std::string> labels;
  {
    std::set<std::string> distinct;
    for (const auto& e : split.index_set) distinct.insert(e.label);
    for (const auto& e : split.training_set) distinct.insert(e.label);
    labels.assign(distinct.begin(), distinct.end());
  }

  std::optional<xlkb::SimilarityScorer> scorer;
  if (a.label_sim == "lexical") {
    scorer = xlkb::SimilarityScorer::lexical();
  } else if (!a.label_emb.empty()) {
    auto table = std::make_shared<xlkb::EmbeddingTable>(xlkb::EmbeddingTable::load(a.label_emb));
    scorer = xlkb::SimilarityScorer::embedding(
        std::make_shared<xlkb::TableEmbeddingProvider>(table));
  } else {
    scorer = xlkb::SimilarityScorer::embedding(
        std::make_shared<xlkb::HashedNgramEmbedder>(256, a.seed));
  }
  const xlkb::LabelSimilarityMatrix sim = xlkb::similarity_matrix(*scorer, labels);

  std::map<std::string, std::string> translations;
  if (!a.translations.empty()) {
    xlkb::for_each_jsonl(a.translations, [&](const json& j, std::size_t line_no) {
      try {
        translations[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
      } catch (const json::exception& e) {
        throw xlkb::DataError(a.translations + ":" + std::to_string(line_no) +
                              ": bad translation record: " + e.what());
      }
    });
  } else {
    xlkb::ProviderConfig provider_config = resolve_provider(a.provider, doc);
    auto provider = xlkb::make_provider(provider_config);
    translations = xlkb::translate_batch(*provider, split.training_set, a.target_lang,
                                         provider_config.parallelism);
  }

  xlkb::MiningConfig config;
  config.strategy = xlkb::parse_mining_strategy(a.strategy);
  config.k = a.k;
  config.negatives_per_anchor = a.negatives;
  config.hardest_pool_m = a.pool_m;
  config.seed = a.seed;
  const xlkb::MiningResult result = xlkb::mine_dataset(split, translations, sim, config);

  xlkb::save_pairs(result.pairs, a.out);
  xlkb::write_file_atomic(a.report, result.report.to_json().dump(2) + "\n");

  xlkb::RunManifest manifest("mine");
  manifest.set_seed(a.seed);
  manifest.set_config({{"strategy", a.strategy},
                       {"k", config.hard_k()},
                       {"negatives_per_anchor", a.negatives},
                       {"hardest_pool_m", a.pool_m},
                       {"label_sim", a.label_sim},
                       {"target_language", a.target_lang}});
  manifest.add_input("index", a.index);
  manifest.add_input("train", a.train);
  if (!a.translations.empty()) manifest.add_input("translations", a.translations);
  manifest.add_output("pairs", a.out);
  manifest.add_output("report", a.report);
  manifest.write(a.out + ".manifest.json");

  std::cout << "mine: " << result.report.groups_emitted << " groups / "
            << result.report.pairs_total << " pairs ("
            << result.report.anchors_skipped_no_positive << " anchors skipped, "
            << result.report.groups_truncated << " truncated)\n";
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
  std::string queries;
  std::string out;
  std::string resume;
  std::string report;
  std::string provider;
  std::string config;
  std::string lang = "und";
};

void run_augment(const CLI::App& cmd, AugmentArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "augment");
  overlay(cmd, section, "--queries", "queries", a.queries);
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--resume", "resume", a.resume);
  overlay(cmd, section, "--report", "report", a.report);
  overlay(cmd, section, "--provider", "provider", a.provider);
  if (a.queries.empty()) throw xlkb::UsageError("augment needs --queries");
  if (a.out.empty()) throw xlkb::UsageError("augment needs --out");
  if (a.resume.empty()) a.resume = a.out + ".resume.json";
  if (a.report.empty()) a.report = a.out + ".report.json";

  const xlkb::UnlabeledQuerySet queries = xlkb::load_unlabeled(a.queries, a.lang);

  xlkb::ProviderConfig provider_config = resolve_provider(a.provider, doc);
  if (provider_config.backend == "stub" && provider_config.distractors.empty()) {
    // With no configured pool the other queries in the batch serve as
    // distractors, which keeps the stub usable out of the box.
    for (const auto& q : queries.queries) provider_config.distractors.push_back(q.text);
  }
  auto provider = xlkb::make_provider(provider_config);

  const xlkb::AugmentReport report = xlkb::augment_to_file(*provider, queries, a.out, a.resume,
                                                           provider_config.parallelism);
  xlkb::write_file_atomic(a.report, report.to_json().dump(2) + "\n");

  xlkb::RunManifest manifest("augment");
  manifest.set_config({{"provider", provider->name()}, {"queries", a.queries}});
  manifest.add_input("queries", a.queries);
  manifest.add_output("pairs", a.out);
  manifest.add_output("report", a.report);
  manifest.write(a.out + ".manifest.json");

  std::cout << "augment: " << report.groups_emitted << " groups emitted, "
            << report.skipped_resume << " resumed, " << report.failures.size() << " failures\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::vector<std::string> pairs;
  std::string out;
  std::string epoch_log;
  std::string config;
  EmbedderArgs embedder;
  std::string emb;
  std::string anchor_emb;
  int epochs = 15;
  int batch = 32;
  double lr = 2e-5;
  double warmup = 0.1;
  double temp = 0.05;
  int d_out = 0;
  std::string optimizer = "sgd_momentum";
  std::uint64_t seed = 0;
  // Optional per-epoch retrieval metrics.
  std::string eval_index;
  std::string eval_index_emb;
  std::string eval_queries;
  std::string eval_query_emb;
  std::vector<int> ks = {1, 3, 5, 10};
};

void run_train(const CLI::App& cmd, TrainArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "train");
  overlay(cmd, section, "--pairs", "pairs", a.pairs);
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--epoch-log", "epoch_log", a.epoch_log);
  overlay(cmd, section, "--embedder", "embedder", a.embedder.mode);
  overlay(cmd, section, "--emb-dim", "emb_dim", a.embedder.dim);
  overlay(cmd, section, "--emb-seed", "emb_seed", a.embedder.seed);
  overlay(cmd, section, "--emb", "emb", a.emb);
  overlay(cmd, section, "--anchor-emb", "anchor_emb", a.anchor_emb);
  overlay(cmd, section, "--epochs", "epochs", a.epochs);
  overlay(cmd, section, "--batch", "batch_size", a.batch);
  overlay(cmd, section, "--lr", "learning_rate", a.lr);
  overlay(cmd, section, "--warmup", "warmup_fraction", a.warmup);
  overlay(cmd, section, "--temp", "temperature", a.temp);
  overlay(cmd, section, "--dout", "d_out", a.d_out);
  overlay(cmd, section, "--optimizer", "optimizer", a.optimizer);
  overlay(cmd, section, "--ks", "ks", a.ks);
  overlay_seed(cmd, doc, section, a.seed);
  if (a.pairs.empty()) throw xlkb::UsageError("train needs --pairs");
  if (a.out.empty()) throw xlkb::UsageError("train needs --out");

  std::vector<xlkb::ContrastivePair> pairs;
  for (const auto& path : a.pairs) {
    auto chunk = xlkb::load_pairs(path);
    pairs.insert(pairs.end(), std::make_move_iterator(chunk.begin()),
                 std::make_move_iterator(chunk.end()));
  }

  const xlkb::TextEmbedFn candidate_embed = make_embed_fn(a.embedder, a.emb);
  const xlkb::TextEmbedFn anchor_embed =
      a.anchor_emb.empty() ? candidate_embed : make_embed_fn(a.embedder, a.anchor_emb);

  const xlkb::GroupBuildResult groups = xlkb::build_groups(pairs, anchor_embed, candidate_embed);
  if (groups.groups.empty()) throw xlkb::DataError("no trainable groups in the pair files");

  xlkb::TrainConfig config;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.learning_rate = a.lr;
  config.warmup_fraction = a.warmup;
  config.temperature = a.temp;
  config.d_out = a.d_out;
  config.seed = a.seed;
  config.optimizer = xlkb::parse_optimizer(a.optimizer);

  xlkb::EpochEvalHook hook;
  std::vector<xlkb::LabeledQuery> eval_entries;
  std::vector<xlkb::EvalCase> eval_cases;
  xlkb::TextEmbedFn eval_index_embed;
  if (!a.eval_index.empty() && !a.eval_queries.empty()) {
    eval_entries = xlkb::load_kb(a.eval_index).entries;
    eval_index_embed = a.eval_index_emb.empty() ? make_embed_fn(a.embedder, "")
                                                : make_embed_fn({"table"}, a.eval_index_emb);
    const xlkb::TextEmbedFn eval_query_embed =
        a.eval_query_emb.empty() ? make_embed_fn(a.embedder, "")
                                 : make_embed_fn({"table"}, a.eval_query_emb);
    eval_cases = load_eval_cases(a.eval_queries, eval_query_embed);
    hook = [&](const xlkb::AdapterModel& adapter) {
      xlkb::RetrievalIndex index = xlkb::build_index(eval_entries, eval_index_embed, &adapter);
      xlkb::EvalOutcome outcome = xlkb::evaluate(index, eval_cases, a.ks, &adapter);
      xlkb::EvalSnapshot snapshot;
      snapshot.recall = {outcome.report.recall_at.begin(), outcome.report.recall_at.end()};
      snapshot.mrr = outcome.report.mrr;
      return snapshot;
    };
  }

  const xlkb::TrainResult result = xlkb::train(groups.groups, config, hook);
  result.adapter.save(a.out);
  if (!a.epoch_log.empty()) xlkb::write_epoch_log(a.epoch_log, result.log, a.ks);

  xlkb::RunManifest manifest("train");
  manifest.set_seed(a.seed);
  manifest.set_config({{"epochs", a.epochs},
                       {"batch_size", a.batch},
                       {"learning_rate", a.lr},
                       {"warmup_fraction", a.warmup},
                       {"temperature", a.temp},
                       {"d_out", a.d_out},
                       {"optimizer", a.optimizer},
                       {"embedder", a.embedder.mode},
                       {"groups", groups.groups.size()},
                       {"groups_skipped_no_negatives", groups.skipped_no_negatives}});
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    manifest.add_input("pairs" + std::to_string(i), a.pairs[i]);
  }
  if (!a.emb.empty()) manifest.add_input("embeddings", a.emb);
  if (!a.anchor_emb.empty()) manifest.add_input("anchor_embeddings", a.anchor_emb);
  manifest.add_output("adapter", a.out);
  if (!a.epoch_log.empty()) manifest.add_output("epoch_log", a.epoch_log);
  manifest.write(a.out + ".manifest.json");

  std::cout << "train: " << groups.groups.size() << " groups, " << a.epochs
            << " epochs, final mean loss " << xlkb::format_double(result.log.back().mean_loss)
            << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string index_file;
  std::string queries;
  std::string adapter;
  std::string out;
  std::string detail;
  std::string config;
  EmbedderArgs embedder;
  std::string index_emb;
  std::string query_emb;
  std::vector<int> ks = {1, 3, 5, 10};
  std::string relevance = "label";
  // --per-epoch mode: reformat a training epoch log into a metrics-only CSV.
  std::string per_epoch;
};

void run_eval_per_epoch(const EvalArgs& a) {
  if (a.out.empty()) throw xlkb::UsageError("eval --per-epoch needs --out");
  const std::string text = xlkb::read_file(a.per_epoch);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) throw xlkb::DataError(a.per_epoch + ": empty epoch log");

  auto split_csv = [](const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(pos));
        break;
      }
      cells.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    return cells;
  };

  const std::vector<std::string> header = split_csv(lines[0]);
  std::vector<std::size_t> keep;
  std::string out_header;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "epoch" || header[i] == "mrr" || header[i].rfind("recall@", 0) == 0) {
      keep.push_back(i);
      if (!out_header.empty()) out_header += ',';
      out_header += header[i];
    }
  }
  std::string out_text = out_header + "\n";
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_csv(lines[r]);
    bool complete = true;
    std::string row;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i] >= cells.size() || cells[keep[i]].empty()) {
        complete = false;
        break;
      }
      if (i > 0) row += ',';
      row += cells[keep[i]];
    }
    if (complete) out_text += row + "\n";
  }
  xlkb::write_file_atomic(a.out, out_text);
  std::cout << "eval: wrote per-epoch metrics CSV to " << a.out << "\n";
}

void run_eval(const CLI::App& cmd, EvalArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "eval");
  overlay(cmd, section, "--index-file", "index_file", a.index_file);
  overlay(cmd, section, "--queries", "queries", a.queries);
  overlay(cmd, section, "--adapter", "adapter", a.adapter);
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--detail", "detail", a.detail);
  overlay(cmd, section, "--embedder", "embedder", a.embedder.mode);
  overlay(cmd, section, "--emb-dim", "emb_dim", a.embedder.dim);
  overlay(cmd, section, "--emb-seed", "emb_seed", a.embedder.seed);
  overlay(cmd, section, "--index-emb", "index_emb", a.index_emb);
  overlay(cmd, section, "--query-emb", "query_emb", a.query_emb);
  overlay(cmd, section, "--ks", "ks", a.ks);
  overlay(cmd, section, "--relevance", "relevance", a.relevance);

  if (!a.per_epoch.empty()) {
    run_eval_per_epoch(a);
    return;
  }
  if (a.index_file.empty() || a.queries.empty()) {
    throw xlkb::UsageError("eval needs --index-file and --queries");
  }
  if (a.out.empty()) throw xlkb::UsageError("eval needs --out");

  std::optional<xlkb::AdapterModel> adapter;
  if (!a.adapter.empty()) adapter = xlkb::AdapterModel::load(a.adapter);

  const xlkb::TextEmbedFn index_embed = a.index_emb.empty()
                                            ? make_embed_fn(a.embedder, "")
                                            : make_embed_fn({"table"}, a.index_emb);
  const xlkb::TextEmbedFn query_embed = a.query_emb.empty()
                                            ? make_embed_fn(a.embedder, "")
                                            : make_embed_fn({"table"}, a.query_emb);

  const xlkb::KnowledgeBase index_kb = xlkb::load_kb(a.index_file);
  const xlkb::RetrievalIndex index =
      xlkb::build_index(index_kb.entries, index_embed, adapter ? &*adapter : nullptr);
  const std::vector<xlkb::EvalCase> cases = load_eval_cases(a.queries, query_embed);

  const xlkb::Relevance relevance =
      a.relevance == "label" ? xlkb::Relevance::label : xlkb::Relevance::example;
  const xlkb::EvalOutcome outcome =
      xlkb::evaluate(index, cases, a.ks, adapter ? &*adapter : nullptr, relevance);

  xlkb::write_file_atomic(a.out, outcome.report.to_json().dump(2) + "\n");
  if (!a.detail.empty()) xlkb::write_detail_csv(a.detail, cases, outcome.first_match_rank);

  xlkb::RunManifest manifest("eval");
  manifest.set_config({{"ks", a.ks}, {"relevance", a.relevance}, {"adapter", a.adapter}});
  manifest.add_input("index_file", a.index_file);
  manifest.add_input("queries", a.queries);
  if (!a.adapter.empty()) manifest.add_input("adapter", a.adapter);
  if (!a.index_emb.empty()) manifest.add_input("index_emb", a.index_emb);
  if (!a.query_emb.empty()) manifest.add_input("query_emb", a.query_emb);
  manifest.add_output("report", a.out);
  if (!a.detail.empty()) manifest.add_output("detail", a.detail);
  manifest.write(a.out + ".manifest.json");

  std::cout << "eval: " << describe_report(outcome.report) << "\n";
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string out;
  std::string config;
  xlkb::BenchmarkSpec spec;
};

void run_bench(const CLI::App& cmd, BenchArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "bench");
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--labels", "n_labels", a.spec.n_labels);
  overlay(cmd, section, "--per-label", "queries_per_label", a.spec.queries_per_label);
  overlay(cmd, section, "--dim", "dimension", a.spec.dimension);
  overlay(cmd, section, "--sigma", "sigma", a.spec.sigma);
  overlay(cmd, section, "--branches", "branches", a.spec.branches);
  overlay(cmd, section, "--leaf-scale", "leaf_scale", a.spec.leaf_scale);
  overlay(cmd, section, "--eval-per-label", "eval_per_label", a.spec.eval_per_label);
  overlay(cmd, section, "--nuisance-dims", "nuisance_dims", a.spec.nuisance_dims);
  overlay(cmd, section, "--nuisance-scale", "nuisance_scale", a.spec.nuisance_scale);
  overlay_seed(cmd, doc, section, a.spec.seed);
  if (a.out.empty()) throw xlkb::UsageError("bench needs --out");

  const xlkb::Benchmark bench = xlkb::gen_benchmark(a.spec);
  const std::filesystem::path out_dir(a.out);
  xlkb::save_benchmark(bench, a.spec, out_dir);

  xlkb::RunManifest manifest("bench");
  manifest.set_seed(a.spec.seed);
  manifest.set_config({{"n_labels", a.spec.n_labels},
                       {"queries_per_label", a.spec.queries_per_label},
                       {"dimension", a.spec.dimension},
                       {"sigma", a.spec.sigma},
                       {"branches", a.spec.branches},
                       {"leaf_scale", a.spec.leaf_scale},
                       {"eval_per_label", a.spec.eval_per_label},
                       {"nuisance_dims", a.spec.nuisance_dims},
                       {"nuisance_scale", a.spec.nuisance_scale}});
  manifest.add_output("kb", out_dir / "kb.jsonl");
  manifest.add_output("targets", out_dir / "targets.jsonl");
  manifest.add_output("kb_emb", out_dir / "kb_emb.emb");
  manifest.add_output("translated_emb", out_dir / "translated_emb.emb");
  manifest.add_output("target_emb", out_dir / "target_emb.emb");
  manifest.add_output("bench", out_dir / "bench.json");
  manifest.write(out_dir / "manifest.json");

  std::cout << "bench: " << bench.kb.entries.size() << " KB entries, "
            << bench.target_queries.queries.size() << " target queries, "
            << bench.labels.size() << " labels\n";
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string out;
  std::string config;
  xlkb::AblationConfig ablation;
  std::vector<std::string> strategies = {"hybrid", "random_only", "hard_only", "hardest_only"};
  std::string optimizer = "sgd_momentum";
};

void run_ablate(const CLI::App& cmd, AblateArgs& a) {
  const json doc = load_config_doc(a.config);
  const json section = config_section(doc, "ablate");
  overlay(cmd, section, "--out", "out", a.out);
  overlay(cmd, section, "--labels", "n_labels", a.ablation.bench.n_labels);
  overlay(cmd, section, "--per-label", "queries_per_label", a.ablation.bench.queries_per_label);
  overlay(cmd, section, "--dim", "dimension", a.ablation.bench.dimension);
  overlay(cmd, section, "--sigma", "sigma", a.ablation.bench.sigma);
  overlay(cmd, section, "--branches", "branches", a.ablation.bench.branches);
  overlay(cmd, section, "--leaf-scale", "leaf_scale", a.ablation.bench.leaf_scale);
  overlay(cmd, section, "--eval-per-label", "eval_per_label", a.ablation.bench.eval_per_label);
  overlay(cmd, section, "--nuisance-dims", "nuisance_dims", a.ablation.bench.nuisance_dims);
  overlay(cmd, section, "--nuisance-scale", "nuisance_scale", a.ablation.bench.nuisance_scale);
  overlay(cmd, section, "--index-frac", "index_fraction", a.ablation.index_fraction);
  overlay(cmd, section, "--negatives", "negatives_per_anchor",
          a.ablation.mining.negatives_per_anchor);
  overlay(cmd, section, "--pool-m", "hardest_pool_m", a.ablation.mining.hardest_pool_m);
  overlay(cmd, section, "--epochs", "epochs", a.ablation.train.epochs);
  overlay(cmd, section, "--batch", "batch_size", a.ablation.train.batch_size);
  overlay(cmd, section, "--lr", "learning_rate", a.ablation.train.learning_rate);
  overlay(cmd, section, "--warmup", "warmup_fraction", a.ablation.train.warmup_fraction);
  overlay(cmd, section, "--temp", "temperature", a.ablation.train.temperature);
  overlay(cmd, section, "--optimizer", "optimizer", a.optimizer);
  overlay(cmd, section, "--strategies", "strategies", a.strategies);
  overlay(cmd, section, "--seeds", "n_seeds", a.ablation.n_seeds);
  overlay(cmd, section, "--ks", "ks", a.ablation.ks);
  overlay_seed(cmd, doc, section, a.ablation.bench.seed);
  if (a.out.empty()) throw xlkb::UsageError("ablate needs --out");

  a.ablation.train.optimizer = xlkb::parse_optimizer(a.optimizer);
  a.ablation.strategies.clear();
  for (const auto& s : a.strategies) {
    a.ablation.strategies.push_back(xlkb::parse_mining_strategy(s));
  }

  const xlkb::AblationTable table = xlkb::run_ablation(a.ablation);

  const std::filesystem::path out_dir(a.out);
  std::filesystem::create_directories(out_dir);
  xlkb::write_file_atomic(out_dir / "ablation.json", table.to_json().dump(2) + "\n");
  const std::string text = table.render_text();
  xlkb::write_file_atomic(out_dir / "ablation.txt", text);

  xlkb::RunManifest manifest("ablate");
  manifest.set_seed(a.ablation.bench.seed);
  manifest.set_config({{"strategies", a.strategies},
                       {"n_seeds", a.ablation.n_seeds},
                       {"ks", a.ablation.ks},
                       {"index_fraction", a.ablation.index_fraction},
                       {"epochs", a.ablation.train.epochs},
                       {"learning_rate", a.ablation.train.learning_rate},
                       {"optimizer", a.optimizer},
                       {"sigma", a.ablation.bench.sigma},
                       {"nuisance_scale", a.ablation.bench.nuisance_scale},
                       {"n_labels", a.ablation.bench.n_labels}});
  manifest.add_output("table_json", out_dir / "ablation.json");
  manifest.add_output("table_text", out_dir / "ablation.txt");
  manifest.write(out_dir / "manifest.json");

  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-lingual knowledge-base retrieval toolkit"};
  app.require_subcommand(1);

  auto split_args = std::make_shared<SplitArgs>();
  CLI::App* split = app.add_subcommand("split", "Split a labeled KB into index and training sets");
  split->add_option("--kb", split_args->kb, "Labeled KB JSONL ({\"id\",\"text\",\"label\"})");
  split->add_option("--out", split_args->out, "Output directory");
  split->add_option("--index-frac", split_args->index_frac, "Fraction reserved for the index set");
  split->add_option("--seed", split_args->seed, "Split seed");
  split->add_flag("--no-stratify", split_args->no_stratify, "Disable per-label stratification");
  split->add_option("--lang", split_args->lang, "KB language tag");
  split->add_option("--config", split_args->config, "JSON config file (flags win)");
  split->callback([split, split_args] { run_split(*split, *split_args); });

  auto mine_args = std::make_shared<MineArgs>();
  CLI::App* mine = app.add_subcommand("mine", "Mine contrastive pairs from a split KB");
  mine->add_option("--index", mine_args->index, "Index-set JSONL (candidates)");
  mine->add_option("--train", mine_args->train, "Training-set JSONL (anchors)");
  mine->add_option("--out", mine_args->out, "Output pairs JSONL");
  mine->add_option("--report", mine_args->report, "Mining report JSON path");
  mine->add_option("--strategy", mine_args->strategy,
                   "Negative sampling strategy")
      ->check(CLI::IsMember({"hybrid", "random_only", "hard_only", "hardest_only"}));
  mine->add_option("--k", mine_args->k,
                   "Hard negatives per anchor (must agree with the strategy)");
  mine->add_option("--negatives", mine_args->negatives, "Negatives per anchor");
  mine->add_option("--pool-m", mine_args->pool_m, "hardest_only: top-m similar labels");
  mine->add_option("--seed", mine_args->seed, "Mining seed");
  mine->add_option("--label-sim", mine_args->label_sim, "Label similarity mode")
      ->check(CLI::IsMember({"lexical", "embedding"}));
  mine->add_option("--label-emb", mine_args->label_emb,
                   "Label embedding table for --label-sim embedding");
  mine->add_option("--translations", mine_args->translations,
                   "Precomputed translations JSONL ({\"id\",\"text\"}); skips the provider");
  mine->add_option("--provider", mine_args->provider, "Provider config JSON");
  mine->add_option("--target-lang", mine_args->target_lang, "Translation target language tag");
  mine->add_option("--lang", mine_args->lang, "KB language tag");
  mine->add_option("--config", mine_args->config, "JSON config file (flags win)");
  mine->callback([mine, mine_args] { run_mine(*mine, *mine_args); });

  auto augment_args = std::make_shared<AugmentArgs>();
  CLI::App* augment =
      app.add_subcommand("augment", "Generate synthetic pairs for unlabeled queries");
  augment->add_option("--queries", augment_args->queries, "Unlabeled queries JSONL");
  augment->add_option("--out", augment_args->out, "Output pairs JSONL (append-only)");
  augment->add_option("--resume", augment_args->resume, "Resume manifest path");
  augment->add_option("--report", augment_args->report, "Augment report JSON path");
  augment->add_option("--provider", augment_args->provider, "Provider config JSON");
  augment->add_option("--lang", augment_args->lang, "Query language tag");
  augment->add_option("--config", augment_args->config, "JSON config file (flags win)");
  augment->callback([augment, augment_args] { run_augment(*augment, *augment_args); });

  auto train_args = std::make_shared<TrainArgs>();
  CLI::App* train = app.add_subcommand("train", "Train a linear adapter on mined pairs");
  train->add_option("--pairs", train_args->pairs, "Pairs JSONL (repeatable)")->delimiter(',');
  train->add_option("--out", train_args->out, "Output adapter JSON");
  train->add_option("--epoch-log", train_args->epoch_log, "Per-epoch CSV log path");
  add_embedder_flags(train, train_args->embedder);
  train->add_option("--emb", train_args->emb, "Candidate embedding table (for --embedder table)");
  train->add_option("--anchor-emb", train_args->anchor_emb,
                    "Anchor embedding table (defaults to --emb)");
  train->add_option("--epochs", train_args->epochs, "Training epochs");
  train->add_option("--batch", train_args->batch, "Batch size in groups");
  train->add_option("--lr", train_args->lr, "Learning rate");
  train->add_option("--warmup", train_args->warmup, "Warmup fraction of total steps");
  train->add_option("--temp", train_args->temp, "InfoNCE temperature");
  train->add_option("--dout", train_args->d_out, "Adapter output dimension (0 = input)");
  train->add_option("--optimizer", train_args->optimizer, "Optimizer")
      ->check(CLI::IsMember({"sgd_momentum", "adamw_lite"}));
  train->add_option("--seed", train_args->seed, "Training seed");
  train->add_option("--eval-index", train_args->eval_index,
                    "KB JSONL for per-epoch eval index");
  train->add_option("--eval-index-emb", train_args->eval_index_emb,
                    "Embedding table for the eval index");
  train->add_option("--eval-queries", train_args->eval_queries,
                    "Eval queries JSONL with truth labels");
  train->add_option("--eval-query-emb", train_args->eval_query_emb,
                    "Embedding table for the eval queries");
  train->add_option("--ks", train_args->ks, "Recall cutoffs for per-epoch eval")->delimiter(',');
  train->add_option("--config", train_args->config, "JSON config file (flags win)");
  train->callback([train, train_args] { run_train(*train, *train_args); });

  auto eval_args = std::make_shared<EvalArgs>();
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate retrieval over an index");
  eval_cmd->add_option("--index-file", eval_args->index_file, "Index entries JSONL");
  eval_cmd->add_option("--queries", eval_args->queries,
                       "Eval queries JSONL ({\"id\",\"text\",\"label\"})");
  eval_cmd->add_option("--adapter", eval_args->adapter, "Adapter JSON (optional)");
  eval_cmd->add_option("--out", eval_args->out, "Report JSON path (or CSV with --per-epoch)");
  eval_cmd->add_option("--detail", eval_args->detail, "Per-query detail CSV path");
  add_embedder_flags(eval_cmd, eval_args->embedder);
  eval_cmd->add_option("--index-emb", eval_args->index_emb, "Index embedding table");
  eval_cmd->add_option("--query-emb", eval_args->query_emb, "Query embedding table");
  eval_cmd->add_option("--ks", eval_args->ks, "Recall cutoffs")->delimiter(',');
  eval_cmd->add_option("--relevance", eval_args->relevance, "Relevance level")
      ->check(CLI::IsMember({"label", "example"}));
  eval_cmd->add_option("--per-epoch", eval_args->per_epoch,
                       "Epoch log CSV to reformat into a metrics-only CSV");
  eval_cmd->add_option("--config", eval_args->config, "JSON config file (flags win)");
  eval_cmd->callback([eval_cmd, eval_args] { run_eval(*eval_cmd, *eval_args); });

  auto bench_args = std::make_shared<BenchArgs>();
  CLI::App* bench = app.add_subcommand("bench", "Generate the synthetic clustered benchmark");
  bench->add_option("--out", bench_args->out, "Output directory");
  bench->add_option("--labels", bench_args->spec.n_labels, "Number of labels");
  bench->add_option("--per-label", bench_args->spec.queries_per_label, "KB queries per label");
  bench->add_option("--dim", bench_args->spec.dimension, "Embedding dimension");
  bench->add_option("--sigma", bench_args->spec.sigma, "Intra-label noise scale");
  bench->add_option("--branches", bench_args->spec.branches, "Top-level clusters");
  bench->add_option("--leaf-scale", bench_args->spec.leaf_scale, "Leaf direction weight");
  bench->add_option("--eval-per-label", bench_args->spec.eval_per_label,
                    "Target-side queries per label");
  bench->add_option("--nuisance-dims", bench_args->spec.nuisance_dims,
                    "Shared nuisance subspace size");
  bench->add_option("--nuisance-scale", bench_args->spec.nuisance_scale,
                    "Nuisance amplitude relative to isotropic noise");
  bench->add_option("--seed", bench_args->spec.seed, "Benchmark seed");
  bench->add_option("--config", bench_args->config, "JSON config file (flags win)");
  bench->callback([bench, bench_args] { run_bench(*bench, *bench_args); });

  auto ablate_args = std::make_shared<AblateArgs>();
  CLI::App* ablate = app.add_subcommand("ablate", "Strategy ablation on the synthetic benchmark");
  ablate->add_option("--out", ablate_args->out, "Output directory");
  ablate->add_option("--strategies", ablate_args->strategies, "Strategies to compare")
      ->delimiter(',');
  ablate->add_option("--seeds", ablate_args->ablation.n_seeds, "Number of seeds to average");
  ablate->add_option("--labels", ablate_args->ablation.bench.n_labels, "Number of labels");
  ablate->add_option("--per-label", ablate_args->ablation.bench.queries_per_label,
                     "KB queries per label");
  ablate->add_option("--dim", ablate_args->ablation.bench.dimension, "Embedding dimension");
  ablate->add_option("--sigma", ablate_args->ablation.bench.sigma, "Intra-label noise scale");
  ablate->add_option("--branches", ablate_args->ablation.bench.branches, "Top-level clusters");
  ablate->add_option("--leaf-scale", ablate_args->ablation.bench.leaf_scale,
                     "Leaf direction weight");
  ablate->add_option("--eval-per-label", ablate_args->ablation.bench.eval_per_label,
                     "Target-side queries per label");
  ablate->add_option("--nuisance-dims", ablate_args->ablation.bench.nuisance_dims,
                     "Shared nuisance subspace size");
  ablate->add_option("--nuisance-scale", ablate_args->ablation.bench.nuisance_scale,
                     "Nuisance amplitude relative to isotropic noise");
  ablate->add_option("--index-frac", ablate_args->ablation.index_fraction,
                     "Index-set fraction of the KB");
  ablate->add_option("--negatives", ablate_args->ablation.mining.negatives_per_anchor,
                     "Negatives per anchor");
  ablate->add_option("--pool-m", ablate_args->ablation.mining.hardest_pool_m,
                     "hardest_only: top-m similar labels");
  ablate->add_option("--epochs", ablate_args->ablation.train.epochs, "Training epochs");
  ablate->add_option("--batch", ablate_args->ablation.train.batch_size, "Batch size in groups");
  ablate->add_option("--lr", ablate_args->ablation.train.learning_rate, "Learning rate");
  ablate->add_option("--warmup", ablate_args->ablation.train.warmup_fraction, "Warmup fraction");
  ablate->add_option("--temp", ablate_args->ablation.train.temperature, "InfoNCE temperature");
  ablate->add_option("--optimizer", ablate_args->optimizer, "Optimizer")
      ->check(CLI::IsMember({"sgd_momentum", "adamw_lite"}));
  ablate->add_option("--ks", ablate_args->ablation.ks, "Recall cutoffs")->delimiter(',');
  ablate->add_option("--seed", ablate_args->ablation.bench.seed, "Base seed");
  ablate->add_option("--config", ablate_args->config, "JSON config file (flags win)");
  ablate->callback([ablate, ablate_args] { run_ablate(*ablate, *ablate_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const xlkb::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const xlkb::ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const xlkb::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
