#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xlkb/kb.hpp"
#include "xlkb/pair_miner.hpp"

namespace xlkb {

// One synthetic augmentation result for a target-language query: a
// paraphrase positive plus three unrelated negatives.
struct AugmentedGroup {
  std::string positive_text;
  std::vector<std::string> negative_texts;

  // Checks the 1:3 arity, non-empty texts, pairwise-distinct negatives and
  // that no generated text equals the query itself.
  void validate(const std::string& query) const;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string translate(const std::string& text, const std::string& target_language) = 0;
  virtual AugmentedGroup synthesize_group(const std::string& query) = 0;
};

struct ProviderConfig {
  std::string backend = "stub";

  // http backend
  std::string endpoint;
  std::string model;
  // Name of the environment variable holding the bearer token. Empty means
  // no Authorization header (local test servers). The token itself is never
  // accepted via CLI and never logged.
  std::string token_env;
  double timeout_s = 30.0;
  int max_retries = 3;
  int parallelism = 4;
  // Base backoff between attempts; doubles each retry. Exposed so tests can
  // exercise the retry path without real waits.
  int retry_base_ms = 1000;
  // Prompt templates with {text}/{language} and {query} placeholders; they
  // live in config because no sensible default exists in code.
  std::string translate_prompt;
  std::string synthesize_prompt;

  // stub backend
  std::uint64_t stub_seed = 0;
  std::vector<std::string> distractors;

  static ProviderConfig from_json(const nlohmann::json& j);
  static ProviderConfig from_file(const std::filesystem::path& path);
};

std::unique_ptr<GenerationProvider> make_provider(const ProviderConfig& config);

// Deterministic offline backend: translate prefixes a language marker,
// synthesize_group draws distractor-pool negatives from a substream keyed by
// the query text, so results do not depend on batch order.
class StubProvider : public GenerationProvider {
 public:
  StubProvider(std::uint64_t seed, std::vector<std::string> distractors);

  std::string name() const override { return "stub"; }
  std::string translate(const std::string& text, const std::string& target_language) override;
  AugmentedGroup synthesize_group(const std::string& query) override;

 private:
  std::uint64_t seed_;
  std::vector<std::string> distractors_;
};

// Chat-completion-style HTTP backend. POSTs {"model":…, "prompt":…} with a
// bearer token read from the environment; retries transport and non-2xx
// failures with exponential backoff.
class HttpProvider : public GenerationProvider {
 public:
  explicit HttpProvider(ProviderConfig config);

  std::string name() const override { return "http"; }
  std::string translate(const std::string& text, const std::string& target_language) override;
  AugmentedGroup synthesize_group(const std::string& query) override;

 private:
  std::string complete(const std::string& prompt);

  ProviderConfig config_;
  std::string base_url_;
  std::string path_;
};

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

struct AugmentReport {
  std::size_t queries_total = 0;
  std::size_t groups_emitted = 0;
  std::size_t skipped_resume = 0;
  std::size_t pairs_total = 0;
  // (query id, error message) for queries whose generation failed; failures
  // never abort the batch.
  std::vector<std::pair<std::string, std::string>> failures;

  nlohmann::ordered_json to_json() const;
};

struct AugmentResult {
  std::vector<ContrastivePair> pairs;
  AugmentReport report;
};

// Expands one augmented group into the 4 contrastive pair records
// (synthetic_pos / synthetic_neg) sharing a fresh group id.
std::vector<ContrastivePair> pairs_from_group(const UnlabeledQuery& query,
                                              const AugmentedGroup& group);

AugmentResult augment_dataset(GenerationProvider& provider, const UnlabeledQuerySet& queries,
                              int parallelism = 1);

// Streaming variant: appends each completed group to out_path and records it
// in a resume manifest, so an interrupted batch can be rerun without losing
// or duplicating pairs. Failed queries stay absent from the manifest and are
// retried on the next run.
AugmentReport augment_to_file(GenerationProvider& provider, const UnlabeledQuerySet& queries,
                              const std::filesystem::path& out_path,
                              const std::filesystem::path& manifest_path, int parallelism = 1);

// Translates every query, preserving input order; bounded parallelism.
// Throws ProviderError naming the offending id on failure.
std::map<std::string, std::string> translate_batch(GenerationProvider& provider,
                                                   std::span<const LabeledQuery> queries,
                                                   const std::string& target_language,
                                                   int parallelism = 1);

}  // namespace xlkb
