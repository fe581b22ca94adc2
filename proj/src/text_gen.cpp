#include "xlkb/text_gen.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <set>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "xlkb/common.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void AugmentedGroup::validate(const std::string& query) const {
  if (positive_text.empty()) {
    throw ProviderError("augmented group has an empty positive text");
  }
  if (negative_texts.size() != 3) {
    throw ProviderError("augmented group must have exactly 3 negatives, got " +
                        std::to_string(negative_texts.size()));
  }
  std::set<std::string> seen;
  for (const auto& n : negative_texts) {
    if (n.empty()) throw ProviderError("augmented group has an empty negative text");
    if (n == query) throw ProviderError("augmented negative equals the query text");
    if (!seen.insert(n).second) {
      throw ProviderError("augmented negatives are not pairwise distinct");
    }
  }
}

ProviderConfig ProviderConfig::from_json(const nlohmann::json& j) {
  ProviderConfig c;
  c.backend = j.value("backend", c.backend);
  if (c.backend != "stub" && c.backend != "http") {
    throw DataError("unknown provider backend \"" + c.backend + "\"");
  }
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.token_env = j.value("token_env", c.token_env);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.retry_base_ms = j.value("retry_base_ms", c.retry_base_ms);
  if (j.contains("prompts")) {
    const auto& p = j.at("prompts");
    c.translate_prompt = p.value("translate", c.translate_prompt);
    c.synthesize_prompt = p.value("synthesize", c.synthesize_prompt);
  }
  c.stub_seed = j.value("stub_seed", c.stub_seed);
  if (j.contains("distractors")) {
    c.distractors = j.at("distractors").get<std::vector<std::string>>();
  }
  if (c.timeout_s <= 0) throw DataError("provider timeout_s must be positive");
  if (c.max_retries < 1) throw DataError("provider max_retries must be >= 1");
  if (c.parallelism < 1) throw DataError("provider parallelism must be >= 1");
  return c;
}

ProviderConfig ProviderConfig::from_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad provider config: " + e.what());
  }
  return from_json(j);
}

std::unique_ptr<GenerationProvider> make_provider(const ProviderConfig& config) {
  if (config.backend == "stub") {
    return std::make_unique<StubProvider>(config.stub_seed, config.distractors);
  }
  return std::make_unique<HttpProvider>(config);
}

StubProvider::StubProvider(std::uint64_t seed, std::vector<std::string> distractors)
    : seed_(seed), distractors_(std::move(distractors)) {}

std::string StubProvider::translate(const std::string& text, const std::string& target_language) {
  if (text.empty()) throw DataError("cannot translate empty text");
  if (target_language.empty()) throw DataError("target language must be non-empty");
  return "[T:" + target_language + "] " + text;
}

AugmentedGroup StubProvider::synthesize_group(const std::string& query) {
  if (query.empty()) throw DataError("cannot synthesize from empty query");

  // Distinct pool texts, first-occurrence order, minus the query itself.
  std::vector<std::string> pool;
  std::unordered_set<std::string> seen;
  for (const auto& d : distractors_) {
    if (d == query || d.empty()) continue;
    if (seen.insert(d).second) pool.push_back(d);
  }
  if (pool.size() < 3) {
    throw DataError("distractor pool has only " + std::to_string(pool.size()) +
                    " usable texts; need at least 3");
  }

  Rng rng = Rng(seed_).substream(query);
  std::vector<std::size_t> picked = uniform_sample_without_replacement(pool.size(), 3, rng);

  AugmentedGroup group;
  group.positive_text = query + " (paraphrase)";
  for (std::size_t i : picked) group.negative_texts.push_back(pool[i]);
  group.validate(query);
  return group;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
  // Single left-to-right pass: substituted values are literal text and are
  // never re-scanned, so query/translation content containing "{...}" cannot
  // inject further expansions. Unknown placeholders stay as written.
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    const std::size_t close = tmpl.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(tmpl, open, std::string::npos);
      break;
    }
    const auto it = values.find(tmpl.substr(open + 1, close - open - 1));
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl, open, close - open + 1);
    }
    pos = close + 1;
  }
  return out;
}

namespace {

// endpoint -> (scheme://host[:port], /path)
std::pair<std::string, std::string> split_url(const std::string& endpoint) {
  std::size_t scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw DataError("provider endpoint must start with http:// or https://, got \"" + endpoint +
                    "\"");
  }
  std::size_t path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string extract_completion(const std::string& body, const std::string& endpoint) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ProviderError("non-JSON response from " + endpoint);
  }
  if (j.contains("completion") && j["completion"].is_string()) {
    return j["completion"].get<std::string>();
  }
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.contains("text") && choice["text"].is_string()) {
      return choice["text"].get<std::string>();
    }
    if (choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content") && choice["message"]["content"].is_string()) {
      return choice["message"]["content"].get<std::string>();
    }
  }
  throw ProviderError("unrecognized completion payload from " + endpoint);
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw DataError("http provider needs an endpoint");
  if (config_.model.empty()) throw DataError("http provider needs a model name");
  if (config_.translate_prompt.empty() || config_.synthesize_prompt.empty()) {
    throw DataError("http provider needs prompts.translate and prompts.synthesize in its config");
  }
  auto [base, path] = split_url(config_.endpoint);
  base_url_ = base;
  path_ = path;
}

std::string HttpProvider::complete(const std::string& prompt) {
  std::string token;
  if (!config_.token_env.empty()) {
    const char* value = std::getenv(config_.token_env.c_str());
    if (value == nullptr || *value == '\0') {
      // Deliberately names the variable, never its value.
      throw ProviderError("auth token environment variable " + config_.token_env + " is not set");
    }
    token = value;
  }

  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["prompt"] = prompt;
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.retry_base_ms << (attempt - 1)));
    }

    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error against " + config_.endpoint + ": " +
                   httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status) + " from " + config_.endpoint;
      continue;
    }
    std::string completion = trim(extract_completion(res->body, config_.endpoint));
    if (completion.empty()) {
      last_error = "empty completion from " + config_.endpoint;
      continue;
    }
    return completion;
  }
  throw ProviderError(last_error + " (after " + std::to_string(config_.max_retries) +
                      " attempts)");
}

std::string HttpProvider::translate(const std::string& text, const std::string& target_language) {
  if (text.empty()) throw DataError("cannot translate empty text");
  if (target_language.empty()) throw DataError("target language must be non-empty");
  return complete(
      render_template(config_.translate_prompt, {{"text", text}, {"language", target_language}}));
}

AugmentedGroup HttpProvider::synthesize_group(const std::string& query) {
  if (query.empty()) throw DataError("cannot synthesize from empty query");
  const std::string completion =
      complete(render_template(config_.synthesize_prompt, {{"query", query}}));

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(completion);
  } catch (const nlohmann::json::exception&) {
    throw ProviderError("completion is not the required JSON schema "
                        "{\"positive\":…, \"negatives\":[…]}");
  }
  AugmentedGroup group;
  try {
    group.positive_text = trim(j.at("positive").get<std::string>());
    for (const auto& n : j.at("negatives")) {
      group.negative_texts.push_back(trim(n.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("completion does not match the required schema: ") + e.what());
  }
  group.validate(query);
  return group;
}

nlohmann::ordered_json AugmentReport::to_json() const {
  nlohmann::ordered_json j;
  j["queries_total"] = queries_total;
  j["groups_emitted"] = groups_emitted;
  j["skipped_resume"] = skipped_resume;
  j["pairs_total"] = pairs_total;
  nlohmann::ordered_json fails = nlohmann::ordered_json::array();
  for (const auto& [id, error] : failures) {
    fails.push_back({{"id", id}, {"error", error}});
  }
  j["failures"] = fails;
  return j;
}

std::vector<ContrastivePair> pairs_from_group(const UnlabeledQuery& query,
                                              const AugmentedGroup& group) {
  std::vector<ContrastivePair> pairs;
  ContrastivePair base;
  base.group_id = "synth:" + query.id;
  base.anchor_id = query.id;
  base.anchor_text = query.text;

  ContrastivePair pos = base;
  pos.candidate_id = query.id + ":pos";
  pos.candidate_text = group.positive_text;
  pos.polarity = Polarity::positive;
  pos.source = PairSource::synthetic_pos;
  pairs.push_back(std::move(pos));

  for (std::size_t i = 0; i < group.negative_texts.size(); ++i) {
    ContrastivePair neg = base;
    neg.candidate_id = query.id + ":neg" + std::to_string(i + 1);
    neg.candidate_text = group.negative_texts[i];
    neg.polarity = Polarity::negative;
    neg.source = PairSource::synthetic_neg;
    pairs.push_back(std::move(neg));
  }
  return pairs;
}

namespace {

// Runs fn over the queries with at most `parallelism` concurrent calls and
// hands results to consume strictly in input order.
template <typename Fn, typename Consume>
void for_each_bounded(std::span<const UnlabeledQuery> queries, int parallelism, Fn fn,
                      Consume consume) {
  if (parallelism < 1) parallelism = 1;
  std::size_t next = 0;
  while (next < queries.size()) {
    const std::size_t chunk = std::min<std::size_t>(parallelism, queries.size() - next);
    std::vector<std::future<AugmentedGroup>> futures;
    futures.reserve(chunk);
    for (std::size_t i = 0; i < chunk; ++i) {
      const UnlabeledQuery& q = queries[next + i];
      futures.push_back(std::async(std::launch::async, [&fn, &q] { return fn(q); }));
    }
    for (std::size_t i = 0; i < chunk; ++i) {
      consume(queries[next + i], std::move(futures[i]));
    }
    next += chunk;
  }
}

}  // namespace

AugmentResult augment_dataset(GenerationProvider& provider, const UnlabeledQuerySet& queries,
                              int parallelism) {
  AugmentResult result;
  result.report.queries_total = queries.queries.size();
  for_each_bounded(
      queries.queries, parallelism,
      [&provider](const UnlabeledQuery& q) { return provider.synthesize_group(q.text); },
      [&result](const UnlabeledQuery& q, std::future<AugmentedGroup> f) {
        try {
          AugmentedGroup group = f.get();
          auto pairs = pairs_from_group(q, group);
          result.report.groups_emitted += 1;
          result.report.pairs_total += pairs.size();
          for (auto& p : pairs) result.pairs.push_back(std::move(p));
        } catch (const std::exception& e) {
          result.report.failures.emplace_back(q.id, e.what());
        }
      });
  return result;
}

AugmentReport augment_to_file(GenerationProvider& provider, const UnlabeledQuerySet& queries,
                              const std::filesystem::path& out_path,
                              const std::filesystem::path& manifest_path, int parallelism) {
  AugmentReport report;
  report.queries_total = queries.queries.size();

  std::vector<std::string> completed;
  std::unordered_set<std::string> completed_set;
  if (std::filesystem::exists(manifest_path)) {
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(read_file(manifest_path));
      completed = m.at("completed_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(manifest_path.string() + ": bad resume manifest: " + e.what());
    }
    completed_set.insert(completed.begin(), completed.end());
  }

  std::vector<UnlabeledQuery> pending;
  for (const auto& q : queries.queries) {
    if (completed_set.contains(q.id)) {
      report.skipped_resume += 1;
    } else {
      pending.push_back(q);
    }
  }

  std::ofstream out(out_path, std::ios::app | std::ios::binary);
  if (!out) throw DataError("cannot open " + out_path.string() + " for append");

  auto write_manifest = [&] {
    nlohmann::ordered_json m;
    m["completed_ids"] = completed;
    write_file_atomic(manifest_path, m.dump(2) + "\n");
  };
  if (!std::filesystem::exists(manifest_path)) write_manifest();

  for_each_bounded(
      pending, parallelism,
      [&provider](const UnlabeledQuery& q) { return provider.synthesize_group(q.text); },
      [&](const UnlabeledQuery& q, std::future<AugmentedGroup> f) {
        AugmentedGroup group;
        try {
          group = f.get();
        } catch (const std::exception& e) {
          report.failures.emplace_back(q.id, e.what());
          return;
        }
        std::string lines;
        for (const auto& p : pairs_from_group(q, group)) {
          nlohmann::ordered_json j;
          j["group_id"] = p.group_id;
          j["anchor_id"] = p.anchor_id;
          j["anchor_text"] = p.anchor_text;
          j["candidate_id"] = p.candidate_id;
          j["candidate_text"] = p.candidate_text;
          j["polarity"] = to_string(p.polarity);
          j["source"] = to_string(p.source);
          lines += j.dump();
          lines += '\n';
          report.pairs_total += 1;
        }
        out << lines << std::flush;
        if (!out) throw DataError("write failed on " + out_path.string());
        report.groups_emitted += 1;
        completed.push_back(q.id);
        write_manifest();
      });
  return report;
}

std::map<std::string, std::string> translate_batch(GenerationProvider& provider,
                                                   std::span<const LabeledQuery> queries,
                                                   const std::string& target_language,
                                                   int parallelism) {
  if (parallelism < 1) parallelism = 1;
  std::map<std::string, std::string> out;
  std::size_t next = 0;
  while (next < queries.size()) {
    const std::size_t chunk = std::min<std::size_t>(parallelism, queries.size() - next);
    std::vector<std::future<std::string>> futures;
    futures.reserve(chunk);
    for (std::size_t i = 0; i < chunk; ++i) {
      const LabeledQuery& q = queries[next + i];
      futures.push_back(std::async(std::launch::async, [&provider, &q, &target_language] {
        return provider.translate(q.text, target_language);
      }));
    }
    for (std::size_t i = 0; i < chunk; ++i) {
      const LabeledQuery& q = queries[next + i];
      try {
        out[q.id] = futures[i].get();
      } catch (const std::exception& e) {
        throw ProviderError("translation failed for anchor \"" + q.id + "\": " + e.what());
      }
    }
    next += chunk;
  }
  return out;
}

}  // namespace xlkb
