#include "anomalygen/config.hpp"

#include <algorithm>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

using json = nlohmann::json;

constexpr const char* kLevels[] = {"TRACE", "DEBUG", "INFO", "WARN", "ERROR", "FATAL"};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field \"" + field + "\" " + why);
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + section);
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string get_string(const json& obj, const char* key, std::string dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_string()) fail(key, "must be a string");
  return v->get<std::string>();
}

bool get_bool(const json& obj, const char* key, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) fail(key, "must be a boolean");
  return v->get<bool>();
}

int get_int(const json& obj, const char* key, int dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) fail(key, "must be an integer");
  return v->get<int>();
}

double get_double(const json& obj, const char* key, double dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number()) fail(key, "must be a number");
  return v->get<double>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key,
                                         std::vector<std::string> dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_array()) fail(key, "must be an array of strings");
  std::vector<std::string> out;
  for (const json& item : *v) {
    if (!item.is_string()) fail(key, "must be an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::set<std::string> get_string_set(const json& obj, const char* key,
                                     std::set<std::string> dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  std::vector<std::string> list = get_string_list(obj, key, {});
  return std::set<std::string>(list.begin(), list.end());
}

LanguageConfig parse_language(const json& obj) {
  LanguageConfig lang;
  check_keys(obj, "language", {"extensions", "excluded_dirs"});
  lang.extensions = get_string_list(obj, "extensions", lang.extensions);
  lang.excluded_dirs = get_string_list(obj, "excluded_dirs", lang.excluded_dirs);
  return lang;
}

LoggingConfig parse_logging_apis(const json& arr) {
  if (!arr.is_array()) fail("logging_apis", "must be an array of {pattern, level} objects");
  LoggingConfig logging;
  for (const json& item : arr) {
    if (!item.is_object()) fail("logging_apis", "must be an array of {pattern, level} objects");
    check_keys(item, "logging_apis entry", {"pattern", "level"});
    LoggingApi api;
    api.pattern = get_string(item, "pattern", "");
    api.level = get_string(item, "level", "");
    if (api.pattern.empty()) fail("logging_apis.pattern", "must be a nonempty glob");
    try {
      util::validate_glob(api.pattern);
    } catch (const std::exception& e) {
      throw ConfigError("config field \"logging_apis.pattern\" rejects \"" + api.pattern +
                        "\": " + e.what());
    }
    bool known = std::any_of(std::begin(kLevels), std::end(kLevels),
                             [&](const char* l) { return api.level == l; });
    if (!known)
      fail("logging_apis.level",
           "must be one of TRACE/DEBUG/INFO/WARN/ERROR/FATAL, got \"" + api.level + "\"");
    logging.apis.push_back(std::move(api));
  }
  return logging;
}

LabelRuleSet parse_labels(const json& obj) {
  LabelRuleSet labels;
  check_keys(obj, "labels", {"severity_triggers", "exception_names", "keywords",
                             "status_patterns", "status_markers", "review_sample"});
  labels.severity_triggers = get_string_set(obj, "severity_triggers", labels.severity_triggers);
  labels.exception_names = get_string_set(obj, "exception_names", labels.exception_names);
  std::set<std::string> keywords = get_string_set(obj, "keywords", labels.keywords);
  labels.keywords.clear();
  for (const std::string& k : keywords) labels.keywords.insert(util::to_lower(k));
  labels.status_patterns = get_string_list(obj, "status_patterns", labels.status_patterns);
  for (const std::string& p : labels.status_patterns) {
    bool ok = !p.empty() && std::all_of(p.begin(), p.end(), [](char c) {
      return (c >= '0' && c <= '9') || c == 'x';
    });
    if (!ok)
      fail("labels.status_patterns",
           "entries must be digit/x strings like \"4xx\", got \"" + p + "\"");
  }
  labels.status_markers = get_string_set(obj, "status_markers", labels.status_markers);
  labels.review_sample = get_int(obj, "review_sample", labels.review_sample);
  return labels;
}

AssemblyBounds parse_bounds(const json& obj) {
  AssemblyBounds bounds;
  check_keys(obj, "bounds", {"max_local_paths_per_method", "max_sequences_per_entry",
                             "max_recursion_depth", "loop_unroll"});
  bounds.max_local_paths_per_method =
      get_int(obj, "max_local_paths_per_method", bounds.max_local_paths_per_method);
  bounds.max_sequences_per_entry =
      get_int(obj, "max_sequences_per_entry", bounds.max_sequences_per_entry);
  bounds.max_recursion_depth = get_int(obj, "max_recursion_depth", bounds.max_recursion_depth);
  const json* unroll = find(obj, "loop_unroll");
  if (unroll) {
    if (!unroll->is_array()) fail("loop_unroll", "must be an array of integers");
    bounds.loop_unroll.clear();
    for (const json& item : *unroll) {
      if (!item.is_number_integer()) fail("loop_unroll", "must be an array of integers");
      bounds.loop_unroll.insert(item.get<int>());
    }
  }
  return bounds;
}

ReasonerConfig parse_reasoner(const json& obj) {
  ReasonerConfig r;
  check_keys(obj, "reasoner",
             {"endpoint_url", "model_name", "api_key_env_var", "max_retries",
              "request_timeout_s", "max_inflight", "transcript_path"});
  r.endpoint_url = get_string(obj, "endpoint_url", r.endpoint_url);
  r.model_name = get_string(obj, "model_name", r.model_name);
  r.api_key_env_var = get_string(obj, "api_key_env_var", r.api_key_env_var);
  r.max_retries = get_int(obj, "max_retries", r.max_retries);
  r.request_timeout_s = get_int(obj, "request_timeout_s", r.request_timeout_s);
  r.max_inflight = get_int(obj, "max_inflight", r.max_inflight);
  r.transcript_path = get_string(obj, "transcript_path", r.transcript_path);
  return r;
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": config must be a JSON object");

  check_keys(root, "config",
             {"source_root", "output_dir", "mock", "seed", "ratio", "t_entry", "t_depth",
              "threads", "language", "logging_apis", "labels", "bounds", "reasoner",
              "real_train_path", "real_test_path"});

  PipelineConfig c;
  c.source_root = get_string(root, "source_root", "");
  c.output_dir = get_string(root, "output_dir", "");
  c.mock = get_bool(root, "mock", c.mock);
  if (const json* seed = find(root, "seed")) {
    if (!seed->is_number_unsigned()) fail("seed", "must be an unsigned integer");
    c.seed = seed->get<std::uint64_t>();
  }
  c.ratio = get_double(root, "ratio", c.ratio);
  c.t_entry = get_int(root, "t_entry", c.t_entry);
  c.t_depth = get_int(root, "t_depth", c.t_depth);
  c.threads = get_int(root, "threads", c.threads);
  if (const json* lang = find(root, "language")) {
    if (!lang->is_object()) fail("language", "must be an object");
    c.language = parse_language(*lang);
  }
  if (const json* apis = find(root, "logging_apis")) c.logging = parse_logging_apis(*apis);
  if (const json* labels = find(root, "labels")) {
    if (!labels->is_object()) fail("labels", "must be an object");
    c.labels = parse_labels(*labels);
  }
  if (const json* bounds = find(root, "bounds")) {
    if (!bounds->is_object()) fail("bounds", "must be an object");
    c.bounds = parse_bounds(*bounds);
  }
  if (const json* reasoner = find(root, "reasoner")) {
    if (!reasoner->is_object()) fail("reasoner", "must be an object");
    c.reasoner = parse_reasoner(*reasoner);
  }
  c.real_train_path = get_string(root, "real_train_path", "");
  c.real_test_path = get_string(root, "real_test_path", "");
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::optional<std::string> text = util::read_file(path);
  if (!text) throw ConfigError("cannot read config file " + path);
  PipelineConfig c = config_from_json_text(*text, path);
  validate_config(c);
  return c;
}

void validate_config(const PipelineConfig& c) {
  if (c.source_root.empty()) fail("source_root", "is required");
  if (c.output_dir.empty()) fail("output_dir", "is required");
  if (c.mock && !c.seed.has_value()) fail("seed", "is required in mock mode");
  if (!c.mock) {
    if (c.reasoner.endpoint_url.empty())
      fail("reasoner.endpoint_url", "is required in live mode");
    if (c.reasoner.api_key_env_var.empty())
      fail("reasoner.api_key_env_var", "is required in live mode");
  }
  if (c.ratio < 0.0) fail("ratio", "must be >= 0");
  if (c.t_entry < 1) fail("t_entry", "must be >= 1");
  if (c.t_depth < 1) fail("t_depth", "must be >= 1");
  if (c.threads < 0) fail("threads", "must be >= 0");
  if (c.bounds.max_local_paths_per_method < 1)
    fail("bounds.max_local_paths_per_method", "must be >= 1");
  if (c.bounds.max_sequences_per_entry < 1)
    fail("bounds.max_sequences_per_entry", "must be >= 1");
  if (c.bounds.max_recursion_depth < 1) fail("bounds.max_recursion_depth", "must be >= 1");
  if (c.bounds.loop_unroll.empty()) fail("bounds.loop_unroll", "must be nonempty");
  for (int u : c.bounds.loop_unroll)
    if (u < 0 || u > 2) fail("bounds.loop_unroll", "entries must be in {0, 1, 2}");
  if (c.labels.severity_triggers.empty()) fail("labels.severity_triggers", "must be nonempty");
  if (c.labels.exception_names.empty()) fail("labels.exception_names", "must be nonempty");
  if (c.labels.keywords.empty()) fail("labels.keywords", "must be nonempty");
  if (c.labels.status_patterns.empty()) fail("labels.status_patterns", "must be nonempty");
  if (c.labels.status_markers.empty()) fail("labels.status_markers", "must be nonempty");
  if (c.labels.review_sample < 0) fail("labels.review_sample", "must be >= 0");
  if (c.reasoner.max_retries < 0) fail("reasoner.max_retries", "must be >= 0");
  if (c.reasoner.request_timeout_s < 1) fail("reasoner.request_timeout_s", "must be >= 1");
  if (c.reasoner.max_inflight < 1) fail("reasoner.max_inflight", "must be >= 1");
}

std::string config_to_canonical_json(const PipelineConfig& c) {
  json j;  // plain json sorts keys alphabetically — that is the canonical order
  j["source_root"] = c.source_root;
  j["output_dir"] = c.output_dir;
  j["mock"] = c.mock;
  if (c.seed)
    j["seed"] = *c.seed;
  else
    j["seed"] = nullptr;
  j["ratio"] = c.ratio;
  j["t_entry"] = c.t_entry;
  j["t_depth"] = c.t_depth;
  j["threads"] = c.threads;
  j["language"] = {{"extensions", c.language.extensions},
                   {"excluded_dirs", c.language.excluded_dirs}};
  json apis = json::array();
  for (const LoggingApi& api : c.logging.apis)
    apis.push_back({{"pattern", api.pattern}, {"level", api.level}});
  j["logging_apis"] = std::move(apis);
  j["labels"] = {
      {"severity_triggers", c.labels.severity_triggers},
      {"exception_names", c.labels.exception_names},
      {"keywords", c.labels.keywords},
      {"status_patterns", c.labels.status_patterns},
      {"status_markers", c.labels.status_markers},
      {"review_sample", c.labels.review_sample},
  };
  j["bounds"] = {
      {"max_local_paths_per_method", c.bounds.max_local_paths_per_method},
      {"max_sequences_per_entry", c.bounds.max_sequences_per_entry},
      {"max_recursion_depth", c.bounds.max_recursion_depth},
      {"loop_unroll", c.bounds.loop_unroll},
  };
  j["reasoner"] = {
      {"endpoint_url", c.reasoner.endpoint_url},
      {"model_name", c.reasoner.model_name},
      {"api_key_env_var", c.reasoner.api_key_env_var},
      {"max_retries", c.reasoner.max_retries},
      {"request_timeout_s", c.reasoner.request_timeout_s},
      {"max_inflight", c.reasoner.max_inflight},
      {"transcript_path", c.reasoner.transcript_path},
  };
  j["real_train_path"] = c.real_train_path;
  j["real_test_path"] = c.real_test_path;
  return j.dump();
}

}  // namespace anomalygen
