#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace anomalygen {

// Exit-code-bearing error categories. The CLI maps these to process status:
// ConfigError -> 1, StageError -> 2, GuardViolation -> 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("[" + stage_name + "] " + what), stage(std::move(stage_name)) {}
};
struct GuardViolation : std::runtime_error {
  explicit GuardViolation(const std::string& what) : std::runtime_error(what) {}
};

struct LoggingApi {
  std::string pattern;  // glob over qualified callee keys, e.g. "*.Logger.info"
  std::string level;    // TRACE/DEBUG/INFO/WARN/ERROR/FATAL
};

struct LanguageConfig {
  std::vector<std::string> extensions = {".java"};
  std::vector<std::string> excluded_dirs = {};
};

struct LoggingConfig {
  std::vector<LoggingApi> apis;
};

struct LabelRuleSet {
  std::set<std::string> severity_triggers = {"ERROR", "FATAL"};
  std::set<std::string> exception_names = {"IOError", "NullPointerException"};
  std::set<std::string> keywords = {"timeout", "refused", "invalid state"};  // lowercase
  std::vector<std::string> status_patterns = {"4xx", "5xx"};
  // A status code only counts when one of these markers precedes it; keeps
  // block ids and counters from matching.
  std::set<std::string> status_markers = {"status", "code", "http"};
  int review_sample = 5;
};

struct AssemblyBounds {
  int max_local_paths_per_method = 64;
  int max_sequences_per_entry = 256;
  int max_recursion_depth = 1;
  std::set<int> loop_unroll = {0, 1};  // subset of {0,1,2}, nonempty
};

struct ReasonerConfig {
  std::string endpoint_url;       // base; requests go to {endpoint_url}/chat/completions
  std::string model_name;
  std::string api_key_env_var;    // env var holding the bearer token
  int max_retries = 2;
  int request_timeout_s = 30;
  int max_inflight = 4;
  std::string transcript_path;    // live request/response record, one JSON per line
  // temperature is fixed at 0 by contract and deliberately absent here.
};

struct PipelineConfig {
  std::string source_root;
  std::string output_dir;
  bool mock = true;
  std::optional<std::uint64_t> seed;  // required in mock mode
  double ratio = 1.0;                 // augmentation ratio R
  int t_entry = 4;
  int t_depth = 3;
  int threads = 0;  // 0 = hardware concurrency
  LanguageConfig language;
  LoggingConfig logging;
  LabelRuleSet labels;
  AssemblyBounds bounds;
  ReasonerConfig reasoner;
  std::string real_train_path;  // real sessions for the augment stage
  std::string real_test_path;
};

// Loads and validates a JSON config file. Unknown keys are rejected and every
// failure names the offending field. Glob patterns and levels are validated
// here so bad logging configs fail before any parsing starts.
PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_json_text(const std::string& text, const std::string& origin);

// Canonical JSON of the resolved effective config (sorted keys, no file paths
// resolved); its hash goes into the run manifest.
std::string config_to_canonical_json(const PipelineConfig& config);

void validate_config(const PipelineConfig& config);  // throws ConfigError

}  // namespace anomalygen
