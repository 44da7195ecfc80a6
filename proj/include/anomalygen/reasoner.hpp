#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "anomalygen/ast.hpp"
#include "anomalygen/config.hpp"
#include "anomalygen/paths.hpp"

namespace anomalygen {

struct Verdict {
  bool valid = false;
  std::string rationale;      // nonempty whenever valid == false
  std::string source;         // "live" | "mock" | "replay"
  int attempts = 1;
  std::size_t token_estimate = 0;
  bool failed = false;        // transport/parse failure after all retries
};

// One caller-side parameter binding at a call site.
struct Binding {
  std::string param;
  std::string type;       // declared type text
  std::string arg_text;
  bool arg_is_null = false;
  bool arg_is_bool = false;
  bool bool_value = false;  // meaningful when arg_is_bool
};

// Structured inputs behind the rendered prompt. The mock consumes these (it
// never parses prose), so a PromptDoc fully determines both reasoner modes.
struct MergeContext {
  std::vector<PathCondition> caller_conditions;  // accumulated along the stack
  std::vector<Binding> bindings;
  std::string callee_method_id;
};

struct PromptSections {
  std::string caller_source;  // verbatim method source
  std::string callee_path;    // rendered candidate path segment
  std::string hints;          // static hints, one per line
};

struct PromptDoc {
  PromptSections sections;
  MergeContext meta;
  std::vector<PathCondition> callee_conditions;
  std::string rendered;  // full prompt; fixed section order and delimiters
};

PromptDoc build_verification_prompt(const MethodDecl& caller, const MergeContext& context,
                                    const LocalPath& callee_path,
                                    const std::vector<std::string>& hints);

// Extracts the decision from a raw reply: the LAST well-formed JSON object
// containing a boolean `valid` wins; surrounding prose and code fences are
// tolerated. A reply with no such object — or valid=false without a nonempty
// rationale — is malformed (ok=false) and triggers a retry upstream. Fields
// are never fabricated.
struct ParsedVerdict {
  bool ok = false;
  bool valid = false;
  std::string rationale;
  std::string error;  // set when !ok
};
ParsedVerdict parse_verdict(const std::string& raw);

// Per-event fill request for parameter instantiation.
struct EventToFill {
  std::uint64_t template_id = 0;
  std::string pattern;
  std::vector<PlaceholderKind> kinds;
};

struct InstantiationResult {
  std::vector<std::vector<std::string>> values;  // one list per event, in order
  bool mock_fallback = false;  // live reply unusable; mock values substituted
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  // Gate for one (caller context, callee path) merge.
  virtual Verdict verify_merge(const PromptDoc& prompt) = 0;
  // One request per sequence: values for every placeholder of every event.
  virtual InstantiationResult instantiate(const std::string& sequence_id,
                                          const std::vector<EventToFill>& events) = 0;
  virtual std::string mode() const = 0;
};

// Deterministic rule-based mock. Rejects a merge iff (a) the callee path's
// first branch condition is a null-check on a parameter bound to a literal
// null argument and the taken branch contradicts that binding, or (b) any
// boolean-parameter condition on the path is contradicted by a literal
// boolean argument. Everything else is accepted. Parameter values are a pure
// function of (seed, sequence_id, event index, placeholder index).
std::unique_ptr<Reasoner> make_mock_reasoner(std::uint64_t seed);

// Chat-completion client: POST {endpoint_url}/chat/completions with
// {model, messages:[system,user], temperature:0}; bearer token from the
// configured environment variable; exponential backoff up to max_retries;
// every request/response appended to the transcript file. The seed feeds the
// mock fallback for unusable instantiation replies.
std::unique_ptr<Reasoner> make_live_reasoner(const ReasonerConfig& config, std::uint64_t seed);

// Serves recorded replies from a transcript (keyed by request hash); a prompt
// absent from the transcript is a hard error. Enables offline re-runs.
std::unique_ptr<Reasoner> make_replay_reasoner(const std::string& transcript_path,
                                               std::uint64_t seed);

// Pattern with each <*> replaced by the next value, in order.
std::string render_message(const std::string& pattern, const std::vector<std::string>& values);

struct OverheadReport {
  std::size_t entries = 0;
  std::size_t merge_checks = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t failed = 0;
  std::size_t instantiations = 0;
  double calls_per_entry = 0.0;        // (merge_checks + instantiations) / entries
  double wall_time_per_entry_s = 0.0;  // live runs only; 0 for mock
  std::string render() const;
};

OverheadReport account(const std::vector<Verdict>& verdicts, std::size_t instantiations,
                       std::size_t entries, double wall_time_s = 0.0);

// Count of network connection attempts made by live reasoners in this
// process. Mock-mode runs must leave it at zero; asserted in tests.
std::uint64_t network_attempts();

}  // namespace anomalygen
