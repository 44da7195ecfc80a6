#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomalygen/assembler.hpp"
#include "anomalygen/config.hpp"

namespace anomalygen {

enum class RuleKind { Severity, Exception, Keyword, Status };

const char* rule_kind_name(RuleKind k);

struct LabelEvidence {
  RuleKind rule = RuleKind::Severity;
  std::size_t event_index = 0;
  std::string matched;  // trigger level / exception name / keyword / status code
};

struct Session {
  std::string session_id;
  std::string label;       // "normal" | "anomalous"
  std::string provenance;  // "synthetic" | "real"
  std::string context;
  std::vector<ParamEvent> events;
  std::vector<LabelEvidence> evidence;  // nonempty iff anomalous
};

// Anomalous iff any event trips a severity trigger, contains an exception
// class name (case-sensitive token), contains a keyword (case-insensitive
// substring of the rendered message), or contains a marker-prefixed 4xx/5xx
// status code. Evidence is reported for every match, ordered by rule
// precedence (severity > exception > keyword > status) then event index.
struct LabelResult {
  std::string label;
  std::vector<LabelEvidence> evidence;
};
LabelResult label_sequence(const ParameterizedSequence& seq, const LabelRuleSet& rules);

// session_id = hex fnv1a64 over (entry, event template ids, seed); collisions
// dedup with a "-1", "-2" suffix counter (recorded by the caller).
Session make_session(const ParameterizedSequence& seq, const LabelResult& label,
                     std::uint64_t seed);

// Seeded uniform sample without replacement, rendered as a human-readable
// review bundle (events, label, evidence per session).
std::string sample_for_review(const std::vector<Session>& sessions, std::size_t n,
                              std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

// Re-runs the matcher behind each evidence item; used by the rule-soundness
// property test.
bool evidence_holds(const Session& session, const LabelRuleSet& rules);

}  // namespace anomalygen
