#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anomalygen/callgraph.hpp"
#include "anomalygen/reasoner.hpp"

namespace anomalygen {

struct SeqEvent {
  std::uint64_t template_id = 0;
  std::string method_id;  // emitting method
};

// One stack frame's contribution: events[event_begin, event_end) were emitted
// while this frame was on top (nested callee spans excluded by depth).
struct FrameSpan {
  int depth = 0;
  std::string method_id;
  std::size_t path_index = 0;  // index into that method's enumerated LocalPaths
  std::size_t event_begin = 0;
  std::size_t event_end = 0;
};

struct CandidateSequence {
  std::string sequence_id;  // entry + "#" + ordinal; stable under fixed bounds
  std::string entry;
  std::vector<SeqEvent> events;
  std::vector<std::string> context;    // rendered conditions + bindings, per frame
  std::vector<Verdict> verdict_trace;  // accepting verdicts for this sequence's merges
  std::vector<FrameSpan> stack_trace;  // DFS order, parent before children
  bool recursion_cut = false;
};

struct AssemblyStats {
  std::size_t merge_checks = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t failed = 0;
};

struct AssemblyResult {
  std::vector<CandidateSequence> sequences;
  std::vector<Verdict> all_verdicts;  // every merge decision, attempt order
  AssemblyStats stats;                // accepted + rejected + failed == merge_checks
  bool truncated = false;             // hit max_sequences_per_entry
  std::map<std::string, LocalPathSet> local_paths;  // per subgraph member
};

// Depth-first product expansion of the entry's local paths. At each call step
// the caller context (bindings + conditions accumulated across the stack) is
// pushed; every callee local path is gated by reasoner.verify_merge — an
// accepted path's events splice in contiguously at the call position, a
// rejected path is dropped, a failure abandons that continuation. A call site
// whose callee paths are all rejected kills the continuation (the context
// contradicts every callee behavior). Calls to methods outside the subgraph
// contribute zero events; recursion beyond max_recursion_depth is cut and
// flagged. Output order is deterministic; truncation at
// max_sequences_per_entry is flagged on the result.
AssemblyResult assemble(const Subgraph& subgraph, const std::map<std::string, Lcfg>& lcfgs,
                        const ProjectIndex& index, Reasoner& reasoner,
                        const AssemblyBounds& bounds);

struct ParamEvent {
  std::uint64_t template_id = 0;
  std::string method_id;
  std::string level;
  std::string message;  // pattern with every <*> substituted
};

struct ParameterizedSequence {
  std::string sequence_id;
  std::string entry;
  std::vector<ParamEvent> events;
  std::vector<std::string> context;
  bool recursion_cut = false;
  bool mock_fallback = false;  // live instantiation fell back to mock values
};

// One reasoner request per sequence; every placeholder substituted in order.
ParameterizedSequence instantiate_parameters(const CandidateSequence& seq,
                                             const std::map<std::uint64_t, LogTemplate>& templates,
                                             Reasoner& reasoner);

// Acceptance-style integrity checks, also used inside tests.
bool check_well_nested(const CandidateSequence& seq, std::string* error);
// Projects each frame back onto its recorded LocalPath: logs must line up
// exactly, member calls must own a child frame at the call position (unless
// the sequence is recursion-cut), non-member calls contribute nothing.
bool check_frame_projection(const CandidateSequence& seq,
                            const std::map<std::string, LocalPathSet>& paths,
                            const std::set<std::string>& members, std::string* error);

// Debug dump: one line per sequence — id, entry, template id list.
std::string render_sequences(const std::vector<CandidateSequence>& seqs);

}  // namespace anomalygen
