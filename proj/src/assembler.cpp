#include "anomalygen/assembler.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "anomalygen/paths.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

std::string render_frame_context(const std::string& method, std::size_t path_index,
                                 const std::vector<Binding>& bindings,
                                 const std::vector<PathCondition>& conditions) {
  std::string out = method + " path " + std::to_string(path_index);
  out += " | bindings:";
  if (bindings.empty()) out += " (none)";
  for (const Binding& b : bindings) out += " " + b.param + " = " + b.arg_text;
  out += " | conditions:";
  if (conditions.empty()) out += " (none)";
  for (const PathCondition& c : conditions) out += " " + c.condition + " [" + c.taken + "]";
  return out;
}

std::vector<Binding> make_bindings(const MethodDecl& callee, const PathStep& step) {
  std::vector<Binding> out;
  std::size_t n = std::min(callee.params.size(), step.arg_texts.size());
  for (std::size_t i = 0; i < n; ++i) {
    Binding b;
    b.param = callee.params[i].name;
    b.type = callee.params[i].type;
    b.arg_text = step.arg_texts[i];
    if (step.call_node != nullptr && i < step.call_node->args.size()) {
      const Expr& arg = step.call_node->args[i];
      b.arg_is_null = arg.is_literal_null();
      if (arg.is_literal_bool()) {
        b.arg_is_bool = true;
        b.bool_value = arg.text == "true";
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

// Depth-first product expansion over the entry's local paths. All mutable
// traversal state lives here; every mutation made while exploring one choice
// is rolled back when that choice is exhausted, so sibling choices always see
// the identical prefix state (this is what makes the output order a pure
// function of the inputs).
class Expander {
 public:
  Expander(const Subgraph& sg, const ProjectIndex& index, Reasoner& reasoner,
           const AssemblyBounds& bounds, AssemblyResult& out)
      : sg_(sg), index_(index), reasoner_(reasoner), bounds_(bounds), out_(out),
        members_(sg.members.begin(), sg.members.end()) {}

  void run() {
    const LocalPathSet& entry_paths = out_.local_paths.at(sg_.entry);
    for (std::size_t pi = 0; pi < entry_paths.paths.size(); ++pi) {
      const LocalPath& path = entry_paths.paths[pi];
      frames_.push_back({0, sg_.entry, pi, 0, 0});
      contexts_.push_back(render_frame_context(sg_.entry, pi, {}, path.conditions));
      ++on_stack_[sg_.entry];
      active_.push_back({&path, 0, 0, sg_.entry, 0});
      bool keep_going = walk(0);
      active_.pop_back();
      --on_stack_[sg_.entry];
      contexts_.pop_back();
      frames_.pop_back();
      if (!keep_going) break;
    }
  }

 private:
  struct ActiveFrame {
    const LocalPath* path = nullptr;
    std::size_t cond_mark = 0;   // conds_ size when this frame was pushed
    std::size_t frame_slot = 0;  // index into frames_
    std::string method;
    std::size_t resume_step = 0;  // parent's next step once this frame finishes
  };

  // Processes the top frame from step index i onward. Returns false only on
  // the global stop (sequence cap reached), which unwinds the whole walk.
  bool walk(std::size_t i) {
    const ActiveFrame fr = active_.back();
    const LocalPath& path = *fr.path;

    if (i == path.steps.size()) {
      frames_[fr.frame_slot].event_end = events_.size();
      std::vector<PathCondition> cond_saved = conds_;
      conds_.resize(fr.cond_mark);  // popped frames drop off the condition stack
      bool keep_going;
      if (active_.size() == 1) {
        keep_going = emit();
      } else {
        ActiveFrame popped = active_.back();
        active_.pop_back();
        --on_stack_[popped.method];
        keep_going = walk(popped.resume_step);
        ++on_stack_[popped.method];
        active_.push_back(popped);
      }
      conds_ = std::move(cond_saved);
      return keep_going;
    }

    const PathStep& step = path.steps[i];
    if (step.kind == PathStep::Kind::Log) {
      events_.push_back({step.template_id, fr.method});
      bool keep_going = walk(i + 1);
      events_.pop_back();
      return keep_going;
    }

    // Call step.
    if (members_.count(step.callee) == 0) return walk(i + 1);  // zero events

    // Conditions established in this frame before the call become visible to
    // the merge check (cond_prefix counts them).
    std::vector<PathCondition> cond_saved = conds_;
    std::size_t want = fr.cond_mark + step.cond_prefix;
    while (conds_.size() < want) conds_.push_back(path.conditions[conds_.size() - fr.cond_mark]);

    bool keep_going = true;
    int& stack_count = on_stack_[step.callee];
    if (stack_count >= bounds_.max_recursion_depth) {
      bool cut_saved = cut_;
      cut_ = true;  // the call contributes zero events; the sequence is flagged
      keep_going = walk(i + 1);
      cut_ = cut_saved;
      conds_ = std::move(cond_saved);
      return keep_going;
    }

    const MethodDecl& callee_decl = index_.methods.at(step.callee);
    const MethodDecl& caller_decl = index_.methods.at(fr.method);
    std::vector<Binding> bindings = make_bindings(callee_decl, step);
    MergeContext context;
    context.caller_conditions = conds_;
    context.bindings = bindings;
    context.callee_method_id = step.callee;
    std::vector<std::string> hints = {
        "call site at line " + std::to_string(step.line) + " in " + fr.method,
        "callee declared in " + callee_decl.unit_path + " at line " +
            std::to_string(callee_decl.line),
        "call stack depth " + std::to_string(active_.size()),
    };

    const LocalPathSet& callee_paths = out_.local_paths.at(step.callee);
    for (std::size_t pi = 0; pi < callee_paths.paths.size() && keep_going; ++pi) {
      const LocalPath& callee_path = callee_paths.paths[pi];
      PromptDoc doc = build_verification_prompt(caller_decl, context, callee_path, hints);
      Verdict verdict = reasoner_.verify_merge(doc);
      out_.all_verdicts.push_back(verdict);
      ++out_.stats.merge_checks;
      if (verdict.failed) {
        ++out_.stats.failed;  // branch abandoned, never silently dropped
        continue;
      }
      if (!verdict.valid) {
        ++out_.stats.rejected;
        continue;
      }
      ++out_.stats.accepted;

      frames_.push_back({static_cast<int>(active_.size()), step.callee, pi, events_.size(),
                         events_.size()});
      contexts_.push_back(
          render_frame_context(step.callee, pi, bindings, callee_path.conditions));
      trace_.push_back(verdict);
      ++stack_count;
      active_.push_back({&callee_path, conds_.size(), frames_.size() - 1, step.callee, i + 1});
      keep_going = walk(0);
      active_.pop_back();
      --stack_count;
      trace_.pop_back();
      contexts_.pop_back();
      frames_.pop_back();
    }
    conds_ = std::move(cond_saved);
    return keep_going;
  }

  bool emit() {
    if (out_.sequences.size() >= static_cast<std::size_t>(bounds_.max_sequences_per_entry)) {
      out_.truncated = true;
      return false;
    }
    CandidateSequence seq;
    seq.entry = sg_.entry;
    seq.sequence_id = sg_.entry + "#" + std::to_string(out_.sequences.size());
    seq.events = events_;
    seq.context = contexts_;
    seq.verdict_trace = trace_;
    seq.stack_trace = frames_;
    seq.recursion_cut = cut_;
    out_.sequences.push_back(std::move(seq));
    return true;
  }

  const Subgraph& sg_;
  const ProjectIndex& index_;
  Reasoner& reasoner_;
  const AssemblyBounds& bounds_;
  AssemblyResult& out_;
  std::set<std::string> members_;

  std::vector<ActiveFrame> active_;
  std::vector<SeqEvent> events_;
  std::vector<FrameSpan> frames_;
  std::vector<std::string> contexts_;
  std::vector<Verdict> trace_;
  std::vector<PathCondition> conds_;
  std::map<std::string, int> on_stack_;
  bool cut_ = false;
};

}  // namespace

AssemblyResult assemble(const Subgraph& subgraph, const std::map<std::string, Lcfg>& lcfgs,
                        const ProjectIndex& index, Reasoner& reasoner,
                        const AssemblyBounds& bounds) {
  if (bounds.max_sequences_per_entry < 1)
    throw ConfigError("max_sequences_per_entry must be positive");
  if (bounds.max_recursion_depth < 1) throw ConfigError("max_recursion_depth must be positive");
  if (bounds.max_local_paths_per_method < 1)
    throw ConfigError("max_local_paths_per_method must be positive");

  AssemblyResult result;
  for (const std::string& member : subgraph.members) {
    auto it = lcfgs.find(member);
    if (it == lcfgs.end())
      throw StageError("assembler", "no lcfg for subgraph member " + member);
    if (index.methods.find(member) == index.methods.end())
      throw StageError("assembler", "subgraph member not in the project index: " + member);
    result.local_paths[member] = enumerate_local_paths(it->second, bounds);
  }
  if (result.local_paths.find(subgraph.entry) == result.local_paths.end())
    throw StageError("assembler", "entry " + subgraph.entry + " is not a subgraph member");

  Expander expander(subgraph, index, reasoner, bounds, result);
  expander.run();
  return result;
}

ParameterizedSequence instantiate_parameters(const CandidateSequence& seq,
                                             const std::map<std::uint64_t, LogTemplate>& templates,
                                             Reasoner& reasoner) {
  std::vector<EventToFill> fills;
  for (const SeqEvent& e : seq.events) {
    auto it = templates.find(e.template_id);
    if (it == templates.end())
      throw StageError("assembler",
                       "sequence " + seq.sequence_id + " references unknown template id " +
                           std::to_string(e.template_id));
    fills.push_back({e.template_id, it->second.pattern, it->second.placeholder_kinds});
  }

  InstantiationResult values = reasoner.instantiate(seq.sequence_id, fills);
  if (values.values.size() != fills.size())
    throw StageError("assembler", "instantiation returned " +
                                      std::to_string(values.values.size()) + " value lists for " +
                                      std::to_string(fills.size()) + " events in " +
                                      seq.sequence_id);

  ParameterizedSequence out;
  out.sequence_id = seq.sequence_id;
  out.entry = seq.entry;
  out.context = seq.context;
  out.recursion_cut = seq.recursion_cut;
  out.mock_fallback = values.mock_fallback;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const LogTemplate& tmpl = templates.at(seq.events[i].template_id);
    ParamEvent ev;
    ev.template_id = seq.events[i].template_id;
    ev.method_id = seq.events[i].method_id;
    ev.level = tmpl.level;
    ev.message = render_message(tmpl.pattern, values.values[i]);
    out.events.push_back(std::move(ev));
  }
  return out;
}

bool check_well_nested(const CandidateSequence& seq, std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error != nullptr) *error = msg;
    return false;
  };
  const std::vector<FrameSpan>& fs = seq.stack_trace;
  if (fs.empty()) return fail("sequence has no stack frames");
  if (fs[0].depth != 0) return fail("root frame depth is not 0");
  if (fs[0].event_begin != 0 || fs[0].event_end != seq.events.size())
    return fail("root frame does not span all events");
  if (fs[0].method_id != seq.entry) return fail("root frame method differs from the entry");

  struct Open {
    const FrameSpan* frame;
    std::size_t cursor;  // next event position a new child may start at
  };
  std::vector<Open> stack = {{&fs[0], fs[0].event_begin}};
  for (std::size_t i = 1; i < fs.size(); ++i) {
    const FrameSpan& f = fs[i];
    if (f.event_begin > f.event_end || f.event_end > seq.events.size())
      return fail("frame " + std::to_string(i) + " span is out of range");
    while (!stack.empty() && stack.back().frame->depth >= f.depth) stack.pop_back();
    if (stack.empty()) return fail("frame " + std::to_string(i) + " has no enclosing parent");
    Open& parent = stack.back();
    if (f.depth != parent.frame->depth + 1)
      return fail("frame " + std::to_string(i) + " depth must be its parent's depth + 1");
    if (f.event_begin < parent.cursor || f.event_end > parent.frame->event_end)
      return fail("frame " + std::to_string(i) + " escapes its parent or overlaps a sibling");
    parent.cursor = f.event_end;
    stack.push_back({&f, f.event_begin});
  }
  return true;
}

bool check_frame_projection(const CandidateSequence& seq,
                            const std::map<std::string, LocalPathSet>& paths,
                            const std::set<std::string>& members, std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error != nullptr) *error = msg;
    return false;
  };
  const std::vector<FrameSpan>& fs = seq.stack_trace;
  if (fs.empty()) return fail("sequence has no stack frames");

  // Recover the parent of each frame by replaying the DFS order, then check
  // every frame against its recorded local path.
  std::vector<std::vector<std::size_t>> children(fs.size());
  std::vector<std::size_t> stack = {0};
  for (std::size_t i = 1; i < fs.size(); ++i) {
    while (!stack.empty() && fs[stack.back()].depth >= fs[i].depth) stack.pop_back();
    if (stack.empty()) return fail("frame " + std::to_string(i) + " has no enclosing parent");
    children[stack.back()].push_back(i);
    stack.push_back(i);
  }

  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    const FrameSpan& f = fs[fi];
    auto pit = paths.find(f.method_id);
    if (pit == paths.end())
      return fail("no enumerated paths for frame method " + f.method_id);
    if (f.path_index >= pit->second.paths.size())
      return fail("frame path index out of range for " + f.method_id);
    const LocalPath& path = pit->second.paths[f.path_index];

    std::size_t cursor = f.event_begin;
    std::size_t ci = 0;
    for (const PathStep& step : path.steps) {
      if (step.kind == PathStep::Kind::Log) {
        if (ci < children[fi].size() && fs[children[fi][ci]].event_begin == cursor)
          return fail("child frame found where " + f.method_id + " should emit a log");
        if (cursor >= f.event_end)
          return fail("frame " + f.method_id + " ran out of events mid-path");
        if (seq.events[cursor].template_id != step.template_id ||
            seq.events[cursor].method_id != f.method_id)
          return fail("event " + std::to_string(cursor) + " does not match the path of " +
                      f.method_id);
        ++cursor;
        continue;
      }
      // Call step.
      if (members.count(step.callee) == 0) continue;  // contributes nothing
      if (ci < children[fi].size() && fs[children[fi][ci]].event_begin == cursor &&
          fs[children[fi][ci]].method_id == step.callee) {
        cursor = fs[children[fi][ci]].event_end;
        ++ci;
      } else if (!seq.recursion_cut) {
        return fail("member call to " + step.callee + " in " + f.method_id +
                    " has no child frame and the sequence is not recursion-cut");
      }
    }
    if (cursor != f.event_end)
      return fail("frame " + f.method_id + " leaves events unconsumed");
    if (ci != children[fi].size())
      return fail("frame " + f.method_id + " has child frames its path never calls");
  }
  return true;
}

std::string render_sequences(const std::vector<CandidateSequence>& seqs) {
  std::ostringstream os;
  for (const CandidateSequence& s : seqs) {
    os << s.sequence_id << " " << s.entry << " [";
    for (std::size_t i = 0; i < s.events.size(); ++i)
      os << (i ? "," : "") << s.events[i].template_id;
    os << "]\n";
  }
  return os.str();
}

}  // namespace anomalygen
