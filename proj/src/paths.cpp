#include "anomalygen/paths.hpp"

#include <algorithm>
#include <map>

namespace anomalygen {

namespace {

int edge_rank(EdgeKind k) {
  switch (k) {
    case EdgeKind::True: return 0;
    case EdgeKind::False: return 1;
    case EdgeKind::Case: return 2;
    default: return 3;  // seq / back / exception keep insertion order
  }
}

std::string call_condition(const LcfgNode& n) {
  std::string s = n.callee + "(";
  for (std::size_t i = 0; i < n.arg_texts.size(); ++i) {
    if (i) s += ", ";
    s += n.arg_texts[i];
  }
  return s + ")";
}

struct Enumerator {
  const Lcfg& g;
  const AssemblyBounds& bounds;
  int max_unroll;
  std::vector<std::vector<const LcfgEdge*>> out_edges;
  LocalPathSet result;

  std::vector<PathStep> steps;
  std::vector<PathCondition> conditions;
  std::map<int, int> loop_counts;  // loop-header node -> body entries on this path

  Enumerator(const Lcfg& lcfg, const AssemblyBounds& b)
      : g(lcfg), bounds(b), max_unroll(*std::max_element(b.loop_unroll.begin(), b.loop_unroll.end())) {
    out_edges.resize(g.nodes.size());
    for (const LcfgEdge& e : g.edges) out_edges[e.from].push_back(&e);
    for (auto& edges : out_edges)
      std::stable_sort(edges.begin(), edges.end(), [](const LcfgEdge* a, const LcfgEdge* b2) {
        return edge_rank(a->kind) < edge_rank(b2->kind);
      });
  }

  // Returns false once the path cap is hit, unwinding the whole DFS.
  bool walk(int node) {
    const LcfgNode& n = g.nodes[node];
    if (n.kind == LcfgNodeKind::Exit) {
      if (static_cast<int>(result.paths.size()) >= bounds.max_local_paths_per_method) {
        result.truncated = true;
        return false;
      }
      LocalPath p;
      p.method_id = g.method_id;
      p.steps = steps;
      p.conditions = conditions;
      result.paths.push_back(std::move(p));
      return true;
    }

    bool pushed_step = false;
    if (n.kind == LcfgNodeKind::Log) {
      PathStep s;
      s.kind = PathStep::Kind::Log;
      s.template_id = n.template_id;
      s.line = n.line;
      steps.push_back(s);
      pushed_step = true;
    } else if (n.kind == LcfgNodeKind::Call) {
      PathStep s;
      s.kind = PathStep::Kind::Call;
      s.callee = n.callee;
      s.arg_texts = n.arg_texts;
      s.call_node = n.call_node;
      s.cond_prefix = conditions.size();
      s.line = n.line;
      steps.push_back(s);
      pushed_step = true;
    }

    bool keep_going = true;
    for (const LcfgEdge* e : out_edges[node]) {
      if (!keep_going) break;
      if (n.kind == LcfgNodeKind::Branch && n.loop_header) {
        int count = loop_counts[node];
        if (e->kind == EdgeKind::True) {
          // Enter the body only while below the unroll ceiling.
          if (count >= max_unroll) continue;
          loop_counts[node] = count + 1;
          conditions.push_back({n.condition, "true"});
          keep_going = walk(e->to);
          conditions.pop_back();
          loop_counts[node] = count;
        } else if (e->kind == EdgeKind::False) {
          // Leave only when the accumulated count is an admissible unrolling.
          if (!bounds.loop_unroll.count(count)) continue;
          conditions.push_back({n.condition, "false"});
          keep_going = walk(e->to);
          conditions.pop_back();
        }
        continue;
      }
      if (n.kind == LcfgNodeKind::Branch) {
        std::string taken = e->kind == EdgeKind::True    ? "true"
                            : e->kind == EdgeKind::False ? "false"
                                                         : e->label;
        conditions.push_back({n.condition, std::move(taken)});
        keep_going = walk(e->to);
        conditions.pop_back();
        continue;
      }
      if (n.kind == LcfgNodeKind::Call && e->kind == EdgeKind::Exception) {
        conditions.push_back({call_condition(n), "exception"});
        keep_going = walk(e->to);
        conditions.pop_back();
        continue;
      }
      keep_going = walk(e->to);
    }

    if (pushed_step) steps.pop_back();
    return keep_going;
  }
};

}  // namespace

LocalPathSet enumerate_local_paths(const Lcfg& lcfg, const AssemblyBounds& bounds) {
  if (bounds.loop_unroll.empty()) throw ConfigError("loop_unroll must not be empty");
  Enumerator e(lcfg, bounds);
  e.walk(lcfg.entry);
  return std::move(e.result);
}

std::string render_path(const LocalPath& path) {
  std::string out;
  for (const PathStep& s : path.steps) {
    if (!out.empty()) out += " ";
    if (s.kind == PathStep::Kind::Log)
      out += "tmpl:" + std::to_string(s.template_id);
    else
      out += "call:" + s.callee;
  }
  return out;
}

}  // namespace anomalygen
