#include "anomalygen/callgraph.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <sstream>

#include "anomalygen/config.hpp"

namespace anomalygen {

namespace {

// Collect MethodCall / LogCall nodes of one body in source order.
void walk_calls(const AstNode& node, std::vector<const AstNode*>& out) {
  if (node.kind == NodeKind::MethodCall || node.kind == NodeKind::LogCall) out.push_back(&node);
  for (const AstNode& child : node.children) walk_calls(child, out);
}

std::map<std::string, std::vector<std::string>> adjacency(const CallGraph& g, bool reversed) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const CallEdge& e : g.edges) {
    if (reversed)
      adj[e.callee].push_back(e.caller);
    else
      adj[e.caller].push_back(e.callee);
  }
  for (auto& [node, next] : adj) {
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
  }
  return adj;
}

std::set<std::string> bfs_from(const std::set<std::string>& seeds,
                               const std::map<std::string, std::vector<std::string>>& adj) {
  std::set<std::string> seen = seeds;
  std::deque<std::string> queue(seeds.begin(), seeds.end());
  while (!queue.empty()) {
    std::string v = queue.front();
    queue.pop_front();
    auto it = adj.find(v);
    if (it == adj.end()) continue;
    for (const std::string& w : it->second)
      if (seen.insert(w).second) queue.push_back(w);
  }
  return seen;
}

// Tarjan SCC, iterative to survive deep synthetic graphs. Returns components
// in discovery order; callers sort as needed.
std::vector<std::vector<std::string>> strongly_connected(const CallGraph& g) {
  auto adj = adjacency(g, false);
  std::map<std::string, int> index_of, lowlink;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> components;
  int counter = 0;

  struct Frame {
    std::string node;
    std::size_t next_child = 0;
  };
  for (const std::string& root : g.nodes) {
    if (index_of.count(root)) continue;
    std::vector<Frame> frames;
    frames.push_back({root, 0});
    index_of[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack.insert(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      const std::vector<std::string>* next = nullptr;
      auto it = adj.find(f.node);
      if (it != adj.end()) next = &it->second;
      bool descended = false;
      while (next && f.next_child < next->size()) {
        const std::string& w = (*next)[f.next_child++];
        if (!index_of.count(w)) {
          index_of[w] = lowlink[w] = counter++;
          stack.push_back(w);
          on_stack.insert(w);
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack.count(w)) lowlink[f.node] = std::min(lowlink[f.node], index_of[w]);
      }
      if (descended) continue;
      // f.node finished.
      if (lowlink[f.node] == index_of[f.node]) {
        std::vector<std::string> comp;
        while (true) {
          std::string w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          comp.push_back(w);
          if (w == f.node) break;
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      std::string done = f.node;
      frames.pop_back();
      if (!frames.empty()) lowlink[frames.back().node] = std::min(lowlink[frames.back().node], lowlink[done]);
    }
  }
  return components;
}

bool has_self_loop(const CallGraph& g, const std::string& node) {
  for (const CallEdge& e : g.edges)
    if (e.caller == node && e.callee == node) return true;
  return false;
}

}  // namespace

const char* log_role_name(LogRole r) {
  switch (r) {
    case LogRole::Anchor: return "anchor";
    case LogRole::Transitive: return "transitive";
    case LogRole::Irrelevant: return "irrelevant";
  }
  return "irrelevant";
}

CallGraph build_call_graph(const ProjectIndex& index) {
  // Assumes log recognition already ran: logging-API calls are LogCall nodes
  // and therefore never become edges here.
  CallGraph g;
  for (const auto& [mid, decl] : index.methods) {
    g.nodes.insert(mid);
    if (decl.external) g.external_stubs.insert(mid);
  }
  for (const auto& [mid, decl] : index.methods) {
    if (decl.external) continue;
    std::vector<const AstNode*> calls;
    walk_calls(decl.body, calls);
    bool anchor = false;
    for (const AstNode* call : calls) {
      if (call->kind == NodeKind::LogCall) {
        anchor = true;
        continue;
      }
      const std::string& callee = call->detail;
      if (callee.empty()) continue;
      if (!g.nodes.count(callee)) {
        g.nodes.insert(callee);
        g.external_stubs.insert(callee);
      }
      g.edges.push_back({mid, callee, call->line});
    }
    if (anchor) g.roles[mid] = LogRole::Anchor;
  }
  // Transitive = reaches an anchor; computed as backward reachability from
  // the anchor set over inverted edges.
  std::set<std::string> anchors;
  for (const auto& [node, role] : g.roles)
    if (role == LogRole::Anchor) anchors.insert(node);
  std::set<std::string> reaching = bfs_from(anchors, adjacency(g, true));
  for (const std::string& node : g.nodes) {
    if (g.roles.count(node)) continue;
    g.roles[node] = reaching.count(node) ? LogRole::Transitive : LogRole::Irrelevant;
  }
  return g;
}

PrunedGraph prune(const CallGraph& graph) {
  PrunedGraph out;
  out.report.original_nodes = graph.nodes.size();

  std::set<std::string> anchors;
  for (const auto& [node, role] : graph.roles)
    if (role == LogRole::Anchor) anchors.insert(node);
  if (anchors.empty()) {
    out.report.no_logging = true;
    return out;
  }

  std::set<std::string> retained = bfs_from(anchors, adjacency(graph, true));
  // Drop anything the role map does not know as a node (defensive; roles are
  // total over nodes by contract).
  std::set<std::string> kept;
  for (const std::string& v : retained)
    if (graph.nodes.count(v)) kept.insert(v);

  out.graph.nodes = kept;
  for (const CallEdge& e : graph.edges)
    if (kept.count(e.caller) && kept.count(e.callee)) out.graph.edges.push_back(e);
  for (const std::string& v : kept) {
    out.graph.roles[v] = anchors.count(v) ? LogRole::Anchor : LogRole::Transitive;
    if (graph.external_stubs.count(v)) out.graph.external_stubs.insert(v);
  }

  out.report.retained_nodes = kept.size();
  out.report.ratio = out.report.original_nodes == 0
                         ? 0.0
                         : static_cast<double>(kept.size()) / static_cast<double>(out.report.original_nodes);
  for (const std::vector<std::string>& comp : strongly_connected(out.graph))
    if (comp.size() > 1 || has_self_loop(out.graph, comp[0])) out.report.cycles.push_back(comp);
  std::sort(out.report.cycles.begin(), out.report.cycles.end());
  return out;
}

std::string PruneReport::render() const {
  std::ostringstream os;
  os << "call-graph pruning report\n";
  os << "original nodes:  " << original_nodes << "\n";
  os << "retained nodes:  " << retained_nodes << "\n";
  char pct[32];
  std::snprintf(pct, sizeof(pct), "%.2f%%", ratio * 100.0);
  os << "retained ratio:  " << pct << "\n";
  if (no_logging) {
    os << "no logging detected: call graph is empty\n";
    return os.str();
  }
  os << "cycles retained: " << cycles.size() << "\n";
  for (const std::vector<std::string>& comp : cycles) {
    os << "  -";
    for (const std::string& m : comp) os << " " << m;
    os << "\n";
  }
  return os.str();
}

std::set<std::uint64_t> method_template_ids(const ProjectIndex& index, const std::string& method_id) {
  std::set<std::uint64_t> out;
  auto it = index.methods.find(method_id);
  if (it == index.methods.end()) return out;
  std::function<void(const AstNode&)> walk = [&](const AstNode& node) {
    if (node.kind == NodeKind::LogCall && node.template_id != 0) out.insert(node.template_id);
    for (const AstNode& child : node.children) walk(child);
  };
  walk(it->second.body);
  return out;
}

SubgraphExtraction extract_subgraphs(const PrunedGraph& pruned, const ProjectIndex& index,
                                     int t_entry, int t_depth) {
  if (t_entry < 1) throw ConfigError("t_entry must be at least 1");
  if (t_depth < 0) throw ConfigError("t_depth must be non-negative");

  SubgraphExtraction out;
  const CallGraph& g = pruned.graph;
  if (g.nodes.empty()) return out;

  auto fwd = adjacency(g, false);

  // Zero in-degree candidates.
  std::set<std::string> has_in;
  for (const CallEdge& e : g.edges) has_in.insert(e.callee);
  std::set<std::string> candidates;
  for (const std::string& v : g.nodes)
    if (!has_in.count(v)) candidates.insert(v);

  // Cycles nobody calls into from outside: take the least member.
  for (const std::vector<std::string>& comp : strongly_connected(g)) {
    if (comp.size() == 1 && !has_self_loop(g, comp[0])) continue;
    std::set<std::string> members(comp.begin(), comp.end());
    bool external_in = false;
    for (const CallEdge& e : g.edges)
      if (members.count(e.callee) && !members.count(e.caller)) {
        external_in = true;
        break;
      }
    if (!external_in) candidates.insert(comp[0]);
  }

  // Rank by total reachable template count (full reach, not depth-limited),
  // method id breaking ties.
  struct Ranked {
    std::string entry;
    std::size_t reach = 0;
  };
  std::vector<Ranked> ranked;
  for (const std::string& entry : candidates) {
    std::set<std::string> reach = bfs_from({entry}, fwd);
    std::set<std::uint64_t> tids;
    for (const std::string& m : reach) {
      std::set<std::uint64_t> own = method_template_ids(index, m);
      tids.insert(own.begin(), own.end());
    }
    ranked.push_back({entry, tids.size()});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.reach != b.reach) return a.reach > b.reach;
    return a.entry < b.entry;
  });

  std::size_t take = static_cast<std::size_t>(t_entry);
  if (take > ranked.size()) {
    out.warnings.push_back("t_entry " + std::to_string(t_entry) + " exceeds the " +
                           std::to_string(ranked.size()) +
                           " available entry candidates; using all of them");
    take = ranked.size();
  }

  for (std::size_t i = 0; i < take; ++i) {
    const std::string& entry = ranked[i].entry;
    Subgraph sg;
    sg.entry = entry;
    sg.depth_limit = t_depth;
    std::map<std::string, int> depth{{entry, 0}};
    std::deque<std::string> queue{entry};
    while (!queue.empty()) {
      std::string v = queue.front();
      queue.pop_front();
      sg.members.push_back(v);
      std::set<std::uint64_t> own = method_template_ids(index, v);
      sg.contained_templates.insert(own.begin(), own.end());
      if (depth[v] >= t_depth) continue;
      auto it = fwd.find(v);
      if (it == fwd.end()) continue;
      for (const std::string& w : it->second) {
        if (depth.count(w)) continue;
        depth[w] = depth[v] + 1;
        queue.push_back(w);
      }
    }
    if (sg.contained_templates.empty()) continue;  // nothing to generate from
    out.subgraphs.push_back(std::move(sg));
  }
  return out;
}

std::string to_dot(const CallGraph& graph) {
  std::ostringstream os;
  os << "digraph callgraph {\n";
  for (const std::string& node : graph.nodes) {
    os << "  \"" << node << "\"";
    auto it = graph.roles.find(node);
    if (it != graph.roles.end()) os << " [role=" << log_role_name(it->second) << "]";
    os << ";\n";
  }
  std::vector<CallEdge> edges = graph.edges;
  std::sort(edges.begin(), edges.end());
  for (const CallEdge& e : edges) os << "  \"" << e.caller << "\" -> \"" << e.callee << "\";\n";
  os << "}\n";
  return os.str();
}

}  // namespace anomalygen
