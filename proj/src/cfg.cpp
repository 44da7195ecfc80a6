#include "anomalygen/cfg.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "anomalygen/config.hpp"

namespace anomalygen {

namespace {

void collect_logs(const AstNode& node, std::vector<const AstNode*>& out) {
  if (node.kind == NodeKind::LogCall) out.push_back(&node);
  for (const AstNode& child : node.children) collect_logs(child, out);
}

std::vector<const AstNode*> logs_in(const AstNode& node) {
  std::vector<const AstNode*> out;
  collect_logs(node, out);
  return out;
}

// Structured lowering. Control-flow simplifications, mirroring the parser's:
//  - logging calls are modeled as non-throwing, so they are never exception
//    sources; method calls and throw statements are;
//  - exception edges target the catch heads of the innermost enclosing try
//    only, and blocks are split after may-throw calls inside try regions so
//    an exception edge means "this call failed";
//  - return inside try-finally exits directly (the finally suffix models the
//    normal path only).
struct Lowerer {
  Cfg& cfg;
  std::vector<std::vector<int>> handlers;  // innermost try's catch heads last
  std::set<std::pair<int, int>> exception_edges;

  int new_block() {
    CfgBlock b;
    b.id = static_cast<int>(cfg.blocks.size());
    cfg.blocks.push_back(b);
    return b.id;
  }

  void link(int from, int to, EdgeKind kind, std::string label = "") {
    cfg.edges.push_back({from, to, kind, std::move(label)});
  }

  // Exception edges from `block` to every innermost catch head, deduplicated.
  void throw_edges(int block) {
    for (int head : handlers.back())
      if (exception_edges.insert({block, head}).second) link(block, head, EdgeKind::Exception);
  }

  int lower_stmts(const std::vector<AstNode>& stmts, int cur) {
    for (const AstNode& s : stmts) {
      if (cur < 0) cur = new_block();  // dead code: orphan block, pruned later
      cur = lower_stmt(s, cur);
    }
    return cur;
  }

  int lower_stmt(const AstNode& s, int cur) {
    switch (s.kind) {
      case NodeKind::If: return lower_if(s, cur);
      case NodeKind::Loop: return lower_loop(s, cur);
      case NodeKind::SwitchCase: return lower_switch(s, cur);
      case NodeKind::Try: return lower_try(s, cur);
      case NodeKind::Sequence: return lower_stmts(s.children, cur);
      case NodeKind::Return:
        cfg.blocks[cur].stmts.push_back(&s);
        link(cur, cfg.exit, EdgeKind::Seq);
        return -1;
      case NodeKind::Throw:
        cfg.blocks[cur].stmts.push_back(&s);
        if (!handlers.empty())
          throw_edges(cur);
        else
          link(cur, cfg.exit, EdgeKind::Exception);
        return -1;
      case NodeKind::MethodCall:
        cfg.blocks[cur].stmts.push_back(&s);
        if (!handlers.empty()) {
          throw_edges(cur);
          int cont = new_block();
          link(cur, cont, EdgeKind::Seq);
          return cont;
        }
        return cur;
      default:
        cfg.blocks[cur].stmts.push_back(&s);
        return cur;
    }
  }

  int lower_if(const AstNode& s, int cur) {
    cfg.blocks[cur].terminator = &s;
    std::vector<std::vector<const AstNode*>> arms;
    arms.push_back(logs_in(s.children[0]));
    bool has_else = s.children.size() > 1;
    arms.push_back(has_else ? logs_in(s.children[1]) : std::vector<const AstNode*>{});
    cfg.branch_arms[cur] = std::move(arms);

    int then_block = new_block();
    link(cur, then_block, EdgeKind::True);
    int then_end = lower_stmts(s.children[0].children, then_block);

    int else_end = -1;
    if (has_else) {
      int else_block = new_block();
      link(cur, else_block, EdgeKind::False);
      else_end = lower_stmts(s.children[1].children, else_block);
    }

    std::vector<std::pair<int, EdgeKind>> incoming;
    if (then_end >= 0) incoming.push_back({then_end, EdgeKind::Seq});
    if (has_else) {
      if (else_end >= 0) incoming.push_back({else_end, EdgeKind::Seq});
    } else {
      incoming.push_back({cur, EdgeKind::False});
    }
    if (incoming.empty()) return -1;
    int merge = new_block();
    for (auto [b, k] : incoming) link(b, merge, k);
    return merge;
  }

  int lower_loop(const AstNode& s, int cur) {
    int header = new_block();
    link(cur, header, EdgeKind::Seq);
    cfg.blocks[header].terminator = &s;
    cfg.blocks[header].is_loop_header = true;
    cfg.branch_arms[header] = {logs_in(s.children[0]), {}};

    int body_first = static_cast<int>(cfg.blocks.size());
    int body = new_block();
    link(header, body, EdgeKind::True);
    int body_end = lower_stmts(s.children[0].children, body);
    if (body_end >= 0) link(body_end, header, EdgeKind::Back);
    int body_last = static_cast<int>(cfg.blocks.size());

    int after = new_block();
    link(header, after, EdgeKind::False);
    std::vector<int>& members = cfg.loops[header];
    for (int b = body_first; b < body_last; ++b) members.push_back(b);
    return after;
  }

  int lower_switch(const AstNode& s, int cur) {
    cfg.blocks[cur].terminator = &s;
    std::vector<std::vector<const AstNode*>> arms;
    bool has_default = false;
    for (const AstNode& arm : s.children) {
      arms.push_back(logs_in(arm));
      if (arm.detail == "default") has_default = true;
    }
    cfg.branch_arms[cur] = std::move(arms);

    std::vector<int> ends;
    for (const AstNode& arm : s.children) {
      int block = new_block();
      link(cur, block, EdgeKind::Case, arm.detail);
      int end = lower_stmts(arm.children, block);
      if (end >= 0) ends.push_back(end);
    }
    if (ends.empty() && has_default) return -1;
    int merge = new_block();
    if (!has_default) link(cur, merge, EdgeKind::Case, "default");
    for (int e : ends) link(e, merge, EdgeKind::Seq);
    return merge;
  }

  int lower_try(const AstNode& s, int cur) {
    const AstNode& body = s.children[0];
    std::vector<const AstNode*> catches;
    const AstNode* fin = nullptr;
    for (std::size_t i = 1; i < s.children.size(); ++i) {
      const AstNode& child = s.children[i];
      if (child.kind == NodeKind::Catch)
        catches.push_back(&child);
      else if (child.kind == NodeKind::Sequence && child.detail == "finally")
        fin = &child;
    }

    std::vector<int> heads;
    for (std::size_t i = 0; i < catches.size(); ++i) heads.push_back(new_block());

    int try_block = new_block();
    link(cur, try_block, EdgeKind::Seq);
    if (!heads.empty()) handlers.push_back(heads);
    int try_end = lower_stmts(body.children, try_block);
    if (!heads.empty()) handlers.pop_back();

    std::vector<int> ends;
    if (try_end >= 0) ends.push_back(try_end);
    for (std::size_t i = 0; i < catches.size(); ++i) {
      int end = lower_stmts(catches[i]->children[0].children, heads[i]);
      if (end >= 0) ends.push_back(end);
    }

    if (fin != nullptr) {
      if (ends.empty()) return -1;
      int fin_block = new_block();
      for (int e : ends) link(e, fin_block, EdgeKind::Seq);
      return lower_stmts(fin->children, fin_block);
    }
    if (ends.empty()) return -1;
    if (ends.size() == 1) return ends[0];
    int merge = new_block();
    for (int e : ends) link(e, merge, EdgeKind::Seq);
    return merge;
  }
};

// Drops blocks unreachable from entry and renumbers densely, keeping the old
// relative order (entry stays 0).
void prune_unreachable(Cfg& cfg) {
  std::set<int> reachable;
  std::vector<int> stack = {cfg.entry};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (!reachable.insert(v).second) continue;
    for (const CfgEdge& e : cfg.edges)
      if (e.from == v) stack.push_back(e.to);
  }
  if (reachable.size() == cfg.blocks.size()) return;

  std::vector<int> remap(cfg.blocks.size(), -1);
  std::vector<CfgBlock> blocks;
  for (const CfgBlock& b : cfg.blocks) {
    if (!reachable.count(b.id)) continue;
    remap[b.id] = static_cast<int>(blocks.size());
    blocks.push_back(b);
    blocks.back().id = remap[b.id];
  }
  std::vector<CfgEdge> edges;
  for (const CfgEdge& e : cfg.edges)
    if (remap[e.from] >= 0 && remap[e.to] >= 0)
      edges.push_back({remap[e.from], remap[e.to], e.kind, e.label});
  std::map<int, std::vector<std::vector<const AstNode*>>> branch_arms;
  for (auto& [block, arms] : cfg.branch_arms)
    if (remap[block] >= 0) branch_arms[remap[block]] = std::move(arms);
  std::map<int, std::vector<int>> loops;
  for (auto& [header, body] : cfg.loops) {
    if (remap[header] < 0) continue;
    std::vector<int> kept;
    for (int b : body)
      if (remap[b] >= 0) kept.push_back(remap[b]);
    loops[remap[header]] = std::move(kept);
  }
  cfg.blocks = std::move(blocks);
  cfg.edges = std::move(edges);
  cfg.branch_arms = std::move(branch_arms);
  cfg.loops = std::move(loops);
  cfg.entry = remap[cfg.entry] >= 0 ? remap[cfg.entry] : 0;
  cfg.exit = remap[cfg.exit];
}

}  // namespace

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Seq: return "seq";
    case EdgeKind::True: return "true";
    case EdgeKind::False: return "false";
    case EdgeKind::Case: return "case";
    case EdgeKind::Back: return "back";
    case EdgeKind::Exception: return "exception";
  }
  return "seq";
}

std::vector<int> Cfg::successors(int block) const {
  std::vector<int> out;
  for (const CfgEdge& e : edges)
    if (e.from == block && std::find(out.begin(), out.end(), e.to) == out.end())
      out.push_back(e.to);
  return out;
}

std::vector<int> Cfg::predecessors(int block) const {
  std::vector<int> out;
  for (const CfgEdge& e : edges)
    if (e.to == block && std::find(out.begin(), out.end(), e.from) == out.end())
      out.push_back(e.from);
  return out;
}

Cfg build_cfg(const MethodDecl& method) {
  Cfg cfg;
  cfg.method_id = method.method_id;
  Lowerer lowerer{cfg, {}, {}};
  cfg.entry = lowerer.new_block();  // 0, statements start here
  cfg.exit = lowerer.new_block();   // 1, dedicated
  int end = lowerer.lower_stmts(method.body.children, cfg.entry);
  if (end >= 0) lowerer.link(end, cfg.exit, EdgeKind::Seq);
  prune_unreachable(cfg);
  return cfg;
}

bool DomTree::dominates(int a, int b) const {
  while (true) {
    if (a == b) return true;
    int up = idom[b];
    if (up == b) return false;
    b = up;
  }
}

DomTree compute_dominators(const Cfg& cfg) {
  int n = static_cast<int>(cfg.blocks.size());
  // Postorder via iterative DFS on successor lists.
  std::vector<int> postorder;
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
  {
    std::vector<std::pair<int, std::size_t>> stack{{cfg.entry, 0}};
    state[cfg.entry] = 1;
    std::vector<std::vector<int>> succ(n);
    for (int b = 0; b < n; ++b) succ[b] = cfg.successors(b);
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < succ[v].size()) {
        int w = succ[v][next++];
        if (state[w] == 0) {
          state[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        state[v] = 2;
        postorder.push_back(v);
        stack.pop_back();
      }
    }
  }
  if (static_cast<int>(postorder.size()) != n) {
    for (int b = 0; b < n; ++b)
      if (state[b] == 0)
        throw StageError("lcfg", "block " + std::to_string(b) + " of " + cfg.method_id +
                                     " is unreachable from entry");
  }
  std::vector<int> po_num(n, -1);
  for (int i = 0; i < static_cast<int>(postorder.size()); ++i) po_num[postorder[i]] = i;

  std::vector<std::vector<int>> preds(n);
  for (int b = 0; b < n; ++b) preds[b] = cfg.predecessors(b);

  DomTree dom;
  dom.idom.assign(n, -1);
  dom.idom[cfg.entry] = cfg.entry;

  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (po_num[a] < po_num[b]) a = dom.idom[a];
      while (po_num[b] < po_num[a]) b = dom.idom[b];
    }
    return a;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    // Reverse postorder, entry excluded.
    for (int i = n - 1; i >= 0; --i) {
      int b = postorder[i];
      if (b == cfg.entry) continue;
      int new_idom = -1;
      for (int p : preds[b]) {
        if (dom.idom[p] < 0) continue;
        new_idom = new_idom < 0 ? p : intersect(p, new_idom);
      }
      if (new_idom >= 0 && dom.idom[b] != new_idom) {
        dom.idom[b] = new_idom;
        changed = true;
      }
    }
  }
  return dom;
}

std::string to_dot(const Cfg& cfg) {
  std::ostringstream os;
  os << "digraph cfg {\n";
  os << "  label=\"" << cfg.method_id << "\";\n";
  for (const CfgBlock& b : cfg.blocks) {
    os << "  b" << b.id << " [shape=box, label=\"B" << b.id;
    if (b.id == cfg.entry) os << " entry";
    if (b.id == cfg.exit) os << " exit";
    if (b.is_loop_header) os << " loop";
    if (!b.stmts.empty()) os << "\\n" << b.stmts.size() << " stmt(s)";
    if (b.terminator != nullptr) os << "\\nbranch: " << b.terminator->detail;
    os << "\"];\n";
  }
  for (const CfgEdge& e : cfg.edges) {
    os << "  b" << e.from << " -> b" << e.to;
    if (e.kind != EdgeKind::Seq) {
      os << " [label=\"" << (e.kind == EdgeKind::Case ? e.label : edge_kind_name(e.kind))
         << "\"]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace anomalygen
