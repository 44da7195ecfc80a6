#include "anomalygen/lcfg.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "anomalygen/config.hpp"

namespace anomalygen {

const char* lcfg_node_kind_name(LcfgNodeKind k) {
  switch (k) {
    case LcfgNodeKind::Entry: return "entry";
    case LcfgNodeKind::Exit: return "exit";
    case LcfgNodeKind::Log: return "log";
    case LcfgNodeKind::Branch: return "branch";
    case LcfgNodeKind::Merge: return "merge";
    case LcfgNodeKind::Call: return "call";
  }
  return "entry";
}

std::vector<int> Lcfg::successors(int node) const {
  std::vector<int> out;
  for (const LcfgEdge& e : edges)
    if (e.from == node) out.push_back(e.to);
  return out;
}

Lcfg build_lcfg(const Cfg& cfg, const DomTree& dom) {
  // Structured lowering only produces natural loops; verify the invariant the
  // dominator tree is meant to guarantee before leaning on it.
  for (const CfgEdge& e : cfg.edges)
    if (e.kind == EdgeKind::Back && !dom.dominates(e.to, e.from))
      throw StageError("lcfg", "irreducible back edge in " + cfg.method_id);

  Lcfg out;
  out.method_id = cfg.method_id;

  std::vector<int> in_degree(cfg.blocks.size(), 0);
  std::vector<int> out_degree(cfg.blocks.size(), 0);
  for (const CfgEdge& e : cfg.edges) {
    ++in_degree[e.to];
    ++out_degree[e.from];
  }

  auto add_node = [&](LcfgNode node) {
    node.id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(std::move(node));
    return out.nodes.back().id;
  };

  // Per-block node chain: [merge if >=2 preds] + log/call statements +
  // [branch terminator]. Entry and exit blocks carry their markers instead.
  std::vector<std::vector<int>> chain(cfg.blocks.size());
  for (const CfgBlock& block : cfg.blocks) {
    std::vector<int>& ids = chain[block.id];
    if (block.id == cfg.exit) {
      LcfgNode node;
      node.kind = LcfgNodeKind::Exit;
      ids.push_back(add_node(node));
      continue;
    }
    if (block.id == cfg.entry) {
      LcfgNode node;
      node.kind = LcfgNodeKind::Entry;
      ids.push_back(add_node(node));
    } else if (in_degree[block.id] >= 2) {
      LcfgNode node;
      node.kind = LcfgNodeKind::Merge;
      node.line = block.stmts.empty() ? 0 : block.stmts.front()->line;
      ids.push_back(add_node(node));
    } else if (block.stmts.empty() && block.terminator == nullptr && out_degree[block.id] >= 2) {
      // Pass-through block with several outgoing edges (a bare throw fanning
      // out to multiple catch heads): it cannot be spliced away, so it keeps
      // a junction node.
      LcfgNode node;
      node.kind = LcfgNodeKind::Merge;
      ids.push_back(add_node(node));
    }
    for (const AstNode* stmt : block.stmts) {
      if (stmt->kind == NodeKind::LogCall) {
        LcfgNode node;
        node.kind = LcfgNodeKind::Log;
        node.template_id = stmt->template_id;
        node.line = stmt->line;
        ids.push_back(add_node(node));
      } else if (stmt->kind == NodeKind::MethodCall) {
        LcfgNode node;
        node.kind = LcfgNodeKind::Call;
        node.callee = stmt->detail;
        for (const Expr& arg : stmt->args) node.arg_texts.push_back(arg.text);
        node.call_node = stmt;
        node.line = stmt->line;
        ids.push_back(add_node(node));
      }
    }
    if (block.terminator != nullptr) {
      LcfgNode node;
      node.kind = LcfgNodeKind::Branch;
      node.condition = block.terminator->detail;
      node.loop_header = block.is_loop_header;
      node.line = block.terminator->line;
      ids.push_back(add_node(node));
    }
  }

  out.entry = chain[cfg.entry].front();
  out.exit = chain[cfg.exit].front();

  // Follow empty chains to the block whose chain will absorb the edge. Empty
  // blocks have exactly one outgoing edge (asserted above via the junction
  // rule), so the walk is unambiguous.
  auto resolve = [&](int block) {
    std::size_t guard = 0;
    while (chain[block].empty()) {
      int next = -1;
      for (const CfgEdge& e : cfg.edges)
        if (e.from == block) {
          next = e.to;
          break;
        }
      if (next < 0 || ++guard > cfg.blocks.size())
        throw StageError("lcfg", "dangling pass-through block in " + cfg.method_id);
      block = next;
    }
    return block;
  };

  auto push_edge = [&](LcfgEdge e) {
    for (const LcfgEdge& existing : out.edges)
      if (existing.from == e.from && existing.to == e.to && existing.kind == e.kind &&
          existing.label == e.label)
        return;
    out.edges.push_back(std::move(e));
  };

  for (const std::vector<int>& ids : chain)
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
      push_edge({ids[i], ids[i + 1], EdgeKind::Seq, ""});

  for (const CfgEdge& e : cfg.edges) {
    if (chain[e.from].empty()) continue;  // handled by whoever enters the block
    int target = resolve(e.to);
    push_edge({chain[e.from].back(), chain[target].front(), e.kind, e.label});
  }

  // Exclusivity bookkeeping: branch node id -> per-arm template id sets.
  for (const auto& [block, arms] : cfg.branch_arms) {
    int branch_node = chain[block].back();  // terminator is always last
    std::vector<std::set<std::uint64_t>> sets;
    for (const std::vector<const AstNode*>& arm : arms) {
      std::set<std::uint64_t> ids;
      for (const AstNode* log : arm)
        if (log->template_id != 0) ids.insert(log->template_id);
      sets.push_back(std::move(ids));
    }
    out.sibling_arm_templates[branch_node] = std::move(sets);
  }
  return out;
}

std::string to_dot(const Lcfg& lcfg) {
  std::ostringstream os;
  os << "digraph lcfg {\n";
  os << "  label=\"" << lcfg.method_id << "\";\n";
  for (const LcfgNode& n : lcfg.nodes) {
    os << "  n" << n.id << " [label=\"" << lcfg_node_kind_name(n.kind);
    if (n.kind == LcfgNodeKind::Log) os << " t" << n.template_id;
    if (n.kind == LcfgNodeKind::Branch) os << ": " << n.condition << (n.loop_header ? " (loop)" : "");
    if (n.kind == LcfgNodeKind::Call) os << ": " << n.callee;
    os << "\"];\n";
  }
  for (const LcfgEdge& e : lcfg.edges) {
    os << "  n" << e.from << " -> n" << e.to;
    if (e.kind != EdgeKind::Seq)
      os << " [label=\"" << (e.kind == EdgeKind::Case ? e.label : edge_kind_name(e.kind)) << "\"]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace anomalygen
