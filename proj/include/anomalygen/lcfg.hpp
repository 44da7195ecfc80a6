#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anomalygen/cfg.hpp"

namespace anomalygen {

enum class LcfgNodeKind { Entry, Exit, Log, Branch, Merge, Call };

const char* lcfg_node_kind_name(LcfgNodeKind k);

struct LcfgNode {
  int id = 0;
  LcfgNodeKind kind = LcfgNodeKind::Entry;
  std::uint64_t template_id = 0;      // Log
  std::string condition;              // Branch: condition text
  bool loop_header = false;           // Branch that heads a loop
  std::string callee;                 // Call: resolved callee key
  std::vector<std::string> arg_texts; // Call: argument expression texts
  const AstNode* call_node = nullptr; // Call: originating AST node (args/lines)
  int line = 0;
};

struct LcfgEdge {
  int from = 0;
  int to = 0;
  EdgeKind kind = EdgeKind::Seq;  // True/False/Case keep their branch outcome
  std::string label;
};

struct Lcfg {
  std::string method_id;
  std::vector<LcfgNode> nodes;  // nodes[i].id == i
  std::vector<LcfgEdge> edges;
  int entry = 0;
  int exit = 0;
  // Branch node id -> per-arm sets of template ids, for the exclusivity check:
  // two logs in sibling arms of one branch must never share a path.
  std::map<int, std::vector<std::set<std::uint64_t>>> sibling_arm_templates;

  std::vector<int> successors(int node) const;
};

// Reduces a CFG to its log-oriented form: every block contributes
// [merge if >=2 preds] + its log and call statements + [branch terminator],
// empty pass-through chains are spliced out, and the dedicated exit block
// becomes the Exit node. Dominance of the underlying blocks is what makes the
// node chain ordering sound; the DomTree argument also backs the loop-header
// annotation.
Lcfg build_lcfg(const Cfg& cfg, const DomTree& dom);

std::string to_dot(const Lcfg& lcfg);

}  // namespace anomalygen
