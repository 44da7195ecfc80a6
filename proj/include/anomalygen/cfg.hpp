#pragma once

#include <map>
#include <string>
#include <vector>

#include "anomalygen/ast.hpp"

namespace anomalygen {

enum class EdgeKind { Seq, True, False, Case, Back, Exception };

const char* edge_kind_name(EdgeKind k);

struct CfgEdge {
  int from = 0;
  int to = 0;
  EdgeKind kind = EdgeKind::Seq;
  std::string label;  // case label for Case edges
};

// A basic block holds statement references in order plus an optional branch
// terminator (the If/Loop/SwitchCase node whose condition ends the block).
struct CfgBlock {
  int id = 0;
  std::vector<const AstNode*> stmts;     // log/call/other statements, in order
  const AstNode* terminator = nullptr;   // branch condition node, if any
  bool is_loop_header = false;
};

struct Cfg {
  std::string method_id;
  std::vector<CfgBlock> blocks;  // blocks[i].id == i; entry == 0
  std::vector<CfgEdge> edges;
  int entry = 0;
  int exit = 0;  // single dedicated exit block
  // For each branch terminator block: the sets of log-call nodes syntactically
  // inside each arm, recorded at lowering time. Drives the LCFG exclusivity
  // invariant check.
  std::map<int, std::vector<std::vector<const AstNode*>>> branch_arms;
  // Loop header block -> body block ids (blocks dominated by the header that
  // can reach the back edge source).
  std::map<int, std::vector<int>> loops;

  std::vector<int> successors(int block) const;
  std::vector<int> predecessors(int block) const;
};

struct DomTree {
  std::vector<int> idom;  // block id -> immediate dominator; entry maps to itself
  bool dominates(int a, int b) const;  // a dom b (reflexive)
};

// Lowers a method body to a CFG. Structured constructs lower canonically:
// if -> true/false edges to a merge block; loop -> condition header with a
// back edge; switch -> case edges plus default; try/catch -> exception edges
// from call/throw-bearing blocks in the try region to each catch head.
// Unreachable blocks are pruned before return, so compute_dominators'
// precondition holds by construction.
Cfg build_cfg(const MethodDecl& method);

// Iterative dataflow fixed point over a reverse postorder. Throws StageError
// if any block is unreachable from entry.
DomTree compute_dominators(const Cfg& cfg);

std::string to_dot(const Cfg& cfg);

}  // namespace anomalygen
