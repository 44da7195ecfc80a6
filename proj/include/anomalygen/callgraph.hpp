#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anomalygen/ast.hpp"

namespace anomalygen {

enum class LogRole { Anchor, Transitive, Irrelevant };

const char* log_role_name(LogRole r);

struct CallEdge {
  std::string caller;
  std::string callee;
  int line = 0;  // call-site line in the caller
  auto operator<=>(const CallEdge&) const = default;
};

struct CallGraph {
  std::set<std::string> nodes;            // method ids, external stubs included
  std::vector<CallEdge> edges;            // one per call site, duplicates by line allowed
  std::map<std::string, LogRole> roles;   // total over nodes
  std::set<std::string> external_stubs;   // nodes with no MethodDecl body
};

struct PruneReport {
  std::size_t original_nodes = 0;
  std::size_t retained_nodes = 0;
  double ratio = 0.0;                      // retained / original, 0 when empty
  std::vector<std::vector<std::string>> cycles;  // SCCs of size >1 or self-loops, members sorted
  bool no_logging = false;                 // zero anchors: empty graph, not an error
  std::string render() const;              // structured text per the report format
};

struct PrunedGraph {
  CallGraph graph;
  PruneReport report;
};

struct Subgraph {
  std::string entry;
  std::vector<std::string> members;        // BFS order from entry
  int depth_limit = 0;
  std::set<std::uint64_t> contained_templates;
};

// Anchors = methods whose bodies contain retagged log-call nodes (log calls
// themselves never become edges). Transitive = reaches an anchor through call
// edges. External callees become stub nodes, role Irrelevant.
CallGraph build_call_graph(const ProjectIndex& index);

// Backward reachability from anchors over inverted edges. Keeps exactly the
// nodes that reach some anchor in the forward graph, plus all edges between
// kept nodes.
PrunedGraph prune(const CallGraph& graph);

struct SubgraphExtraction {
  std::vector<Subgraph> subgraphs;  // entry-rank order
  std::vector<std::string> warnings;
};

// Entry candidates: retained nodes with zero retained in-edges, plus the
// lexicographically least member of each otherwise-entryless SCC. Ranked by
// (reachable template count desc, method_id asc); top t_entry kept; each
// subgraph is a BFS from its entry truncated at t_depth edges; subgraphs
// without templates are dropped.
SubgraphExtraction extract_subgraphs(const PrunedGraph& pruned, const ProjectIndex& index,
                                     int t_entry, int t_depth);

// Template ids defined directly in one method (from its retagged log calls).
std::set<std::uint64_t> method_template_ids(const ProjectIndex& index,
                                            const std::string& method_id);

std::string to_dot(const CallGraph& graph);

}  // namespace anomalygen
