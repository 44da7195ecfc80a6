#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomalygen/config.hpp"
#include "anomalygen/lcfg.hpp"

namespace anomalygen {

struct PathStep {
  enum class Kind { Log, Call } kind = Kind::Log;
  std::uint64_t template_id = 0;       // Log
  std::string callee;                  // Call
  std::vector<std::string> arg_texts;  // Call
  const AstNode* call_node = nullptr;  // Call: carries literal argument info
  std::size_t cond_prefix = 0;         // Call: #conditions established before this step
  int line = 0;
};

struct PathCondition {
  std::string condition;
  std::string taken;  // "true" | "false" | case label
  auto operator<=>(const PathCondition&) const = default;
};

struct LocalPath {
  std::string method_id;
  std::vector<PathStep> steps;
  std::vector<PathCondition> conditions;
};

struct LocalPathSet {
  std::vector<LocalPath> paths;  // deterministic DFS order
  bool truncated = false;        // hit max_local_paths_per_method
};

// DFS from entry to exit in deterministic child order (true before false,
// cases in source order). At a loop-header branch the body may be entered
// while the per-header visit count is below max(loop_unroll) and may be
// skipped once the count is a member of loop_unroll; with the default policy
// {0,1} each loop body appears 0 or 1 times.
LocalPathSet enumerate_local_paths(const Lcfg& lcfg, const AssemblyBounds& bounds);

// One-line rendering "tmpl:3 call:pkg.C.m/1 ..." used by debug dumps & tests.
std::string render_path(const LocalPath& path);

}  // namespace anomalygen
