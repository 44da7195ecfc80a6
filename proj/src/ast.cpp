#include "anomalygen/ast.hpp"

#include <stdexcept>

namespace anomalygen {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence: return "sequence";
    case NodeKind::If: return "if";
    case NodeKind::ElseBranch: return "else-branch";
    case NodeKind::SwitchCase: return "switch-case";
    case NodeKind::Loop: return "loop";
    case NodeKind::Try: return "try";
    case NodeKind::Catch: return "catch";
    case NodeKind::LogCall: return "log-call";
    case NodeKind::MethodCall: return "method-call";
    case NodeKind::Return: return "return";
    case NodeKind::Throw: return "throw";
    case NodeKind::Other: return "other-statement";
  }
  return "other-statement";
}

NodeKind node_kind_from_name(const std::string& name) {
  if (name == "sequence") return NodeKind::Sequence;
  if (name == "if") return NodeKind::If;
  if (name == "else-branch") return NodeKind::ElseBranch;
  if (name == "switch-case") return NodeKind::SwitchCase;
  if (name == "loop") return NodeKind::Loop;
  if (name == "try") return NodeKind::Try;
  if (name == "catch") return NodeKind::Catch;
  if (name == "log-call") return NodeKind::LogCall;
  if (name == "method-call") return NodeKind::MethodCall;
  if (name == "return") return NodeKind::Return;
  if (name == "throw") return NodeKind::Throw;
  if (name == "other-statement") return NodeKind::Other;
  throw std::invalid_argument("unknown AST node kind: " + name);
}

const char* placeholder_kind_name(PlaceholderKind k) {
  switch (k) {
    case PlaceholderKind::Numeric: return "numeric";
    case PlaceholderKind::Identifier: return "identifier";
    case PlaceholderKind::Path: return "path";
    case PlaceholderKind::Address: return "address";
    case PlaceholderKind::Generic: return "generic";
  }
  return "generic";
}

PlaceholderKind placeholder_kind_from_name(const std::string& name) {
  if (name == "numeric") return PlaceholderKind::Numeric;
  if (name == "identifier") return PlaceholderKind::Identifier;
  if (name == "path") return PlaceholderKind::Path;
  if (name == "address") return PlaceholderKind::Address;
  if (name == "generic") return PlaceholderKind::Generic;
  throw std::invalid_argument("unknown placeholder kind: " + name);
}

namespace {
bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.text != b.text) return false;
  if (a.parts.size() != b.parts.size()) return false;
  for (std::size_t i = 0; i < a.parts.size(); ++i)
    if (!expr_equal(a.parts[i], b.parts[i])) return false;
  return true;
}
}  // namespace

bool ast_equal(const AstNode& a, const AstNode& b) {
  if (a.kind != b.kind || a.detail != b.detail || a.level != b.level) return false;
  if (a.line != b.line || a.end_line != b.end_line) return false;
  if (a.template_id != b.template_id) return false;
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(a.args[i], b.args[i])) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!ast_equal(a.children[i], b.children[i])) return false;
  return true;
}

}  // namespace anomalygen
