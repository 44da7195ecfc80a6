#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace anomalygen {

// ---------------------------------------------------------------------------
// Expressions.
//
// Expressions are kept shallow: enough structure for template extraction
// (string literals vs. everything else) and for the mock reasoner's literal
// checks (null / boolean arguments). Everything else is carried as text.
// ---------------------------------------------------------------------------

enum class ExprKind {
  StringLit,  // literal_value holds the decoded string
  NullLit,
  BoolLit,    // text is "true" or "false"
  NumberLit,
  CharLit,
  Name,       // identifier or dotted path, no call
  Call,       // callee + parts (arguments)
  Concat,     // parts joined by '+', in source order
  Lambda,     // body not traversed; becomes one other-statement
  Other,      // anything else (casts, arithmetic, ternary, ...)
};

struct Expr {
  ExprKind kind = ExprKind::Other;
  std::string text;           // normalized source text of the whole expression
  std::string literal_value;  // StringLit: decoded value
  std::string callee;         // Call: raw callee text, e.g. "LOG.info" or "helper"
  std::vector<Expr> parts;    // Concat: operands; Call: arguments; Other: subexpressions

  bool is_literal_null() const { return kind == ExprKind::NullLit; }
  bool is_literal_bool() const { return kind == ExprKind::BoolLit; }
};

// ---------------------------------------------------------------------------
// Statements / structure.
// ---------------------------------------------------------------------------

enum class NodeKind {
  Sequence,
  If,
  ElseBranch,
  SwitchCase,  // the whole switch construct; children are arm Sequences
  Loop,
  Try,
  Catch,
  LogCall,
  MethodCall,
  Return,
  Throw,
  Other,
};

const char* node_kind_name(NodeKind k);
NodeKind node_kind_from_name(const std::string& name);

// One AST node. Payload fields are kind-specific:
//   If / Loop       detail = condition text
//   SwitchCase      detail = scrutinee text; each child Sequence's detail is
//                   its case label ("case X" / "default")
//   Sequence        detail = "" normally; a case label or "finally" when the
//                   sequence is a switch arm or a finally block
//   Catch           detail = exception type name
//   LogCall         detail = resolved callee key, level + template_id set,
//                   args[0] is the message expression
//   MethodCall      detail = resolved callee key (or raw name if unresolved)
//   Return / Throw  detail = expression text (may be empty for bare return)
//   Other           detail = statement text
struct AstNode {
  NodeKind kind = NodeKind::Sequence;
  int line = 0;                    // first source line of the construct
  int end_line = 0;                // last source line
  std::string detail;
  std::string level;               // LogCall only: TRACE/DEBUG/INFO/WARN/ERROR/FATAL
  std::uint64_t template_id = 0;   // LogCall only: dense id, 0 until assigned
  std::vector<Expr> args;          // LogCall/MethodCall arguments
  std::vector<AstNode> children;
};

struct Param {
  std::string name;
  std::string type;  // declared type text, e.g. "String", "int", "Block"
};

struct MethodDecl {
  std::string method_id;    // qualified: pkg.Class.method/arity
  std::string class_key;    // pkg.Class
  std::string name;         // simple method name
  std::vector<Param> params;
  AstNode body;             // Sequence
  std::string source_text;  // exact original slice, used verbatim in prompts
  std::string unit_path;    // file the method came from (relative)
  std::map<std::string, std::string> locals;  // declared local var -> type text
  int line = 0;
  bool external = false;    // abstract or body-less: no AST, never an anchor
};

struct SourceUnit {
  std::string path;                 // relative to the source root
  std::string package_name;
  std::string qualified_type_name;  // pkg.Class
  std::map<std::string, std::string> imports;  // simple name -> dotted name
  std::map<std::string, std::string> fields;   // field name -> declared type
  std::vector<std::string> method_ids;         // in source order
};

struct ParseError {
  std::string path;
  int line = 0;
  std::string message;
};

struct ProjectIndex {
  std::vector<SourceUnit> units;              // sorted by path
  std::map<std::string, MethodDecl> methods;  // method_id -> decl
  std::vector<ParseError> errors;             // per-file problems; parse continues
};

// Structural equality on (kind, detail, level, line range, children); argument
// expressions compare by kind and text. Used by the serialization round-trip
// checks.
bool ast_equal(const AstNode& a, const AstNode& b);

// ---------------------------------------------------------------------------
// Log templates.
// ---------------------------------------------------------------------------

enum class PlaceholderKind { Numeric, Identifier, Path, Address, Generic };

const char* placeholder_kind_name(PlaceholderKind k);
PlaceholderKind placeholder_kind_from_name(const std::string& name);

struct LogTemplate {
  std::uint64_t template_id = 0;  // dense, 1-based, assigned after sorting
  std::string pattern;            // text with <*> placeholders
  std::string level;
  std::string method_id;
  int line = 0;
  std::vector<PlaceholderKind> placeholder_kinds;
};

// JSON (de)serialization of a full index plus its template table. The same
// payload backs the ast.json artifact and the parse round-trip property test.
std::string index_to_json(const ProjectIndex& index, const std::vector<LogTemplate>& templates);
void index_from_json(const std::string& text, ProjectIndex& index,
                     std::vector<LogTemplate>& templates);

// Template dump: template_id<TAB>level<TAB>method_id<TAB>line<TAB>pattern, LF.
std::string templates_to_tsv(const std::vector<LogTemplate>& templates);
std::vector<LogTemplate> templates_from_tsv(const std::string& text);

}  // namespace anomalygen
