// Log template normalization: literals verbatim, every non-literal fragment
// and format marker one <*>, adjacent literals merged, whitespace collapsed.
// Literal <*> occurrences in source strings count as generic placeholders,
// which is what makes extraction idempotent over rendered patterns.

#include <cctype>

#include "anomalygen/frontend.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

constexpr char kSentinel = '\x01';

// Name-based placeholder kind heuristic; kinds only steer the mock parameter
// filler, so false positives (e.g. "width" containing "id") are acceptable.
PlaceholderKind infer_kind(const Expr& e) {
  std::string lower = util::to_lower(e.text);
  if (util::contains(lower, "id")) return PlaceholderKind::Identifier;
  if (util::contains(lower, "addr") || util::contains(lower, "host"))
    return PlaceholderKind::Address;
  if (util::contains(lower, "path") || util::contains(lower, "file"))
    return PlaceholderKind::Path;
  if (e.kind == ExprKind::NumberLit) return PlaceholderKind::Numeric;
  if (e.kind != ExprKind::StringLit && e.kind != ExprKind::CharLit) {
    // Numeric-literal context: the fragment computes over a number.
    bool has_digit = false, has_op = false;
    for (char c : e.text) {
      if (std::isdigit(static_cast<unsigned char>(c))) has_digit = true;
      if (c == '+' || c == '-' || c == '*' || c == '/' || c == '%') has_op = true;
    }
    if (has_digit && has_op) return PlaceholderKind::Numeric;
  }
  return PlaceholderKind::Generic;
}

struct Assembly {
  std::string text;  // literals + kSentinel placeholder markers
  std::vector<PlaceholderKind> kinds;  // one per sentinel, in order

  void literal(const std::string& s) { text += s; }
  void placeholder(PlaceholderKind k) {
    text.push_back(kSentinel);
    kinds.push_back(k);
  }
};

// Splits a literal on format markers ({} %s %d %f %x), each consuming the
// next unclaimed trailing argument for kind inference (Generic when the
// arguments run out).
void emit_literal_with_markers(const std::string& lit, const std::vector<Expr>& args,
                               std::size_t& next_arg, Assembly& out) {
  std::size_t i = 0;
  while (i < lit.size()) {
    bool marker = false;
    std::size_t len = 0;
    if (lit[i] == '{' && i + 1 < lit.size() && lit[i + 1] == '}') {
      marker = true;
      len = 2;
    } else if (lit[i] == '%' && i + 1 < lit.size() &&
               (lit[i + 1] == 's' || lit[i + 1] == 'd' || lit[i + 1] == 'f' ||
                lit[i + 1] == 'x')) {
      marker = true;
      len = 2;
    }
    if (marker) {
      PlaceholderKind kind = PlaceholderKind::Generic;
      if (next_arg < args.size()) kind = infer_kind(args[next_arg]);
      ++next_arg;
      out.placeholder(kind);
      i += len;
    } else {
      out.text.push_back(lit[i]);
      ++i;
    }
  }
}

}  // namespace

TemplateExtraction extract_template(const AstNode& log_call, const std::string& level,
                                    const std::string& method_id) {
  TemplateExtraction out;
  if (log_call.args.empty()) {
    out.warning = "log call with zero message argument at " + method_id + ":" +
                  std::to_string(log_call.line);
    return out;
  }

  const Expr& msg = log_call.args[0];
  std::vector<Expr> rest(log_call.args.begin() + 1, log_call.args.end());
  std::size_t next_arg = 0;
  Assembly assembly;

  auto emit_fragment = [&](const Expr& e) {
    if (e.kind == ExprKind::StringLit) {
      emit_literal_with_markers(e.literal_value, rest, next_arg, assembly);
    } else {
      assembly.placeholder(infer_kind(e));
    }
  };

  if (msg.kind == ExprKind::Concat) {
    for (const Expr& part : msg.parts) emit_fragment(part);
  } else {
    emit_fragment(msg);
  }

  // Collapse whitespace (sentinels are not whitespace, so spacing between
  // literals and placeholders survives exactly once), then materialize <*>.
  std::string collapsed = util::collapse_whitespace(assembly.text);
  std::string pattern;
  std::vector<PlaceholderKind> kinds;
  std::size_t next_kind = 0;
  for (std::size_t i = 0; i < collapsed.size();) {
    if (collapsed[i] == kSentinel) {
      pattern += "<*>";
      kinds.push_back(assembly.kinds[next_kind++]);
      ++i;
    } else if (collapsed.compare(i, 3, "<*>") == 0) {
      // A literal <*> in the source string is a placeholder too.
      pattern += "<*>";
      kinds.push_back(PlaceholderKind::Generic);
      i += 3;
    } else {
      pattern.push_back(collapsed[i]);
      ++i;
    }
  }

  out.ok = true;
  out.result.pattern = pattern;
  out.result.level = level;
  out.result.method_id = method_id;
  out.result.line = log_call.line;
  out.result.placeholder_kinds = std::move(kinds);
  return out;
}

}  // namespace anomalygen
