// Recursive-descent front end for the supported source-language subset:
// package/import headers, one top-level class or interface per file, fields,
// methods, and the statement forms listed in parse_statement. Anything
// outside the subset is preserved as an other-statement node rather than
// dropped. Call subexpressions are hoisted into method-call nodes in
// evaluation order so the call graph and CFG layers see every invocation.
//
// Known simplifications, chosen over fidelity to keep the subset small:
//   - loop-condition calls are hoisted once, before the loop;
//   - break/continue inside loops become other-statements (their control
//     effect is not modeled); a break terminating a switch arm is structural
//     and consumed;
//   - lambda bodies are not traversed: each lambda yields one
//     other-statement node.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <map>
#include <set>
#include <thread>
#include <vector>

#include "anomalygen/frontend.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok { Ident, Number, String, Char, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;   // raw source text
  std::string value;  // decoded value for String tokens
  int line = 1;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
};

struct LexFail {
  int line;
  std::string message;
};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::vector<Token> lex(const std::string& src) {
  static const char* two_char_ops[] = {"->", "==", "!=", "<=", ">=", "&&", "||", "++",
                                       "--", "+=", "-=", "*=", "/=", "%=", "::"};
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      i += 2;
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      if (i + 1 >= src.size()) throw LexFail{line, "unterminated block comment"};
      i += 2;
      continue;
    }
    Token t;
    t.line = line;
    t.begin = i;
    if (is_ident_start(c)) {
      std::size_t b = i;
      while (i < src.size() && is_ident_char(src[i])) ++i;
      t.kind = Tok::Ident;
      t.text = src.substr(b, i - b);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t b = i;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '.' ||
              src[i] == '_')) {
        // Avoid swallowing a dotted call after an integer: only consume '.'
        // when a digit follows.
        if (src[i] == '.' && !(i + 1 < src.size() &&
                               std::isdigit(static_cast<unsigned char>(src[i + 1]))))
          break;
        ++i;
      }
      t.kind = Tok::Number;
      t.text = src.substr(b, i - b);
    } else if (c == '"') {
      std::size_t b = i++;
      std::string value;
      while (i < src.size() && src[i] != '"') {
        if (src[i] == '\\' && i + 1 < src.size()) {
          char e = src[i + 1];
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case 'r': value.push_back('\r'); break;
            case '\\': value.push_back('\\'); break;
            case '"': value.push_back('"'); break;
            case '\'': value.push_back('\''); break;
            default: value.push_back(e); break;
          }
          i += 2;
          continue;
        }
        if (src[i] == '\n') throw LexFail{line, "unterminated string literal"};
        value.push_back(src[i]);
        ++i;
      }
      if (i >= src.size()) throw LexFail{line, "unterminated string literal"};
      ++i;  // closing quote
      t.kind = Tok::String;
      t.text = src.substr(b, i - b);
      t.value = value;
    } else if (c == '\'') {
      std::size_t b = i++;
      while (i < src.size() && src[i] != '\'') {
        if (src[i] == '\\') ++i;
        if (src[i] == '\n') throw LexFail{line, "unterminated char literal"};
        ++i;
      }
      if (i >= src.size()) throw LexFail{line, "unterminated char literal"};
      ++i;
      t.kind = Tok::Char;
      t.text = src.substr(b, i - b);
    } else {
      t.kind = Tok::Punct;
      std::string two = src.substr(i, 2);
      bool matched = false;
      for (const char* op : two_char_ops) {
        if (two == op) {
          t.text = two;
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        t.text = std::string(1, c);
        ++i;
      }
    }
    t.end = i;
    out.push_back(std::move(t));
  }
  Token end_tok;
  end_tok.kind = Tok::End;
  end_tok.line = line;
  end_tok.begin = src.size();
  end_tok.end = src.size();
  out.push_back(end_tok);
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct ParseFail {
  int line;
  std::string message;
};

const std::set<std::string> kModifiers = {"public", "private",   "protected",    "static",
                                          "final",  "abstract",  "synchronized", "native",
                                          "transient", "volatile", "default"};
const std::set<std::string> kPrimitives = {"void",  "int",  "long", "double", "float",
                                           "bool",  "boolean", "char", "byte", "short"};

struct RawUnit {
  SourceUnit unit;
  std::vector<MethodDecl> methods;  // source order
  std::vector<ParseError> errors;
};

class Parser {
 public:
  Parser(std::string path, const std::string& src)
      : path_(std::move(path)), src_(src), toks_(lex(src)) {}

  RawUnit run() {
    RawUnit out;
    out.unit.path = path_;
    parse_header(out.unit);
    parse_type_decl(out);
    out.unit.qualified_type_name = qualify(class_name_);
    return out;
  }

 private:
  std::string path_;
  const std::string& src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string package_;
  std::string class_name_;
  std::map<std::string, std::string>* imports_ = nullptr;
  std::map<std::string, std::string>* fields_ = nullptr;
  MethodDecl* method_ = nullptr;  // method being parsed (locals collection)

  // --- token helpers ---
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t p = pos_ + ahead;
    return p < toks_.size() ? toks_[p] : toks_.back();
  }
  bool at(const std::string& text) const { return peek().text == text; }
  bool at_ident() const { return peek().kind == Tok::Ident; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(const std::string& text) {
    if (at(text)) {
      advance();
      return true;
    }
    return false;
  }
  const Token& expect(const std::string& text) {
    if (!at(text)) throw ParseFail{peek().line, "expected '" + text + "', got '" + peek().text + "'"};
    return advance();
  }
  const Token& expect_ident() {
    if (!at_ident()) throw ParseFail{peek().line, "expected identifier, got '" + peek().text + "'"};
    return advance();
  }
  std::string slice(std::size_t from_tok, std::size_t to_tok) const {
    // Source text covering tokens [from_tok, to_tok), whitespace collapsed.
    if (from_tok >= to_tok) return "";
    std::size_t b = toks_[from_tok].begin;
    std::size_t e = toks_[to_tok - 1].end;
    return util::collapse_whitespace(src_.substr(b, e - b));
  }
  std::string qualify(const std::string& simple) const {
    return package_.empty() ? simple : package_ + "." + simple;
  }

  // --- header ---
  void parse_header(SourceUnit& unit) {
    if (accept("package")) {
      package_ = parse_dotted();
      expect(";");
      unit.package_name = package_;
    }
    while (accept("import")) {
      accept("static");
      std::string dotted = parse_dotted();
      if (accept("*")) dotted += ".*";  // wildcard import: kept but unusable for resolution
      expect(";");
      std::size_t dot = dotted.rfind('.');
      std::string simple = dot == std::string::npos ? dotted : dotted.substr(dot + 1);
      if (simple != "*") unit.imports[simple] = dotted;
    }
  }

  std::string parse_dotted() {
    std::string out = expect_ident().text;
    while (at(".") && peek(1).kind == Tok::Ident && peek(1).text != "*") {
      advance();
      out += "." + advance().text;
    }
    if (at(".") && peek(1).text == "*") advance();  // leave '*' for caller
    return out;
  }

  void skip_annotations() {
    while (at("@")) {
      advance();
      parse_dotted();
      if (at("(")) skip_balanced("(", ")");
    }
  }

  void skip_balanced(const std::string& open, const std::string& close) {
    expect(open);
    int depth = 1;
    while (depth > 0 && peek().kind != Tok::End) {
      if (at(open)) ++depth;
      if (at(close)) --depth;
      advance();
    }
  }

  void skip_generics() {
    if (!at("<")) return;
    int depth = 0;
    do {
      if (at("<")) ++depth;
      if (at(">")) --depth;
      advance();
    } while (depth > 0 && peek().kind != Tok::End);
  }

  // --- types ---
  bool at_type_start() const {
    return at_ident() && (kPrimitives.count(peek().text) || !is_keyword(peek().text));
  }
  static bool is_keyword(const std::string& t) {
    static const std::set<std::string> kw = {
        "if",     "else",  "while", "for",   "switch",  "case",   "default", "try",
        "catch",  "finally", "return", "throw", "break", "continue", "new",  "class",
        "interface", "enum", "extends", "implements", "throws", "instanceof", "do",
        "package", "import", "this", "super", "null", "true", "false"};
    return kw.count(t) > 0;
  }

  // Parses a type at the cursor; returns its text. Assumes at_type_start().
  std::string parse_type() {
    std::size_t from = pos_;
    expect_ident();
    while (at(".") && peek(1).kind == Tok::Ident) {
      advance();
      advance();
    }
    skip_generics();
    while (at("[") && peek(1).text == "]") {
      advance();
      advance();
    }
    return slice(from, pos_);
  }

  // True if the cursor sits on `Type ident` (a declaration), decided by
  // speculative parse.
  bool looks_like_decl() {
    if (!at_type_start()) return false;
    std::size_t save = pos_;
    bool ok = false;
    try {
      parse_type();
      ok = at_ident() && !is_keyword(peek().text);
    } catch (const ParseFail&) {
      ok = false;
    }
    pos_ = save;
    return ok;
  }

  // --- class ---
  void parse_type_decl(RawUnit& out) {
    skip_annotations();
    while (at_ident() && kModifiers.count(peek().text)) advance();
    bool is_interface = false;
    if (accept("interface")) {
      is_interface = true;
    } else if (!accept("class")) {
      if (accept("enum")) {
        is_interface = false;  // treat enum like a class; constants become fields
      } else {
        throw ParseFail{peek().line, "expected class/interface declaration"};
      }
    }
    class_name_ = expect_ident().text;
    skip_generics();
    while (!at("{") && peek().kind != Tok::End) advance();  // extends/implements
    expect("{");
    imports_ = &out.unit.imports;
    fields_ = &out.unit.fields;
    while (!at("}") && peek().kind != Tok::End) parse_member(out, is_interface);
    expect("}");
  }

  void parse_member(RawUnit& out, bool is_interface) {
    skip_annotations();
    std::size_t member_start = pos_;
    bool is_abstract = is_interface;
    while (at_ident() && kModifiers.count(peek().text)) {
      if (peek().text == "abstract") is_abstract = true;
      advance();
    }
    if (at("{")) {  // static/instance initializer block: skip, out of subset
      skip_balanced("{", "}");
      return;
    }
    if (at("class") || at("interface") || at("enum")) {
      // Nested types are out of subset; skip their whole body.
      while (!at("{") && peek().kind != Tok::End) advance();
      skip_balanced("{", "}");
      return;
    }
    skip_generics();  // method type parameters

    // Constructor: `ClassName (` with no preceding return type.
    if (at_ident() && peek().text == class_name_ && peek(1).text == "(") {
      std::string name = advance().text;
      parse_method(out, name, member_start, is_abstract);
      return;
    }

    if (!at_type_start()) throw ParseFail{peek().line, "expected member declaration"};
    parse_type();  // return/field type (text unused for methods)
    std::string name = expect_ident().text;
    if (at("(")) {
      parse_method(out, name, member_start, is_abstract);
      return;
    }
    // Field declaration(s). Re-derive the type text from the member slice.
    std::string member_text = slice(member_start, pos_);
    std::size_t name_at = member_text.rfind(name);
    std::string type_text = util::trim(member_text.substr(0, name_at));
    // Strip leading modifiers from the type text.
    for (std::vector<std::string> words = util::split_tokens(type_text);;) {
      if (words.size() > 1 && kModifiers.count(words.front())) {
        type_text = util::trim(type_text.substr(words.front().size()));
        words.erase(words.begin());
        continue;
      }
      break;
    }
    (*fields_)[name] = type_text;
    if (accept("=")) parse_expr();  // initializer value is not modeled
    while (accept(",")) {
      std::string extra = expect_ident().text;
      (*fields_)[extra] = type_text;
      if (accept("=")) parse_expr();
    }
    expect(";");
  }

  void parse_method(RawUnit& out, const std::string& name, std::size_t member_start,
                    bool is_abstract) {
    MethodDecl m;
    m.name = name;
    m.class_key = qualify(class_name_);
    m.unit_path = path_;
    m.line = toks_[member_start].line;
    expect("(");
    if (!at(")")) {
      do {
        skip_annotations();
        accept("final");
        std::string type = parse_type();
        if (accept(".")) {  // varargs "Type... name" lexes as '.' '.' '.'
          accept(".");
          accept(".");
        }
        std::string pname = expect_ident().text;
        m.params.push_back({pname, type});
      } while (accept(","));
    }
    expect(")");
    if (accept("throws")) {
      parse_dotted();
      while (accept(",")) parse_dotted();
    }
    m.method_id = m.class_key + "." + name + "/" + std::to_string(m.params.size());
    if (at(";") || is_abstract) {
      if (at(";")) advance();
      m.external = true;
      m.source_text = slice_raw(member_start, pos_);
      out.methods.push_back(std::move(m));
      return;
    }
    m.body.kind = NodeKind::Sequence;
    m.body.line = peek().line;
    method_ = &m;
    expect("{");
    while (!at("}") && peek().kind != Tok::End) parse_statement(m.body.children);
    const Token& close = expect("}");
    m.body.end_line = close.line;
    method_ = nullptr;
    m.source_text = slice_raw(member_start, pos_);
    out.methods.push_back(std::move(m));
  }

  // Raw (uncollapsed) source slice for source_text fields.
  std::string slice_raw(std::size_t from_tok, std::size_t to_tok) const {
    if (from_tok >= to_tok) return "";
    std::size_t b = toks_[from_tok].begin;
    std::size_t e = toks_[to_tok - 1].end;
    return src_.substr(b, e - b);
  }

  // --- statements ---
  void parse_statement(std::vector<AstNode>& out) {
    skip_annotations();
    if (accept(";")) return;
    if (at("{")) {  // bare scoping block: contents inline
      advance();
      while (!at("}") && peek().kind != Tok::End) parse_statement(out);
      expect("}");
      return;
    }
    if (at("if")) return parse_if(out);
    if (at("while")) return parse_while(out);
    if (at("do")) return parse_do_while(out);
    if (at("for")) return parse_for(out);
    if (at("switch")) return parse_switch(out);
    if (at("try")) return parse_try(out);
    if (at("return")) {
      const Token& kw = advance();
      AstNode node;
      node.kind = NodeKind::Return;
      node.line = kw.line;
      if (!at(";")) {
        std::size_t from = pos_;
        Expr e = parse_expr();
        node.detail = slice(from, pos_);
        hoist_calls(e, out);
      }
      node.end_line = peek().line;
      expect(";");
      out.push_back(std::move(node));
      return;
    }
    if (at("throw")) {
      const Token& kw = advance();
      std::size_t from = pos_;
      Expr e = parse_expr();
      AstNode node;
      node.kind = NodeKind::Throw;
      node.line = kw.line;
      node.detail = slice(from, pos_);
      node.end_line = peek().line;
      hoist_calls(e, out);
      expect(";");
      out.push_back(std::move(node));
      return;
    }
    if (at("break") || at("continue")) {
      // Loop break/continue: recorded, control effect not modeled.
      const Token& kw = advance();
      AstNode node;
      node.kind = NodeKind::Other;
      node.detail = kw.text;
      node.line = node.end_line = kw.line;
      expect(";");
      out.push_back(std::move(node));
      return;
    }
    if (looks_like_decl()) return parse_decl_statement(out);
    parse_expr_statement(out);
  }

  void parse_if(std::vector<AstNode>& out) {
    const Token& kw = expect("if");
    expect("(");
    std::size_t from = pos_;
    Expr cond = parse_expr();
    std::string cond_text = slice(from, pos_);
    expect(")");
    hoist_calls(cond, out);  // condition calls evaluate before the branch

    AstNode node;
    node.kind = NodeKind::If;
    node.line = kw.line;
    node.detail = cond_text;

    AstNode then_seq;
    then_seq.kind = NodeKind::Sequence;
    then_seq.line = peek().line;
    parse_statement_or_block(then_seq.children);
    then_seq.end_line = prev_line();
    node.children.push_back(std::move(then_seq));

    if (accept("else")) {
      AstNode else_branch;
      else_branch.kind = NodeKind::ElseBranch;
      else_branch.line = peek().line;
      parse_statement_or_block(else_branch.children);
      else_branch.end_line = prev_line();
      node.children.push_back(std::move(else_branch));
    }
    node.end_line = prev_line();
    out.push_back(std::move(node));
  }

  void parse_statement_or_block(std::vector<AstNode>& out) {
    if (at("{")) {
      advance();
      while (!at("}") && peek().kind != Tok::End) parse_statement(out);
      expect("}");
    } else {
      parse_statement(out);
    }
  }

  int prev_line() const { return pos_ > 0 ? toks_[pos_ - 1].line : 1; }

  void parse_while(std::vector<AstNode>& out) {
    const Token& kw = expect("while");
    expect("(");
    std::size_t from = pos_;
    Expr cond = parse_expr();
    std::string cond_text = slice(from, pos_);
    expect(")");
    hoist_calls(cond, out);  // hoisted once; re-evaluation per iteration not modeled

    AstNode node;
    node.kind = NodeKind::Loop;
    node.line = kw.line;
    node.detail = cond_text;
    AstNode body;
    body.kind = NodeKind::Sequence;
    body.line = peek().line;
    parse_statement_or_block(body.children);
    body.end_line = prev_line();
    node.end_line = prev_line();
    node.children.push_back(std::move(body));
    out.push_back(std::move(node));
  }

  void parse_do_while(std::vector<AstNode>& out) {
    // do { B } while (c); lowers as one body pass then a loop: B; loop(c){B}
    // would duplicate nodes — instead model as loop with condition c and the
    // body; the guaranteed first iteration is not represented. Out-of-subset
    // nuance, documented here.
    const Token& kw = expect("do");
    AstNode node;
    node.kind = NodeKind::Loop;
    node.line = kw.line;
    AstNode body;
    body.kind = NodeKind::Sequence;
    body.line = peek().line;
    parse_statement_or_block(body.children);
    body.end_line = prev_line();
    expect("while");
    expect("(");
    std::size_t from = pos_;
    parse_expr();
    node.detail = slice(from, pos_);
    expect(")");
    expect(";");
    node.end_line = prev_line();
    node.children.push_back(std::move(body));
    out.push_back(std::move(node));
  }

  void parse_for(std::vector<AstNode>& out) {
    const Token& kw = expect("for");
    expect("(");
    // For-each: Type ident : expr
    {
      std::size_t save = pos_;
      if (looks_like_decl()) {
        parse_type();
        std::string var = expect_ident().text;
        if (accept(":")) {
          std::size_t from = pos_;
          Expr iter = parse_expr();
          std::string iter_text = slice(from, pos_);
          expect(")");
          hoist_calls(iter, out);
          AstNode node;
          node.kind = NodeKind::Loop;
          node.line = kw.line;
          node.detail = var + " : " + iter_text;
          AstNode body;
          body.kind = NodeKind::Sequence;
          body.line = peek().line;
          parse_statement_or_block(body.children);
          body.end_line = prev_line();
          node.end_line = prev_line();
          node.children.push_back(std::move(body));
          out.push_back(std::move(node));
          return;
        }
        pos_ = save;
      }
    }
    // Classic for: init; cond; update — init lowers before the loop, update
    // appends to the body tail.
    if (!accept(";")) {
      if (looks_like_decl()) {
        parse_decl_statement(out);  // consumes the ';'
      } else {
        parse_expr_statement(out);
      }
    }
    std::string cond_text = "true";
    Expr cond;
    if (!at(";")) {
      std::size_t from = pos_;
      cond = parse_expr();
      cond_text = slice(from, pos_);
    }
    expect(";");
    std::vector<AstNode> update_nodes;
    if (!at(")")) {
      std::size_t from = pos_;
      Expr update = parse_expr();
      std::string text = slice(from, pos_);
      lower_expr(update, text, peek().line, update_nodes);
    }
    expect(")");
    hoist_calls(cond, out);

    AstNode node;
    node.kind = NodeKind::Loop;
    node.line = kw.line;
    node.detail = cond_text;
    AstNode body;
    body.kind = NodeKind::Sequence;
    body.line = peek().line;
    parse_statement_or_block(body.children);
    for (AstNode& u : update_nodes) body.children.push_back(std::move(u));
    body.end_line = prev_line();
    node.end_line = prev_line();
    node.children.push_back(std::move(body));
    out.push_back(std::move(node));
  }

  void parse_switch(std::vector<AstNode>& out) {
    const Token& kw = expect("switch");
    expect("(");
    std::size_t from = pos_;
    Expr scrutinee = parse_expr();
    std::string scrutinee_text = slice(from, pos_);
    expect(")");
    hoist_calls(scrutinee, out);

    AstNode node;
    node.kind = NodeKind::SwitchCase;
    node.line = kw.line;
    node.detail = scrutinee_text;
    expect("{");
    while (!at("}") && peek().kind != Tok::End) {
      AstNode arm;
      arm.kind = NodeKind::Sequence;
      arm.line = peek().line;
      if (accept("case")) {
        std::size_t lf = pos_;
        parse_expr();
        arm.detail = "case " + slice(lf, pos_);
      } else {
        expect("default");
        arm.detail = "default";
      }
      expect(":");
      // Collapse immediately stacked labels (case 1: case 2: body) into one
      // arm labelled by the first.
      while (at("case") || at("default")) {
        if (accept("case")) {
          parse_expr();
        } else {
          advance();
        }
        expect(":");
      }
      while (!at("case") && !at("default") && !at("}") && peek().kind != Tok::End) {
        if (at("break") && peek(1).text == ";") {  // structural arm terminator
          advance();
          advance();
          break;
        }
        parse_statement(arm.children);
      }
      arm.end_line = prev_line();
      node.children.push_back(std::move(arm));
    }
    expect("}");
    node.end_line = prev_line();
    out.push_back(std::move(node));
  }

  void parse_try(std::vector<AstNode>& out) {
    const Token& kw = expect("try");
    AstNode node;
    node.kind = NodeKind::Try;
    node.line = kw.line;

    AstNode body;
    body.kind = NodeKind::Sequence;
    body.line = peek().line;
    expect("{");
    while (!at("}") && peek().kind != Tok::End) parse_statement(body.children);
    expect("}");
    body.end_line = prev_line();
    node.children.push_back(std::move(body));

    while (at("catch")) {
      advance();
      expect("(");
      AstNode handler;
      handler.kind = NodeKind::Catch;
      handler.line = prev_line();
      std::string type = parse_type();
      while (accept("|")) type += " | " + parse_type();  // multi-catch
      std::string var = expect_ident().text;
      if (method_) method_->locals[var] = type;
      handler.detail = type;
      expect(")");
      AstNode hbody;
      hbody.kind = NodeKind::Sequence;
      hbody.line = peek().line;
      expect("{");
      while (!at("}") && peek().kind != Tok::End) parse_statement(hbody.children);
      expect("}");
      hbody.end_line = prev_line();
      handler.end_line = prev_line();
      handler.children.push_back(std::move(hbody));
      node.children.push_back(std::move(handler));
    }
    if (accept("finally")) {
      AstNode fin;
      fin.kind = NodeKind::Sequence;
      fin.detail = "finally";
      fin.line = peek().line;
      expect("{");
      while (!at("}") && peek().kind != Tok::End) parse_statement(fin.children);
      expect("}");
      fin.end_line = prev_line();
      node.children.push_back(std::move(fin));
    }
    node.end_line = prev_line();
    out.push_back(std::move(node));
  }

  void parse_decl_statement(std::vector<AstNode>& out) {
    std::size_t from = pos_;
    std::string type = parse_type();
    std::string name = expect_ident().text;
    if (method_) method_->locals[name] = type;
    std::vector<Expr> inits;
    if (accept("=")) inits.push_back(parse_expr());
    while (accept(",")) {
      std::string extra = expect_ident().text;
      if (method_) method_->locals[extra] = type;
      if (accept("=")) inits.push_back(parse_expr());
    }
    std::string text = slice(from, pos_);
    const Token& semi = expect(";");
    bool emitted = false;
    for (const Expr& e : inits) emitted = hoist_calls(e, out) || emitted;
    if (!emitted) {
      AstNode node;
      node.kind = NodeKind::Other;
      node.detail = text;
      node.line = toks_[from].line;
      node.end_line = semi.line;
      out.push_back(std::move(node));
    }
  }

  void parse_expr_statement(std::vector<AstNode>& out) {
    std::size_t from = pos_;
    Expr e = parse_expr();
    std::string text = slice(from, pos_);
    int line = toks_[from].line;
    expect(";");
    lower_expr(e, text, line, out);
  }

  // Lowers one expression used as a statement: nested calls hoist in
  // evaluation order; a top-level call becomes the statement's node; a
  // call-free expression becomes one other-statement. Lambdas anywhere add
  // one other-statement each (their bodies are opaque).
  void lower_expr(const Expr& e, const std::string& text, int line,
                  std::vector<AstNode>& out) {
    if (e.kind == ExprKind::Call) {
      for (const Expr& arg : e.parts) hoist_calls(arg, out);
      out.push_back(make_call_node(e));
      return;
    }
    bool emitted = hoist_calls(e, out);
    if (!emitted) {
      AstNode node;
      node.kind = NodeKind::Other;
      node.detail = text;
      node.line = node.end_line = line;
      out.push_back(std::move(node));
    }
  }

  // Emits method-call nodes for every call in the subtree (post-order, so
  // arguments precede their caller) and one other-statement per lambda.
  // Returns true if anything was emitted.
  bool hoist_calls(const Expr& e, std::vector<AstNode>& out) {
    bool emitted = false;
    for (const Expr& p : e.parts) emitted = hoist_calls(p, out) || emitted;
    if (e.kind == ExprKind::Call) {
      out.push_back(make_call_node(e));
      emitted = true;
    } else if (e.kind == ExprKind::Lambda) {
      AstNode node;
      node.kind = NodeKind::Other;
      node.detail = e.text;
      node.line = node.end_line = expr_line_;
      out.push_back(std::move(node));
      emitted = true;
    }
    return emitted;
  }

  AstNode make_call_node(const Expr& call) const {
    AstNode node;
    node.kind = NodeKind::MethodCall;
    node.detail = call.callee;  // raw; the resolution pass rewrites it
    node.args = call.parts;
    node.line = node.end_line = expr_line_;
    return node;
  }

  // --- expressions ---
  int expr_line_ = 1;

  Expr parse_expr() {
    expr_line_ = peek().line;
    return parse_assignment();
  }

  Expr parse_assignment() {
    std::size_t from = pos_;
    Expr lhs = parse_ternary();
    static const std::set<std::string> assign_ops = {"=", "+=", "-=", "*=", "/=", "%="};
    if (peek().kind == Tok::Punct && assign_ops.count(peek().text)) {
      advance();
      Expr rhs = parse_assignment();
      Expr node;
      node.kind = ExprKind::Other;
      node.parts = {std::move(lhs), std::move(rhs)};
      node.text = slice(from, pos_);
      return node;
    }
    return lhs;
  }

  Expr parse_ternary() {
    std::size_t from = pos_;
    Expr cond = parse_binary(0);
    if (at("?")) {
      advance();
      Expr a = parse_expr();
      expect(":");
      Expr b = parse_ternary();
      Expr node;
      node.kind = ExprKind::Other;
      node.parts = {std::move(cond), std::move(a), std::move(b)};
      node.text = slice(from, pos_);
      return node;
    }
    return cond;
  }

  // Precedence-climbing over binary operators. Level 0 is loosest.
  static int op_level(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=" || op == "instanceof") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return -1;
  }

  Expr parse_binary(int min_level) {
    std::size_t from = pos_;
    Expr lhs = parse_unary();
    for (;;) {
      const std::string& op = peek().text;
      int level = op_level(op);
      if (level < 0 || level < min_level) break;
      // '<' heading a generic argument list never reaches here: generics only
      // appear in type positions, which the statement layer parses directly.
      advance();
      if (op == "instanceof") {
        parse_type();
        Expr node;
        node.kind = ExprKind::Other;
        node.parts = {std::move(lhs)};
        node.text = slice(from, pos_);
        lhs = std::move(node);
        continue;
      }
      Expr rhs = parse_binary(level + 1);
      if (op == "+") {
        // String concatenation chain when any operand is a string literal.
        std::vector<Expr> parts;
        auto flatten = [&](Expr& e, auto&& self) -> void {
          if (e.kind == ExprKind::Concat) {
            for (Expr& p : e.parts) self(p, self);
          } else {
            parts.push_back(std::move(e));
          }
        };
        flatten(lhs, flatten);
        flatten(rhs, flatten);
        bool any_string = false;
        for (const Expr& p : parts)
          if (p.kind == ExprKind::StringLit) any_string = true;
        Expr node;
        if (any_string) {
          node.kind = ExprKind::Concat;
          node.parts = std::move(parts);
        } else {
          node.kind = ExprKind::Other;
          node.parts = std::move(parts);
        }
        node.text = slice(from, pos_);
        lhs = std::move(node);
      } else {
        Expr node;
        node.kind = ExprKind::Other;
        node.parts = {std::move(lhs), std::move(rhs)};
        node.text = slice(from, pos_);
        lhs = std::move(node);
      }
    }
    return lhs;
  }

  Expr parse_unary() {
    std::size_t from = pos_;
    if (at("!") || at("-") || at("++") || at("--") || at("~")) {
      advance();
      Expr operand = parse_unary();
      Expr node;
      node.kind = ExprKind::Other;
      node.parts = {std::move(operand)};
      node.text = slice(from, pos_);
      return node;
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    std::size_t from = pos_;
    Expr e = parse_primary();
    for (;;) {
      if (at("(") && e.kind == ExprKind::Name) {
        std::vector<Expr> args = parse_args();
        Expr call;
        call.kind = ExprKind::Call;
        call.callee = e.text;
        call.parts = std::move(args);
        call.text = slice(from, pos_);
        e = std::move(call);
      } else if (at(".") && peek(1).kind == Tok::Ident) {
        advance();
        std::string member = advance().text;
        if (at("(")) {
          std::vector<Expr> args = parse_args();
          Expr call;
          call.kind = ExprKind::Call;
          call.callee = e.text + "." + member;
          call.parts = std::move(args);
          call.text = slice(from, pos_);
          e = std::move(call);
        } else if (e.kind == ExprKind::Name) {
          e.text += "." + member;
        } else {
          Expr node;
          node.kind = ExprKind::Other;
          node.parts = {std::move(e)};
          node.text = slice(from, pos_);
          e = std::move(node);
        }
      } else if (at("[")) {
        advance();
        Expr idx = parse_expr();
        expect("]");
        Expr node;
        node.kind = ExprKind::Other;
        node.parts = {std::move(e), std::move(idx)};
        node.text = slice(from, pos_);
        e = std::move(node);
      } else if (at("++") || at("--")) {
        advance();
        Expr node;
        node.kind = ExprKind::Other;
        node.parts = {std::move(e)};
        node.text = slice(from, pos_);
        e = std::move(node);
      } else {
        break;
      }
    }
    return e;
  }

  std::vector<Expr> parse_args() {
    expect("(");
    std::vector<Expr> args;
    if (!at(")")) {
      do {
        args.push_back(parse_expr());
      } while (accept(","));
    }
    expect(")");
    return args;
  }

  Expr parse_primary() {
    std::size_t from = pos_;
    const Token& t = peek();
    if (t.kind == Tok::String) {
      advance();
      Expr e;
      e.kind = ExprKind::StringLit;
      e.literal_value = t.value;
      e.text = t.text;
      return e;
    }
    if (t.kind == Tok::Number) {
      advance();
      Expr e;
      e.kind = ExprKind::NumberLit;
      e.text = t.text;
      return e;
    }
    if (t.kind == Tok::Char) {
      advance();
      Expr e;
      e.kind = ExprKind::CharLit;
      e.text = t.text;
      return e;
    }
    if (at("null")) {
      advance();
      Expr e;
      e.kind = ExprKind::NullLit;
      e.text = "null";
      return e;
    }
    if (at("true") || at("false")) {
      Expr e;
      e.kind = ExprKind::BoolLit;
      e.text = advance().text;
      return e;
    }
    if (at("new")) {
      advance();
      std::string type = parse_type();
      Expr call;
      call.kind = ExprKind::Call;
      call.callee = "new " + type;
      if (at("(")) call.parts = parse_args();
      if (at("{")) skip_balanced("{", "}");  // array/obj initializer, opaque
      call.text = slice(from, pos_);
      return call;
    }
    if (at("(")) {
      // Could be a parenthesized expression, a cast, or a lambda head.
      if (is_lambda_head()) return parse_lambda(from);
      advance();
      Expr inner = parse_expr();
      expect(")");
      // Cast: (Type) operand — the parenthesized expr is a bare type name and
      // an operand follows directly.
      if (inner.kind == ExprKind::Name &&
          (at_ident() || peek().kind == Tok::String || peek().kind == Tok::Number ||
           at("("))) {
        Expr operand = parse_unary();
        Expr node;
        node.kind = ExprKind::Other;
        node.parts = {std::move(operand)};
        node.text = slice(from, pos_);
        return node;
      }
      Expr node;
      if (inner.kind == ExprKind::Concat || inner.kind == ExprKind::StringLit ||
          inner.kind == ExprKind::Call) {
        // Parens around concat/literal/call are transparent for templates.
        return inner;
      }
      node.kind = ExprKind::Other;
      node.parts = {std::move(inner)};
      node.text = slice(from, pos_);
      return node;
    }
    if (t.kind == Tok::Ident) {
      if (peek(1).text == "->") return parse_lambda(from);
      advance();
      Expr e;
      e.kind = ExprKind::Name;
      e.text = t.text;
      return e;
    }
    throw ParseFail{t.line, "unexpected token '" + t.text + "' in expression"};
  }

  bool is_lambda_head() {
    // At '(' — scan to the matching ')' and check for '->'.
    std::size_t p = pos_;
    int depth = 0;
    while (p < toks_.size() && toks_[p].kind != Tok::End) {
      if (toks_[p].text == "(") ++depth;
      if (toks_[p].text == ")") {
        --depth;
        if (depth == 0) return p + 1 < toks_.size() && toks_[p + 1].text == "->";
      }
      ++p;
    }
    return false;
  }

  Expr parse_lambda(std::size_t from) {
    // Skip the parameter head.
    if (at("(")) {
      skip_balanced("(", ")");
    } else {
      expect_ident();
    }
    expect("->");
    // Opaque body: block or expression (scanned, not parsed).
    if (at("{")) {
      skip_balanced("{", "}");
    } else {
      int depth = 0;
      while (peek().kind != Tok::End) {
        const std::string& x = peek().text;
        if (x == "(" || x == "[" || x == "{") ++depth;
        if (x == ")" || x == "]" || x == "}") {
          if (depth == 0) break;
          --depth;
        }
        if (depth == 0 && (x == "," || x == ";")) break;
        advance();
      }
    }
    Expr e;
    e.kind = ExprKind::Lambda;
    e.text = slice(from, pos_);
    return e;
  }
};

// ---------------------------------------------------------------------------
// Callee resolution (second pass, needs the whole project)
// ---------------------------------------------------------------------------

std::string base_type(const std::string& t) {
  std::string out = t;
  std::size_t lt = out.find('<');
  if (lt != std::string::npos) out = out.substr(0, lt);
  std::size_t br = out.find('[');
  if (br != std::string::npos) out = out.substr(0, br);
  return util::trim(out);
}

struct Resolver {
  const ProjectIndex& index;
  const SourceUnit& unit;
  const MethodDecl& method;

  bool is_project_class(const std::string& dotted) const {
    for (const SourceUnit& u : index.units)
      if (u.qualified_type_name == dotted) return true;
    return false;
  }

  // Simple type name -> dotted name, via project classes then imports.
  std::string resolve_type(const std::string& t) const {
    std::string ty = base_type(t);
    if (ty.find('.') != std::string::npos) return ty;
    if (!unit.package_name.empty() && is_project_class(unit.package_name + "." + ty))
      return unit.package_name + "." + ty;
    if (is_project_class(ty)) return ty;  // default package
    auto it = unit.imports.find(ty);
    if (it != unit.imports.end()) return it->second;
    return ty;
  }

  std::string var_type(const std::string& name) const {
    auto l = method.locals.find(name);
    if (l != method.locals.end()) return l->second;
    for (const Param& p : method.params)
      if (p.name == name) return p.type;
    auto f = unit.fields.find(name);
    if (f != unit.fields.end()) return f->second;
    return "";
  }

  std::string resolve(const std::string& raw, std::size_t arity) const {
    // Already-resolved keys (internal "pkg.Class.m/arity", external
    // constructor "Dotted.new") pass through untouched so that resolution can
    // be re-run after more files join the index.
    if (raw.find('/') != std::string::npos) return raw;
    if (raw.size() > 4 && raw.compare(raw.size() - 4, 4, ".new") == 0) return raw;
    std::string suffix = "/" + std::to_string(arity);
    if (raw.rfind("new ", 0) == 0) {
      std::string dotted = resolve_type(raw.substr(4));
      if (is_project_class(dotted)) {
        std::size_t dot = dotted.rfind('.');
        std::string simple = dot == std::string::npos ? dotted : dotted.substr(dot + 1);
        return dotted + "." + simple + suffix;  // constructor as member
      }
      return dotted + ".new";
    }
    std::vector<std::string> segs;
    std::size_t start = 0;
    for (std::size_t dot = raw.find('.'); ; dot = raw.find('.', start)) {
      if (dot == std::string::npos) {
        segs.push_back(raw.substr(start));
        break;
      }
      segs.push_back(raw.substr(start, dot - start));
      start = dot + 1;
    }
    if (segs.size() == 1) return unit.qualified_type_name + "." + raw + suffix;
    if (segs.size() == 2 && segs[0] == "this")
      return unit.qualified_type_name + "." + segs[1] + suffix;
    if (segs.size() == 2) {
      const std::string& recv = segs[0];
      const std::string& name = segs[1];
      std::string vt = var_type(recv);
      if (!vt.empty()) {
        std::string dotted = resolve_type(vt);
        if (is_project_class(dotted)) return dotted + "." + name + suffix;
        return dotted + "." + name;
      }
      std::string as_type = resolve_type(recv);
      if (is_project_class(as_type)) return as_type + "." + name + suffix;
      return as_type + "." + name;
    }
    // Multi-segment receiver: fully qualified external call, kept as written.
    return raw;
  }
};

void resolve_node(AstNode& node, const Resolver& r) {
  if (node.kind == NodeKind::MethodCall || node.kind == NodeKind::LogCall)
    node.detail = r.resolve(node.detail, node.args.size());
  for (AstNode& c : node.children) resolve_node(c, r);
}

void resolve_unit(ProjectIndex& index, const SourceUnit& unit) {
  for (const std::string& mid : unit.method_ids) {
    MethodDecl& m = index.methods.at(mid);
    if (m.external) continue;
    Resolver r{index, unit, m};
    resolve_node(m.body, r);
  }
}

// Merges one parsed file into the index; duplicate method ids are hard errors.
void merge_raw_unit(ProjectIndex& index, RawUnit&& raw) {
  for (ParseError& e : raw.errors) index.errors.push_back(std::move(e));
  for (MethodDecl& m : raw.methods) {
    auto existing = index.methods.find(m.method_id);
    if (existing != index.methods.end()) {
      throw StageError("frontend", "duplicate method_id '" + m.method_id + "' declared in " +
                                       existing->second.unit_path + " and " + m.unit_path);
    }
    raw.unit.method_ids.push_back(m.method_id);
    index.methods.emplace(m.method_id, std::move(m));
  }
  index.units.push_back(std::move(raw.unit));
}

RawUnit parse_raw(const std::string& path, const std::string& text) {
  try {
    Parser p(path, text);
    return p.run();
  } catch (const ParseFail& f) {
    RawUnit out;
    out.unit.path = path;
    out.errors.push_back({path, f.line, f.message});
    return out;
  } catch (const LexFail& f) {
    RawUnit out;
    out.unit.path = path;
    out.errors.push_back({path, f.line, f.message});
    return out;
  }
}

}  // namespace

SourceUnit parse_unit(const std::string& path, const std::string& text, ProjectIndex& index) {
  RawUnit raw = parse_raw(path, text);
  merge_raw_unit(index, std::move(raw));
  // Re-resolve every unit: a later file can give an earlier two-segment
  // callee a project-class meaning. Resolution is stable on resolved keys,
  // so repeating it is safe. (parse_source resolves once, after all files.)
  for (const SourceUnit& u : index.units) resolve_unit(index, u);
  return index.units.back();
}

ProjectIndex parse_source(const std::string& root, const LanguageConfig& language, int threads) {
  namespace fs = std::filesystem;
  ProjectIndex index;
  if (!fs::exists(root))
    throw StageError("frontend", "source root does not exist: " + root);

  std::set<std::string> excluded(language.excluded_dirs.begin(), language.excluded_dirs.end());
  std::vector<std::string> files;  // relative paths
  fs::path base(root);
  for (auto it = fs::recursive_directory_iterator(base); it != fs::recursive_directory_iterator();
       ++it) {
    if (it->is_directory()) {
      if (excluded.count(it->path().filename().string())) it.disable_recursion_pending();
      continue;
    }
    std::string ext = it->path().extension().string();
    bool wanted = false;
    for (const std::string& e : language.extensions)
      if (ext == e) wanted = true;
    if (wanted) files.push_back(fs::relative(it->path(), base).generic_string());
  }
  std::sort(files.begin(), files.end());

  std::vector<RawUnit> parsed(files.size());
  std::vector<ParseError> io_errors;
  auto parse_one = [&](std::size_t i) {
    auto text = util::read_file((base / files[i]).string());
    if (!text) {
      RawUnit bad;
      bad.unit.path = files[i];
      bad.errors.push_back({files[i], 0, "unreadable file"});
      parsed[i] = std::move(bad);
      return;
    }
    parsed[i] = parse_raw(files[i], *text);
  };

  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  if (n_threads <= 1 || files.size() <= 1) {
    for (std::size_t i = 0; i < files.size(); ++i) parse_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(n_threads, files.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1))
          parse_one(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  // Sequential merge in path order keeps the index deterministic regardless
  // of parse scheduling.
  for (RawUnit& raw : parsed) {
    // Units that failed before producing a class are kept for their errors
    // only when they have any.
    if (raw.unit.qualified_type_name.empty() && raw.methods.empty()) {
      for (ParseError& e : raw.errors) index.errors.push_back(std::move(e));
      continue;
    }
    merge_raw_unit(index, std::move(raw));
  }
  for (const SourceUnit& unit : index.units) resolve_unit(index, unit);
  return index;
}

}  // namespace anomalygen
