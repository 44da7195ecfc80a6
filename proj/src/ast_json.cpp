// JSON and TSV (de)serialization for the project index and template table.

#include <nlohmann/json.hpp>

#include "anomalygen/ast.hpp"
#include "anomalygen/config.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

using Json = nlohmann::ordered_json;

const char* expr_kind_name(ExprKind k) {
  switch (k) {
    case ExprKind::StringLit: return "string";
    case ExprKind::NullLit: return "null";
    case ExprKind::BoolLit: return "bool";
    case ExprKind::NumberLit: return "number";
    case ExprKind::CharLit: return "char";
    case ExprKind::Name: return "name";
    case ExprKind::Call: return "call";
    case ExprKind::Concat: return "concat";
    case ExprKind::Lambda: return "lambda";
    case ExprKind::Other: return "other";
  }
  return "other";
}

ExprKind expr_kind_from_name(const std::string& n) {
  if (n == "string") return ExprKind::StringLit;
  if (n == "null") return ExprKind::NullLit;
  if (n == "bool") return ExprKind::BoolLit;
  if (n == "number") return ExprKind::NumberLit;
  if (n == "char") return ExprKind::CharLit;
  if (n == "name") return ExprKind::Name;
  if (n == "call") return ExprKind::Call;
  if (n == "concat") return ExprKind::Concat;
  if (n == "lambda") return ExprKind::Lambda;
  if (n == "other") return ExprKind::Other;
  throw StageError("serialize", "unknown expression kind: " + n);
}

Json expr_to_json(const Expr& e) {
  Json j;
  j["kind"] = expr_kind_name(e.kind);
  j["text"] = e.text;
  if (!e.literal_value.empty() || e.kind == ExprKind::StringLit)
    j["value"] = e.literal_value;
  if (!e.callee.empty()) j["callee"] = e.callee;
  if (!e.parts.empty()) {
    Json parts = Json::array();
    for (const Expr& p : e.parts) parts.push_back(expr_to_json(p));
    j["parts"] = std::move(parts);
  }
  return j;
}

Expr expr_from_json(const Json& j) {
  Expr e;
  e.kind = expr_kind_from_name(j.at("kind").get<std::string>());
  e.text = j.at("text").get<std::string>();
  if (j.contains("value")) e.literal_value = j["value"].get<std::string>();
  if (j.contains("callee")) e.callee = j["callee"].get<std::string>();
  if (j.contains("parts"))
    for (const Json& p : j["parts"]) e.parts.push_back(expr_from_json(p));
  return e;
}

Json node_to_json(const AstNode& n) {
  Json j;
  j["kind"] = node_kind_name(n.kind);
  j["line"] = n.line;
  j["end_line"] = n.end_line;
  if (!n.detail.empty()) j["detail"] = n.detail;
  if (!n.level.empty()) j["level"] = n.level;
  if (n.template_id != 0) j["template_id"] = n.template_id;
  if (!n.args.empty()) {
    Json args = Json::array();
    for (const Expr& a : n.args) args.push_back(expr_to_json(a));
    j["args"] = std::move(args);
  }
  if (!n.children.empty()) {
    Json kids = Json::array();
    for (const AstNode& c : n.children) kids.push_back(node_to_json(c));
    j["children"] = std::move(kids);
  }
  return j;
}

AstNode node_from_json(const Json& j) {
  AstNode n;
  n.kind = node_kind_from_name(j.at("kind").get<std::string>());
  n.line = j.at("line").get<int>();
  n.end_line = j.at("end_line").get<int>();
  if (j.contains("detail")) n.detail = j["detail"].get<std::string>();
  if (j.contains("level")) n.level = j["level"].get<std::string>();
  if (j.contains("template_id")) n.template_id = j["template_id"].get<std::uint64_t>();
  if (j.contains("args"))
    for (const Json& a : j["args"]) n.args.push_back(expr_from_json(a));
  if (j.contains("children"))
    for (const Json& c : j["children"]) n.children.push_back(node_from_json(c));
  return n;
}

Json template_to_json(const LogTemplate& t) {
  Json j;
  j["template_id"] = t.template_id;
  j["pattern"] = t.pattern;
  j["level"] = t.level;
  j["method_id"] = t.method_id;
  j["line"] = t.line;
  Json kinds = Json::array();
  for (PlaceholderKind k : t.placeholder_kinds) kinds.push_back(placeholder_kind_name(k));
  j["placeholder_kinds"] = std::move(kinds);
  return j;
}

LogTemplate template_from_json(const Json& j) {
  LogTemplate t;
  t.template_id = j.at("template_id").get<std::uint64_t>();
  t.pattern = j.at("pattern").get<std::string>();
  t.level = j.at("level").get<std::string>();
  t.method_id = j.at("method_id").get<std::string>();
  t.line = j.at("line").get<int>();
  for (const Json& k : j.at("placeholder_kinds"))
    t.placeholder_kinds.push_back(placeholder_kind_from_name(k.get<std::string>()));
  return t;
}

}  // namespace

std::string index_to_json(const ProjectIndex& index, const std::vector<LogTemplate>& templates) {
  Json root;
  Json units = Json::array();
  for (const SourceUnit& u : index.units) {
    Json ju;
    ju["path"] = u.path;
    ju["package"] = u.package_name;
    ju["qualified_type_name"] = u.qualified_type_name;
    ju["imports"] = u.imports;
    ju["fields"] = u.fields;
    ju["method_ids"] = u.method_ids;
    units.push_back(std::move(ju));
  }
  root["units"] = std::move(units);

  Json methods = Json::object();
  for (const auto& [mid, m] : index.methods) {
    Json jm;
    jm["method_id"] = m.method_id;
    jm["class_key"] = m.class_key;
    jm["name"] = m.name;
    Json params = Json::array();
    for (const Param& p : m.params) params.push_back(Json{{"name", p.name}, {"type", p.type}});
    jm["params"] = std::move(params);
    jm["unit_path"] = m.unit_path;
    jm["locals"] = m.locals;
    jm["line"] = m.line;
    jm["external"] = m.external;
    jm["source_text"] = m.source_text;
    if (!m.external) jm["body"] = node_to_json(m.body);
    methods[mid] = std::move(jm);
  }
  root["methods"] = std::move(methods);

  Json tpls = Json::array();
  for (const LogTemplate& t : templates) tpls.push_back(template_to_json(t));
  root["templates"] = std::move(tpls);

  Json errors = Json::array();
  for (const ParseError& e : index.errors)
    errors.push_back(Json{{"path", e.path}, {"line", e.line}, {"message", e.message}});
  root["errors"] = std::move(errors);

  return root.dump(2) + "\n";
}

void index_from_json(const std::string& text, ProjectIndex& index,
                     std::vector<LogTemplate>& templates) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw StageError("serialize", std::string("bad index JSON: ") + e.what());
  }
  index = ProjectIndex{};
  templates.clear();
  for (const Json& ju : root.at("units")) {
    SourceUnit u;
    u.path = ju.at("path").get<std::string>();
    u.package_name = ju.at("package").get<std::string>();
    u.qualified_type_name = ju.at("qualified_type_name").get<std::string>();
    u.imports = ju.at("imports").get<std::map<std::string, std::string>>();
    u.fields = ju.at("fields").get<std::map<std::string, std::string>>();
    u.method_ids = ju.at("method_ids").get<std::vector<std::string>>();
    index.units.push_back(std::move(u));
  }
  for (const auto& [mid, jm] : root.at("methods").items()) {
    MethodDecl m;
    m.method_id = jm.at("method_id").get<std::string>();
    m.class_key = jm.at("class_key").get<std::string>();
    m.name = jm.at("name").get<std::string>();
    for (const Json& jp : jm.at("params"))
      m.params.push_back({jp.at("name").get<std::string>(), jp.at("type").get<std::string>()});
    m.unit_path = jm.at("unit_path").get<std::string>();
    m.locals = jm.at("locals").get<std::map<std::string, std::string>>();
    m.line = jm.at("line").get<int>();
    m.external = jm.at("external").get<bool>();
    m.source_text = jm.at("source_text").get<std::string>();
    if (!m.external) m.body = node_from_json(jm.at("body"));
    index.methods.emplace(mid, std::move(m));
  }
  for (const Json& jt : root.at("templates")) templates.push_back(template_from_json(jt));
  for (const Json& je : root.at("errors")) {
    index.errors.push_back({je.at("path").get<std::string>(), je.at("line").get<int>(),
                            je.at("message").get<std::string>()});
  }
}

std::string templates_to_tsv(const std::vector<LogTemplate>& templates) {
  std::string out;
  for (const LogTemplate& t : templates) {
    out += std::to_string(t.template_id);
    out += '\t';
    out += t.level;
    out += '\t';
    out += t.method_id;
    out += '\t';
    out += std::to_string(t.line);
    out += '\t';
    out += t.pattern;
    out += '\n';
  }
  return out;
}

std::vector<LogTemplate> templates_from_tsv(const std::string& text) {
  std::vector<LogTemplate> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t c = 0;
    for (int i = 0; i < 4; ++i) {
      std::size_t tab = line.find('\t', c);
      if (tab == std::string::npos)
        throw StageError("serialize",
                         "template TSV line " + std::to_string(line_no) + ": expected 5 columns");
      cols.push_back(line.substr(c, tab - c));
      c = tab + 1;
    }
    cols.push_back(line.substr(c));
    LogTemplate t;
    try {
      t.template_id = std::stoull(cols[0]);
      t.line = std::stoi(cols[3]);
    } catch (const std::exception&) {
      throw StageError("serialize",
                       "template TSV line " + std::to_string(line_no) + ": bad numeric field");
    }
    t.level = cols[1];
    t.method_id = cols[2];
    t.pattern = cols[4];
    // Placeholder kinds are not part of the dump format; re-derive counts as
    // generic so the table is still usable for matching.
    std::size_t stars = 0;
    for (std::size_t p = t.pattern.find("<*>"); p != std::string::npos;
         p = t.pattern.find("<*>", p + 3))
      ++stars;
    t.placeholder_kinds.assign(stars, PlaceholderKind::Generic);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace anomalygen
