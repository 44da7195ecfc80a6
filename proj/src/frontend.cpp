// Log-call recognition and project-wide template extraction.

#include <algorithm>
#include <set>
#include <tuple>

#include "anomalygen/frontend.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

const std::set<std::string> kLevels = {"TRACE", "DEBUG", "INFO", "WARN", "ERROR", "FATAL"};

void validate_logging(const LoggingConfig& logging) {
  for (const LoggingApi& api : logging.apis) {
    try {
      util::validate_glob(api.pattern);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("logging_apis: ") + e.what());
    }
    if (!kLevels.count(api.level))
      throw ConfigError("logging_apis: unknown level '" + api.level + "' for pattern '" +
                        api.pattern + "'");
  }
}

void collect_calls(AstNode& node, std::vector<AstNode*>& out) {
  if (node.kind == NodeKind::MethodCall || node.kind == NodeKind::LogCall) out.push_back(&node);
  for (AstNode& c : node.children) collect_calls(c, out);
}

}  // namespace

std::vector<const AstNode*> recognize_log_calls(MethodDecl& method, const LoggingConfig& logging) {
  validate_logging(logging);
  std::vector<const AstNode*> hits;
  std::vector<AstNode*> calls;
  collect_calls(method.body, calls);
  for (AstNode* call : calls) {
    if (call->kind == NodeKind::LogCall) {  // idempotent re-recognition
      hits.push_back(call);
      continue;
    }
    for (const LoggingApi& api : logging.apis) {
      if (util::glob_match(api.pattern, call->detail)) {
        call->kind = NodeKind::LogCall;
        call->level = api.level;
        hits.push_back(call);
        break;
      }
    }
  }
  return hits;
}

TemplateTable extract_templates(ProjectIndex& index, const LoggingConfig& logging) {
  validate_logging(logging);
  struct Record {
    std::uint64_t hash = 0;
    LogTemplate tpl;
    AstNode* node = nullptr;
  };
  std::vector<Record> records;
  TemplateTable out;

  for (auto& [mid, method] : index.methods) {  // std::map: method_id order
    if (method.external) continue;
    recognize_log_calls(method, logging);
    std::vector<AstNode*> calls;
    collect_calls(method.body, calls);
    for (AstNode* call : calls) {
      if (call->kind != NodeKind::LogCall) continue;
      TemplateExtraction ex = extract_template(*call, call->level, mid);
      if (!ex.ok) {
        out.warnings.push_back(ex.warning);
        continue;
      }
      Record r;
      r.tpl = std::move(ex.result);
      r.tpl.line = call->line;
      r.node = call;
      r.hash = util::fnv1a64(r.tpl.pattern + "\x1f" + mid + "\x1f" + std::to_string(r.tpl.line));
      records.push_back(std::move(r));
    }
  }

  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.hash, a.tpl.method_id, a.tpl.line, a.tpl.pattern) <
           std::tie(b.hash, b.tpl.method_id, b.tpl.line, b.tpl.pattern);
  });
  std::uint64_t next_id = 1;
  for (Record& r : records) {
    r.tpl.template_id = next_id++;
    r.node->template_id = r.tpl.template_id;
    out.templates.push_back(std::move(r.tpl));
  }
  return out;
}

}  // namespace anomalygen
