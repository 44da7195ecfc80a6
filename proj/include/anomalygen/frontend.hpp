#pragma once

#include <string>
#include <vector>

#include "anomalygen/ast.hpp"
#include "anomalygen/config.hpp"

namespace anomalygen {

// Parses every matching file under root into a ProjectIndex. Files parse
// independently (and may parse concurrently); unreadable or unparsable files
// land in index.errors and the rest of the tree still loads. A duplicate
// method_id across files is a hard error naming both locations.
ProjectIndex parse_source(const std::string& root, const LanguageConfig& language, int threads = 0);

// Parses a single in-memory unit; exposed for tests.
SourceUnit parse_unit(const std::string& path, const std::string& text, ProjectIndex& index);

// Retags method-call nodes that match a configured logging API as log-call
// nodes carrying the mapped level. Matching runs on the resolved callee key
// (e.g. "org.slf4j.Logger.info"). Returns the retagged nodes in source order.
// Idempotent: already-retagged nodes keep their level and are re-reported.
std::vector<const AstNode*> recognize_log_calls(MethodDecl& method, const LoggingConfig& logging);

// Extracts one template from a retagged log call. String literals are kept
// verbatim; every non-literal concat fragment and every format placeholder
// ({}; %s/%d/%f/%x) becomes one <*>; adjacent literals merge; whitespace is
// collapsed. A call with no message argument yields std::nullopt and a
// warning record upstream. template_id is left 0 here — ids are assigned
// project-wide by extract_templates.
struct TemplateExtraction {
  bool ok = false;
  LogTemplate result;
  std::string warning;  // set when skipped
};
TemplateExtraction extract_template(const AstNode& log_call, const std::string& level,
                                    const std::string& method_id);

// Whole-project pass: recognize_log_calls on every method, extract a template
// per log call, sort by (fnv1a64(pattern|method|line), method_id, line,
// pattern), densely renumber from 1, and write each id back into its
// log-call node. After this the index is frozen.
struct TemplateTable {
  std::vector<LogTemplate> templates;   // sorted by template_id
  std::vector<std::string> warnings;    // skipped calls (no message argument)
};
TemplateTable extract_templates(ProjectIndex& index, const LoggingConfig& logging);

}  // namespace anomalygen
