#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anomalygen/ast.hpp"

namespace anomalygen {

// True iff the token sequences align: a literal token must equal its
// counterpart; a <*> on either side consumes exactly one nonempty run of
// tokens on the other. Case-sensitive on literals.
bool match_template(const std::string& observed, const std::string& source);

struct CoverageReport {
  std::size_t n_source = 0;
  std::size_t n_source_matched = 0;  // distinct source templates hit
  double coverage = 0.0;             // n_source_matched / n_source
  std::vector<std::string> unmatched_observed;  // candidate normalization bugs
  // level -> (matched, total) over source templates
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> per_level;
  std::string render() const;  // aligned plain-text table
};

// A source template counts as covered when ANY observed pattern matches it;
// many observed patterns may hit one source template. Empty source set is an
// error ("no source templates").
CoverageReport audit_coverage(const std::vector<LogTemplate>& source,
                              const std::vector<std::string>& observed);

struct PrfMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); every 0/0 resolves to 0.
PrfMetrics compute_prf(std::size_t tp, std::size_t fp, std::size_t fn);

}  // namespace anomalygen
