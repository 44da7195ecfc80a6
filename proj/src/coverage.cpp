#include "anomalygen/coverage.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anomalygen/config.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

// Memoized alignment over the two token sequences. slot: 0 unknown, 1 yes,
// 2 no.
bool align(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
           std::size_t j, std::vector<signed char>& memo) {
  signed char& slot = memo[i * (b.size() + 1) + j];
  if (slot) return slot == 1;
  bool ok = false;
  if (i == a.size() && j == b.size()) {
    ok = true;
  } else {
    if (i < a.size() && a[i] == "<*>") {
      for (std::size_t k = j + 1; k <= b.size() && !ok; ++k) ok = align(a, i + 1, b, k, memo);
    }
    if (!ok && j < b.size() && b[j] == "<*>") {
      for (std::size_t k = i + 1; k <= a.size() && !ok; ++k) ok = align(a, k, b, j + 1, memo);
    }
    if (!ok && i < a.size() && j < b.size() && a[i] != "<*>" && a[i] == b[j])
      ok = align(a, i + 1, b, j + 1, memo);
  }
  slot = ok ? 1 : 2;
  return ok;
}

std::string format_row(const std::string& level, std::size_t matched, std::size_t total,
                       double ratio) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  %-8s %9zu %9zu %9.2f%%\n", level.c_str(), total, matched,
                ratio * 100.0);
  return buf;
}

}  // namespace

bool match_template(const std::string& observed, const std::string& source) {
  std::vector<std::string> a = util::split_tokens(observed);
  std::vector<std::string> b = util::split_tokens(source);
  std::vector<signed char> memo((a.size() + 1) * (b.size() + 1), 0);
  return align(a, 0, b, 0, memo);
}

CoverageReport audit_coverage(const std::vector<LogTemplate>& source,
                              const std::vector<std::string>& observed) {
  if (source.empty()) throw StageError("coverage", "no source templates");

  CoverageReport rep;
  rep.n_source = source.size();

  // Exact-equality fast path: most observed patterns are verbatim copies of a
  // source pattern, and pairwise alignment over large universes is quadratic.
  std::set<std::string> observed_exact(observed.begin(), observed.end());
  std::set<std::string> source_exact;
  for (const LogTemplate& t : source) source_exact.insert(t.pattern);

  std::map<std::string, std::pair<std::size_t, std::size_t>> per_level;
  std::vector<char> observed_hit(observed.size(), 0);
  for (const LogTemplate& t : source) {
    bool covered = observed_exact.count(t.pattern) > 0;
    if (covered) {
      for (std::size_t i = 0; i < observed.size(); ++i)
        if (observed[i] == t.pattern) observed_hit[i] = 1;
    } else {
      for (std::size_t i = 0; i < observed.size(); ++i) {
        if (match_template(observed[i], t.pattern)) {
          covered = true;
          observed_hit[i] = 1;
        }
      }
    }
    auto& bucket = per_level[t.level];
    ++bucket.second;
    if (covered) {
      ++bucket.first;
      ++rep.n_source_matched;
    }
  }
  rep.coverage = static_cast<double>(rep.n_source_matched) / static_cast<double>(rep.n_source);

  std::set<std::string> reported;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed_hit[i]) continue;
    if (source_exact.count(observed[i])) continue;  // hit via the fast path
    if (reported.insert(observed[i]).second) rep.unmatched_observed.push_back(observed[i]);
  }
  rep.per_level.assign(per_level.begin(), per_level.end());
  return rep;
}

std::string CoverageReport::render() const {
  std::string out = "log template coverage\n";
  out += "  level       source   matched   coverage\n";
  for (const auto& [level, counts] : per_level) {
    double ratio =
        counts.second ? static_cast<double>(counts.first) / static_cast<double>(counts.second)
                      : 0.0;
    out += format_row(level, counts.first, counts.second, ratio);
  }
  out += format_row("total", n_source_matched, n_source, coverage);
  if (!unmatched_observed.empty()) {
    out += "\nunmatched observed patterns (" + std::to_string(unmatched_observed.size()) +
           "):\n";
    for (const std::string& p : unmatched_observed) out += "  " + p + "\n";
  }
  return out;
}

PrfMetrics compute_prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace anomalygen
