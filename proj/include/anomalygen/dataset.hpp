#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomalygen/labeler.hpp"

namespace anomalygen {

struct DatasetSplit {
  std::vector<Session> train;
  std::vector<Session> test;  // real sessions only, by contract
};

struct AugPlan {
  double ratio = 0.0;
  std::size_t n_real = 0;
  std::size_t n_syn_target = 0;     // round-half-up(ratio * n_real)
  std::vector<std::string> picks;   // synthetic session ids, pick order
  std::size_t picked_normal = 0;
  std::size_t picked_anomalous = 0;
  bool pool_limited = false;  // one class ran short; filled from the other
  std::string render_json() const;
};

// round-half-up(R * n): floor(R*n + 0.5).
std::size_t augmentation_target(double ratio, std::size_t n_real);

// Target split ceil(n/2) normal / floor(n/2) anomalous; seeded sampling
// without replacement within each class; shortfall in one class is filled
// from the other and flagged. A pool smaller than the target even across
// classes is a hard error naming the deficit.
AugPlan plan_augmentation(std::size_t n_real, const std::vector<Session>& pool, double ratio,
                          std::uint64_t seed);

// Appends picked sessions to train in plan order; test is untouched. A pick
// id missing from the pool is a hard error.
DatasetSplit apply_augmentation(const DatasetSplit& split, const std::vector<Session>& pool,
                                const AugPlan& plan);

// Fails (GuardViolation) if test contains any synthetic session or any
// session id duplicated across train/test; the report lists offending ids.
struct GuardReport {
  bool ok = true;
  std::vector<std::string> synthetic_in_test;
  std::vector<std::string> duplicated_ids;
  std::string render() const;
};
GuardReport split_guard(const DatasetSplit& split);

// Line-delimited JSON, one session per line; LF endings; field order
// session_id, label, provenance, context, events[{template_id,level,message}].
// Read errors carry the 1-based line number.
std::vector<Session> read_sessions(const std::string& path);
std::vector<Session> sessions_from_text(const std::string& text, const std::string& origin);
void write_sessions(const std::vector<Session>& sessions, const std::string& path);
std::string sessions_to_text(const std::vector<Session>& sessions);

}  // namespace anomalygen
