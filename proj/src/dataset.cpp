#include "anomalygen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anomalygen/config.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

using ordered_json = nlohmann::ordered_json;

// Fisher-Yates shuffle driven by the module-wide PRNG.
void shuffle_ids(std::vector<std::string>& ids, util::SplitMix64& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(ids[i - 1], ids[j]);
  }
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace

std::size_t augmentation_target(double ratio, std::size_t n_real) {
  if (ratio < 0.0) throw ConfigError("augmentation ratio must be >= 0");
  double product = ratio * static_cast<double>(n_real);
  return static_cast<std::size_t>(std::floor(product + 0.5));
}

AugPlan plan_augmentation(std::size_t n_real, const std::vector<Session>& pool, double ratio,
                          std::uint64_t seed) {
  AugPlan plan;
  plan.ratio = ratio;
  plan.n_real = n_real;
  plan.n_syn_target = augmentation_target(ratio, n_real);
  if (plan.n_syn_target == 0) return plan;

  if (pool.size() < plan.n_syn_target) {
    std::size_t deficit = plan.n_syn_target - pool.size();
    throw StageError("augment", "synthetic pool has " + std::to_string(pool.size()) +
                                    " sessions but the target is " +
                                    std::to_string(plan.n_syn_target) + "; short by " +
                                    std::to_string(deficit));
  }

  std::vector<std::string> normals;
  std::vector<std::string> anomalous;
  for (const Session& s : pool) {
    if (s.label == "anomalous")
      anomalous.push_back(s.session_id);
    else
      normals.push_back(s.session_id);
  }

  util::SplitMix64 rng(seed);
  shuffle_ids(normals, rng);
  shuffle_ids(anomalous, rng);

  std::size_t want_normal = (plan.n_syn_target + 1) / 2;
  std::size_t want_anom = plan.n_syn_target / 2;
  std::size_t take_normal = std::min(want_normal, normals.size());
  std::size_t take_anom = std::min(want_anom, anomalous.size());
  plan.pool_limited = take_normal != want_normal || take_anom != want_anom;

  std::size_t missing = plan.n_syn_target - take_normal - take_anom;
  std::size_t spare_anom = anomalous.size() - take_anom;
  std::size_t fill_anom = std::min(missing, spare_anom);
  take_anom += fill_anom;
  missing -= fill_anom;
  take_normal += missing;  // the size check above guarantees this fits

  plan.picks.assign(normals.begin(), normals.begin() + take_normal);
  plan.picks.insert(plan.picks.end(), anomalous.begin(), anomalous.begin() + take_anom);
  plan.picked_normal = take_normal;
  plan.picked_anomalous = take_anom;
  return plan;
}

DatasetSplit apply_augmentation(const DatasetSplit& split, const std::vector<Session>& pool,
                                const AugPlan& plan) {
  std::map<std::string, const Session*> by_id;
  for (const Session& s : pool) by_id.emplace(s.session_id, &s);

  DatasetSplit out = split;
  for (const std::string& id : plan.picks) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw StageError("augment", "pick " + id + " is not in the synthetic pool");
    out.train.push_back(*it->second);
  }
  return out;
}

std::string AugPlan::render_json() const {
  ordered_json j;
  j["ratio"] = ratio;
  j["n_real"] = n_real;
  j["n_syn_target"] = n_syn_target;
  j["picked_normal"] = picked_normal;
  j["picked_anomalous"] = picked_anomalous;
  j["pool_limited"] = pool_limited;
  j["picks"] = picks;
  return j.dump(2) + "\n";
}

GuardReport split_guard(const DatasetSplit& split) {
  GuardReport rep;
  std::set<std::string> train_ids;
  for (const Session& s : split.train) train_ids.insert(s.session_id);

  std::set<std::string> synthetic;
  std::set<std::string> duplicated;
  for (const Session& s : split.test) {
    if (s.provenance == "synthetic") synthetic.insert(s.session_id);
    if (train_ids.count(s.session_id)) duplicated.insert(s.session_id);
  }
  rep.synthetic_in_test.assign(synthetic.begin(), synthetic.end());
  rep.duplicated_ids.assign(duplicated.begin(), duplicated.end());
  rep.ok = rep.synthetic_in_test.empty() && rep.duplicated_ids.empty();
  return rep;
}

std::string GuardReport::render() const {
  if (ok) return "split guard: OK\n";
  std::string out = "split guard: VIOLATION\n";
  if (!synthetic_in_test.empty())
    out += "  synthetic sessions in test: " + join_ids(synthetic_in_test) + "\n";
  if (!duplicated_ids.empty())
    out += "  session ids duplicated across train/test: " + join_ids(duplicated_ids) + "\n";
  return out;
}

std::string sessions_to_text(const std::vector<Session>& sessions) {
  std::string out;
  for (const Session& s : sessions) {
    ordered_json j;
    j["session_id"] = s.session_id;
    j["label"] = s.label;
    j["provenance"] = s.provenance;
    j["context"] = s.context;
    ordered_json events = ordered_json::array();
    for (const ParamEvent& e : s.events) {
      ordered_json ev;
      ev["template_id"] = e.template_id;
      ev["level"] = e.level;
      ev["message"] = e.message;
      events.push_back(std::move(ev));
    }
    j["events"] = std::move(events);
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void line_error(const std::string& origin, std::size_t lineno,
                             const std::string& why) {
  throw StageError("dataset", origin + ":" + std::to_string(lineno) + ": " + why);
}

std::string require_string(const ordered_json& j, const char* key, const std::string& origin,
                           std::size_t lineno) {
  if (!j.contains(key) || !j[key].is_string())
    line_error(origin, lineno, std::string("missing or non-string field \"") + key + "\"");
  return j[key].get<std::string>();
}

}  // namespace

std::vector<Session> sessions_from_text(const std::string& text, const std::string& origin) {
  std::vector<Session> sessions;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) line_error(origin, lineno, "invalid JSON");
    if (!j.is_object()) line_error(origin, lineno, "expected a JSON object");

    Session s;
    s.session_id = require_string(j, "session_id", origin, lineno);
    s.label = require_string(j, "label", origin, lineno);
    if (s.label != "normal" && s.label != "anomalous")
      line_error(origin, lineno, "label must be \"normal\" or \"anomalous\", got \"" + s.label +
                                     "\"");
    s.provenance = require_string(j, "provenance", origin, lineno);
    if (s.provenance != "synthetic" && s.provenance != "real")
      line_error(origin, lineno, "provenance must be \"synthetic\" or \"real\", got \"" +
                                     s.provenance + "\"");
    s.context = require_string(j, "context", origin, lineno);
    if (!j.contains("events") || !j["events"].is_array())
      line_error(origin, lineno, "missing or non-array field \"events\"");
    for (const ordered_json& ev : j["events"]) {
      if (!ev.is_object()) line_error(origin, lineno, "events must be objects");
      ParamEvent e;
      if (!ev.contains("template_id") || !ev["template_id"].is_number_unsigned())
        line_error(origin, lineno, "missing or non-integer field \"template_id\"");
      e.template_id = ev["template_id"].get<std::uint64_t>();
      e.level = require_string(ev, "level", origin, lineno);
      e.message = require_string(ev, "message", origin, lineno);
      s.events.push_back(std::move(e));
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<Session> read_sessions(const std::string& path) {
  std::optional<std::string> text = util::read_file(path);
  if (!text) throw StageError("dataset", "cannot read session file " + path);
  return sessions_from_text(*text, path);
}

void write_sessions(const std::vector<Session>& sessions, const std::string& path) {
  try {
    util::write_file(path, sessions_to_text(sessions));
  } catch (const std::exception& e) {
    throw StageError("dataset", e.what());
  }
}

}  // namespace anomalygen
