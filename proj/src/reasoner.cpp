#include "anomalygen/reasoner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anomalygen/util.hpp"

namespace anomalygen {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_network_attempts{0};

constexpr const char* kSystemMessage =
    "You are a static-analysis verification assistant for log synthesis. "
    "Follow the output instructions exactly.";

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& l : lines) {
    out += l;
    out += "\n";
  }
  return out;
}

std::string render_conditions(const std::vector<PathCondition>& conds) {
  if (conds.empty()) return "  (none)\n";
  std::string out;
  for (const PathCondition& c : conds) out += "  " + c.condition + " [" + c.taken + "]\n";
  return out;
}

std::string render_callee_section(const MergeContext& ctx, const LocalPath& path) {
  std::ostringstream os;
  os << "callee: " << ctx.callee_method_id << "\n";
  os << "argument bindings:\n";
  if (ctx.bindings.empty()) os << "  (none)\n";
  for (const Binding& b : ctx.bindings)
    os << "  " << b.param << " (" << b.type << ") = " << b.arg_text << "\n";
  os << "caller path conditions so far:\n" << render_conditions(ctx.caller_conditions);
  os << "candidate path steps:\n";
  if (path.steps.empty()) os << "  (no observable steps)\n";
  for (const PathStep& s : path.steps) {
    if (s.kind == PathStep::Kind::Log) {
      os << "  log template " << s.template_id << "\n";
    } else {
      os << "  call " << s.callee << "(";
      for (std::size_t i = 0; i < s.arg_texts.size(); ++i) os << (i ? ", " : "") << s.arg_texts[i];
      os << ")\n";
    }
  }
  os << "candidate path conditions:\n" << render_conditions(path.conditions);
  return os.str();
}

// --- mock rules --------------------------------------------------------------

struct NullCheck {
  std::string param;
  bool equals_null = false;  // true for "x == null", false for "x != null"
};

bool parse_null_check(const std::string& condition, NullCheck* out) {
  std::string c = util::collapse_whitespace(util::trim(condition));
  auto try_form = [&](const std::string& text, const std::string& op, bool eq) {
    std::size_t pos = text.find(op);
    if (pos == std::string::npos) return false;
    std::string lhs = util::trim(text.substr(0, pos));
    std::string rhs = util::trim(text.substr(pos + op.size()));
    if (rhs == "null" && !lhs.empty() && lhs.find(' ') == std::string::npos) {
      out->param = lhs;
      out->equals_null = eq;
      return true;
    }
    if (lhs == "null" && !rhs.empty() && rhs.find(' ') == std::string::npos) {
      out->param = rhs;
      out->equals_null = eq;
      return true;
    }
    return false;
  };
  if (try_form(c, "==", true)) return true;
  return try_form(c, "!=", false);
}

const Binding* find_binding(const std::vector<Binding>& bindings, const std::string& param) {
  for (const Binding& b : bindings)
    if (b.param == param) return &b;
  return nullptr;
}

// Deterministic rule evaluation shared by the mock. Returns (valid, rationale).
std::pair<bool, std::string> evaluate_rules(const PromptDoc& prompt) {
  const std::vector<Binding>& bindings = prompt.meta.bindings;
  const std::vector<PathCondition>& conds = prompt.callee_conditions;

  // Rule (a): the path's first branch condition is a null-check on a
  // parameter bound to a literal null, and the taken direction contradicts
  // what that binding makes true.
  if (!conds.empty() && (conds[0].taken == "true" || conds[0].taken == "false")) {
    NullCheck check;
    if (parse_null_check(conds[0].condition, &check)) {
      const Binding* b = find_binding(bindings, check.param);
      if (b != nullptr && b->arg_is_null) {
        bool condition_value = check.equals_null;  // param is null
        bool taken = conds[0].taken == "true";
        if (taken != condition_value) {
          return {false, "argument '" + check.param +
                             "' is literal null, so condition '" + conds[0].condition +
                             "' cannot be " + conds[0].taken};
        }
      }
    }
  }

  // Rule (b): any condition that is exactly a boolean parameter (or its
  // negation) contradicted by a literal boolean argument.
  for (const PathCondition& c : conds) {
    if (c.taken != "true" && c.taken != "false") continue;
    std::string text = util::collapse_whitespace(util::trim(c.condition));
    bool negated = false;
    if (!text.empty() && text[0] == '!') {
      negated = true;
      text = util::trim(text.substr(1));
    }
    const Binding* b = find_binding(bindings, text);
    if (b == nullptr || !b->arg_is_bool) continue;
    bool condition_value = negated ? !b->bool_value : b->bool_value;
    bool taken = c.taken == "true";
    if (taken != condition_value) {
      return {false, "boolean argument '" + text + "' = " + (b->bool_value ? "true" : "false") +
                         " contradicts condition '" + c.condition + "' taken " + c.taken};
    }
  }
  return {true, "no literal contradiction between bindings and path conditions"};
}

// Deterministic mock values: everything derives from
// fnv1a64(sequence_id, event index, placeholder index) mixed with the seed.
std::string mock_value(std::uint64_t seed, const std::string& sequence_id, std::size_t event_idx,
                       std::size_t placeholder_idx, PlaceholderKind kind) {
  std::string key = sequence_id + "\x1f" + std::to_string(event_idx) + "\x1f" +
                    std::to_string(placeholder_idx);
  util::SplitMix64 rng(seed ^ util::fnv1a64(key));
  auto token = [&rng]() {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string t;
    for (int i = 0; i < 8; ++i) t += alphabet[rng.next_below(36)];
    return t;
  };
  switch (kind) {
    case PlaceholderKind::Identifier:
      return "blk_" + std::to_string(1000000000ULL + rng.next_below(9000000000ULL));
    case PlaceholderKind::Address: {
      std::string addr = "10." + std::to_string(rng.next_below(256)) + "." +
                         std::to_string(rng.next_below(256)) + "." +
                         std::to_string(rng.next_below(256));
      return addr + ":" + std::to_string(1024 + rng.next_below(65536 - 1024));
    }
    case PlaceholderKind::Path:
      return "/data/" + token();
    case PlaceholderKind::Numeric:
      return std::to_string(rng.next_below(1000000));
    case PlaceholderKind::Generic:
      return token();
  }
  return token();
}

InstantiationResult mock_instantiate(std::uint64_t seed, const std::string& sequence_id,
                                     const std::vector<EventToFill>& events) {
  InstantiationResult out;
  for (std::size_t e = 0; e < events.size(); ++e) {
    std::vector<std::string> values;
    for (std::size_t p = 0; p < events[e].kinds.size(); ++p)
      values.push_back(mock_value(seed, sequence_id, e, p, events[e].kinds[p]));
    out.values.push_back(std::move(values));
  }
  return out;
}

class MockReasoner : public Reasoner {
 public:
  explicit MockReasoner(std::uint64_t seed) : seed_(seed) {}

  Verdict verify_merge(const PromptDoc& prompt) override {
    auto [valid, rationale] = evaluate_rules(prompt);
    Verdict v;
    v.valid = valid;
    v.rationale = rationale;
    v.source = "mock";
    v.attempts = 1;
    v.token_estimate = prompt.rendered.size() / 4;
    return v;
  }

  InstantiationResult instantiate(const std::string& sequence_id,
                                  const std::vector<EventToFill>& events) override {
    return mock_instantiate(seed_, sequence_id, events);
  }

  std::string mode() const override { return "mock"; }

 private:
  std::uint64_t seed_;
};

// --- live client --------------------------------------------------------------

struct Endpoint {
  std::string base;    // scheme://host:port
  std::string prefix;  // path prefix, possibly empty
};

Endpoint split_endpoint(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  std::size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

std::string build_fill_prompt(const std::string& sequence_id,
                              const std::vector<EventToFill>& events) {
  std::ostringstream os;
  os << "Provide realistic parameter values for the placeholders (<*>) of the "
        "following log templates from one execution (sequence "
     << sequence_id << ").\n";
  os << "Reply with a single JSON object mapping the event index (as a string) to an "
        "array with exactly one value per placeholder, in order.\n\n";
  for (std::size_t i = 0; i < events.size(); ++i) {
    os << i << ": " << events[i].pattern << "  [";
    for (std::size_t p = 0; p < events[i].kinds.size(); ++p)
      os << (p ? ", " : "") << placeholder_kind_name(events[i].kinds[p]);
    os << "]\n";
  }
  return os.str();
}

class LiveReasoner : public Reasoner {
 public:
  LiveReasoner(const ReasonerConfig& config, std::uint64_t seed) : cfg_(config), seed_(seed) {
    const char* key = std::getenv(cfg_.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("environment variable '" + cfg_.api_key_env_var +
                        "' (API key) is not set");
    api_key_ = key;
    endpoint_ = split_endpoint(cfg_.endpoint_url);
    if (!cfg_.transcript_path.empty()) {
      transcript_.open(cfg_.transcript_path, std::ios::app);
      if (!transcript_.good())
        throw ConfigError("cannot open transcript file: " + cfg_.transcript_path);
    }
  }

  Verdict verify_merge(const PromptDoc& prompt) override {
    Verdict v;
    v.source = "live";
    int attempts = 0;
    std::string last_error;
    while (attempts <= cfg_.max_retries) {
      backoff(attempts);
      ++attempts;
      std::string reply;
      if (!post_chat(prompt.rendered, &reply)) {
        last_error = "transport failure talking to " + cfg_.endpoint_url;
        continue;
      }
      v.token_estimate = (prompt.rendered.size() + reply.size()) / 4;
      ParsedVerdict parsed = parse_verdict(reply);
      if (!parsed.ok) {
        last_error = parsed.error;
        continue;
      }
      v.valid = parsed.valid;
      v.rationale = parsed.rationale;
      v.attempts = attempts;
      return v;
    }
    v.valid = false;
    v.failed = true;
    v.attempts = attempts;
    v.rationale = "verification failed after " + std::to_string(attempts) +
                  " attempt(s): " + last_error;
    return v;
  }

  InstantiationResult instantiate(const std::string& sequence_id,
                                  const std::vector<EventToFill>& events) override {
    std::string prompt = build_fill_prompt(sequence_id, events);
    // One request per sequence; a bad reply is retried once, then the mock
    // fills in, flagged as fallback provenance.
    for (int attempt = 0; attempt < 2; ++attempt) {
      std::string reply;
      if (!post_chat(prompt, &reply)) continue;
      InstantiationResult out;
      if (parse_fill_reply(reply, events, &out)) return out;
    }
    InstantiationResult out = mock_instantiate(seed_, sequence_id, events);
    out.mock_fallback = true;
    return out;
  }

  std::string mode() const override { return "live"; }

 private:
  void backoff(int attempt) {
    if (attempt <= 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(50LL << (attempt - 1)));
  }

  // POST one chat completion; extracts the first choice's message content.
  bool post_chat(const std::string& prompt, std::string* content) {
    json body = {
        {"model", cfg_.model_name},
        {"messages",
         {{{"role", "system"}, {"content", kSystemMessage}},
          {{"role", "user"}, {"content", prompt}}}},
        {"temperature", 0},  // fixed by contract, never configurable
    };
    std::string reply;
    {
      // Cap concurrent requests at max_inflight.
      std::unique_lock<std::mutex> lock(inflight_mu_);
      inflight_cv_.wait(lock, [this] { return inflight_ < std::max(1, cfg_.max_inflight); });
      ++inflight_;
    }
    g_network_attempts.fetch_add(1);
    httplib::Client client(endpoint_.base);
    client.set_connection_timeout(cfg_.request_timeout_s, 0);
    client.set_read_timeout(cfg_.request_timeout_s, 0);
    client.set_default_headers({{"Authorization", "Bearer " + api_key_}});
    httplib::Result res =
        client.Post(endpoint_.prefix + "/chat/completions", body.dump(), "application/json");
    {
      std::lock_guard<std::mutex> lock(inflight_mu_);
      --inflight_;
      inflight_cv_.notify_one();
    }
    if (!res || res->status != 200) return false;
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) return false;
    try {
      reply = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      return false;
    }
    record(prompt, reply);
    *content = std::move(reply);
    return true;
  }

  void record(const std::string& prompt, const std::string& reply) {
    if (!transcript_.is_open()) return;
    json line = {{"hash", util::to_hex(util::fnv1a64(prompt))}, {"prompt", prompt},
                 {"reply", reply}};
    std::lock_guard<std::mutex> lock(transcript_mu_);
    transcript_ << line.dump() << "\n";
    transcript_.flush();
  }

  static bool parse_fill_reply(const std::string& reply, const std::vector<EventToFill>& events,
                               InstantiationResult* out) {
    ParsedVerdict ignored;  // reuse the object scanner via parse helpers below
    json obj = last_json_object(reply);
    if (obj.is_discarded() || !obj.is_object()) return false;
    out->values.clear();
    for (std::size_t i = 0; i < events.size(); ++i) {
      auto it = obj.find(std::to_string(i));
      if (it == obj.end() || !it->is_array() || it->size() != events[i].kinds.size())
        return false;
      std::vector<std::string> values;
      for (const json& v : *it)
        values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      out->values.push_back(std::move(values));
    }
    return true;
  }

 public:
  // Scans for the last balanced top-level JSON object in free-form text.
  static json last_json_object(const std::string& raw) {
    json found = json::value_t::discarded;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '{') continue;
      int depth = 0;
      bool in_string = false;
      for (std::size_t j = i; j < raw.size(); ++j) {
        char c = raw[j];
        if (in_string) {
          if (c == '\\')
            ++j;
          else if (c == '"')
            in_string = false;
          continue;
        }
        if (c == '"') in_string = true;
        if (c == '{') ++depth;
        if (c == '}') {
          --depth;
          if (depth == 0) {
            json candidate = json::parse(raw.substr(i, j - i + 1), nullptr, false);
            if (!candidate.is_discarded() && candidate.is_object()) found = candidate;
            i = j;  // resume scanning after this object
            break;
          }
        }
      }
    }
    return found;
  }

 private:
  ReasonerConfig cfg_;
  std::uint64_t seed_;
  std::string api_key_;
  Endpoint endpoint_;
  std::ofstream transcript_;
  std::mutex transcript_mu_;
  std::mutex inflight_mu_;
  std::condition_variable inflight_cv_;
  int inflight_ = 0;
};

class ReplayReasoner : public Reasoner {
 public:
  ReplayReasoner(const std::string& transcript_path, std::uint64_t seed) : seed_(seed) {
    std::ifstream in(transcript_path);
    if (!in.good()) throw StageError("reasoner", "cannot open transcript: " + transcript_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (util::trim(line).empty()) continue;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.contains("hash") || !record.contains("reply"))
        throw StageError("reasoner", transcript_path + ":" + std::to_string(line_no) +
                                         ": malformed transcript record");
      replies_[record.at("hash").get<std::string>()] = record.at("reply").get<std::string>();
    }
  }

  Verdict verify_merge(const PromptDoc& prompt) override {
    std::string reply = lookup(prompt.rendered);
    ParsedVerdict parsed = parse_verdict(reply);
    if (!parsed.ok)
      throw StageError("reasoner", "transcript reply is unusable: " + parsed.error);
    Verdict v;
    v.valid = parsed.valid;
    v.rationale = parsed.rationale;
    v.source = "replay";
    v.attempts = 1;
    v.token_estimate = (prompt.rendered.size() + reply.size()) / 4;
    return v;
  }

  InstantiationResult instantiate(const std::string& sequence_id,
                                  const std::vector<EventToFill>& events) override {
    std::string prompt = build_fill_prompt(sequence_id, events);
    std::string reply = lookup(prompt);
    InstantiationResult out;
    json obj = LiveReasoner::last_json_object(reply);
    bool usable = obj.is_object();
    if (usable) {
      for (std::size_t i = 0; i < events.size() && usable; ++i) {
        auto it = obj.find(std::to_string(i));
        if (it == obj.end() || !it->is_array() || it->size() != events[i].kinds.size()) {
          usable = false;
          break;
        }
        std::vector<std::string> values;
        for (const json& v : *it)
          values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        out.values.push_back(std::move(values));
      }
    }
    if (!usable) {
      out = mock_instantiate(seed_, sequence_id, events);
      out.mock_fallback = true;
    }
    return out;
  }

  std::string mode() const override { return "replay"; }

 private:
  std::string lookup(const std::string& prompt) {
    auto it = replies_.find(util::to_hex(util::fnv1a64(prompt)));
    if (it == replies_.end())
      throw StageError("reasoner", "prompt not present in transcript (hash " +
                                       util::to_hex(util::fnv1a64(prompt)) + ")");
    return it->second;
  }

  std::uint64_t seed_;
  std::map<std::string, std::string> replies_;
};

}  // namespace

PromptDoc build_verification_prompt(const MethodDecl& caller, const MergeContext& context,
                                    const LocalPath& callee_path,
                                    const std::vector<std::string>& hints) {
  PromptDoc doc;
  doc.sections.caller_source = caller.source_text;
  doc.sections.callee_path = render_callee_section(context, callee_path);
  doc.sections.hints = join_lines(hints);
  doc.meta = context;
  doc.callee_conditions = callee_path.conditions;

  std::ostringstream os;
  os << "Decide whether the candidate callee path below can execute under the given "
        "caller context. Reason step by step; finish with a fenced JSON object of the "
        "form {\"valid\": <boolean>, \"rationale\": \"<short text>\"}.\n";
  os << "\n=== CALLER SOURCE ===\n" << doc.sections.caller_source << "\n";
  os << "\n=== CANDIDATE CALLEE PATH ===\n" << doc.sections.callee_path;
  os << "\n=== STATIC HINTS ===\n"
     << (doc.sections.hints.empty() ? "(none)\n" : doc.sections.hints);
  doc.rendered = os.str();
  return doc;
}

ParsedVerdict parse_verdict(const std::string& raw) {
  ParsedVerdict out;
  bool found = false;
  json best;
  // Scan every balanced top-level object; the last one carrying a boolean
  // `valid` wins. Fences and prose fall out naturally.
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '{') continue;
    int depth = 0;
    bool in_string = false;
    for (std::size_t j = i; j < raw.size(); ++j) {
      char c = raw[j];
      if (in_string) {
        if (c == '\\')
          ++j;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      if (c == '{') ++depth;
      if (c == '}') {
        --depth;
        if (depth == 0) {
          json candidate = json::parse(raw.substr(i, j - i + 1), nullptr, false);
          if (!candidate.is_discarded() && candidate.is_object() && candidate.contains("valid") &&
              candidate.at("valid").is_boolean()) {
            best = candidate;
            found = true;
          }
          i = j;
          break;
        }
      }
    }
  }
  if (!found) {
    out.error = "no structured verdict object with a boolean 'valid' found in the reply";
    return out;
  }
  out.valid = best.at("valid").get<bool>();
  if (best.contains("rationale") && best.at("rationale").is_string())
    out.rationale = best.at("rationale").get<std::string>();
  if (!out.valid && out.rationale.empty()) {
    out.error = "verdict is negative but carries no rationale";
    return out;
  }
  out.ok = true;
  return out;
}

std::unique_ptr<Reasoner> make_mock_reasoner(std::uint64_t seed) {
  return std::make_unique<MockReasoner>(seed);
}

std::unique_ptr<Reasoner> make_live_reasoner(const ReasonerConfig& config, std::uint64_t seed) {
  return std::make_unique<LiveReasoner>(config, seed);
}

std::unique_ptr<Reasoner> make_replay_reasoner(const std::string& transcript_path,
                                               std::uint64_t seed) {
  return std::make_unique<ReplayReasoner>(transcript_path, seed);
}

std::string render_message(const std::string& pattern, const std::vector<std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  std::size_t next_value = 0;
  while (true) {
    std::size_t star = pattern.find("<*>", pos);
    if (star == std::string::npos) {
      out += pattern.substr(pos);
      return out;
    }
    out += pattern.substr(pos, star - pos);
    if (next_value < values.size())
      out += values[next_value++];
    else
      out += "<*>";  // unfilled; callers validate counts upstream
    pos = star + 3;
  }
}

std::string OverheadReport::render() const {
  std::ostringstream os;
  char buf[64];
  os << "reasoner overhead report\n";
  os << "entries:            " << entries << "\n";
  os << "merge checks:       " << merge_checks << " (accepted " << accepted << ", rejected "
     << rejected << ", failed " << failed << ")\n";
  os << "instantiations:     " << instantiations << "\n";
  std::snprintf(buf, sizeof(buf), "%.2f", calls_per_entry);
  os << "calls per entry:    " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.2f", wall_time_per_entry_s);
  os << "wall time / entry:  " << buf << " s\n";
  os << "reference scale for live runs at depth 3: about 30 calls and 373 seconds per entry\n";
  return os.str();
}

OverheadReport account(const std::vector<Verdict>& verdicts, std::size_t instantiations,
                       std::size_t entries, double wall_time_s) {
  OverheadReport r;
  r.entries = entries;
  r.merge_checks = verdicts.size();
  r.instantiations = instantiations;
  for (const Verdict& v : verdicts) {
    if (v.failed)
      ++r.failed;
    else if (v.valid)
      ++r.accepted;
    else
      ++r.rejected;
  }
  if (entries > 0) {
    r.calls_per_entry =
        static_cast<double>(r.merge_checks + r.instantiations) / static_cast<double>(entries);
    r.wall_time_per_entry_s = wall_time_s / static_cast<double>(entries);
  }
  return r;
}

std::uint64_t network_attempts() { return g_network_attempts.load(); }

}  // namespace anomalygen
