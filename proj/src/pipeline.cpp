#include "anomalygen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "anomalygen/assembler.hpp"
#include "anomalygen/callgraph.hpp"
#include "anomalygen/cfg.hpp"
#include "anomalygen/coverage.hpp"
#include "anomalygen/dataset.hpp"
#include "anomalygen/frontend.hpp"
#include "anomalygen/labeler.hpp"
#include "anomalygen/lcfg.hpp"
#include "anomalygen/paths.hpp"
#include "anomalygen/reasoner.hpp"
#include "anomalygen/util.hpp"

namespace anomalygen {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string out_path(const PipelineConfig& config, const std::string& rel) {
  return (fs::path(config.output_dir) / rel).string();
}

void write_artifact(const std::string& stage, const std::string& path,
                    const std::string& content) {
  try {
    util::write_file(path, content);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void ensure_output_dir(const PipelineConfig& config, const std::string& stage) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec)
    throw StageError(stage, "cannot create output directory " + config.output_dir + ": " +
                                ec.message());
}

// ---------------------------------------------------------------------------
// Shared analysis state. Stages recompute it from the source tree rather than
// deserializing earlier artifacts; the computation is deterministic, so a
// stage run standalone produces exactly what it produces inside `pipeline`.
// ---------------------------------------------------------------------------

struct Analysis {
  ProjectIndex index;
  TemplateTable table;
  CallGraph graph;
  PrunedGraph pruned;
  SubgraphExtraction subgraphs;
  std::map<std::uint64_t, LogTemplate> template_map;
};

Analysis analyze_sources(const PipelineConfig& config) {
  Analysis a;
  a.index = parse_source(config.source_root, config.language, config.threads);
  a.table = extract_templates(a.index, config.logging);
  a.graph = build_call_graph(a.index);
  a.pruned = prune(a.graph);
  a.subgraphs = extract_subgraphs(a.pruned, a.index, config.t_entry, config.t_depth);
  for (const LogTemplate& t : a.table.templates) a.template_map[t.template_id] = t;
  return a;
}

// Retained graph nodes that have a parsed body (external stubs excluded).
std::vector<std::string> retained_internal_methods(const Analysis& a) {
  std::vector<std::string> out;
  for (const std::string& node : a.pruned.graph.nodes)
    if (a.index.methods.count(node)) out.push_back(node);
  return out;  // set order: already sorted
}

std::map<std::string, Lcfg> build_lcfgs(const Analysis& a,
                                        const std::vector<std::string>& methods) {
  std::map<std::string, Lcfg> lcfgs;
  for (const std::string& id : methods) {
    const MethodDecl& method = a.index.methods.at(id);
    Cfg cfg = build_cfg(method);
    DomTree dom = compute_dominators(cfg);
    lcfgs.emplace(id, build_lcfg(cfg, dom));
  }
  return lcfgs;
}

std::unique_ptr<Reasoner> make_reasoner(const PipelineConfig& config) {
  if (config.mock) return make_mock_reasoner(*config.seed);
  return make_live_reasoner(config.reasoner, config.seed.value_or(0));
}

// ---------------------------------------------------------------------------
// Artifact serialization
// ---------------------------------------------------------------------------

ordered_json verdict_to_json(const Verdict& v) {
  ordered_json j;
  j["valid"] = v.valid;
  j["rationale"] = v.rationale;
  j["source"] = v.source;
  j["attempts"] = v.attempts;
  j["token_estimate"] = v.token_estimate;
  j["failed"] = v.failed;
  return j;
}

std::string sequences_to_jsonl(const std::vector<CandidateSequence>& seqs) {
  std::string out;
  for (const CandidateSequence& s : seqs) {
    ordered_json j;
    j["sequence_id"] = s.sequence_id;
    j["entry"] = s.entry;
    ordered_json events = ordered_json::array();
    for (const SeqEvent& e : s.events)
      events.push_back({{"template_id", e.template_id}, {"method_id", e.method_id}});
    j["events"] = std::move(events);
    j["context"] = s.context;
    ordered_json stack = ordered_json::array();
    for (const FrameSpan& f : s.stack_trace) {
      ordered_json fr;
      fr["depth"] = f.depth;
      fr["method_id"] = f.method_id;
      fr["path_index"] = f.path_index;
      fr["event_begin"] = f.event_begin;
      fr["event_end"] = f.event_end;
      stack.push_back(std::move(fr));
    }
    j["stack"] = std::move(stack);
    ordered_json verdicts = ordered_json::array();
    for (const Verdict& v : s.verdict_trace) verdicts.push_back(verdict_to_json(v));
    j["verdicts"] = std::move(verdicts);
    j["recursion_cut"] = s.recursion_cut;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string param_sequences_to_jsonl(const std::vector<ParameterizedSequence>& seqs) {
  std::string out;
  for (const ParameterizedSequence& s : seqs) {
    ordered_json j;
    j["sequence_id"] = s.sequence_id;
    j["entry"] = s.entry;
    ordered_json events = ordered_json::array();
    for (const ParamEvent& e : s.events) {
      ordered_json ev;
      ev["template_id"] = e.template_id;
      ev["method_id"] = e.method_id;
      ev["level"] = e.level;
      ev["message"] = e.message;
      events.push_back(std::move(ev));
    }
    j["events"] = std::move(events);
    j["context"] = s.context;
    j["recursion_cut"] = s.recursion_cut;
    j["mock_fallback"] = s.mock_fallback;
    out += j.dump();
    out += '\n';
  }
  return out;
}

[[noreturn]] void bad_artifact_line(const std::string& path, std::size_t lineno,
                                    const std::string& why) {
  throw StageError("label", path + ":" + std::to_string(lineno) + ": " + why);
}

std::vector<ParameterizedSequence> param_sequences_from_jsonl(const std::string& text,
                                                              const std::string& path) {
  std::vector<ParameterizedSequence> out;
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (util::trim(line).empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) bad_artifact_line(path, lineno, "invalid JSON");
    ParameterizedSequence s;
    try {
      s.sequence_id = j.at("sequence_id").get<std::string>();
      s.entry = j.at("entry").get<std::string>();
      for (const ordered_json& ev : j.at("events")) {
        ParamEvent e;
        e.template_id = ev.at("template_id").get<std::uint64_t>();
        e.method_id = ev.at("method_id").get<std::string>();
        e.level = ev.at("level").get<std::string>();
        e.message = ev.at("message").get<std::string>();
        s.events.push_back(std::move(e));
      }
      for (const ordered_json& c : j.at("context")) s.context.push_back(c.get<std::string>());
      s.recursion_cut = j.at("recursion_cut").get<bool>();
      s.mock_fallback = j.at("mock_fallback").get<bool>();
    } catch (const json::exception& e) {
      bad_artifact_line(path, lineno, e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string read_artifact(const std::string& stage, const std::string& path,
                          const std::string& hint) {
  std::optional<std::string> text = util::read_file(path);
  if (!text) throw StageError(stage, path + " not found; " + hint);
  return *text;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

// ---------------------------------------------------------------------------
// Generate-stage result, shared between sequential and parallel execution.
// ---------------------------------------------------------------------------

struct GenerateOutcome {
  std::vector<CandidateSequence> sequences;
  std::vector<ParameterizedSequence> param_sequences;
  std::vector<Verdict> all_verdicts;
  AssemblyStats stats;
  std::vector<std::string> truncated_entries;
};

GenerateOutcome run_assembly(const PipelineConfig& config, const Analysis& a,
                             const std::map<std::string, Lcfg>& lcfgs, Reasoner& reasoner) {
  GenerateOutcome out;
  std::vector<AssemblyResult> results(a.subgraphs.subgraphs.size());

  int threads = config.threads == 0
                    ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                    : config.threads;
  if (threads > 1 && a.subgraphs.subgraphs.size() > 1) {
    std::vector<std::future<AssemblyResult>> futures;
    futures.reserve(a.subgraphs.subgraphs.size());
    for (const Subgraph& sg : a.subgraphs.subgraphs)
      futures.push_back(std::async(std::launch::async, [&, &sg = sg] {
        return assemble(sg, lcfgs, a.index, reasoner, config.bounds);
      }));
    for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < a.subgraphs.subgraphs.size(); ++i)
      results[i] = assemble(a.subgraphs.subgraphs[i], lcfgs, a.index, reasoner, config.bounds);
  }

  // Merge in subgraph (entry-rank) order: deterministic regardless of thread
  // interleaving because each assemble call is independent.
  for (std::size_t i = 0; i < results.size(); ++i) {
    AssemblyResult& r = results[i];
    if (r.truncated) out.truncated_entries.push_back(a.subgraphs.subgraphs[i].entry);
    out.stats.merge_checks += r.stats.merge_checks;
    out.stats.accepted += r.stats.accepted;
    out.stats.rejected += r.stats.rejected;
    out.stats.failed += r.stats.failed;
    out.all_verdicts.insert(out.all_verdicts.end(), r.all_verdicts.begin(),
                            r.all_verdicts.end());
    for (CandidateSequence& s : r.sequences) {
      out.param_sequences.push_back(instantiate_parameters(s, a.template_map, reasoner));
      out.sequences.push_back(std::move(s));
    }
  }
  return out;
}

std::map<std::string, std::string> hash_artifacts(const PipelineConfig& config) {
  std::map<std::string, std::string> hashes;
  fs::path root(config.output_dir);
  for (const fs::directory_entry& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string rel = fs::relative(entry.path(), root).generic_string();
    if (rel == "manifest.json") continue;
    std::optional<std::string> content = util::read_file(entry.path().string());
    if (!content) throw StageError("manifest", "cannot read artifact " + rel);
    hashes[rel] = util::to_hex(util::fnv1a64(*content));
  }
  return hashes;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

void write_manifest(const PipelineConfig& config) {
  std::map<std::string, std::string> hashes = hash_artifacts(config);

  json counts;  // alphabetical keys — part of the canonical byte layout
  auto add_line_count = [&](const char* key, const std::string& rel) {
    if (!hashes.count(rel)) return;
    std::optional<std::string> text = util::read_file(out_path(config, rel));
    if (text) counts[key] = count_lines(*text);
  };
  add_line_count("templates", "templates.tsv");
  add_line_count("sequences", "sequences.jsonl");
  add_line_count("param_sequences", "param_sequences.jsonl");
  add_line_count("sessions", "sessions.jsonl");
  add_line_count("train_augmented", "train_augmented.jsonl");
  add_line_count("test", "test.jsonl");
  add_line_count("observed_templates", "observed_templates.txt");
  std::size_t lcfg_files = 0;
  for (const auto& [rel, hash] : hashes)
    if (rel.rfind("lcfg/", 0) == 0) ++lcfg_files;
  if (lcfg_files) counts["lcfg_methods"] = lcfg_files;
  if (hashes.count("subgraphs.json")) {
    std::optional<std::string> text = util::read_file(out_path(config, "subgraphs.json"));
    if (text) {
      json sg = json::parse(*text, nullptr, false);
      if (!sg.is_discarded() && sg.contains("subgraphs"))
        counts["subgraphs"] = sg["subgraphs"].size();
    }
  }

  json m;
  m["config_hash"] = util::to_hex(util::fnv1a64(config_to_canonical_json(config)));
  m["mode"] = config.mock ? "mock" : "live";
  if (config.seed)
    m["seed"] = *config.seed;
  else
    m["seed"] = nullptr;
  m["files"] = hashes;
  m["counts"] = counts;
  if (hashes.count("overhead.json")) {
    std::optional<std::string> text = util::read_file(out_path(config, "overhead.json"));
    if (text) {
      json overhead = json::parse(*text, nullptr, false);
      if (!overhead.is_discarded()) m["overhead"] = overhead;
    }
  }
  write_artifact("manifest", out_path(config, "manifest.json"), m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void run_analyze(const PipelineConfig& config) {
  ensure_output_dir(config, "analyze");
  Analysis a = analyze_sources(config);
  write_artifact("analyze", out_path(config, "ast.json"),
                 index_to_json(a.index, a.table.templates));
  write_artifact("analyze", out_path(config, "templates.tsv"),
                 templates_to_tsv(a.table.templates));
  write_artifact("analyze", out_path(config, "callgraph.dot"), to_dot(a.graph));
  write_artifact("analyze", out_path(config, "pruned_callgraph.dot"),
                 to_dot(a.pruned.graph));
  write_artifact("analyze", out_path(config, "prune_report.txt"), a.pruned.report.render());
  write_manifest(config);
}

void run_lcfg_stage(const PipelineConfig& config) {
  ensure_output_dir(config, "lcfg");
  Analysis a = analyze_sources(config);
  std::error_code ec;
  fs::create_directories(fs::path(config.output_dir) / "lcfg", ec);
  if (ec) throw StageError("lcfg", "cannot create lcfg directory: " + ec.message());
  std::vector<std::string> methods = retained_internal_methods(a);
  std::map<std::string, Lcfg> lcfgs = build_lcfgs(a, methods);
  for (const auto& [id, lcfg] : lcfgs) {
    std::string rel = "lcfg/" + util::sanitize_filename(id) + ".dot";
    write_artifact("lcfg", out_path(config, rel), to_dot(lcfg));
  }
  write_manifest(config);
}

void run_generate(const PipelineConfig& config) {
  ensure_output_dir(config, "generate");
  Analysis a = analyze_sources(config);
  std::map<std::string, Lcfg> lcfgs = build_lcfgs(a, retained_internal_methods(a));
  std::unique_ptr<Reasoner> reasoner = make_reasoner(config);

  auto started = std::chrono::steady_clock::now();
  GenerateOutcome out = run_assembly(config, a, lcfgs, *reasoner);
  double wall_s = config.mock
                      ? 0.0
                      : std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      started)
                            .count();

  ordered_json sg_doc;
  ordered_json sg_list = ordered_json::array();
  for (const Subgraph& sg : a.subgraphs.subgraphs) {
    ordered_json s;
    s["entry"] = sg.entry;
    s["members"] = sg.members;
    s["depth_limit"] = sg.depth_limit;
    s["contained_templates"] = sg.contained_templates;
    sg_list.push_back(std::move(s));
  }
  sg_doc["subgraphs"] = std::move(sg_list);
  sg_doc["warnings"] = a.subgraphs.warnings;
  write_artifact("generate", out_path(config, "subgraphs.json"), sg_doc.dump(2) + "\n");
  write_artifact("generate", out_path(config, "sequences.jsonl"),
                 sequences_to_jsonl(out.sequences));
  write_artifact("generate", out_path(config, "param_sequences.jsonl"),
                 param_sequences_to_jsonl(out.param_sequences));

  OverheadReport report = account(out.all_verdicts, out.param_sequences.size(),
                                  a.subgraphs.subgraphs.size(), wall_s);
  ordered_json oh;
  oh["entries"] = report.entries;
  oh["merge_checks"] = report.merge_checks;
  oh["accepted"] = report.accepted;
  oh["rejected"] = report.rejected;
  oh["failed"] = report.failed;
  oh["instantiations"] = report.instantiations;
  oh["calls_per_entry"] = report.calls_per_entry;
  oh["wall_time_per_entry_s"] = report.wall_time_per_entry_s;
  oh["truncated_entries"] = out.truncated_entries;
  write_artifact("generate", out_path(config, "overhead.json"), oh.dump(2) + "\n");
  write_artifact("generate", out_path(config, "overhead_report.txt"), report.render());
  write_manifest(config);
}

void run_label_stage(const PipelineConfig& config) {
  ensure_output_dir(config, "label");
  std::string path = out_path(config, "param_sequences.jsonl");
  std::string text = read_artifact("label", path, "run the generate stage first");
  std::vector<ParameterizedSequence> seqs = param_sequences_from_jsonl(text, path);

  std::uint64_t seed = config.seed.value_or(0);
  std::vector<Session> sessions;
  std::map<std::string, int> seen;  // session-id collision dedup: "-1", "-2", …
  for (const ParameterizedSequence& seq : seqs) {
    LabelResult lr = label_sequence(seq, config.labels);
    Session s = make_session(seq, lr, seed);
    int n = seen[s.session_id]++;
    if (n > 0) s.session_id += "-" + std::to_string(n);
    sessions.push_back(std::move(s));
  }
  write_artifact("label", out_path(config, "sessions.jsonl"), sessions_to_text(sessions));

  std::vector<std::string> warnings;
  std::string review = sample_for_review(
      sessions, static_cast<std::size_t>(config.labels.review_sample), seed, &warnings);
  for (const std::string& w : warnings) review += "warning: " + w + "\n";
  write_artifact("label", out_path(config, "review_sample.txt"), review);
  write_manifest(config);
}

void run_augment(const PipelineConfig& config) {
  ensure_output_dir(config, "augment");
  if (config.real_train_path.empty())
    throw ConfigError("config field \"real_train_path\" is required for the augment stage");
  if (config.real_test_path.empty())
    throw ConfigError("config field \"real_test_path\" is required for the augment stage");

  DatasetSplit split;
  split.train = read_sessions(config.real_train_path);
  split.test = read_sessions(config.real_test_path);
  std::string pool_path = out_path(config, "sessions.jsonl");
  std::vector<Session> pool =
      sessions_from_text(read_artifact("augment", pool_path, "run the label stage first"),
                         pool_path);

  AugPlan plan =
      plan_augmentation(split.train.size(), pool, config.ratio, config.seed.value_or(0));
  DatasetSplit augmented = apply_augmentation(split, pool, plan);
  GuardReport guard = split_guard(augmented);

  write_artifact("augment", out_path(config, "aug_plan.json"), plan.render_json());
  write_artifact("augment", out_path(config, "split_guard_report.txt"), guard.render());
  if (!guard.ok) {
    write_manifest(config);
    throw GuardViolation(guard.render());
  }
  write_artifact("augment", out_path(config, "train_augmented.jsonl"),
                 sessions_to_text(augmented.train));
  write_artifact("augment", out_path(config, "test.jsonl"), sessions_to_text(augmented.test));
  write_manifest(config);
}

void run_audit_coverage(const PipelineConfig& config) {
  ensure_output_dir(config, "coverage");
  Analysis a = analyze_sources(config);
  std::string sessions_path = out_path(config, "sessions.jsonl");
  std::vector<Session> sessions = sessions_from_text(
      read_artifact("coverage", sessions_path, "run the label stage first"), sessions_path);

  std::set<std::string> observed_set;
  for (const Session& s : sessions)
    for (const ParamEvent& e : s.events) {
      auto it = a.template_map.find(e.template_id);
      if (it != a.template_map.end()) observed_set.insert(it->second.pattern);
    }
  std::vector<std::string> observed(observed_set.begin(), observed_set.end());

  std::string listing;
  for (const std::string& p : observed) listing += p + "\n";
  write_artifact("coverage", out_path(config, "observed_templates.txt"), listing);

  CoverageReport report = audit_coverage(a.table.templates, observed);
  write_artifact("coverage", out_path(config, "coverage_report.txt"), report.render());
  write_manifest(config);
}

void run_pipeline(const PipelineConfig& config) {
  run_analyze(config);
  run_lcfg_stage(config);
  run_generate(config);
  run_label_stage(config);
  run_augment(config);
  run_audit_coverage(config);
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"anomalygen: synthesize labeled, parameterized log sequences from source code"};
  app.require_subcommand(1);

  struct SubOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool mock = false;
    std::optional<double> ratio;
    std::optional<int> entries;
    std::optional<int> depth;
    std::optional<std::string> out;
  };

  const std::vector<std::pair<std::string, void (*)(const PipelineConfig&)>> stages = {
      {"analyze", &run_analyze},     {"lcfg", &run_lcfg_stage},
      {"generate", &run_generate},   {"label", &run_label_stage},
      {"augment", &run_augment},     {"audit-coverage", &run_audit_coverage},
      {"pipeline", &run_pipeline},
  };
  const std::map<std::string, std::string> descriptions = {
      {"analyze", "parse sources, extract templates, build and prune the call graph"},
      {"lcfg", "emit log-oriented control flow graphs for retained methods"},
      {"generate", "assemble, verify, and parameterize candidate sequences"},
      {"label", "label sequences and build review-ready sessions"},
      {"augment", "mix synthetic sessions into the real training split"},
      {"audit-coverage", "measure source-template coverage of the generated sessions"},
      {"pipeline", "run every stage in order"},
  };

  std::map<std::string, SubOpts> opts;
  for (const auto& [name, fn] : stages) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    SubOpts& o = opts[name];
    sub->add_option("--config", o.config_path, "configuration file (JSON)")->required();
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_flag("--mock", o.mock, "force the deterministic mock reasoner");
    sub->add_option("--ratio", o.ratio, "override the augmentation ratio R");
    sub->add_option("--entries", o.entries, "override t_entry (entry points kept)");
    sub->add_option("--depth", o.depth, "override t_depth (subgraph call depth)");
    sub->add_option("--out", o.out, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const SubOpts& o = opts.at(name);
  try {
    PipelineConfig config = load_config(o.config_path);
    if (o.seed) config.seed = *o.seed;
    if (o.mock) config.mock = true;
    if (o.ratio) config.ratio = *o.ratio;
    if (o.entries) config.t_entry = *o.entries;
    if (o.depth) config.t_depth = *o.depth;
    if (o.out) config.output_dir = *o.out;
    validate_config(config);
    for (const auto& [stage_name, fn] : stages) {
      if (stage_name == name) {
        fn(config);
        break;
      }
    }
    std::fprintf(stdout, "%s: done (artifacts in %s)\n", name.c_str(),
                 config.output_dir.c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const GuardViolation& e) {
    std::fprintf(stderr, "guard violation:\n%s", e.what());
    return 3;
  } catch (const StageError& e) {
    std::fprintf(stderr, "stage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stage error: %s\n", e.what());
    return 2;
  }
}

}  // namespace anomalygen
