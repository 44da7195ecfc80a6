// Python bindings for the anomalygen core: configuration, the six pipeline
// stages, and the standalone analysis utilities (template matching, coverage
// auditing, PRF metrics, verdict parsing, augmentation arithmetic).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "anomalygen/config.hpp"
#include "anomalygen/coverage.hpp"
#include "anomalygen/dataset.hpp"
#include "anomalygen/pipeline.hpp"
#include "anomalygen/reasoner.hpp"
#include "anomalygen/util.hpp"

namespace py = pybind11;
using namespace anomalygen;

namespace {

py::dict session_to_dict(const Session& s) {
  py::dict d;
  d["session_id"] = s.session_id;
  d["label"] = s.label;
  d["provenance"] = s.provenance;
  d["context"] = s.context;
  py::list events;
  for (const ParamEvent& e : s.events) {
    py::dict ev;
    ev["template_id"] = e.template_id;
    ev["level"] = e.level;
    ev["message"] = e.message;
    events.append(ev);
  }
  d["events"] = events;
  return d;
}

}  // namespace

PYBIND11_MODULE(_anomalygen, m) {
  m.doc() = "Synthesize labeled, parameterized log sequences from source code";

  // Error categories mirror the CLI exit codes: ConfigError -> 1,
  // StageError -> 2, GuardViolation -> 3.
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<StageError>(m, "StageError");
  py::register_exception<GuardViolation>(m, "GuardViolation");

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def_readwrite("source_root", &PipelineConfig::source_root)
      .def_readwrite("output_dir", &PipelineConfig::output_dir)
      .def_readwrite("mock", &PipelineConfig::mock)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("ratio", &PipelineConfig::ratio)
      .def_readwrite("t_entry", &PipelineConfig::t_entry)
      .def_readwrite("t_depth", &PipelineConfig::t_depth)
      .def_readwrite("threads", &PipelineConfig::threads)
      .def_readwrite("real_train_path", &PipelineConfig::real_train_path)
      .def_readwrite("real_test_path", &PipelineConfig::real_test_path)
      .def("__repr__", [](const PipelineConfig& c) {
        return "PipelineConfig(source_root='" + c.source_root + "', output_dir='" +
               c.output_dir + "', mode=" + (c.mock ? "'mock'" : "'live'") + ")";
      });

  m.def("load_config", &load_config, py::arg("path"),
        "Load and validate a JSON configuration file.");
  m.def("config_from_json_text", &config_from_json_text, py::arg("text"), py::arg("origin"),
        "Parse a configuration from JSON text; origin names the source in errors.");
  m.def("validate_config", &validate_config, py::arg("config"),
        "Re-check invariants after mutating a config; raises ConfigError.");
  m.def("config_to_canonical_json", &config_to_canonical_json, py::arg("config"),
        "Canonical JSON of the resolved config; its hash keys the run manifest.");

  // Pipeline stages. Each writes its artifacts under config.output_dir and
  // refreshes manifest.json.
  m.def("run_analyze", &run_analyze, py::arg("config"));
  m.def("run_lcfg", &run_lcfg_stage, py::arg("config"));
  m.def("run_generate", &run_generate, py::arg("config"));
  m.def("run_label", &run_label_stage, py::arg("config"));
  m.def("run_augment", &run_augment, py::arg("config"));
  m.def("run_audit_coverage", &run_audit_coverage, py::arg("config"));
  m.def("run_pipeline", &run_pipeline, py::arg("config"), "All six stages in order.");
  m.def("write_manifest", &write_manifest, py::arg("config"));

  // Standalone analysis utilities.
  m.def("match_template", &match_template, py::arg("observed"), py::arg("source"),
        "Wildcard-aware template alignment ('<*>' matches one nonempty token run).");

  m.def(
      "audit_coverage",
      [](const std::vector<std::pair<std::string, std::string>>& source,
         const std::vector<std::string>& observed) {
        std::vector<LogTemplate> templates;
        std::uint64_t id = 0;
        for (const auto& [pattern, level] : source) {
          LogTemplate t;
          t.template_id = ++id;
          t.pattern = pattern;
          t.level = level;
          templates.push_back(std::move(t));
        }
        CoverageReport r = audit_coverage(templates, observed);
        py::dict d;
        d["n_source"] = r.n_source;
        d["n_source_matched"] = r.n_source_matched;
        d["coverage"] = r.coverage;
        d["unmatched_observed"] = r.unmatched_observed;
        py::dict levels;
        for (const auto& [level, counts] : r.per_level)
          levels[py::str(level)] = py::make_tuple(counts.first, counts.second);
        d["per_level"] = levels;
        d["report"] = r.render();
        return d;
      },
      py::arg("source"), py::arg("observed"),
      "Coverage of source templates [(pattern, level), ...] by observed patterns.");

  m.def(
      "compute_prf",
      [](std::size_t tp, std::size_t fp, std::size_t fn) {
        PrfMetrics m2 = compute_prf(tp, fp, fn);
        py::dict d;
        d["precision"] = m2.precision;
        d["recall"] = m2.recall;
        d["f1"] = m2.f1;
        return d;
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"),
      "Precision, recall, and F1 from counts; every 0/0 resolves to 0.");

  m.def("augmentation_target", &augmentation_target, py::arg("ratio"), py::arg("n_real"),
        "round-half-up(ratio * n_real): the synthetic session count to mix in.");

  m.def(
      "parse_verdict",
      [](const std::string& raw) {
        ParsedVerdict v = parse_verdict(raw);
        py::dict d;
        d["ok"] = v.ok;
        d["valid"] = v.valid;
        d["rationale"] = v.rationale;
        d["error"] = v.error;
        return d;
      },
      py::arg("raw"),
      "Extract the last well-formed {valid, rationale} object from a reply.");

  m.def(
      "read_sessions",
      [](const std::string& path) {
        py::list out;
        for (const Session& s : read_sessions(path)) out.append(session_to_dict(s));
        return out;
      },
      py::arg("path"), "Read a JSONL session file into a list of dicts.");

  m.def(
      "split_guard",
      [](const std::string& train_path, const std::string& test_path) {
        DatasetSplit split;
        split.train = read_sessions(train_path);
        split.test = read_sessions(test_path);
        GuardReport r = split_guard(split);
        py::dict d;
        d["ok"] = r.ok;
        d["synthetic_in_test"] = r.synthetic_in_test;
        d["duplicated_ids"] = r.duplicated_ids;
        d["report"] = r.render();
        return d;
      },
      py::arg("train_path"), py::arg("test_path"),
      "Check a train/test split for synthetic leakage and duplicated ids.");

  m.def("network_attempts", &network_attempts,
        "Process-wide count of live-reasoner connection attempts (0 in mock mode).");
}
