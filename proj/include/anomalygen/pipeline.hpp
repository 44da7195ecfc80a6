#pragma once

#include <string>

#include "anomalygen/config.hpp"

namespace anomalygen {

// Pipeline stages. Each stage reads its inputs from config/output_dir files
// written by earlier stages, writes its artifacts, then refreshes the run
// manifest. Errors surface as ConfigError / StageError / GuardViolation; the
// CLI maps those to exit codes 1 / 2 / 3.
//
// Artifacts per stage (all under output_dir, all deterministic bytes):
//   analyze         ast.json, templates.tsv, callgraph.dot,
//                   pruned_callgraph.dot, prune_report.txt
//   lcfg            lcfg/<method>.dot for every retained internal method
//   generate        subgraphs.json, sequences.jsonl, param_sequences.jsonl,
//                   overhead.json, overhead_report.txt
//   label           sessions.jsonl, review_sample.txt
//   augment         train_augmented.jsonl, test.jsonl, aug_plan.json,
//                   split_guard_report.txt
//   audit-coverage  observed_templates.txt, coverage_report.txt
//   (every stage)   manifest.json
void run_analyze(const PipelineConfig& config);
void run_lcfg_stage(const PipelineConfig& config);
void run_generate(const PipelineConfig& config);
void run_label_stage(const PipelineConfig& config);
void run_augment(const PipelineConfig& config);
void run_audit_coverage(const PipelineConfig& config);
void run_pipeline(const PipelineConfig& config);  // all six stages in order

// Scans output_dir and rewrites manifest.json: config hash, seed, per-file
// content hashes, counts derived from the artifacts, and the overhead numbers
// from overhead.json when present. No timestamps, no absolute paths.
void write_manifest(const PipelineConfig& config);

// Full command-line front end (subcommands analyze/lcfg/generate/label/
// augment/audit-coverage/pipeline; flags --config --seed --mock --ratio
// --entries --depth --out). Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace anomalygen
