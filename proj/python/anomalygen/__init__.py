"""Synthesize labeled, parameterized log sequences from source code.

The heavy lifting lives in the compiled ``_anomalygen`` extension; this
package re-exports its surface. In an installed wheel the extension sits
inside the package; in a plain CMake build tree it is importable from the
build directory (put ``<build>/bindings`` on ``PYTHONPATH``).
"""

try:
    from anomalygen._anomalygen import *  # noqa: F401,F403
    from anomalygen._anomalygen import __doc__ as _core_doc  # noqa: F401
except ImportError:  # development layout: extension built by plain CMake
    from _anomalygen import *  # noqa: F401,F403

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "ConfigError",
    "StageError",
    "GuardViolation",
    "load_config",
    "config_from_json_text",
    "validate_config",
    "config_to_canonical_json",
    "run_analyze",
    "run_lcfg",
    "run_generate",
    "run_label",
    "run_augment",
    "run_audit_coverage",
    "run_pipeline",
    "write_manifest",
    "match_template",
    "audit_coverage",
    "compute_prf",
    "augmentation_target",
    "parse_verdict",
    "read_sessions",
    "split_guard",
    "network_attempts",
]
