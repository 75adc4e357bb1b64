"""Natural-language querying over relational databases with linked media."""

from ._core import (
    Database,
    DqError,
    ask_multimodal,
    ask_sql,
    classify_failure,
    classify_hardness,
    decide,
    evaluate,
    linking_prf,
    plan,
    representativeness_check,
    run_cli,
    sanitize,
    stratified_sample,
)

__all__ = [
    "Database",
    "DqError",
    "ask_multimodal",
    "ask_sql",
    "classify_failure",
    "classify_hardness",
    "decide",
    "evaluate",
    "linking_prf",
    "plan",
    "representativeness_check",
    "run_cli",
    "sanitize",
    "stratified_sample",
]
