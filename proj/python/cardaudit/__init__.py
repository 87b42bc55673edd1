"""Model documentation transparency auditing."""

import json

from . import _core
from ._core import (
    CardAuditError,
    ConfigError,
    ContractError,
    ParseError,
    RetrievalError,
    StorageError,
    ValidationError,
    canonicalize_heading,
    normalize_name,
    parse_card,
    similarity,
)

__all__ = [
    "CardAuditError",
    "ConfigError",
    "ContractError",
    "ParseError",
    "RetrievalError",
    "StorageError",
    "ValidationError",
    "aggregate",
    "builtin_framework",
    "canonicalize_heading",
    "cli",
    "diff",
    "normalize_name",
    "parse_card",
    "score",
    "similarity",
    "validate_framework",
]


def builtin_framework():
    """The builtin rubric as a dict."""
    return json.loads(_core.builtin_framework_json())


def validate_framework(framework):
    """List of (path, message) violations for a framework dict or JSON string."""
    text = framework if isinstance(framework, str) else json.dumps(framework)
    return _core.validate_framework_json(text)


def aggregate(labels, model_id="model", provider=""):
    """Report dict from a {subsection_id: label} mapping over the builtin framework."""
    return json.loads(_core.aggregate_json(labels, model_id, provider))


def score(model_id, backend, agents="heuristic,heuristic,heuristic", provider="", out_root="out", use_cache=True):
    """Score one model and return the report dict."""
    return json.loads(_core.score_json(model_id, backend, agents, provider, str(out_root), use_cache))


def diff(older, newer):
    """Label changes and total delta between two report dicts."""
    return json.loads(_core.diff_json(json.dumps(older), json.dumps(newer)))


def cli(*args):
    """Run the command-line interface in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
