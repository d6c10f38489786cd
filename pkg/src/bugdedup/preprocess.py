"""Tokenization, feature-token filtering, stack-trace extraction, document building."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .corpus import BugReport

# Token = maximal run of [a-z0-9_./:-] after lowercasing; dots, slashes,
# colons and dashes stay inside so symbol names and paths survive intact.
_TOKEN_SPLIT = re.compile(r"[^a-z0-9_./:-]+")
_HEX_ADDRESS = re.compile(r"0x[0-9a-f]+$")
_HAS_ALPHA = re.compile(r"[a-z]")

# Frame grammars: JVM, gdb, C-style, and interpreted-language tracebacks.
DEFAULT_TRACE_PATTERNS = (
    r"^\s*at\s+\S+\(.*:\d+\)",                      # at com.foo.Bar(Bar.java:10)
    r"^\s*#\d+\s+(?:0x[0-9a-fA-F]+\s+)?in\s+\S+",   # #3 0xdeadbeef in frob
    r"^\s*\S+\s*\(.*\)\s+at\s+\S+:\d+",             # frob(a, b) at frob.c:42
    r"^\s*File \".+\", line \d+",                    # File "x.py", line 7
)


@dataclass
class ProcessedReport:
    id: str
    doc_summary: list
    doc_description: list
    component: str
    platform: dict = field(default_factory=dict)


def tokenize(text: str) -> list:
    """Lowercase and split on any character outside the token grammar."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def filter_feature_tokens(tokens):
    """Keep alpha/alphanumeric feature tokens.

    Drops pure numbers, hex memory addresses (0x...), and single characters:
    they identify process instances, not bugs.
    """
    return [
        t for t in tokens
        if len(t) > 1 and _HAS_ALPHA.search(t) and not _HEX_ADDRESS.fullmatch(t)
    ]


def extract_stack_trace(description, patterns=DEFAULT_TRACE_PATTERNS):
    """Return the stack-trace lines of a description, or None.

    A run of two or more consecutive frame-like lines counts as a trace;
    isolated matches amid prose are ignored. All trace lines are returned
    joined by newlines.
    """
    compiled = [re.compile(p) for p in patterns]
    trace_lines = []
    run = []
    for line in description.splitlines() + [""]:
        if any(p.match(line) for p in compiled):
            run.append(line)
        else:
            if len(run) >= 2:
                trace_lines.extend(run)
            run = []
    return "\n".join(trace_lines) if trace_lines else None


def build_document(report: BugReport, trace_patterns=DEFAULT_TRACE_PATTERNS) -> ProcessedReport:
    """Build the processed document for one report.

    The summary is augmented with the extracted stack trace (appended once,
    boosting its weight) and with characteristic values such as symptoms or
    priority, appended in sorted-key order.
    """
    if not report.summary.strip():
        raise ValueError(f"report {report.id!r} has an empty summary")

    doc_summary = filter_feature_tokens(tokenize(report.summary))
    trace = extract_stack_trace(report.description, trace_patterns)
    if trace is not None:
        doc_summary += filter_feature_tokens(tokenize(trace))
    if report.characteristics:
        values = " ".join(report.characteristics[k] for k in sorted(report.characteristics))
        doc_summary += filter_feature_tokens(tokenize(values))

    return ProcessedReport(
        id=report.id,
        doc_summary=doc_summary,
        doc_description=filter_feature_tokens(tokenize(report.description)),
        component=report.component,
        platform=dict(report.platform),
    )
