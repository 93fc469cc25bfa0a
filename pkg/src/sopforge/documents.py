"""Structured documents: schemas, parsing from sectioned text, canonical rendering.

A document is an ordered mapping of section titles to values.  A value is
plain text, a list of text items, or a list of (text, priority/description)
pairs.  List values travel inside fenced blocks holding a bracketed list
literal; everything else is opaque text (diagram sections are never
interpreted).
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyInput, SchemaViolation
from .extract import extract_code_blocks, extract_sections

SectionValue = "str | list[str] | list[tuple[str, str]]"

PRIORITY_TOKENS = ("P0", "P1", "P2")


class DocumentKind(Enum):
    PRD = "prd"
    SYSTEM_DESIGN = "system_design"
    TASK_PLAN = "task_plan"
    CODE_ARTIFACT = "code_artifact"
    TEST_REPORT = "test_report"


REQUIRED_SECTIONS: dict[DocumentKind, tuple[str, ...]] = {
    DocumentKind.PRD: (
        "Original Requirements",
        "Product Goals",
        "User Stories",
        "Competitive Analysis",
        "Requirement Analysis",
        "Requirement Pool",
        "UI Design draft",
        "Anything UNCLEAR",
    ),
    DocumentKind.SYSTEM_DESIGN: (
        "Implementation approach",
        "Package name",
        "File list",
        "Data structures and interfaces",
        "Program call flow",
        "Anything UNCLEAR",
    ),
    DocumentKind.TASK_PLAN: (
        "Required packages",
        "Full API spec",
        "Logic Analysis",
        "Task list",
        "Shared Knowledge",
        "Anything UNCLEAR",
    ),
    DocumentKind.CODE_ARTIFACT: (),
    DocumentKind.TEST_REPORT: (),
}

# Headings accepted verbatim from language-specific source documents and
# canonicalized to the schema's neutral titles.
HEADING_ALIASES: dict[str, str] = {
    "Python package name": "Package name",
    "Required Python third-party packages": "Required packages",
}

DOC_FILE_NAMES: dict[DocumentKind, str] = {
    DocumentKind.PRD: "prd.md",
    DocumentKind.SYSTEM_DESIGN: "system_design.md",
    DocumentKind.TASK_PLAN: "tasks.md",
}


@dataclass(frozen=True)
class Document:
    """A typed, sectioned artifact. Equality ignores the raw source text."""

    kind: DocumentKind
    sections: dict
    source_text: str | None = field(default=None, compare=False)

    def section(self, title: str):
        return self.sections.get(title)

    def section_text(self, title: str) -> str:
        value = self.sections.get(title)
        if value is None:
            return ""
        return value if isinstance(value, str) else _render_list(value)

    def _list_section(self, title: str) -> list:
        value = self.sections.get(title)
        return value if isinstance(value, list) else []

    def requirement_pool(self) -> list[tuple[str, str]]:
        return [p for p in self._list_section("Requirement Pool") if isinstance(p, tuple)]

    def file_list(self) -> list[str]:
        return [f for f in self._list_section("File list") if isinstance(f, str)]

    def task_list(self) -> list[str]:
        return [f for f in self._list_section("Task list") if isinstance(f, str)]

    def logic_analysis(self) -> list[tuple[str, str]]:
        return [p for p in self._list_section("Logic Analysis") if isinstance(p, tuple)]


def _coerce_list_literal(value) -> "list[str] | list[tuple[str, str]] | None":
    """Accept a parsed literal only when it is a list of strings or of
    (string, string) pairs; anything else stays opaque text."""
    if not isinstance(value, list) or not value:
        return None
    if all(isinstance(item, str) for item in value):
        return list(value)
    pairs: list[tuple[str, str]] = []
    for item in value:
        if (
            isinstance(item, (tuple, list))
            and len(item) == 2
            and all(isinstance(x, str) for x in item)
        ):
            pairs.append((item[0], item[1]))
        else:
            return None
    return pairs


def _fenced_list_literal(body: str):
    """Return the evaluated literal when the body is exactly one fenced block
    holding a bracketed list literal; otherwise None."""
    stripped = body.strip()
    if not (stripped.startswith("```") and stripped.endswith("```")):
        return None
    blocks = extract_code_blocks(stripped)
    if len(blocks) != 1:
        return None
    content = blocks[0][1].strip()
    if not content.startswith("["):
        return None
    try:
        literal = ast.literal_eval(content)
    except (ValueError, SyntaxError):
        return None
    return literal if isinstance(literal, list) else None


def _coerce_requirement_pool(literal: list) -> list[tuple[str, str]]:
    """A Requirement Pool list must be (text, priority) pairs with a valid
    priority token; anything else is a schema violation, not opaque text."""
    pairs: list[tuple[str, str]] = []
    for entry in literal:
        if not (
            isinstance(entry, (tuple, list))
            and len(entry) == 2
            and all(isinstance(x, str) for x in entry)
        ):
            raise SchemaViolation(
                DocumentKind.PRD.value, detail=f"Requirement Pool entry {entry!r} has no priority token"
            )
        if entry[1] not in PRIORITY_TOKENS:
            raise SchemaViolation(
                DocumentKind.PRD.value,
                detail=f"Requirement Pool priority {entry[1]!r} not in {'/'.join(PRIORITY_TOKENS)}",
            )
        pairs.append((entry[0], entry[1]))
    return pairs


def _render_list(value: list) -> str:
    lines = ["```python", "["]
    for item in value:
        if isinstance(item, tuple):
            lines.append(f"    ({item[0]!r}, {item[1]!r}),")
        else:
            lines.append(f"    {item!r},")
    lines.append("]")
    lines.append("```")
    return "\n".join(lines)


def _check_requirement_pool(kind: DocumentKind, sections: dict) -> None:
    if kind is not DocumentKind.PRD:
        return
    value = sections.get("Requirement Pool")
    if not isinstance(value, list):
        return
    for entry in value:
        if not isinstance(entry, tuple):
            raise SchemaViolation(
                kind.value, detail=f"Requirement Pool entry {entry!r} has no priority token"
            )
        if entry[1] not in PRIORITY_TOKENS:
            raise SchemaViolation(
                kind.value,
                detail=f"Requirement Pool priority {entry[1]!r} not in {'/'.join(PRIORITY_TOKENS)}",
            )


def parse_document(kind: DocumentKind, text: str) -> Document:
    """Parse sectioned text into a schema-checked Document.

    Every ``## ``-heading becomes a section; fenced list literals become list
    values; unknown extra sections are preserved in order.  Missing required
    sections raise SchemaViolation naming them, never a partial document.
    """
    if not text or not text.strip():
        raise EmptyInput(f"cannot parse an empty {kind.value} document")
    raw = extract_sections(text)
    sections: dict = {}
    for title, body in raw.items():
        canonical = HEADING_ALIASES.get(title, title)
        literal = _fenced_list_literal(body)
        if literal is None:
            sections[canonical] = body
        elif kind is DocumentKind.PRD and canonical == "Requirement Pool":
            sections[canonical] = _coerce_requirement_pool(literal)
        else:
            value = _coerce_list_literal(literal)
            sections[canonical] = value if value is not None else body
    missing = [t for t in REQUIRED_SECTIONS[kind] if t not in sections]
    if missing:
        raise SchemaViolation(kind.value, missing=missing)
    _check_requirement_pool(kind, sections)
    return Document(kind=kind, sections=sections, source_text=text)


def render_document(doc: Document) -> str:
    """Emit canonical sectioned text: required sections in schema order, then
    extras in insertion order.  parse(kind, render(d)) == d up to source_text."""
    required = REQUIRED_SECTIONS[doc.kind]
    missing = [t for t in required if t not in doc.sections]
    if missing:
        raise SchemaViolation(doc.kind.value, missing=missing)
    _check_requirement_pool(doc.kind, doc.sections)
    ordered = [(t, doc.sections[t]) for t in required]
    ordered += [(t, v) for t, v in doc.sections.items() if t not in required]

    chunks: list[str] = []
    for title, value in ordered:
        body = value if isinstance(value, str) else _render_list(value)
        body = body.strip("\n")
        if title == "":
            chunks.append(body)
            continue
        chunks.append(f"## {title}\n{body}" if body else f"## {title}")
    return "\n\n".join(chunks).rstrip("\n") + "\n"


@dataclass
class DependencyReport:
    """Outcome of cross-checking a task plan against a system design."""

    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings and not self.errors


def validate_dependencies(plan: Document, design: Document) -> DependencyReport:
    """Report task files absent from the design's file list (warnings) and
    duplicated task entries (errors)."""
    report = DependencyReport()
    tasks = plan.task_list()
    files = set(design.file_list())
    seen: set[str] = set()
    for task in tasks:
        if task in seen:
            report.errors.append(f"duplicate task entry: {task}")
        seen.add(task)
        if task not in files:
            report.warnings.append(f"task file not in design file list: {task}")
    return report
