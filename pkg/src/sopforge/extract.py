"""Low-level extraction of sections and fenced code blocks from model text."""

from __future__ import annotations

import logging

log = logging.getLogger(__name__)

FENCE = "```"


def _is_fence(line: str) -> bool:
    return line.lstrip().startswith(FENCE)


def extract_sections(text: str) -> dict[str, str]:
    """Split text on line-initial ``## `` headings.

    Returns an ordered mapping title -> body.  Text before the first heading
    is keyed under the empty title.  Lines inside a fenced code block never
    start a section, so fenced content may freely contain heading-like lines.
    Deeper headings (``### `` and below) stay in the enclosing body.  A
    duplicated heading overwrites the earlier body and logs a warning.
    """
    sections: dict[str, list[str]] = {}
    current = ""
    sections[current] = []
    in_fence = False
    for line in text.split("\n"):
        if _is_fence(line):
            in_fence = not in_fence
            sections[current].append(line)
            continue
        if not in_fence and line.startswith("## "):
            title = line[3:].strip()
            if title in sections and title != "":
                log.warning("duplicate section heading %r: keeping the later body", title)
                sections[title] = []
            else:
                sections.setdefault(title, [])
            current = title
            continue
        sections[current].append(line)
    out: dict[str, str] = {}
    for title, lines in sections.items():
        body = "\n".join(lines).strip("\n")
        if title == "" and not body:
            continue  # drop an empty preamble
        out[title] = body
    return out


def extract_code_blocks(text: str) -> list[tuple[str, str]]:
    """Return all triple-backtick fenced blocks as (language tag, code).

    Blocks appear in document order.  An unterminated final fence extends to
    the end of the text.
    """
    blocks: list[tuple[str, str]] = []
    tag = ""
    buf: list[str] = []
    in_fence = False
    for line in text.split("\n"):
        if _is_fence(line):
            if in_fence:
                blocks.append((tag, "\n".join(buf)))
                buf = []
                in_fence = False
            else:
                tag = line.lstrip()[len(FENCE):].strip()
                in_fence = True
            continue
        if in_fence:
            buf.append(line)
    if in_fence:
        blocks.append((tag, "\n".join(buf)))
    return blocks
