"""A bundled scripted playbook that drives the full five-role pipeline
offline: structured documents for the planning roles and a small, genuinely
runnable color-toolkit project for the coding roles, so the test-execution
phase exercises the sandbox for real.

``python -m sopforge.demo PATH`` writes it as a playbook JSONL file.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from .gateway import Playbook, PlaybookEntry
from .types import ActionKind

DEMO_IDEA = (
    "Build a command-line color toolkit that converts colors between hex and "
    "RGB and blends two colors."
)

PRD_RESPONSE = """\
## Original Requirements
The boss requires a command-line color toolkit that converts colors between hex and RGB representations and blends two colors.

## Product Goals
```python
[
    "Provide exact hex/RGB conversions in both directions",
    "Offer a predictable blend operation between two colors",
    "Keep the command-line interface minimal and scriptable"
]
```

## User Stories
```python
[
    "As a user, I want to convert a hex color to RGB channels, so that I can use it in code",
    "As a user, I want to convert RGB channels to a hex color, so that I can use it in stylesheets",
    "As a user, I want to blend two colors with a ratio, so that I can build palettes",
    "As a user, I want clear errors for malformed colors, so that mistakes are obvious"
]
```

## Competitive Analysis
```python
[
    "pastel: a feature-rich color CLI, but heavyweight for simple conversions",
    "colortrans: converts between palettes, no blending support",
    "Online converters: convenient but not scriptable from a terminal"
]
```

## Requirement Analysis
The product is a small command-line tool. Conversions must be lossless for valid inputs, blending must clamp channel values into the valid range, and malformed inputs must fail with a clear message and a non-zero exit code.

## Requirement Pool
```python
[
    ("Convert a hex color string to RGB channels", "P0"),
    ("Convert RGB channels to a hex color string", "P0"),
    ("Blend two hex colors with a configurable ratio", "P1"),
    ("Reject malformed color inputs with a clear error", "P0"),
    ("Keep the tool dependency-free", "P2")
]
```

## UI Design draft
A single executable with subcommands: `to-rgb COLOR`, `to-hex R G B`, and `blend FIRST SECOND --ratio X`. Output is one line on stdout; errors go to stderr.

## Anything UNCLEAR
There are no unclear points.
"""

DESIGN_RESPONSE = """\
## Implementation approach
We will implement the toolkit with the standard library only. A pure module holds the conversion and blending functions; a thin command-line module parses arguments with argparse and prints results. Channel values are clamped into [0, 255] so blending can never produce an invalid color.

## Package name
```python
"color_toolkit"
```

## File list
```python
[
    "color_utils.py",
    "main.py"
]
```

## Data structures and interfaces
classDiagram
    class color_utils {
        +clamp_channel(value) int
        +rgb_to_hex(r, g, b) str
        +hex_to_rgb(code) tuple
        +blend(first, second, ratio) str
    }
    class main {
        +build_parser() ArgumentParser
        +format_rgb(code) str
        +main(argv) int
    }
    main --> color_utils

## Program call flow
sequenceDiagram
    participant U as User
    participant M as main
    participant C as color_utils
    U->>M: main(argv)
    M->>C: hex_to_rgb / rgb_to_hex / blend
    C-->>M: converted value
    M-->>U: printed result

## Anything UNCLEAR
The requirement is clear to me.
"""

TASKS_RESPONSE = '''\
## Required packages
```python
"""
No third-party packages required.
"""
```

## Full API spec
```python
"""
color_utils.clamp_channel(value: int) -> int
color_utils.rgb_to_hex(r: int, g: int, b: int) -> str
color_utils.hex_to_rgb(code: str) -> tuple
color_utils.blend(first: str, second: str, ratio: float = 0.5) -> str
main.build_parser() -> argparse.ArgumentParser
main.format_rgb(code: str) -> str
main.main(argv: list | None = None) -> int
"""
```

## Logic Analysis
```python
[
    ("color_utils.py", "Pure conversion and blending functions; clamps channels and validates hex strings."),
    ("main.py", "argparse command line with to-rgb, to-hex and blend subcommands; prints one line per call.")
]
```

## Task list
```python
[
    "color_utils.py",
    "main.py"
]
```

## Shared Knowledge
```python
"""
Hex colors are 6 hex digits with an optional leading '#'. Channels are integers in [0, 255].
main.py imports color_utils, so color_utils.py must be implemented first.
"""
```

## Anything UNCLEAR
The task breakdown is clear.
'''

COLOR_UTILS_CODE = '''\
The implementation of color_utils.py:

```python
"""Color conversion helpers for the color toolkit."""


def clamp_channel(value: int) -> int:
    """Clamp a channel into the valid [0, 255] range."""
    return max(0, min(255, int(value)))


def rgb_to_hex(r: int, g: int, b: int) -> str:
    """Format three channels as a lowercase #rrggbb string."""
    return "#{:02x}{:02x}{:02x}".format(clamp_channel(r), clamp_channel(g), clamp_channel(b))


def hex_to_rgb(code: str) -> tuple:
    """Parse a #rrggbb (or rrggbb) string into an (r, g, b) tuple."""
    code = code.strip().lstrip("#")
    if len(code) != 6:
        raise ValueError("expected a 6-digit hex color")
    return tuple(int(code[i:i + 2], 16) for i in (0, 2, 4))


def blend(first: str, second: str, ratio: float = 0.5) -> str:
    """Blend two hex colors; ratio 0 keeps the first, 1 keeps the second."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    a = hex_to_rgb(first)
    b = hex_to_rgb(second)
    mixed = [round(x * (1.0 - ratio) + y * ratio) for x, y in zip(a, b)]
    return rgb_to_hex(*mixed)
```
'''

MAIN_CODE = '''\
The implementation of main.py:

```python
"""Command-line front end for the color toolkit."""

import argparse

from color_utils import blend, hex_to_rgb, rgb_to_hex


def format_rgb(code: str) -> str:
    r, g, b = hex_to_rgb(code)
    return "rgb({}, {}, {})".format(r, g, b)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colors", description="Color conversion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    to_rgb = sub.add_parser("to-rgb", help="convert a hex color to rgb channels")
    to_rgb.add_argument("color")
    to_hex = sub.add_parser("to-hex", help="convert rgb channels to a hex color")
    to_hex.add_argument("r", type=int)
    to_hex.add_argument("g", type=int)
    to_hex.add_argument("b", type=int)
    mix = sub.add_parser("blend", help="blend two hex colors")
    mix.add_argument("first")
    mix.add_argument("second")
    mix.add_argument("--ratio", type=float, default=0.5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "to-rgb":
        print(format_rgb(args.color))
    elif args.command == "to-hex":
        print(rgb_to_hex(args.r, args.g, args.b))
    else:
        print(blend(args.first, args.second, args.ratio))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
```
'''

COLOR_UTILS_TESTS = '''\
Unit tests for color_utils.py:

```python
import unittest

from color_utils import blend, clamp_channel, hex_to_rgb, rgb_to_hex


class TestColorUtils(unittest.TestCase):

    def test_rgb_to_hex(self):
        self.assertEqual(rgb_to_hex(255, 0, 128), "#ff0080")

    def test_rgb_to_hex_clamps(self):
        self.assertEqual(rgb_to_hex(300, -5, 0), "#ff0000")

    def test_hex_to_rgb(self):
        self.assertEqual(hex_to_rgb("#ff0080"), (255, 0, 128))

    def test_hex_to_rgb_rejects_short_input(self):
        with self.assertRaises(ValueError):
            hex_to_rgb("#fff")

    def test_round_trip(self):
        self.assertEqual(hex_to_rgb(rgb_to_hex(12, 34, 56)), (12, 34, 56))

    def test_blend_midpoint(self):
        self.assertEqual(blend("#000000", "#ffffff"), "#808080")

    def test_blend_rejects_bad_ratio(self):
        with self.assertRaises(ValueError):
            blend("#000000", "#ffffff", 1.5)

    def test_clamp_channel(self):
        self.assertEqual(clamp_channel(999), 255)


if __name__ == "__main__":
    unittest.main()
```
'''

MAIN_TESTS = '''\
Unit tests for main.py:

```python
import unittest

from main import build_parser, format_rgb


class TestMainCli(unittest.TestCase):

    def test_format_rgb(self):
        self.assertEqual(format_rgb("#102030"), "rgb(16, 32, 48)")

    def test_parser_to_hex(self):
        args = build_parser().parse_args(["to-hex", "1", "2", "3"])
        self.assertEqual((args.r, args.g, args.b), (1, 2, 3))

    def test_parser_blend_default_ratio(self):
        args = build_parser().parse_args(["blend", "#000000", "#ffffff"])
        self.assertEqual(args.ratio, 0.5)


if __name__ == "__main__":
    unittest.main()
```
'''


def entries() -> list[PlaybookEntry]:
    return [
        PlaybookEntry(role="Product Manager", action=ActionKind.WRITE_PRD, response=PRD_RESPONSE),
        PlaybookEntry(role="Architect", action=ActionKind.WRITE_DESIGN, response=DESIGN_RESPONSE),
        PlaybookEntry(role="Project Manager", action=ActionKind.WRITE_TASKS, response=TASKS_RESPONSE),
        PlaybookEntry(role="Engineer", action=ActionKind.WRITE_CODE, response=COLOR_UTILS_CODE),
        PlaybookEntry(role="Engineer", action=ActionKind.WRITE_CODE, response=MAIN_CODE),
        PlaybookEntry(role="QA Engineer", action=ActionKind.WRITE_TESTS, response=COLOR_UTILS_TESTS),
        PlaybookEntry(role="QA Engineer", action=ActionKind.WRITE_TESTS, response=MAIN_TESTS),
    ]


def playbook() -> Playbook:
    return Playbook(entries())


def write_playbook(path: Path) -> Path:
    """Materialize the demo playbook as a JSONL file usable with
    ``sopforge run --backend playbook --playbook PATH``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for entry in entries():
            fh.write(
                json.dumps(
                    {"role": entry.role, "action": entry.action.token, "response": entry.response},
                    ensure_ascii=False,
                )
                + "\n"
            )
    return path


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("usage: python -m sopforge.demo PLAYBOOK_PATH", file=sys.stderr)
        raise SystemExit(64)
    target = write_playbook(Path(sys.argv[1]))
    print(f"wrote demo playbook to {target}")
