"""Prompt templates for the role actions.

The templates pin the output shape (section headings, fenced lists, fenced
code) that the document parser expects.  Every template can be overridden
per action through the config file.
"""

from __future__ import annotations

from .types import ActionKind, RoleProfile

ROLE_SYSTEM_TEMPLATE = (
    "You are {name}, acting as the {profile} of a software team.\n"
    "Goal: {goal}\n"
    "Constraints: {constraints}\n"
    "Respond with exactly the requested document format and nothing else."
)


def role_system_prompt(role: RoleProfile) -> str:
    return ROLE_SYSTEM_TEMPLATE.format(
        name=role.name,
        profile=role.profile,
        goal=role.goal or "deliver your part of the project",
        constraints=role.constraints or "none beyond the format rules",
    )


WRITE_PRD_TEMPLATE = """\
The user requirement:

{requirement}

Write a product requirements document with exactly these "## " sections, in order:
## Original Requirements
## Product Goals
## User Stories
## Competitive Analysis
## Requirement Analysis
## Requirement Pool
## UI Design draft
## Anything UNCLEAR

Product Goals, User Stories and Competitive Analysis each hold a fenced python
list of strings. Requirement Pool holds a fenced python list of
(requirement, priority) pairs where priority is one of "P0", "P1", "P2".
The other sections are prose.
"""

WRITE_DESIGN_TEMPLATE = """\
The approved product requirements document:

{context}

Write the system design with exactly these "## " sections, in order:
## Implementation approach
## Package name
## File list
## Data structures and interfaces
## Program call flow
## Anything UNCLEAR

File list holds a fenced python list of relative file names and must not be
empty. Data structures and interfaces and Program call flow hold diagram text
and are treated as opaque. Package name holds a fenced quoted string.
"""

WRITE_TASKS_TEMPLATE = """\
The project documents so far:

{context}

Break the design into engineering tasks with exactly these "## " sections, in order:
## Required packages
## Full API spec
## Logic Analysis
## Task list
## Shared Knowledge
## Anything UNCLEAR

Logic Analysis holds a fenced python list of (file name, description) pairs.
Task list holds a fenced python list of file names in implementation order;
every task file must appear in the design's file list.
"""

WRITE_CODE_TEMPLATE = """\
Project context:

{context}

Implement the file `{file_name}`.
Notes for this file: {task_notes}

Respond with a single fenced code block containing the complete content of
`{file_name}`. Write production-quality code that follows the design exactly.
"""

WRITE_TESTS_TEMPLATE = """\
Project context:

{context}

The implementation of `{file_name}`:

```{language_tag}
{code}
```

Write unit tests for `{file_name}` as the file `{test_file_name}`.
Respond with a single fenced code block containing the complete test file.
Use the standard unit-testing library and include a main guard so the file
is runnable directly.
"""

HANDOVER_TEMPLATE = """\
Here is everything you received while developing the last project:

{transcript}

Critically summarize this feedback into a short constraint you should follow
in future projects. Respond with one or two sentences of plain text; the
first line must be a one-line summary.
"""

DEBUG_SYSTEM_PROMPT = (
    "You are a senior engineer debugging a failing file. Compare the failure "
    "with the requirements, the design, and the current code, then respond "
    "with a single fenced code block containing the complete revised file. "
    "Do not output anything outside the code block."
)

DEFAULT_TEMPLATES: dict[ActionKind, str] = {
    ActionKind.WRITE_PRD: WRITE_PRD_TEMPLATE,
    ActionKind.WRITE_DESIGN: WRITE_DESIGN_TEMPLATE,
    ActionKind.WRITE_TASKS: WRITE_TASKS_TEMPLATE,
    ActionKind.WRITE_CODE: WRITE_CODE_TEMPLATE,
    ActionKind.WRITE_TESTS: WRITE_TESTS_TEMPLATE,
    ActionKind.HANDOVER_FEEDBACK: HANDOVER_TEMPLATE,
}

REASK_TEMPLATE = """\
Your previous response was rejected: {reason}

Answer the original request again, following the required format exactly.

{original}
"""


def action_template(action: ActionKind, overrides: dict[str, str] | None = None) -> str:
    if overrides and action.token in overrides:
        return overrides[action.token]
    return DEFAULT_TEMPLATES[action]
