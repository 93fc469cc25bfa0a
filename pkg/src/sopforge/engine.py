"""The SOP pipeline: five specialized roles wired into a dependency-gated
workflow over the shared message pool.

Scheduling is a sequential round-robin scan in config order; a role steps
when every prerequisite action kind has appeared in the pool and it has
undelivered input.  The run ends when a full scan steps nobody, or errors
out when max_rounds is hit first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .documents import (
    DOC_FILE_NAMES,
    Document,
    DocumentKind,
    parse_document,
    render_document,
    validate_dependencies,
)
from .errors import (
    BackendFailure,
    EmptyContent,
    EmptyInput,
    IdeaEmpty,
    NoCodeBlock,
    PlaybookExhausted,
    ProviderError,
    RoundLimitExceeded,
    SchemaViolation,
    TransportError,
)
from .extract import extract_code_blocks
from .feedback import FeedbackContext, feedback_loop
from .gateway import CompletionRequest, CostLedger, Gateway
from .prompts import REASK_TEMPLATE, action_template, role_system_prompt
from .sandbox import Sandbox
from .types import ActionKind, CodeArtifact, Message, RoleProfile, TestReport

log = logging.getLogger(__name__)

USER_SENDER = "user"

# The canonical artifact chain; each role consumes the nearest configured
# upstream kind, which is what makes role-subset ablations runnable.
CHAIN = (
    ActionKind.USER_REQUIREMENT,
    ActionKind.WRITE_PRD,
    ActionKind.WRITE_DESIGN,
    ActionKind.WRITE_TASKS,
    ActionKind.WRITE_CODE,
    ActionKind.WRITE_TESTS,
)

ROLE_CARDS: dict[str, dict] = {
    "product_manager": {
        "name": "Product Manager",
        "goal": "Turn the raw idea into a complete, prioritized requirements document",
        "constraints": "Cover every required section; keep requirements testable and prioritized",
        "skills": ("web-search",),
        "produces": ActionKind.WRITE_PRD,
    },
    "architect": {
        "name": "Architect",
        "goal": "Translate the requirements into a minimal, implementable system design",
        "constraints": "Prefer standard libraries; keep the file list small and the interfaces explicit",
        "skills": (),
        "produces": ActionKind.WRITE_DESIGN,
    },
    "project_manager": {
        "name": "Project Manager",
        "goal": "Break the design into ordered file-level tasks",
        "constraints": "Every task must map to a designed file; order tasks by dependency",
        "skills": (),
        "produces": ActionKind.WRITE_TASKS,
    },
    "engineer": {
        "name": "Engineer",
        "goal": "Implement each task file exactly as designed and keep it passing its tests",
        "constraints": "Follow the design; produce complete files, never fragments",
        "skills": ("code-execution",),
        "produces": ActionKind.WRITE_CODE,
    },
    "qa_engineer": {
        "name": "QA Engineer",
        "goal": "Write unit tests that pin the behavior of every generated file",
        "constraints": "Tests must be runnable directly and deterministic",
        "skills": ("code-execution",),
        "produces": ActionKind.WRITE_TESTS,
    },
}

ROLE_ORDER = ("product_manager", "architect", "project_manager", "engineer", "qa_engineer")

ROLE_KEY_ALIASES = {"product": "product_manager", "project": "project_manager", "qa": "qa_engineer"}


@dataclass(frozen=True)
class RoleSpec:
    """One configured role: its profile plus pipeline wiring."""

    profile: RoleProfile
    prerequisites: frozenset[ActionKind]
    produces: ActionKind


@dataclass
class PipelineConfig:
    roles: list[RoleSpec]
    workspace: Path
    max_rounds: int = 64
    prompt_overrides: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.max_rounds <= 0:
            raise ValueError("max_rounds must be positive")
        produced = [spec.produces for spec in self.roles]
        if len(produced) != len(set(produced)):
            raise ValueError("produced action kinds must be unique across roles")
        self._check_acyclic()

    def _check_acyclic(self):
        producer = {spec.produces: spec.profile.name for spec in self.roles}
        edges = {
            spec.profile.name: {
                producer[k] for k in spec.prerequisites if k in producer and producer[k] != spec.profile.name
            }
            for spec in self.roles
        }
        seen: set[str] = set()
        stack: set[str] = set()

        def visit(node: str):
            if node in stack:
                raise ValueError(f"prerequisite graph has a cycle through {node!r}")
            if node in seen:
                return
            stack.add(node)
            for dep in edges.get(node, ()):
                visit(dep)
            stack.discard(node)
            seen.add(node)

        for name in edges:
            visit(name)


def resolve_role_key(token: str) -> str:
    key = token.strip().lower().replace("-", "_").replace(" ", "_")
    key = ROLE_KEY_ALIASES.get(key, key)
    if key not in ROLE_CARDS:
        raise ValueError(f"unknown role: {token!r} (choose from {', '.join(ROLE_ORDER)})")
    return key


def build_pipeline(
    role_keys: "list[str] | None" = None,
    workspace: "Path | str" = "workspace",
    max_rounds: int = 64,
    prompt_overrides: dict[str, str] | None = None,
    constraints_by_role: dict[str, str] | None = None,
) -> PipelineConfig:
    """Wire a pipeline for any subset of the five roles, in canonical order.

    Each role's input is the nearest upstream artifact kind actually produced
    by the configured subset (falling back to the user requirement), so
    ablated teams still form a connected chain.
    """
    keys = [resolve_role_key(k) for k in (role_keys or ROLE_ORDER)]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate roles in pipeline")
    keys.sort(key=ROLE_ORDER.index)
    available = {ActionKind.USER_REQUIREMENT} | {ROLE_CARDS[k]["produces"] for k in keys}
    specs: list[RoleSpec] = []
    for key in keys:
        card = ROLE_CARDS[key]
        produces = card["produces"]
        below = CHAIN[: CHAIN.index(produces)]
        input_kind = next(k for k in reversed(below) if k in available)
        prerequisites = frozenset({ActionKind.USER_REQUIREMENT, input_kind})
        watched = set(prerequisites)
        if key == "engineer":
            watched.add(ActionKind.WRITE_TESTS)
        constraints = card["constraints"]
        if constraints_by_role and card["name"] in constraints_by_role:
            constraints = constraints_by_role[card["name"]]
        profile = RoleProfile(
            name=card["name"],
            profile=card["name"],
            goal=card["goal"],
            constraints=constraints,
            watched_actions=frozenset(watched),
            skills=frozenset(card["skills"]),
        )
        specs.append(RoleSpec(profile=profile, prerequisites=prerequisites, produces=produces))
    config = PipelineConfig(
        roles=specs,
        workspace=Path(workspace),
        max_rounds=max_rounds,
        prompt_overrides=dict(prompt_overrides or {}),
    )
    config.validate()
    return config


@dataclass
class ProjectResult:
    documents: list[Document]
    code_files: list[CodeArtifact]
    test_reports: list[TestReport]
    ledger: CostLedger
    completed: bool
    workspace: Path
    rounds: int = 0


# -- role actions -------------------------------------------------------------


def _complete_document(
    gateway: Gateway,
    role: RoleProfile,
    action: ActionKind,
    user_prompt: str,
    kind: DocumentKind,
    extra_check=None,
) -> Document:
    """One completion parsed against the document schema, with a single
    re-ask that quotes the violation before giving up."""
    req = CompletionRequest(
        system_prompt=role_system_prompt(role),
        user_prompt=user_prompt,
        tag=(role.name, action),
    )
    text, _ = gateway.complete(req)
    try:
        doc = parse_document(kind, text)
        if extra_check:
            extra_check(doc)
        return doc
    except (SchemaViolation, EmptyInput) as first:
        retry = CompletionRequest(
            system_prompt=req.system_prompt,
            user_prompt=REASK_TEMPLATE.format(reason=first, original=user_prompt),
            tag=req.tag,
        )
        text, _ = gateway.complete(retry)
        doc = parse_document(kind, text)
        if extra_check:
            extra_check(doc)
        return doc


def act_write_prd(idea: str, gateway: Gateway, role: RoleProfile, overrides=None) -> Document:
    if not idea.strip():
        raise IdeaEmpty("cannot write a PRD for an empty idea")
    prompt = action_template(ActionKind.WRITE_PRD, overrides).format(requirement=idea)
    return _complete_document(gateway, role, ActionKind.WRITE_PRD, prompt, DocumentKind.PRD)


def act_write_design(prd: Document, gateway: Gateway, role: RoleProfile, overrides=None) -> Document:
    def check(doc: Document):
        if not doc.file_list():
            raise SchemaViolation(DocumentKind.SYSTEM_DESIGN.value, detail="File list is empty")

    prompt = action_template(ActionKind.WRITE_DESIGN, overrides).format(context=render_document(prd))
    return _complete_document(
        gateway, role, ActionKind.WRITE_DESIGN, prompt, DocumentKind.SYSTEM_DESIGN, extra_check=check
    )


def act_write_tasks(context_doc: Document, gateway: Gateway, role: RoleProfile, overrides=None) -> Document:
    prompt = action_template(ActionKind.WRITE_TASKS, overrides).format(
        context=render_document(context_doc)
    )
    return _complete_document(gateway, role, ActionKind.WRITE_TASKS, prompt, DocumentKind.TASK_PLAN)


def act_write_code(
    file_name: str,
    task_notes: str,
    context: str,
    gateway: Gateway,
    role: RoleProfile,
    overrides=None,
) -> CodeArtifact:
    """Ask for one complete file; the first fenced block of the response is
    the code, with one re-ask when no fence comes back."""
    prompt = action_template(ActionKind.WRITE_CODE, overrides).format(
        context=context, file_name=file_name, task_notes=task_notes or "none"
    )
    req = CompletionRequest(
        system_prompt=role_system_prompt(role), user_prompt=prompt, tag=(role.name, ActionKind.WRITE_CODE)
    )
    text, _ = gateway.complete(req)
    blocks = extract_code_blocks(text)
    if not blocks:
        retry = CompletionRequest(
            system_prompt=req.system_prompt,
            user_prompt=REASK_TEMPLATE.format(reason="no fenced code block found", original=prompt),
            tag=req.tag,
        )
        text, _ = gateway.complete(retry)
        blocks = extract_code_blocks(text)
    if not blocks:
        raise NoCodeBlock(f"no code block in the response for {file_name}")
    tag, code = blocks[0]
    return CodeArtifact(file_name=file_name, code=code, language_tag=tag or "python")


def act_write_tests(
    code: CodeArtifact, context: str, gateway: Gateway, role: RoleProfile, overrides=None
) -> CodeArtifact:
    if not code.code.strip():
        raise EmptyContent(f"cannot write tests for empty artifact {code.file_name}")
    test_file_name = f"test_{Path(code.file_name).name}"
    prompt = action_template(ActionKind.WRITE_TESTS, overrides).format(
        context=context,
        file_name=code.file_name,
        language_tag=code.language_tag,
        code=code.code,
        test_file_name=test_file_name,
    )
    req = CompletionRequest(
        system_prompt=role_system_prompt(role), user_prompt=prompt, tag=(role.name, ActionKind.WRITE_TESTS)
    )
    text, _ = gateway.complete(req)
    blocks = extract_code_blocks(text)
    if not blocks:
        retry = CompletionRequest(
            system_prompt=req.system_prompt,
            user_prompt=REASK_TEMPLATE.format(reason="no fenced code block found", original=prompt),
            tag=req.tag,
        )
        text, _ = gateway.complete(retry)
        blocks = extract_code_blocks(text)
    if not blocks:
        raise NoCodeBlock(f"no code block in the test response for {code.file_name}")
    tag, body = blocks[0]
    return CodeArtifact(file_name=test_file_name, code=body, language_tag=tag or code.language_tag)


# -- the engine ---------------------------------------------------------------


class _RunState:
    """Mutable bookkeeping for one pipeline run."""

    def __init__(self, config: PipelineConfig, gateway: Gateway, sandbox: Sandbox):
        from .pool import MessagePool

        self.config = config
        self.gateway = gateway
        self.sandbox = sandbox
        self.pool = MessagePool()
        self.documents: dict[DocumentKind, Document] = {}
        self.artifacts: dict[str, CodeArtifact] = {}
        self.test_files: dict[str, CodeArtifact] = {}
        self.test_reports: list[TestReport] = []
        self.memory: dict[str, list[Message]] = {s.profile.name: [] for s in config.roles}
        self.published_by: dict[str, int] = {s.profile.name: 0 for s in config.roles}
        self.idea: str = ""

    def publish(self, role_name: str, kind: ActionKind, content, send_to=()) -> Message:
        seq = self.pool.publish(sent_from=role_name, cause_by=kind, content=content, send_to=send_to)
        if role_name in self.published_by:
            self.published_by[role_name] += 1
        if isinstance(content, Document):
            self.documents[content.kind] = content
        elif isinstance(content, CodeArtifact):
            if kind is ActionKind.WRITE_TESTS:
                self.test_files[content.file_name] = content
            else:
                self.artifacts[content.file_name] = content
        return self.pool.snapshot()[seq]

    def context_text(self) -> str:
        parts = [f"Requirement: {self.idea}"] if self.idea else []
        for kind in (DocumentKind.PRD, DocumentKind.SYSTEM_DESIGN, DocumentKind.TASK_PLAN):
            doc = self.documents.get(kind)
            if doc is not None:
                parts.append(render_document(doc))
        return "\n\n".join(parts) or "(no documents yet)"


def _wrap_backend_errors(role: RoleProfile, action: ActionKind):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if isinstance(exc, (TransportError, ProviderError, PlaybookExhausted)):
                raise BackendFailure(role.name, action.token, exc) from exc
            return False

    return _Ctx()


def step(spec: RoleSpec, state: _RunState) -> list[Message]:
    """Observe (fetch new messages), think (assemble the action input from
    profile + context + memory), act, and publish the results."""
    role = spec.profile
    fetched = state.pool.fetch_new(role.name)
    if not fetched:
        return []
    state.memory[role.name].extend(fetched)
    published: list[Message] = []
    produces = spec.produces
    overrides = state.config.prompt_overrides

    def latest_document(kinds: tuple[DocumentKind, ...]) -> Document | None:
        for kind in kinds:
            if kind in state.documents:
                return state.documents[kind]
        return None

    if produces is ActionKind.WRITE_PRD:
        with _wrap_backend_errors(role, produces):
            doc = act_write_prd(state.idea, state.gateway, role, overrides)
        published.append(state.publish(role.name, produces, doc))

    elif produces is ActionKind.WRITE_DESIGN:
        prd = latest_document((DocumentKind.PRD,))
        if prd is not None:
            with _wrap_backend_errors(role, produces):
                doc = act_write_design(prd, state.gateway, role, overrides)
            published.append(state.publish(role.name, produces, doc))

    elif produces is ActionKind.WRITE_TASKS:
        upstream = latest_document((DocumentKind.SYSTEM_DESIGN, DocumentKind.PRD))
        if upstream is not None:
            with _wrap_backend_errors(role, produces):
                doc = act_write_tasks(upstream, state.gateway, role, overrides)
            design = state.documents.get(DocumentKind.SYSTEM_DESIGN)
            if design is not None:
                report = validate_dependencies(doc, design)
                for warning in report.warnings:
                    log.warning("task plan: %s", warning)
                for error in report.errors:
                    log.error("task plan: %s", error)
            published.append(state.publish(role.name, produces, doc))

    elif produces is ActionKind.WRITE_CODE:
        published.extend(_engineer_step(spec, state, fetched))

    elif produces is ActionKind.WRITE_TESTS:
        context = state.context_text()
        for msg in fetched:
            if msg.cause_by is not ActionKind.WRITE_CODE or not isinstance(msg.content, CodeArtifact):
                continue
            with _wrap_backend_errors(role, produces):
                tests = act_write_tests(msg.content, context, state.gateway, role, overrides)
            published.append(state.publish(role.name, produces, tests))

    return published


def _engineer_step(spec: RoleSpec, state: _RunState, fetched: list[Message]) -> list[Message]:
    """The Engineer both writes code (from a task plan when one exists,
    straight from the requirement otherwise) and executes arriving tests
    through the feedback loop."""
    role = spec.profile
    published: list[Message] = []
    overrides = state.config.prompt_overrides
    new_kinds = {m.cause_by for m in fetched}

    wants_code = bool(
        new_kinds
        & {ActionKind.WRITE_TASKS, ActionKind.WRITE_DESIGN, ActionKind.WRITE_PRD, ActionKind.USER_REQUIREMENT}
    )
    input_kind = next(iter(spec.prerequisites - {ActionKind.USER_REQUIREMENT}), ActionKind.USER_REQUIREMENT)
    if wants_code and input_kind in new_kinds and not state.artifacts:
        context = state.context_text()
        plan = state.documents.get(DocumentKind.TASK_PLAN)
        if plan is not None and plan.task_list():
            notes = dict(plan.logic_analysis())
            for file_name in plan.task_list():
                with _wrap_backend_errors(role, ActionKind.WRITE_CODE):
                    artifact = act_write_code(
                        file_name, notes.get(file_name, ""), context, state.gateway, role, overrides
                    )
                published.append(state.publish(role.name, ActionKind.WRITE_CODE, artifact))
        else:
            with _wrap_backend_errors(role, ActionKind.WRITE_CODE):
                artifact = act_write_code(
                    "main.py",
                    "implement the requirement as a single program",
                    state.context_text(),
                    state.gateway,
                    role,
                    overrides,
                )
            published.append(state.publish(role.name, ActionKind.WRITE_CODE, artifact))

    for msg in fetched:
        if msg.cause_by is not ActionKind.WRITE_TESTS or not isinstance(msg.content, CodeArtifact):
            continue
        published.extend(_run_feedback(role, state, msg.content))
    return published


def _module_for_tests(state: _RunState, tests: CodeArtifact) -> CodeArtifact | None:
    name = Path(tests.file_name).name
    if name.startswith("test_"):
        return state.artifacts.get(name[len("test_"):])
    return None


def _run_feedback(role: RoleProfile, state: _RunState, tests: CodeArtifact) -> list[Message]:
    module = _module_for_tests(state, tests)
    if module is None:
        log.warning("no module artifact matches test file %s; skipping", tests.file_name)
        return []
    design = state.documents.get(DocumentKind.SYSTEM_DESIGN)
    context = FeedbackContext(
        requirement=state.idea,
        design=render_document(design) if design is not None else "",
        code_files=tuple(state.artifacts.values()),
        role_name=role.name,
    )
    fb = feedback_loop(
        module,
        tests,
        context,
        state.gateway,
        state.sandbox,
        persist_root=state.config.workspace / "logs" / "feedback",
    )
    state.artifacts[module.file_name] = fb.artifact
    last = fb.attempts[-1]
    report = TestReport(
        module_file=module.file_name,
        tests_file=tests.file_name,
        status=fb.status.value,
        exit_code=last.exit_code,
        passed=last.test_counts[0] if last.test_counts else None,
        failed=last.test_counts[1] if last.test_counts else None,
        errored=last.test_counts[2] if last.test_counts else None,
        duration=last.duration,
    )
    state.test_reports.append(report)
    published = [state.publish(role.name, ActionKind.RUN_TESTS, report)]
    if fb.artifact.revision > 0:
        published.append(state.publish(role.name, ActionKind.DEBUG_CODE, fb.artifact))
    return published


def _write_workspace(state: _RunState) -> None:
    ws = state.config.workspace
    docs_dir = ws / "docs"
    for kind, doc in state.documents.items():
        file_name = DOC_FILE_NAMES.get(kind)
        if file_name is None:
            continue
        docs_dir.mkdir(parents=True, exist_ok=True)
        (docs_dir / file_name).write_text(render_document(doc), encoding="utf-8")
    for directory, artifacts in (("src", state.artifacts), ("tests", state.test_files)):
        for artifact in artifacts.values():
            target = ws / directory / artifact.file_name
            target.parent.mkdir(parents=True, exist_ok=True)
            code = artifact.code if artifact.code.endswith("\n") else artifact.code + "\n"
            target.write_text(code, encoding="utf-8")
    state.pool.save_jsonl(ws / "logs" / "messages.jsonl")
    state.gateway.ledger.save(ws / "ledger.json")


def run(config: PipelineConfig, idea: str, gateway: Gateway, sandbox: Sandbox) -> ProjectResult:
    """Publish the user requirement and scan roles until the pipeline settles.

    The workspace is written whether the run completes or hits the round
    limit; in the latter case the partial result rides on the error.
    """
    if not idea or not idea.strip():
        raise IdeaEmpty("the idea must be non-empty")
    config.validate()
    state = _RunState(config, gateway, sandbox)
    state.idea = idea.strip()
    for spec in config.roles:
        state.pool.register(spec.profile)
    state.pool.publish(sent_from=USER_SENDER, cause_by=ActionKind.USER_REQUIREMENT, content=state.idea)

    def runnable(spec: RoleSpec) -> bool:
        return state.pool.ready(spec.prerequisites) and state.pool.pending(spec.profile.name)

    rounds = 0
    for rounds in range(1, config.max_rounds + 1):
        stepped = 0
        for spec in config.roles:
            if not runnable(spec):
                continue
            step(spec, state)
            stepped += 1
        if stepped == 0:
            break
    if any(runnable(spec) for spec in config.roles):
        _write_workspace(state)
        raise RoundLimitExceeded(rounds, partial=_result(state, rounds, completed=False))

    _write_workspace(state)
    terminal = config.roles[-1].profile.name
    return _result(state, rounds, completed=state.published_by[terminal] > 0)


def _result(state: _RunState, rounds: int, completed: bool) -> ProjectResult:
    return ProjectResult(
        documents=list(state.documents.values()),
        code_files=list(state.artifacts.values()),
        test_reports=list(state.test_reports),
        ledger=state.gateway.ledger,
        completed=completed,
        workspace=state.config.workspace,
        rounds=rounds,
    )
