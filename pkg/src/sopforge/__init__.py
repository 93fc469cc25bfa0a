"""SOP-driven multi-agent software pipeline.

Specialized roles exchange structured documents through a shared
publish-subscribe message pool, generate code, and repair it with an
executable-feedback loop; an evaluation bench reproduces pass@k and the
desk-scale statistical indices.
"""

from .bench import pass_at_k, productivity
from .documents import Document, DocumentKind, parse_document, render_document, validate_dependencies
from .engine import PipelineConfig, ProjectResult, build_pipeline, run
from .errors import SopforgeError
from .feedback import FeedbackContext, FeedbackState, FeedbackStatus, feedback_loop
from .gateway import CompletionRequest, CostLedger, Gateway, HttpProvider, Playbook
from .pool import MessagePool, Subscription
from .sandbox import ExecLimits, ExecutionResult, Sandbox, SandboxStatus
from .types import ActionKind, CodeArtifact, CodeStatus, Message, RoleProfile, TestReport

__version__ = "0.1.0"

__all__ = [
    "ActionKind",
    "CodeArtifact",
    "CodeStatus",
    "CompletionRequest",
    "CostLedger",
    "Document",
    "DocumentKind",
    "ExecLimits",
    "ExecutionResult",
    "FeedbackContext",
    "FeedbackState",
    "FeedbackStatus",
    "Gateway",
    "HttpProvider",
    "Message",
    "MessagePool",
    "PipelineConfig",
    "Playbook",
    "ProjectResult",
    "RoleProfile",
    "Sandbox",
    "SandboxStatus",
    "SopforgeError",
    "Subscription",
    "TestReport",
    "build_pipeline",
    "feedback_loop",
    "parse_document",
    "pass_at_k",
    "productivity",
    "render_document",
    "run",
    "validate_dependencies",
    "__version__",
]
