"""TOML configuration covering every run-time choice: backend wiring, token
prices, sandbox limits, round limits, and prompt-template overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .sandbox import DEFAULT_MAX_CONCURRENCY, ExecLimits, Sandbox


@dataclass
class BackendSettings:
    base_url: str = ""
    model: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 2048
    timeout: float = 120.0


@dataclass
class SandboxSettings:
    timeout: float = 30.0
    max_output_bytes: int = 1_048_576
    interpreter: str | None = None
    harness: str | None = None
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY

    def build(self) -> Sandbox:
        return Sandbox(
            limits=ExecLimits(timeout=self.timeout, max_output_bytes=self.max_output_bytes),
            interpreter=self.interpreter,
            harness=self.harness,
            max_concurrency=self.max_concurrency,
        )


@dataclass
class AppConfig:
    backend: BackendSettings = field(default_factory=BackendSettings)
    pricing: tuple[float, float] | None = None
    sandbox: SandboxSettings = field(default_factory=SandboxSettings)
    max_rounds: int = 64
    prompt_overrides: dict[str, str] = field(default_factory=dict)


def load_config(path: Path | None) -> AppConfig:
    """Parse a TOML config file; a missing path yields pure defaults."""
    config = AppConfig()
    if path is None:
        return config
    with Path(path).open("rb") as fh:
        data = tomllib.load(fh)

    backend = data.get("backend", {})
    config.backend = BackendSettings(
        base_url=backend.get("base_url", ""),
        model=backend.get("model", ""),
        temperature=float(backend.get("temperature", 0.0)),
        max_output_tokens=int(backend.get("max_output_tokens", 2048)),
        timeout=float(backend.get("timeout", 120.0)),
    )
    pricing = data.get("pricing", {})
    if "prompt_per_1k" in pricing and "completion_per_1k" in pricing:
        config.pricing = (float(pricing["prompt_per_1k"]), float(pricing["completion_per_1k"]))
    sandbox = data.get("sandbox", {})
    config.sandbox = SandboxSettings(
        timeout=float(sandbox.get("timeout", 30.0)),
        max_output_bytes=int(sandbox.get("max_output_bytes", 1_048_576)),
        interpreter=sandbox.get("interpreter"),
        harness=sandbox.get("harness"),
        max_concurrency=int(sandbox.get("max_concurrency", DEFAULT_MAX_CONCURRENCY)),
    )
    pipeline = data.get("pipeline", {})
    config.max_rounds = int(pipeline.get("max_rounds", 64))
    config.prompt_overrides = {str(k): str(v) for k, v in data.get("prompts", {}).items()}
    return config
