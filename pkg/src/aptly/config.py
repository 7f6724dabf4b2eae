"""Service configuration: a strict JSON file plus environment-held secrets.

API keys never live in the config file; the file names the environment
variable holding the key and the value is read at startup.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import json

from .backends import (
    CompletionBackend,
    NearestEchoBackend,
    RemoteBackend,
    scripted_from_file,
)
from .diagnostics import BackendError, ConfigError, Diagnostic, E_CONFIG

BACKEND_KINDS = ("mock-echo", "scripted", "remote")

_KNOWN_KEYS = {
    "port", "registry_path", "corpus_path", "backend", "remote_url",
    "api_key_env", "scripted_responses_path", "default_k", "default_model",
    "timeout_seconds", "max_concurrent_generations", "ui_dir",
}


@dataclass(frozen=True)
class ServiceConfig:
    corpus_path: str
    port: int = 8080
    registry_path: Optional[str] = None  # None -> bundled seed registry
    backend: str = "mock-echo"
    remote_url: Optional[str] = None
    api_key_env: Optional[str] = None
    scripted_responses_path: Optional[str] = None
    default_k: int = 3
    default_model: str = "default"
    timeout_seconds: float = 60.0
    max_concurrent_generations: int = 4
    ui_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.backend not in BACKEND_KINDS:
            raise _config_fail(
                f"backend must be one of {', '.join(BACKEND_KINDS)}; got {self.backend!r}"
            )
        if self.backend == "remote" and (not self.remote_url or not self.api_key_env):
            raise _config_fail("remote backend needs remote_url and api_key_env")
        if self.backend == "scripted" and not self.scripted_responses_path:
            raise _config_fail("scripted backend needs scripted_responses_path")
        if self.max_concurrent_generations < 1:
            raise _config_fail("max_concurrent_generations must be at least 1")
        if self.default_k < 0:
            raise _config_fail("default_k must be non-negative")


def _config_fail(message: str) -> ConfigError:
    return ConfigError([Diagnostic(E_CONFIG, message)])


def load_config(path) -> ServiceConfig:
    """Load and check a service config file; raises ConfigError."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _config_fail(f"cannot read config file: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _config_fail(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise _config_fail("config must be a JSON object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise _config_fail(f"unknown config keys: {sorted(unknown)}")
    if "corpus_path" not in doc:
        raise _config_fail("config needs corpus_path")
    try:
        config = ServiceConfig(**doc)
    except TypeError as exc:
        raise _config_fail(f"bad config value: {exc}") from exc

    for label, p in (("corpus_path", config.corpus_path), ("registry_path", config.registry_path)):
        if p is not None and not Path(p).exists():
            raise _config_fail(f"{label} does not exist: {p}")
    if config.backend == "scripted" and not Path(config.scripted_responses_path).exists():
        raise _config_fail(
            f"scripted_responses_path does not exist: {config.scripted_responses_path}"
        )
    return config


def make_backend(config: ServiceConfig) -> CompletionBackend:
    """Instantiate the configured backend; raises ConfigError."""
    if config.backend == "mock-echo":
        return NearestEchoBackend()
    if config.backend == "scripted":
        try:
            return scripted_from_file(config.scripted_responses_path)
        except BackendError as exc:
            raise ConfigError(exc.diagnostics) from exc
    import os

    api_key = os.environ.get(config.api_key_env or "")
    if not api_key:
        raise _config_fail(
            f"environment variable {config.api_key_env!r} is not set"
        )
    return RemoteBackend(
        url=config.remote_url, api_key=api_key, timeout=config.timeout_seconds
    )
