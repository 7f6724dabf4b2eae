"""Completion backends: a pluggable contract plus three implementations.

``complete`` either returns text or raises BackendError; it never returns
partial undecodable bytes. The two mock backends make the whole pipeline
testable with zero network access:

* NearestEchoBackend answers with the code of the most similar example in
  the prompt (the final example section, nearest the query).
* ScriptedBackend replays a fixed response queue.

RemoteBackend speaks a completions-style HTTP schema: a JSON body with
model, prompt, temperature, max_tokens and stop; the reply carries the text
in choices[0].text.
"""

from __future__ import annotations

import json
import os
from typing import Optional, Protocol, Sequence

import httpx

from .diagnostics import BackendError, Diagnostic, E_BACKEND


class CompletionBackend(Protocol):
    def complete(
        self,
        prompt: str,
        model: str,
        temperature: float,
        max_tokens: int,
        stop: Sequence[str],
    ) -> str:
        ...

    def identify(self) -> str:
        ...


_ANSWER_MARKER = "### Aptly:\n"


class NearestEchoBackend:
    """Echoes the most similar retrieved example's code."""

    def complete(self, prompt, model, temperature, max_tokens, stop) -> str:
        sections = prompt.split(_ANSWER_MARKER)
        # [head, example..., query-tail]; fewer than 3 pieces means the
        # prompt carried no examples to echo.
        if len(sections) < 3:
            return ""
        candidate = sections[-2]
        cut = candidate.find("\n###")
        if cut != -1:
            candidate = candidate[:cut]
        return candidate.rstrip("\n")

    def identify(self) -> str:
        return "mock-echo"


class ScriptedBackend:
    """Replays responses in order; raises once the script runs out."""

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._cursor = 0
        self.calls: list[str] = []

    def complete(self, prompt, model, temperature, max_tokens, stop) -> str:
        self.calls.append(prompt)
        if self._cursor >= len(self._responses):
            raise BackendError(
                [Diagnostic(E_BACKEND, "scripted backend has no responses left")]
            )
        response = self._responses[self._cursor]
        self._cursor += 1
        return response

    def identify(self) -> str:
        return "scripted"


def scripted_from_file(path) -> ScriptedBackend:
    """Load a JSON array of responses for the scripted backend."""
    try:
        with open(path, encoding="utf-8") as fh:
            responses = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BackendError(
            [Diagnostic(E_BACKEND, f"cannot load scripted responses: {exc}")]
        ) from exc
    if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
        raise BackendError(
            [Diagnostic(E_BACKEND, "scripted responses must be a JSON array of strings")]
        )
    return ScriptedBackend(responses)


class RemoteBackend:
    """Completions-style HTTP backend."""

    def __init__(
        self,
        url: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.url = url
        self._headers = {}
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, prompt, model, temperature, max_tokens, stop) -> str:
        payload = {
            "model": model,
            "prompt": prompt,
            "temperature": temperature,
            "max_tokens": max_tokens,
            "stop": list(stop),
        }
        try:
            response = self._client.post(self.url, json=payload, headers=self._headers)
        except httpx.HTTPError as exc:
            raise BackendError(
                [Diagnostic(E_BACKEND, f"backend transport failure: {exc}")]
            ) from exc
        if response.status_code != 200:
            raise BackendError(
                [
                    Diagnostic(
                        E_BACKEND,
                        f"backend returned HTTP {response.status_code}: "
                        f"{response.text[:200]}",
                    )
                ]
            )
        try:
            data = response.json()
            text = data["choices"][0]["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                [Diagnostic(E_BACKEND, f"backend reply is not a completion: {exc}")]
            ) from exc
        if not isinstance(text, str):
            raise BackendError(
                [Diagnostic(E_BACKEND, "backend reply text is not a string")]
            )
        return text

    def identify(self) -> str:
        return f"remote({self.url})"

    def close(self) -> None:
        self._client.close()


def remote_from_env(url: str, api_key_env: str, timeout: float = 60.0) -> RemoteBackend:
    """Build a RemoteBackend reading the key from the named env variable."""
    api_key = os.environ.get(api_key_env)
    if not api_key:
        raise BackendError(
            [Diagnostic(E_BACKEND, f"environment variable {api_key_env!r} is not set")]
        )
    return RemoteBackend(url=url, api_key=api_key, timeout=timeout)
