"""Chat-completions backend for any OpenAI-compatible endpoint."""

from __future__ import annotations

import logging
import os
import time
from pathlib import Path
from typing import Optional

import httpx

from .base import PlannerBackend, PlanRequest
from .errors import TransportError
from .replay import fixture_path

log = logging.getLogger(__name__)

ENV_BASE = "T3_API_BASE"
ENV_KEY = "T3_API_KEY"
ENV_MODEL = "T3_MODEL"
_RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class LlmBackend(PlannerBackend):
    """POSTs the prompt to ``{base_url}/chat/completions``.

    Transport failures and retryable HTTP statuses are retried ``retries``
    times with exponential backoff, then raised as :class:`TransportError`.
    With ``record_dir`` every reply is also saved in replay layout.
    """

    name = "llm"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        temperature: float = 0.0,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        record_dir=None,
        client: Optional[httpx.Client] = None,
        sleep=time.sleep,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self.backoff = backoff
        self.record_dir = Path(record_dir) if record_dir else None
        self.sleep = sleep
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.client = client or httpx.Client(timeout=timeout)
        self.headers = headers

    @classmethod
    def from_env(cls, env=None, **kwargs) -> "LlmBackend":
        env = os.environ if env is None else env
        missing = [k for k in (ENV_BASE, ENV_MODEL) if not env.get(k)]
        if missing:
            raise ValueError(f"set {' and '.join(missing)} to use the llm backend")
        return cls(env[ENV_BASE], env[ENV_MODEL], env.get(ENV_KEY, ""), **kwargs)

    def _post(self, payload: dict) -> dict:
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.url, json=payload, headers=self.headers)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("request failed (%s), attempt %d", last, attempt + 1)
                continue
            if resp.status_code in _RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("request failed (%s), attempt %d", last, attempt + 1)
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError:
                raise TransportError("response is not JSON") from None
        raise TransportError(f"giving up after {self.retries + 1} attempts: {last}")

    def generate(self, req: PlanRequest, prompt) -> str:
        payload = {"model": self.model, "messages": prompt.messages(), "temperature": self.temperature}
        doc = self._post(payload)
        try:
            text = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("response has no choices[0].message.content") from None
        if not isinstance(text, str):
            raise TransportError("message content is not text")
        if self.record_dir is not None:
            path = fixture_path(self.record_dir, req.task_id, req.stage, req.attempt)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(text.encode("utf-8"))
        return text
