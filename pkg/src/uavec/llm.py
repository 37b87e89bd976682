"""Minimal OpenAI-compatible chat-completion client for the macro-scheduler.

The request pins temperature to 0 so repeated calls over identical prompts
are as deterministic as the endpoint allows.  Any transport or HTTP failure
raises EndpointError; the caller falls back to the rule engine.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import requests

log = logging.getLogger(__name__)

AUTH_TOKEN_ENV = "UAVEC_LLM_API_KEY"


class EndpointError(RuntimeError):
    """The chat endpoint could not produce a usable response."""


@dataclass
class LlmEndpoint:
    base_url: str
    model: str
    timeout_s: float = 10.0
    max_attempts: int = 2

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        if not self.base_url:
            raise EndpointError("no endpoint configured")
        url = self.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(AUTH_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                resp = requests.post(url, json=payload, headers=headers,
                                     timeout=self.timeout_s)
                if resp.status_code >= 400:
                    raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                data = resp.json()
                choices = data.get("choices") or []
                if not choices:
                    raise EndpointError("response carried no choices")
                content = (choices[0].get("message") or {}).get("content")
                if content is None:
                    raise EndpointError("first choice carried no content")
                return str(content)
            except (requests.RequestException, ValueError, EndpointError) as exc:
                last_error = exc
                log.warning("llm attempt %d/%d failed: %s",
                            attempt + 1, self.max_attempts, exc)
        raise EndpointError(str(last_error))
