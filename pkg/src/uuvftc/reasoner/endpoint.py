"""HTTP client for an external completion endpoint."""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import httpx

from .prompt import PromptContext


class RetryableReasonerError(RuntimeError):
    """Timeout, transport failure or unusable response; counts against n_max."""


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    timeout: float = 2.0
    token_env: str = "UUVFTC_ENDPOINT_TOKEN"
    model: str | None = None


@dataclass(frozen=True)
class EndpointReply:
    text: str
    latency: float
    request_body: str
    response_body: str


def _extract(body) -> str:
    if isinstance(body, dict):
        if isinstance(body.get("text"), str):
            return body["text"]
        if isinstance(body.get("completion"), str):
            return body["completion"]
        choices = body.get("choices")
        if isinstance(choices, list) and choices:
            c = choices[0]
            if isinstance(c.get("text"), str):
                return c["text"]
            msg = c.get("message") or {}
            if isinstance(msg.get("content"), str):
                return msg["content"]
    raise RetryableReasonerError("endpoint response has no completion text")


def llm_generate(prompt: PromptContext, cfg: EndpointConfig,
                 client: httpx.Client | None = None) -> EndpointReply:
    """POST the prompt and return the raw completion with its latency."""
    payload = {"prompt": prompt.text}
    if cfg.model:
        payload["model"] = cfg.model
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(cfg.token_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    request_body = json.dumps(payload, sort_keys=True)
    t0 = time.perf_counter()
    try:
        if client is None:
            with httpx.Client(timeout=cfg.timeout) as c:
                resp = c.post(cfg.url, content=request_body, headers=headers)
        else:
            resp = client.post(cfg.url, content=request_body, headers=headers, timeout=cfg.timeout)
        resp.raise_for_status()
        body = resp.json()
    except httpx.TimeoutException as exc:
        raise RetryableReasonerError(f"endpoint timed out after {cfg.timeout} s") from exc
    except (httpx.HTTPError, ValueError) as exc:
        raise RetryableReasonerError(f"endpoint call failed: {exc}") from exc
    latency = time.perf_counter() - t0
    return EndpointReply(_extract(body), latency, request_body, resp.text)


class EndpointReasoner:
    mode = "endpoint"

    def __init__(self, cfg: EndpointConfig):
        self.cfg = cfg
        self.log: list[EndpointReply] = []

    def generate(self, prompt: PromptContext) -> str:
        reply = llm_generate(prompt, self.cfg)
        self.log.append(reply)
        return reply.text
