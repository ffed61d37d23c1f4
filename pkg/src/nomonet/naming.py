"""Dimension naming: weighted indicator sampling plus a pluggable text client.

Each dimension gets a construct name, a concise definition, and three
representative example indicators. The client is either a deterministic mock
(for tests and offline builds) or a remote chat-style endpoint whose response
must contain a fenced JSON object with keys name/definition/examples.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Protocol, Sequence, TextIO, TypeVar

import httpx
import numpy as np

from .errors import NamingFailure, ProviderError

T = TypeVar("T")

PROMPT_ASSET = "name_dimension_v1.txt"
_FENCED_JSON = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)


@dataclass(frozen=True)
class SampleResult:
    items: tuple
    uniform_fallback: bool


def weighted_sample(
    indicator_loadings: Sequence[tuple[T, float]],
    max_n: int = 1000,
    seed: int = 0,
) -> SampleResult:
    """Sample distinct items with probability increasing in absolute loading.

    Weighted sampling without replacement via exponential order statistics:
    item i draws key Exp(1)/|loading_i| and the smallest keys win, so the
    first-draw inclusion probability is w_i / sum(w). The returned sample is
    ordered by |loading| descending. If every loading is zero the sample is
    uniform and flagged.
    """
    if not indicator_loadings:
        raise ValueError("indicator_loadings must be nonempty")
    weights = np.array([abs(w) for _, w in indicator_loadings], dtype=np.float64)
    if not np.all(np.isfinite(weights)):
        raise ValueError("loadings must be finite")
    rng = np.random.default_rng(seed)
    n = min(max_n, len(indicator_loadings))

    uniform = bool(np.all(weights == 0.0))
    if uniform:
        keys = rng.exponential(size=len(weights))
    else:
        # Zero-weight items sort after every positive-weight one.
        keys = np.where(
            weights > 0,
            rng.exponential(size=len(weights)) / np.where(weights > 0, weights, 1.0),
            np.inf,
        )
    chosen = np.argsort(keys, kind="stable")[:n]
    ordered = sorted(chosen, key=lambda i: (-weights[i], i))
    return SampleResult(
        items=tuple(indicator_loadings[i][0] for i in ordered),
        uniform_fallback=uniform,
    )


@dataclass(frozen=True)
class NamingRequest:
    dimension_index: int
    items: tuple[tuple[str, str], ...]  # (indicator text, original label)
    avoid_names: tuple[str, ...]
    n_examples: int
    prompt: str


@dataclass(frozen=True)
class NameProposal:
    name: str
    definition: str
    examples: tuple[str, ...]


class NamingClient(Protocol):
    def complete(self, request: NamingRequest) -> str: ...


def _prompt_template() -> str:
    return (
        resources.files("nomonet.prompts").joinpath(PROMPT_ASSET).read_text("utf-8")
    )


def render_prompt(
    index: int,
    items: Sequence[tuple[str, str]],
    avoid_names: Sequence[str],
    n_examples: int,
) -> str:
    lines = "\n".join(
        f'- "{text}" (original label: {label or "none"})' for text, label in items
    )
    avoid = (
        " Do not reuse any of these names: " + "; ".join(avoid_names) + "."
        if avoid_names
        else ""
    )
    template = _prompt_template()
    return (
        template.replace("{index}", str(index))
        .replace("{items}", lines)
        .replace("{avoid}", avoid)
        .replace("{n_examples}", str(n_examples))
    )


class MockNamingClient:
    """Deterministic offline client.

    The proposed name is the most common original label in the sample
    (title-cased; ties break lexicographically). When asked to avoid names,
    it walks the configured ``alternates`` for that name; with no alternates
    it stubbornly repeats itself, which exercises the caller's suffix
    fallback.
    """

    def __init__(self, alternates: Optional[dict[str, Sequence[str]]] = None):
        self.alternates = alternates or {}

    def _base_name(self, request: NamingRequest) -> str:
        labels = [label for _, label in request.items if label]
        if not labels:
            return f"Dimension {request.dimension_index} Content"
        counts = Counter(labels)
        best = max(counts.values())
        modal = min(label for label, count in counts.items() if count == best)
        return modal.title()

    def complete(self, request: NamingRequest) -> str:
        name = self._base_name(request)
        avoided = {a.casefold() for a in request.avoid_names}
        if name.casefold() in avoided:
            for alternate in self.alternates.get(name, ()):  # deterministic walk
                if alternate.casefold() not in avoided:
                    name = alternate
                    break
        definition = f"Indicators describing {name.lower()}."
        examples = [text for text, _ in request.items[: request.n_examples]]
        doc = {"name": name, "definition": definition, "examples": examples}
        return "```json\n" + json.dumps(doc) + "\n```"


class RemoteNamingClient:
    """Chat-style HTTP client: POST {model, messages}, read text content back."""

    def __init__(self, endpoint: str, model: str = "default", timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout

    def complete(self, request: NamingRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        try:
            response = httpx.post(self.endpoint, json=payload, timeout=self.timeout)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ProviderError(f"naming endpoint failed: {exc}") from exc
        try:
            body = response.json()
            if isinstance(body, dict) and "content" in body:
                return str(body["content"])
        except ValueError:
            pass
        return response.text


def _parse_response(raw: str, sample_texts: set[str], n_examples: int) -> NameProposal:
    match = _FENCED_JSON.search(raw)
    if not match:
        raise ValueError("no fenced JSON object in response")
    try:
        doc = json.loads(match.group(1))
    except json.JSONDecodeError as exc:
        raise ValueError(f"fenced block is not valid JSON: {exc}") from exc
    name = str(doc.get("name") or "").strip()
    definition = str(doc.get("definition") or "").strip()
    examples = doc.get("examples")
    if not name:
        raise ValueError("empty name")
    if not definition:
        raise ValueError("empty definition")
    if not isinstance(examples, list) or len(examples) != n_examples:
        raise ValueError(f"expected exactly {n_examples} examples")
    for example in examples:
        if example not in sample_texts:
            raise ValueError(f"example not drawn from the sample: {example!r}")
    return NameProposal(name=name, definition=definition, examples=tuple(examples))


def name_dimension(
    client: NamingClient,
    sample: Sequence[str],
    original_labels: Sequence[str | None] | None = None,
    dimension_index: int = 1,
    avoid_names: Sequence[str] = (),
    retries: int = 3,
    transcript: Optional[TextIO] = None,
) -> NameProposal:
    """Ask the client to name one dimension from its sampled indicators.

    Responses must parse into nonempty name/definition plus examples that are
    members of the sample; invalid responses are retried up to ``retries``
    times before NamingFailure.
    """
    if not sample:
        raise ValueError("sample must be nonempty")
    labels = list(original_labels) if original_labels else [""] * len(sample)
    items = tuple((text, label or "") for text, label in zip(sample, labels))
    n_examples = min(3, len(sample))
    last_error = "no attempt made"
    for attempt in range(1 + retries):
        request = NamingRequest(
            dimension_index=dimension_index,
            items=items,
            avoid_names=tuple(avoid_names),
            n_examples=n_examples,
            prompt=render_prompt(dimension_index, items, avoid_names, n_examples),
        )
        raw = client.complete(request)
        try:
            proposal = _parse_response(raw, set(sample), n_examples)
            _log(transcript, dimension_index, attempt, raw, accepted=True)
            return proposal
        except ValueError as exc:
            last_error = str(exc)
            _log(transcript, dimension_index, attempt, raw, accepted=False, error=last_error)
    raise NamingFailure(
        f"dimension {dimension_index}: no valid response after {retries} retries "
        f"(last error: {last_error})"
    )


def _log(transcript, dimension, attempt, response, accepted, error=None):
    if transcript is None:
        return
    entry = {
        "dimension": dimension,
        "attempt": attempt,
        "response": response,
        "accepted": accepted,
    }
    if error:
        entry["error"] = error
    transcript.write(json.dumps(entry) + "\n")


@dataclass(frozen=True)
class DimensionNaming:
    """One dimension's naming context plus its current proposal."""

    index: int
    sample_texts: tuple[str, ...]
    sample_labels: tuple[str, ...]
    proposal: NameProposal


def ensure_unique(
    namings: Sequence[DimensionNaming],
    client: NamingClient,
    max_attempts: int = 5,
    transcript: Optional[TextIO] = None,
) -> list[NameProposal]:
    """Make dimension names pairwise distinct (case-insensitive).

    Duplicates are re-prompted with an avoid list up to ``max_attempts``
    times; whatever still collides gets a deterministic " (Dim {index})"
    suffix. The first dimension (lowest index) always keeps its name.
    """
    finals: list[NameProposal] = [n.proposal for n in namings]
    taken: dict[str, int] = {}
    for pos, naming in enumerate(namings):
        proposal = finals[pos]
        key = proposal.name.casefold()
        if key not in taken:
            taken[key] = pos
            continue
        resolved = False
        for _ in range(max_attempts):
            try:
                retry = name_dimension(
                    client,
                    naming.sample_texts,
                    naming.sample_labels,
                    dimension_index=naming.index,
                    avoid_names=tuple(finals[i].name for i in taken.values()),
                    transcript=transcript,
                )
            except NamingFailure:
                break
            if retry.name.casefold() not in taken:
                proposal = retry
                resolved = True
                break
        if not resolved:
            suffixed = f"{proposal.name} (Dim {naming.index})"
            bump = 2
            while suffixed.casefold() in taken:
                suffixed = f"{proposal.name} (Dim {naming.index}, {bump})"
                bump += 1
            proposal = NameProposal(
                name=suffixed,
                definition=proposal.definition,
                examples=proposal.examples,
            )
        finals[pos] = proposal
        taken[proposal.name.casefold()] = pos
    return finals
