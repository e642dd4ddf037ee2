"""Judges: everything that can decide which of two texts is better.

A judge is anything with ``compare(request) -> Verdict``. The package ships:

* :class:`OracleJudge` — synthetic ground truth driven by per-player latent
  qualities; used to validate tournaments against a known ranking.
* :class:`ScoreJudge` — deterministic judge backed by a text-scoring function.
* :class:`ScriptedJudge` — replays a fixed verdict sequence (test harness).
* :class:`RemoteJudge` — HTTP client for an external judge service.
* :func:`binary_adapter` — wraps any judge so it never answers "tie".

Verdicts always carry a probability triple over (better, worse, tie) that
sums to one with the label at the argmax. Stochastic judges derive all
randomness from their seed plus the request's match seed, never from shared
mutable state, so they are safe under concurrent calls.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Optional, Protocol, Sequence, Tuple

import requests

from .seeding import spawn

LABELS = ("better", "worse", "tie")
_OPPOSITE = {"better": "worse", "worse": "better", "tie": "tie"}

PROB_TOLERANCE = 1e-6


class JudgeError(Exception):
    """Base class for judge failures."""


class JudgeUnavailableError(JudgeError):
    """The judge cannot be reached (transport failure, retries exhausted)."""


class ProtocolViolationError(JudgeError):
    """The judge answered, but the response violates the wire contract."""


class UnknownPlayerError(JudgeError):
    """An oracle judge was asked about a player without a latent quality."""


class ScriptExhaustedError(JudgeError):
    """A scripted judge ran out of verdicts to replay."""


@dataclass(frozen=True)
class ComparisonRequest:
    """Two texts sharing a context, to be ranked against each other.

    ``first_player``/``second_player`` and ``match_seed`` are harness-side
    metadata (consumed by synthetic judges); they are not part of the wire
    format.
    """

    context: str
    first: str
    second: str
    allow_tie: bool = True
    first_player: Optional[str] = None
    second_player: Optional[str] = None
    match_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.first.strip() or not self.second.strip():
            raise ValueError("compared texts must be non-empty")

    def swapped(self) -> "ComparisonRequest":
        return replace(
            self,
            first=self.second,
            second=self.first,
            first_player=self.second_player,
            second_player=self.first_player,
        )


@dataclass(frozen=True)
class Verdict:
    """A judge's answer: label plus probabilities over (better, worse, tie)."""

    label: str
    probs: Tuple[float, float, float]

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if len(self.probs) != 3:
            raise ValueError("probs must be a (better, worse, tie) triple")
        if any(not (math.isfinite(p) and -PROB_TOLERANCE <= p <= 1 + PROB_TOLERANCE) for p in self.probs):
            raise ValueError(f"probabilities out of range: {self.probs}")
        if abs(sum(self.probs) - 1.0) > PROB_TOLERANCE:
            raise ValueError(f"probabilities must sum to 1, got {sum(self.probs)}")
        if self.probs[LABELS.index(self.label)] < max(self.probs) - PROB_TOLERANCE:
            raise ValueError(f"label {self.label!r} is not the argmax of {self.probs}")

    @property
    def p_better(self) -> float:
        return self.probs[0]

    @property
    def p_worse(self) -> float:
        return self.probs[1]

    @property
    def p_tie(self) -> float:
        return self.probs[2]

    def swapped(self) -> "Verdict":
        """The verdict as seen from the other side of the pair."""
        return Verdict(_OPPOSITE[self.label], (self.probs[1], self.probs[0], self.probs[2]))

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "probs": {"better": self.probs[0], "worse": self.probs[1], "tie": self.probs[2]},
        }


def one_hot(label: str) -> Verdict:
    probs = tuple(1.0 if name == label else 0.0 for name in LABELS)
    return Verdict(label, probs)  # type: ignore[arg-type]


class Judge(Protocol):
    def compare(self, request: ComparisonRequest) -> Verdict: ...


def force_decisive(verdict: Verdict, request: ComparisonRequest) -> Verdict:
    """Strip the tie option: redistribute tie mass proportionally.

    Exact fifty-fifty results are broken by the higher decisive probability,
    then by lexicographic order of the compared texts.
    """
    p_better, p_worse, _ = verdict.probs
    mass = p_better + p_worse
    if mass <= 0.0:
        p_better = p_worse = 0.5
    else:
        p_better, p_worse = p_better / mass, p_worse / mass
    if p_better > p_worse:
        label = "better"
    elif p_worse > p_better:
        label = "worse"
    else:
        label = "better" if request.first <= request.second else "worse"
    return Verdict(label, (p_better, p_worse, 0.0))


@dataclass(frozen=True)
class OracleJudgeConfig:
    """Synthetic ground truth: latent player qualities plus noise knobs."""

    latent_quality: Mapping[str, float]
    sample_noise: float = 0.0
    tie_band: float = 0.0
    flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_noise < 0:
            raise ValueError("sample_noise must be >= 0")
        if self.tie_band < 0:
            raise ValueError("tie_band must be >= 0")
        if not 0.0 <= self.flip_prob < 0.5:
            raise ValueError("flip_prob must be in [0, 0.5): the judge must beat chance")


class OracleJudge:
    """Judges by latent player quality, not by reading the texts.

    Per-sample jitter is keyed by (seed, match_seed, player), and the flip
    draw by (seed, match_seed, unordered pair), so a swapped request yields
    the exactly mirrored verdict.
    """

    def __init__(self, config: OracleJudgeConfig) -> None:
        self.config = config

    def compare(self, request: ComparisonRequest) -> Verdict:
        cfg = self.config
        a, b = request.first_player, request.second_player
        if a is None or b is None:
            raise UnknownPlayerError("oracle judge needs player ids on the request")
        for player in (a, b):
            if player not in cfg.latent_quality:
                raise UnknownPlayerError(f"no latent quality for player {player!r}")
        match_seed = request.match_seed if request.match_seed is not None else 0

        qa = cfg.latent_quality[a]
        qb = cfg.latent_quality[b]
        if cfg.sample_noise > 0:
            qa += spawn(cfg.seed, "jitter", match_seed, a).gauss(0.0, cfg.sample_noise)
            qb += spawn(cfg.seed, "jitter", match_seed, b).gauss(0.0, cfg.sample_noise)

        diff = qa - qb
        # An exact dead heat has no defensible direction, band or not.
        if abs(diff) < cfg.tie_band or diff == 0.0:
            label = "tie"
        else:
            label = "better" if diff > 0 else "worse"
            if cfg.flip_prob > 0:
                flip_rng = spawn(cfg.seed, "flip", match_seed, tuple(sorted((a, b))))
                if flip_rng.random() < cfg.flip_prob:
                    label = _OPPOSITE[label]

        verdict = self._calibrated(label)
        if not request.allow_tie:
            return force_decisive(verdict, request)
        return verdict

    def _calibrated(self, label: str) -> Verdict:
        eps = self.config.flip_prob
        if eps == 0.0 and self.config.sample_noise == 0.0:
            return one_hot(label)
        if label == "tie":
            return Verdict("tie", (eps / 2, eps / 2, 1.0 - eps))
        if label == "better":
            return Verdict("better", (1.0 - eps, eps, 0.0))
        return Verdict("worse", (eps, 1.0 - eps, 0.0))


class ScoreJudge:
    """Deterministic judge backed by a text-scoring function.

    ``score_fn(context, text)`` must be a pure function; equal scores (always
    the case for identical texts) yield a tie.
    """

    def __init__(self, score_fn: Callable[[str, str], float], tie_band: float = 0.0) -> None:
        if tie_band < 0:
            raise ValueError("tie_band must be >= 0")
        self.score_fn = score_fn
        self.tie_band = tie_band

    def compare(self, request: ComparisonRequest) -> Verdict:
        diff = self.score_fn(request.context, request.first) - self.score_fn(
            request.context, request.second
        )
        if abs(diff) <= self.tie_band:
            verdict = one_hot("tie")
        else:
            verdict = one_hot("better" if diff > 0 else "worse")
        if not request.allow_tie:
            return force_decisive(verdict, request)
        return verdict


class ScriptedJudge:
    """Replays a fixed label sequence; running past the end is an error."""

    def __init__(self, labels: Sequence[str]) -> None:
        if not labels:
            raise ValueError("script must be non-empty")
        for label in labels:
            if label not in LABELS:
                raise ValueError(f"unknown scripted label {label!r}")
        self._labels = list(labels)
        self._cursor = 0
        self._lock = threading.Lock()

    def compare(self, request: ComparisonRequest) -> Verdict:
        with self._lock:
            if self._cursor >= len(self._labels):
                raise ScriptExhaustedError(
                    f"script exhausted after {len(self._labels)} verdicts"
                )
            label = self._labels[self._cursor]
            self._cursor += 1
        verdict = one_hot(label)
        if not request.allow_tie:
            return force_decisive(verdict, request)
        return verdict


@dataclass
class _BinaryJudge:
    inner: Judge

    def compare(self, request: ComparisonRequest) -> Verdict:
        return force_decisive(self.inner.compare(request), request)


def binary_adapter(judge: Judge) -> Judge:
    """A judge that never answers "tie" (the no-tie ablation)."""
    return _BinaryJudge(judge)


def parse_verdict_payload(payload: object, allow_tie: bool = True) -> Verdict:
    """Validate a wire payload ``{"label": ..., "probs": {...}}`` into a Verdict."""
    if not isinstance(payload, dict):
        raise ProtocolViolationError(f"verdict payload must be an object, got {type(payload).__name__}")
    label = payload.get("label")
    probs = payload.get("probs")
    if not isinstance(probs, dict):
        raise ProtocolViolationError("verdict payload missing 'probs' object")
    try:
        triple = tuple(float(probs[name]) for name in LABELS)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolViolationError(f"malformed probability triple: {probs!r}") from exc
    try:
        verdict = Verdict(str(label), triple)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ProtocolViolationError(str(exc)) from exc
    if not allow_tie and verdict.p_tie != 0.0:
        raise ProtocolViolationError(
            f"tie probability must be 0 when allow_tie is false, got {verdict.p_tie}"
        )
    return verdict


def _wire_item(request: ComparisonRequest) -> dict:
    return {
        "context": request.context,
        "first": request.first,
        "second": request.second,
        "allow_tie": request.allow_tie,
    }


class RemoteJudge:
    """HTTP client for the judge wire protocol.

    POST /compare with one request, POST /compare_batch with many (results in
    input order), GET /health. Transport failures are retried ``retries``
    times before raising JudgeUnavailableError; any non-200 answer or invalid
    body raises ProtocolViolationError.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 2,
        backoff: float = 0.1,
        session: Optional[requests.Session] = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()

    def _post(self, path: str, body: dict) -> object:
        last_error: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            try:
                response = self._session.post(
                    self.endpoint + path, json=body, timeout=self.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                if attempt < self.retries and self.backoff > 0:
                    time.sleep(self.backoff * (attempt + 1))
                continue
            if response.status_code != 200:
                raise ProtocolViolationError(
                    f"{path} returned HTTP {response.status_code}: {response.text[:200]}"
                )
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolViolationError(f"{path} returned non-JSON body") from exc
        raise JudgeUnavailableError(
            f"judge at {self.endpoint} unreachable after {self.retries + 1} attempts: {last_error}"
        )

    def compare(self, request: ComparisonRequest) -> Verdict:
        payload = self._post("/compare", _wire_item(request))
        return parse_verdict_payload(payload, allow_tie=request.allow_tie)

    def compare_batch(self, requests_: Sequence[ComparisonRequest]) -> list[Verdict]:
        payload = self._post("/compare_batch", {"items": [_wire_item(r) for r in requests_]})
        if not isinstance(payload, dict) or not isinstance(payload.get("results"), list):
            raise ProtocolViolationError("compare_batch must return {'results': [...]}")
        results = payload["results"]
        if len(results) != len(requests_):
            raise ProtocolViolationError(
                f"compare_batch returned {len(results)} results for {len(requests_)} items"
            )
        return [
            parse_verdict_payload(item, allow_tie=req.allow_tie)
            for req, item in zip(requests_, results)
        ]

    def health(self) -> bool:
        try:
            response = self._session.get(self.endpoint + "/health", timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise JudgeUnavailableError(f"health check failed: {exc}") from exc
        if response.status_code != 200:
            return False
        try:
            return response.json().get("status") == "ok"
        except ValueError:
            return False


def check_remote_conformance(endpoint: str, timeout: float = 10.0) -> list[str]:
    """Exercise a served judge against the wire contract.

    Returns a list of human-readable failures (empty means conformant).
    Checks: health, verdict simplex validity, antisymmetry of a swapped
    request, batch ordering, and allow_tie=false behavior.
    """
    failures: list[str] = []
    judge = RemoteJudge(endpoint, timeout=timeout, retries=1)

    try:
        if not judge.health():
            failures.append("health: /health did not answer {'status': 'ok'}")
    except JudgeError as exc:
        return [f"health: {exc}"]

    pair = ComparisonRequest(
        context="the weather turned cold overnight",
        first="I grabbed a coat before heading out into the frost.",
        second="coat frost out the grabbed heading I before into.",
    )
    try:
        verdict = judge.compare(pair)
        mirrored = judge.compare(pair.swapped())
        expected = verdict.swapped()
        if any(abs(p - q) > 1e-6 for p, q in zip(mirrored.probs, expected.probs)):
            failures.append(
                f"antisymmetry: swapped request probs {mirrored.probs} != mirrored {expected.probs}"
            )
        margin = max(verdict.probs) - sorted(verdict.probs)[-2]
        if margin > 1e-9 and mirrored.label != _OPPOSITE[verdict.label]:
            failures.append(
                f"antisymmetry: labels {verdict.label}/{mirrored.label} are not swapped"
            )
    except JudgeError as exc:
        failures.append(f"compare: {exc}")

    batch = [
        pair,
        ComparisonRequest(context="", first="A short reply.", second="A short reply."),
        pair.swapped(),
    ]
    try:
        results = judge.compare_batch(batch)
        solo = [judge.compare(r) for r in batch]
        for i, (from_batch, alone) in enumerate(zip(results, solo)):
            if any(abs(p - q) > 1e-6 for p, q in zip(from_batch.probs, alone.probs)):
                failures.append(
                    f"batch-order: item {i} differs between /compare_batch and /compare"
                )
    except JudgeError as exc:
        failures.append(f"compare_batch: {exc}")

    try:
        no_tie = judge.compare(replace(pair, allow_tie=False))
        if no_tie.p_tie != 0.0:
            failures.append(f"allow_tie=false: p_tie={no_tie.p_tie} instead of 0")
    except JudgeError as exc:
        failures.append(f"allow_tie=false: {exc}")

    return failures
