"""The search loop: random warmup, then fit-forest / score-candidates-by-LCB /
evaluate / record, repeated until the evaluation or wall-clock budget runs out.

Minimization is the fixed orientation for every metric. The sampler may
propose repeats; deduplication lives here: a configuration is evaluated at
most once per search, failed trials stay marked as evaluated but never enter
the surrogate's training set, and when every configuration has been tried the
loop stops with ``stop_reason == "space_exhausted"``.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .evaluate import Evaluator, TrialRecord
from .forest import ForestParams, Prediction, SurrogateModel, fit
from .space import Configuration, ParamSpace

# Rejection-sampling attempts before falling back to a scan of the whole space.
_REJECTION_ATTEMPTS = 2000


class SpaceExhausted(Exception):
    """Every configuration of the space has been evaluated."""


class DuplicateTellError(ValueError):
    """A configuration was reported twice."""


@dataclass(frozen=True)
class AcquisitionSettings:
    """Exploration/exploitation knobs: score = mean - kappa*std, lower is better."""

    kappa: float = 1.96
    n_initial_random: int = 10
    n_candidates_per_ask: int = 512

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.n_initial_random < 1 or self.n_candidates_per_ask < 1:
            raise ValueError("n_initial_random and n_candidates_per_ask must be >= 1")


@dataclass(frozen=True)
class SearchBudget:
    max_evals: int | None = None
    wall_clock_limit_s: float | None = None

    def __post_init__(self) -> None:
        if self.max_evals is None and self.wall_clock_limit_s is None:
            raise ValueError("at least one of max_evals and wall_clock_limit_s must be set")
        if self.max_evals is not None and self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.wall_clock_limit_s is not None and self.wall_clock_limit_s <= 0:
            raise ValueError("wall_clock_limit_s must be positive")


@dataclass
class SearchState:
    """Everything the loop owns: what was evaluated, the history, the RNG, the model."""

    space: ParamSpace
    rng: random.Random
    evaluated: dict[tuple[str, ...], float | None] = field(default_factory=dict)
    history: list[TrialRecord] = field(default_factory=list)
    train_points: list[tuple[tuple[float, ...], float]] = field(default_factory=list)
    model: SurrogateModel | None = None
    stop_reason: str | None = None

    def best_record(self) -> TrialRecord | None:
        found = None
        for r in self.history:
            if r.status == "ok" and (found is None or r.value < found.value):
                found = r
        return found


def lcb(p: Prediction, kappa: float) -> float:
    """Lower confidence bound of a prediction: mean - kappa*std."""
    return p.mean - kappa * p.std


def argmin_lcb(predictions: list[Prediction], kappa: float) -> int:
    """Index of the lowest-LCB prediction; ties keep the earliest entry."""
    best_i = 0
    best_score = lcb(predictions[0], kappa)
    for i, p in enumerate(predictions[1:], start=1):
        score = lcb(p, kappa)
        if score < best_score:
            best_i, best_score = i, score
    return best_i


def _random_unevaluated(state: SearchState) -> Configuration:
    """A uniformly random not-yet-evaluated configuration.

    Rejection-sample a bounded number of times; if the evaluated set is so
    dense that rejection keeps missing, reservoir-sample the unevaluated
    remainder from a full enumeration scan. Raises SpaceExhausted when
    nothing is left.
    """
    space = state.space
    if len(state.evaluated) >= space.cardinality():
        raise SpaceExhausted
    for _ in range(_REJECTION_ATTEMPTS):
        config = space.sample(state.rng)
        if space.key(config) not in state.evaluated:
            return config
    chosen = None
    seen = 0
    for config in space.enumerate_configs(cap=space.cardinality()):
        if space.key(config) in state.evaluated:
            continue
        seen += 1
        if state.rng.random() < 1.0 / seen:
            chosen = config
    if chosen is None:
        raise SpaceExhausted
    return chosen


def ask(
    state: SearchState,
    acq: AcquisitionSettings = AcquisitionSettings(),
    forest_params: ForestParams = ForestParams(),
) -> Configuration:
    """Pick the next configuration to evaluate.

    Warmup (fewer evaluations than ``n_initial_random``, or no successful
    trial to learn from yet) returns a random unevaluated configuration.
    Afterwards the forest is fit (or reused) on all successful trials, a
    slate of random candidates is drawn, already-evaluated ones are dropped,
    and the lowest-LCB survivor wins with ties going to the earliest draw.
    An all-stale slate falls back to random rejection sampling.
    """
    if len(state.evaluated) < acq.n_initial_random or not state.train_points:
        return _random_unevaluated(state)
    if state.model is None:
        state.model = fit(state.train_points, forest_params)
    candidates = [state.space.sample(state.rng) for _ in range(acq.n_candidates_per_ask)]
    fresh = [c for c in candidates if state.space.key(c) not in state.evaluated]
    if not fresh:
        return _random_unevaluated(state)
    means, stds = state.model.predict_batch([state.space.encode(c) for c in fresh])
    preds = [Prediction(float(m), float(s)) for m, s in zip(means, stds)]
    return fresh[argmin_lcb(preds, acq.kappa)]


def tell(state: SearchState, config: Configuration, record: TrialRecord) -> None:
    """Record a finished trial. Failed trials are remembered (never re-proposed)
    but stay out of the surrogate's training data."""
    key = state.space.key(config)
    if key in state.evaluated:
        raise DuplicateTellError(f"configuration already told: {config}")
    state.history.append(record)
    state.evaluated[key] = record.value
    if record.status == "ok":
        state.train_points.append((state.space.encode(config), record.value))
        state.model = None  # refit on next ask


def run_search(
    space: ParamSpace,
    budget: SearchBudget,
    acq: AcquisitionSettings,
    forest_params: ForestParams,
    evaluator: Evaluator,
    seed: int,
    on_record=None,
    metric_kind: str = "runtime_s",
) -> SearchState:
    """Serial ask -> evaluate -> tell loop.

    Returns the final state with ``stop_reason`` set to one of "max_evals",
    "wall_clock", or "space_exhausted". With a deterministic evaluator the
    whole trajectory is a function of (space, seed, budget). An evaluator
    that raises (hard fault outside its contract) is recorded as a failed
    trial before the exception propagates.
    """
    state = SearchState(space=space, rng=random.Random(seed))
    start = time.monotonic()
    while True:
        if budget.max_evals is not None and len(state.history) >= budget.max_evals:
            state.stop_reason = "max_evals"
            break
        if (
            budget.wall_clock_limit_s is not None
            and time.monotonic() - start >= budget.wall_clock_limit_s
        ):
            state.stop_reason = "wall_clock"
            break
        try:
            config = ask(state, acq, forest_params)
        except SpaceExhausted:
            state.stop_reason = "space_exhausted"
            break
        index = len(state.history)
        try:
            record = evaluator(config, index)
        except Exception:
            failed = TrialRecord(
                trial_index=index,
                configuration=dict(config),
                metric_kind=metric_kind,
                value=None,
                status="run_failed",
                started_at=time.time(),
            )
            tell(state, config, failed)
            if on_record is not None:
                on_record(failed)
            raise
        tell(state, config, record)
        if on_record is not None:
            on_record(record)
    return state
