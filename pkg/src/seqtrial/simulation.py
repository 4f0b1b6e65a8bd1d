"""Patient-level Monte Carlo simulation of an event-driven group-sequential trial.

Each trial draws from its own counter-based Philox stream keyed by
``(seed, trial_index)``, so results do not depend on batching or on the
number of worker processes. Analyses are triggered when the calendar-time
event count reaches its target; the observed z is the log-rank statistic.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from functools import lru_cache
from typing import Sequence

import numpy as np

from .design import BoundaryTable, DesignSpec
from .monitoring import (
    Decision,
    TrialCourse,
    UpdatedAnalysisPlan,
    recalc_interim_level,
    recalc_primary_level,
    record_analysis,
)
from .timing import TrialModel, month_to_date, sample_entry_times

BATCH_SIZE = 500
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    model: TrialModel
    spec: DesignSpec
    table: BoundaryTable
    hr_true: float
    n_trials: int = 1000
    seed: int = 0
    honor_futility: bool = True
    perturbation: float = 0.0
    ssd_lag_weeks: float = 6.0

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.hr_true <= 0:
            raise ValueError("hr_true must be positive")
        if not 0.0 <= self.perturbation < 1.0:
            raise ValueError("perturbation must lie in [0, 1)")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimOutcome:
    trial_index: int
    labels: tuple[str, ...]
    events: tuple[int, ...]
    z: tuple[float, ...]
    hr: tuple[float, ...]
    ccod_months: tuple[float, ...]
    decisions: tuple[Decision, ...]
    rejected: bool

    @property
    def stop_label(self) -> str:
        return self.labels[-1]

    @property
    def decision(self) -> Decision:
        return self.decisions[-1]

    @property
    def duration_months(self) -> float:
        return self.ccod_months[-1]


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(trial_index << 64) | (seed & _MASK64)))


def _draw_patients(config: SimConfig, trial_index: int):
    model = config.model
    n = int(round(model.n_total))
    rng = trial_rng(config.seed, trial_index)
    entry = sample_entry_times(model, rng.random(n))
    n_exp = int(round(n * model.allocation_ratio / (1.0 + model.allocation_ratio)))
    arm = np.zeros(n)
    arm[:n_exp] = 1.0
    arm = rng.permutation(arm)
    lam = np.where(arm == 1.0, model.hazard_control * config.hr_true, model.hazard_control)
    t_event = rng.standard_exponential(n) / lam
    eta = model.hazard_dropout
    e_drop = rng.standard_exponential(n)
    t_drop = e_drop / eta if eta > 0 else np.full(n, np.inf)
    u_perturb = rng.random(len(config.spec.analyses))
    return entry, arm, t_event, t_drop, u_perturb


def logrank_z(entry, arm, t_event, t_drop, ccod):
    """Row-wise log-rank z at calendar cutoffs ``ccod`` (positive favours arm 1).

    All inputs are ``(trials, patients)`` arrays except ``ccod`` (``(trials,)``).
    Returns ``(z, events)``.
    """
    follow = ccod[:, None] - entry
    entered = follow >= 0
    time = np.minimum(np.minimum(t_event, t_drop), follow)
    status = entered & (t_event <= t_drop) & (t_event <= follow)
    time = np.where(entered, time, -1.0)
    # continuous times: ties have probability zero, so an unstable sort is fine
    order = np.argsort(time, axis=1)
    arm_s = np.take_along_axis(arm, order, axis=1)
    status_s = np.take_along_axis(status, order, axis=1)
    n = time.shape[1]
    at_risk = n - np.arange(n, dtype=float)
    exp_at_risk = np.cumsum(arm_s[:, ::-1], axis=1)[:, ::-1]
    frac = exp_at_risk / at_risk
    o_minus_e = np.sum(status_s * (arm_s - frac), axis=1)
    var = np.sum(status_s * frac * (1.0 - frac), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(var > 0, -o_minus_e / np.sqrt(var), 0.0)
    return z, status.sum(axis=1)


@lru_cache(maxsize=None)
def _interim_bounds(table: BoundaryTable, label: str, history: tuple, events: int):
    return recalc_interim_level(table, label, events, history)


@lru_cache(maxsize=None)
def _primary_bounds(table: BoundaryTable, history: tuple, events: int):
    return recalc_primary_level(table, history, events)


def _observed_targets(config: SimConfig, u: np.ndarray) -> np.ndarray:
    """Per-look event counts, perturbed around the targets when configured."""
    targets = np.array([r.target_events for r in config.table.rows], dtype=float)
    if config.perturbation == 0.0:
        return targets.astype(int)
    obs = np.rint(targets * (1.0 + config.perturbation * (2.0 * u - 1.0))).astype(int)
    obs = np.maximum(obs, 1)
    for k in range(1, len(obs)):
        obs[k] = max(obs[k], obs[k - 1] + 1)
    last_interim = len(obs) - 2
    if last_interim >= 0 and obs[last_interim] >= config.table.max_events:
        # interims stay below the maximum; keep ordering intact
        for k in range(last_interim + 1):
            obs[k] = min(obs[k], config.table.max_events - (last_interim + 1 - k))
    return obs


@dataclass
class _Batch:
    indices: np.ndarray
    n_looks: np.ndarray
    events: np.ndarray
    z: np.ndarray
    hr: np.ndarray
    ccod: np.ndarray
    decisions: np.ndarray  # object array of Decision, None past the stop
    rejected: np.ndarray


def _simulate_batch(config: SimConfig, indices: Sequence[int]) -> _Batch:
    table, spec = config.table, config.spec
    r = spec.allocation_ratio
    rows = table.rows
    K = len(rows)
    draws = [_draw_patients(config, int(i)) for i in indices]
    entry = np.stack([d[0] for d in draws])
    arm = np.stack([d[1] for d in draws])
    t_event = np.stack([d[2] for d in draws])
    t_drop = np.stack([d[3] for d in draws])
    targets = np.stack([_observed_targets(config, d[4]) for d in draws])
    B = len(indices)

    calendar = np.where(t_event <= t_drop, entry + t_event, np.inf)
    calendar.sort(axis=1)
    available = np.isfinite(calendar).sum(axis=1)

    events = np.zeros((B, K), dtype=int)
    z = np.full((B, K), np.nan)
    hr = np.full((B, K), np.nan)
    ccod = np.full((B, K), np.nan)
    decisions = np.full((B, K), None, dtype=object)
    rejected = np.zeros(B, dtype=bool)
    n_looks = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    histories: list[tuple] = [() for _ in range(B)]

    for k, row in enumerate(rows):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d = np.minimum(targets[idx, k], available[idx])
        cut = calendar[idx, d - 1]
        zk, _ = logrank_z(entry[idx], arm[idx], t_event[idx], t_drop[idx], cut)
        hrk = np.exp(-zk * (1.0 + r) / np.sqrt(d * r))
        events[idx, k], z[idx, k], hr[idx, k], ccod[idx, k] = d, zk, hrk, cut
        n_looks[idx] = k + 1
        is_primary = k == K - 1
        for j, t in enumerate(idx):
            dj = int(d[j])
            bound_hr = None
            if row.efficacy:
                if is_primary:
                    b = _primary_bounds(table, histories[t], dj)
                elif config.perturbation == 0.0:
                    b = None
                    bound_hr = row.efficacy_hr_bound
                    level = row.nominal_level_one_sided
                else:
                    b = _interim_bounds(table, row.label, histories[t], dj)
                if b is not None:
                    bound_hr, level = b.hr, b.alpha_1sided
                histories[t] = histories[t] + ((dj, level),)
            efficacy = bound_hr is not None and hrk[j] <= bound_hr
            if is_primary:
                decisions[t, k] = Decision.REACH_PRIMARY
                rejected[t] = efficacy
                active[t] = False
            elif efficacy:
                decisions[t, k] = Decision.STOP_EFFICACY
                rejected[t] = True
                active[t] = False
            elif config.honor_futility and row.futility_hr_bound is not None and hrk[j] >= row.futility_hr_bound:
                decisions[t, k] = Decision.STOP_FUTILITY
                active[t] = False
            else:
                decisions[t, k] = Decision.CONTINUE
    return _Batch(np.asarray(indices), n_looks, events, z, hr, ccod, decisions, rejected)


def _outcome(config: SimConfig, batch: _Batch, j: int) -> SimOutcome:
    m = batch.n_looks[j]
    return SimOutcome(
        trial_index=int(batch.indices[j]),
        labels=tuple(r.label for r in config.table.rows[:m]),
        events=tuple(int(v) for v in batch.events[j, :m]),
        z=tuple(float(v) for v in batch.z[j, :m]),
        hr=tuple(float(v) for v in batch.hr[j, :m]),
        ccod_months=tuple(float(v) for v in batch.ccod[j, :m]),
        decisions=tuple(batch.decisions[j, :m]),
        rejected=bool(batch.rejected[j]),
    )


def simulate_trial(config: SimConfig, trial_index: int) -> SimOutcome:
    batch = _simulate_batch(config, [trial_index])
    return _outcome(config, batch, 0)


def simulate_trials(config: SimConfig, indices: Sequence[int] | None = None) -> list[SimOutcome]:
    if indices is None:
        indices = range(config.n_trials)
    indices = list(indices)
    out: list[SimOutcome] = []
    for start in range(0, len(indices), BATCH_SIZE):
        batch = _simulate_batch(config, indices[start:start + BATCH_SIZE])
        out.extend(_outcome(config, batch, j) for j in range(len(batch.indices)))
    return out


@dataclass(frozen=True)
class OperatingCharacteristics:
    n_trials: int
    rejection_probability: float
    rejection_se: float
    efficacy_stop_probability: dict[str, float]  # rejection at each look, primary included
    futility_stop_probability: dict[str, float]
    futility_stop_se: dict[str, float]
    expected_events: float
    expected_events_se: float
    expected_duration: float
    expected_duration_se: float
    expected_ccod: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class _Tally:
    """Order-insensitive sufficient statistics: integer counts and exact float sums."""

    n: int = 0
    rejected: int = 0
    efficacy: dict = field(default_factory=dict)
    futility: dict = field(default_factory=dict)
    reached: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    duration: list = field(default_factory=list)
    ccod: dict = field(default_factory=dict)

    def add_batch(self, config: SimConfig, batch: _Batch):
        labels = [r.label for r in config.table.rows]
        self.n += len(batch.indices)
        self.rejected += int(batch.rejected.sum())
        for j in range(len(batch.indices)):
            m = batch.n_looks[j]
            last = batch.decisions[j, m - 1]
            stop_label = labels[m - 1]
            if batch.rejected[j]:
                self.efficacy[stop_label] = self.efficacy.get(stop_label, 0) + 1
            elif last is Decision.STOP_FUTILITY:
                self.futility[stop_label] = self.futility.get(stop_label, 0) + 1
            self.events.append(float(batch.events[j, m - 1]))
            self.duration.append(float(batch.ccod[j, m - 1]))
            for k in range(m):
                self.reached[labels[k]] = self.reached.get(labels[k], 0) + 1
                self.ccod.setdefault(labels[k], []).append(float(batch.ccod[j, k]))

    def merge(self, other: "_Tally"):
        self.n += other.n
        self.rejected += other.rejected
        for mine, theirs in ((self.efficacy, other.efficacy), (self.futility, other.futility),
                             (self.reached, other.reached)):
            for k, v in theirs.items():
                mine[k] = mine.get(k, 0) + v
        self.events.extend(other.events)
        self.duration.extend(other.duration)
        for k, v in other.ccod.items():
            self.ccod.setdefault(k, []).extend(v)


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _prob_se(count: int, n: int) -> tuple[float, float]:
    p = count / n
    return p, math.sqrt(p * (1.0 - p) / n)


def _tally_chunk(args) -> _Tally:
    config, indices = args
    tally = _Tally()
    for start in range(0, len(indices), BATCH_SIZE):
        tally.add_batch(config, _simulate_batch(config, indices[start:start + BATCH_SIZE]))
    return tally


def operating_characteristics(config: SimConfig, n_workers: int = 1) -> OperatingCharacteristics:
    """Aggregate ``config.n_trials`` simulated trials.

    The result is bit-identical for any ``n_workers``.
    """
    indices = list(range(config.n_trials))
    if n_workers <= 1:
        tallies = [_tally_chunk((config, indices))]
    else:
        chunk = max(BATCH_SIZE, math.ceil(len(indices) / n_workers))
        parts = [(config, indices[i:i + chunk]) for i in range(0, len(indices), chunk)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            tallies = list(pool.map(_tally_chunk, parts))
    total = _Tally()
    for t in tallies:
        total.merge(t)

    labels = [r.label for r in config.table.rows]
    n = total.n
    rej, rej_se = _prob_se(total.rejected, n)
    fut = {lab: _prob_se(total.futility.get(lab, 0), n) for lab in labels}
    ev, ev_se = _mean_se(total.events)
    dur, dur_se = _mean_se(total.duration)
    return OperatingCharacteristics(
        n_trials=n,
        rejection_probability=rej,
        rejection_se=rej_se,
        efficacy_stop_probability={lab: total.efficacy.get(lab, 0) / n for lab in labels},
        futility_stop_probability={lab: p for lab, (p, _) in fut.items()},
        futility_stop_se={lab: se for lab, (_, se) in fut.items()},
        expected_events=ev,
        expected_events_se=ev_se,
        expected_duration=dur,
        expected_duration_se=dur_se,
        expected_ccod={lab: math.fsum(v) / len(v) for lab, v in total.ccod.items()},
    )


def outcomes_csv(outcomes: Sequence[SimOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "stop_label", "decision", "events", "z", "hr", "duration_months"])
    for o in outcomes:
        w.writerow([o.trial_index, o.stop_label, o.decision.value, o.events[-1],
                    repr(o.z[-1]), repr(o.hr[-1]), repr(o.duration_months)])
    return buf.getvalue()


def replay_report(
    outcome: SimOutcome,
    config: SimConfig,
    first_patient_in: date = date(2020, 4, 23),
    updated: UpdatedAnalysisPlan | None = None,
) -> TrialCourse:
    """Turn a simulated outcome into a monitored :class:`TrialCourse`."""
    course = TrialCourse(config.spec, config.table, updated=updated or UpdatedAnalysisPlan(),
                         first_patient_in=first_patient_in)
    lag = timedelta(weeks=config.ssd_lag_weeks)
    for label, d, hr, month, decision in zip(outcome.labels, outcome.events, outcome.hr,
                                             outcome.ccod_months, outcome.decisions):
        ccod = month_to_date(first_patient_in, month)
        course = record_analysis(course, label, ccod, ccod + lag, d, observed_hr=hr,
                                 follow_futility=config.honor_futility)
        recorded = course.analyses[-1].decision
        if recorded is not decision:
            raise AssertionError(f"replayed decision {recorded} differs from simulated {decision}")
    return course
