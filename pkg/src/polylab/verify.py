"""Slack bookkeeping for the polygamy and monogamy inequalities.

Every check returns a :class:`SlackRecord` with ``slack = rhs - lhs``; a
nonnegative slack means the inequality holds on that instance.

Inequalities (``A1`` is the focus qubit, ``Ai`` the others)::

    theorem1      E_{q,s}(A1 | rest)  <=  sum_i E^a_{q,s}(rho_{A1 Ai})
    theorem2      f(C(A|BC))          <=  f(C(rho_AB)) + f(C^a(rho_AC))
    ckw           sum_i C^2(rho_{A1 Ai})  <=  C^2(A1 | rest)
    coa_polygamy  C^2(A1 | rest)          <=  sum_i C^a(rho_{A1 Ai})^2
    tangle        C^2(A|BC) == C^2(rho_AB) + C^a(rho_AC)^2   (identity)
    tsallis       theorem1 at s = 1

with ``f = f_{q,s}`` and ``(q, s)`` in ``1 <= q <= 2``, ``-q^2 + 4q - 3 <= s <= 1``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .entropy import QSParams, tsallis_q, unified_entropy
from .exceptions import DimensionError, DomainError, PolylabError
from .lemmafn import GridSpec, ScanCell
from .qstate import (
    Bipartition,
    DensityMatrix,
    PureState,
    haar_random_pure,
    make_rng,
    partial_trace,
    random_mixed,
    state_to_json,
)
from .roof import RoofConfig, ueoa, unified_entanglement
from .twoqubit import FRange, coa_analytic, concurrence_pure, concurrence_wootters, f_qs

ANALYTIC = "analytic"
VARIATIONAL = "variational"
HYBRID = "hybrid"
MODES = (ANALYTIC, VARIATIONAL, HYBRID)

HAAR_PURE = "haar_pure"
INDUCED_MIXED = "induced_mixed"

THEOREM1 = "theorem1"
THEOREM2 = "theorem2"
CKW = "ckw"
COA_POLYGAMY = "coa_polygamy"
TANGLE = "tangle"
TSALLIS = "tsallis"
INEQUALITIES = (THEOREM1, THEOREM2, CKW, COA_POLYGAMY, TANGLE, TSALLIS)
_QS_FREE = (CKW, COA_POLYGAMY, TANGLE)

DEFAULT_QS_POINTS = ((1.0, 1.0), (1.0, 0.25), (1.5, 0.75), (1.5, 1.0), (2.0, 1.0))
TOLERANCES = {ANALYTIC: 1e-9, VARIATIONAL: 1e-4, HYBRID: 1e-4}
TSALLIS_PAYOFF_TOL = 1e-12

NOTE_EXACT = "exact: all terms analytic"
NOTE_CONSERVATIVE = "conservative: RHS under-estimates the true RHS, so a pass confirms the inequality"
NOTE_VARIATIONAL_RHS = "RHS is a roof-max estimate (lower bound of the true RHS); a pass is conservative up to optimizer accuracy"
NOTE_MIXED = "heuristic: LHS is a roof-max estimate (lower bound of the true LHS), so a pass does not certify"
NOTE_TH2_VARIATIONAL = "mixed-direction estimates: roof-min (upper) for C_AB term, roof-max (lower) for C^a_AC term"
NOTE_TSALLIS = "Tsallis-q specialization (s = 1) of theorem1; "

REPORT_HEADER = ("inequality_id", "n_qubits", "q", "s", "mode", "state_seed", "lhs", "rhs", "slack")


@dataclass(frozen=True)
class SlackRecord:
    """One inequality evaluation.  ``q`` and ``s`` are nan for the (q, s)-free checks."""

    inequality_id: str
    lhs: float
    rhs: float
    slack: float
    mode: str
    q: float
    s: float
    n_qubits: int
    state_seed: int | None = None
    bound_direction_note: str = ""
    focus: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def build(cls, inequality_id, lhs, rhs, mode, q, s, n_qubits, note, focus=0, state_seed=None):
        lhs, rhs = float(lhs), float(rhs)
        return cls(inequality_id, lhs, rhs, rhs - lhs, mode, float(q), float(s), int(n_qubits),
                   state_seed, note, focus)

    def with_seed(self, seed: int) -> "SlackRecord":
        d = asdict(self)
        d["state_seed"] = seed
        return SlackRecord(**d)

    def violates(self, tol: float) -> bool:
        if self.inequality_id == TANGLE:
            return abs(self.slack) > tol
        return self.slack < -tol


def _require_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _labels(state) -> tuple:
    return state.labels if isinstance(state, PureState) else state.qubit_labels


def _others(state, focus) -> list:
    labels = _labels(state)
    if focus not in labels:
        raise DimensionError(f"focus qubit {focus!r} not in {labels}")
    return [lab for lab in labels if lab != focus]


def _require_pure(state, n: int | None = None) -> PureState:
    if not isinstance(state, PureState):
        raise TypeError("this check needs a pure state")
    if n is not None and state.n_qubits != n:
        raise DimensionError(f"expected {n} qubits, got {state.n_qubits}")
    return state


def _theorem1_domain(q: float, s: float) -> None:
    FRange(q, s).require_lemma2()


# -- single-state checks ------------------------------------------------------------


def verify_theorem1(state, q: float, s: float, mode: str = ANALYTIC,
                    roof_config: RoofConfig | None = None, focus=0,
                    check_domain: bool = True) -> SlackRecord:
    """Unified-(q, s) polygamy across ``focus | rest`` for a state of >= 3 qubits.

    Pure input: the LHS is exact.  Mixed input: the LHS is a roof-max
    estimate and the record is marked heuristic.  The RHS sums over pairs
    ``(focus, i)``: ``analytic`` uses ``f_qs(CoA)``, ``variational`` the
    roof-max UEoA estimate, ``hybrid`` the larger of the two per pair.
    ``check_domain=False`` skips the (q, s) domain check (for region scans;
    ``f_qs`` must still be defined).
    """
    _require_mode(mode)
    if check_domain:
        _theorem1_domain(q, s)
    labels = _labels(state)
    if len(labels) < 3:
        raise DimensionError(f"theorem1 needs at least 3 qubits, got {len(labels)}")
    params = QSParams(q, s)
    others = _others(state, focus)
    cfg = roof_config or RoofConfig()

    if isinstance(state, PureState):
        lhs = unified_entropy(partial_trace(state, {focus}), params)
        note = NOTE_CONSERVATIVE if mode == ANALYTIC else NOTE_VARIATIONAL_RHS
    else:
        lhs = ueoa(state, params, cfg, focus=focus)
        note = NOTE_MIXED

    rhs = 0.0
    for other in others:
        pair = partial_trace(state, {focus, other})
        terms = []
        if mode in (ANALYTIC, HYBRID):
            terms.append(f_qs(coa_analytic(pair), q, s))
        if mode in (VARIATIONAL, HYBRID):
            terms.append(ueoa(pair, params, cfg, focus=focus))
        rhs += max(terms)
    return SlackRecord.build(THEOREM1, lhs, rhs, mode, q, s, len(labels), note, focus)


def verify_theorem2(psi: PureState, q: float, s: float, mode: str = ANALYTIC,
                    roof_config: RoofConfig | None = None, focus=0) -> SlackRecord:
    """Three-qubit tightened polygamy; ``B`` and ``C`` are the non-focus qubits in order.

    ``analytic`` is exact.  ``variational`` replaces the Wootters term by the
    roof-min estimate and the CoA term by the roof-max UEoA estimate;
    ``hybrid`` keeps the exact first term and takes the larger second term.
    """
    _require_mode(mode)
    _theorem1_domain(q, s)
    psi = _require_pure(psi, 3)
    b, c = _others(psi, focus)
    params = QSParams(q, s)
    cfg = roof_config or RoofConfig()
    lhs = f_qs(concurrence_pure(psi, Bipartition.of(psi.labels, {focus})), q, s)
    rho_ab = partial_trace(psi, {focus, b})
    rho_ac = partial_trace(psi, {focus, c})
    exact_ab = f_qs(concurrence_wootters(rho_ab), q, s)
    exact_ac = f_qs(coa_analytic(rho_ac), q, s)
    if mode == ANALYTIC:
        rhs, note = exact_ab + exact_ac, NOTE_EXACT
    elif mode == VARIATIONAL:
        rhs = (unified_entanglement(rho_ab, params, cfg, focus=focus)
               + ueoa(rho_ac, params, cfg, focus=focus))
        note = NOTE_TH2_VARIATIONAL
    else:
        rhs = exact_ab + max(exact_ac, ueoa(rho_ac, params, cfg, focus=focus))
        note = NOTE_CONSERVATIVE
    return SlackRecord.build(THEOREM2, lhs, rhs, mode, q, s, 3, note, focus)


def _c2_focus(psi: PureState, focus) -> float:
    return concurrence_pure(psi, Bipartition.of(psi.labels, {focus})) ** 2


def verify_ckw_monogamy(psi: PureState, focus=0) -> SlackRecord:
    """``sum_i C^2(rho_{A1 Ai}) <= C^2(A1 | rest)`` (Wootters concurrences)."""
    psi = _require_pure(psi)
    lhs = sum(concurrence_wootters(partial_trace(psi, {focus, o})) ** 2 for o in _others(psi, focus))
    return SlackRecord.build(CKW, lhs, _c2_focus(psi, focus), ANALYTIC, math.nan, math.nan,
                             psi.n_qubits, NOTE_EXACT, focus)


def verify_coa_polygamy(psi: PureState, focus=0) -> SlackRecord:
    """``C^2(A1 | rest) <= sum_i C^a(rho_{A1 Ai})^2``."""
    psi = _require_pure(psi)
    rhs = sum(coa_analytic(partial_trace(psi, {focus, o})) ** 2 for o in _others(psi, focus))
    return SlackRecord.build(COA_POLYGAMY, _c2_focus(psi, focus), rhs, ANALYTIC, math.nan, math.nan,
                             psi.n_qubits, NOTE_EXACT, focus)


def verify_tangle_identity(psi: PureState, focus=0) -> SlackRecord:
    """Residual of ``C^2(A|BC) = C^2(rho_AB) + C^a(rho_AC)^2``; the slack should vanish."""
    psi = _require_pure(psi, 3)
    b, c = _others(psi, focus)
    rhs = (concurrence_wootters(partial_trace(psi, {focus, b})) ** 2
           + coa_analytic(partial_trace(psi, {focus, c})) ** 2)
    return SlackRecord.build(TANGLE, _c2_focus(psi, focus), rhs, ANALYTIC, math.nan, math.nan, 3,
                             "identity: |slack| is the residual", focus)


def verify_tsallis_reduction(state, q: float, mode: str = ANALYTIC,
                             roof_config: RoofConfig | None = None, focus=0) -> SlackRecord:
    """:func:`verify_theorem1` at ``s = 1``, relabelled as the Tsallis-q case.

    Also checks that the unified payoff at ``s = 1`` equals the Tsallis-q
    entropy on the focus marginal to 1e-12.
    """
    rec = verify_theorem1(state, q, 1.0, mode, roof_config, focus)
    marginal = partial_trace(state, {focus})
    gap = abs(unified_entropy(marginal, QSParams(q, 1.0)) - tsallis_q(marginal, q))
    if gap > TSALLIS_PAYOFF_TOL:
        raise PolylabError(f"unified payoff at s = 1 differs from Tsallis-q by {gap:.3e}")
    d = asdict(rec)
    d["inequality_id"] = TSALLIS
    d["bound_direction_note"] = NOTE_TSALLIS + rec.bound_direction_note
    return SlackRecord(**d)


# -- campaigns ----------------------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    """Monte-Carlo campaign over seeded random states.

    ``state_kind`` is ``"haar_pure"`` or ``"induced_mixed"`` (with ``rank``).
    ``qs_points`` is ignored by the (q, s)-free checks.  ``tolerance=None``
    picks 1e-9 for analytic and 1e-4 for variational/hybrid runs.
    ``workers`` > 1 evaluates samples in a process pool (0 = all cores).
    """

    inequality: str
    samples: int = 100
    n_qubits: int = 3
    qs_points: tuple = DEFAULT_QS_POINTS
    mode: str = ANALYTIC
    state_kind: str = HAAR_PURE
    rank: int | None = None
    seed: int = 0
    roof: RoofConfig = field(default_factory=RoofConfig)
    focus: int = 0
    sweep_focus: bool = False
    tolerance: float | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "qs_points", tuple((float(q), float(s)) for q, s in self.qs_points))
        if self.inequality not in INEQUALITIES:
            raise ValueError(f"unknown inequality {self.inequality!r}; choose from {INEQUALITIES}")
        _require_mode(self.mode)
        if self.samples < 0:
            raise ValueError("samples must be >= 0")
        if self.tolerance is not None and not self.tolerance >= 0:
            raise ValueError("tolerance must be >= 0")
        if self.state_kind not in (HAAR_PURE, INDUCED_MIXED):
            raise ValueError(f"unknown state_kind {self.state_kind!r}")
        if self.state_kind == INDUCED_MIXED:
            if self.inequality not in (THEOREM1, TSALLIS):
                raise ValueError(f"{self.inequality} needs pure states")
            if self.rank is None or not 1 <= self.rank <= 2**self.n_qubits:
                raise ValueError("induced_mixed needs 1 <= rank <= 2^n_qubits")
        if self.inequality in (THEOREM2, TANGLE) and self.n_qubits != 3:
            raise DimensionError(f"{self.inequality} is a three-qubit check")
        if self.n_qubits < 3:
            raise DimensionError("campaigns need at least 3 qubits")
        if not 0 <= self.focus < self.n_qubits:
            raise DimensionError(f"focus {self.focus} out of range")
        if self.inequality not in _QS_FREE:
            if not self.qs_points:
                raise ValueError("qs_points is empty")
            for q, s in self.qs_points:
                _theorem1_domain(q, s)
                if self.inequality == TSALLIS and s != 1.0:
                    raise DomainError(f"tsallis checks need s = 1, got s = {s}", "s = 1")

    @property
    def tol(self) -> float:
        return self.tolerance if self.tolerance is not None else TOLERANCES[self.mode]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qs_points"] = [list(p) for p in self.qs_points]
        d["roof"] = self.roof.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        d = dict(d)
        if isinstance(d.get("roof"), dict):
            d["roof"] = RoofConfig(**d["roof"])
        if "qs_points" in d:
            d["qs_points"] = tuple(tuple(p) for p in d["qs_points"])
        return cls(**d)


def sample_seed(seed: int, index: int) -> int:
    """Integer seed of sample ``index``; ``make_rng`` of it regenerates the state."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_state(config: CampaignConfig, state_seed: int):
    rng = make_rng(state_seed)
    if config.state_kind == HAAR_PURE:
        return haar_random_pure(config.n_qubits, rng)
    return random_mixed(config.n_qubits, config.rank, rng)


def _check_state(config: CampaignConfig, state, focus) -> list[SlackRecord]:
    ineq = config.inequality
    if ineq == CKW:
        return [verify_ckw_monogamy(state, focus)]
    if ineq == COA_POLYGAMY:
        return [verify_coa_polygamy(state, focus)]
    if ineq == TANGLE:
        return [verify_tangle_identity(state, focus)]
    out = []
    for q, s in config.qs_points:
        if ineq == THEOREM1:
            out.append(verify_theorem1(state, q, s, config.mode, config.roof, focus))
        elif ineq == THEOREM2:
            out.append(verify_theorem2(state, q, s, config.mode, config.roof, focus))
        else:
            out.append(verify_tsallis_reduction(state, q, config.mode, config.roof, focus))
    return out


def _run_sample(args) -> list[SlackRecord]:
    config, index = args
    seed = sample_seed(config.seed, index)
    state = sample_state(config, seed)
    focuses = range(config.n_qubits) if config.sweep_focus else (config.focus,)
    return [rec.with_seed(seed) for f in focuses for rec in _check_state(config, state, f)]


@dataclass
class CampaignReport:
    config: CampaignConfig
    records: list
    summary: dict


def _summary(config: CampaignConfig, records: list, sample_index: dict) -> dict:
    tol = config.tol
    violations = [r for r in records if r.violates(tol)]
    out = {
        "inequality": config.inequality,
        "mode": config.mode,
        "samples": config.samples,
        "records": len(records),
        "tolerance": tol,
        "violations": len(violations),
        "min_slack": None,
        "witness": None,
    }
    if records:
        key = (lambda r: -abs(r.slack)) if config.inequality == TANGLE else (lambda r: r.slack)
        worst = min(records, key=key)  # first occurrence wins ties
        state = sample_state(config, worst.state_seed)
        out["min_slack"] = worst.slack
        out["witness"] = {
            "sample_index": sample_index[worst.state_seed],
            "state_seed": worst.state_seed,
            "q": worst.q,
            "s": worst.s,
            "focus": worst.focus,
            "lhs": worst.lhs,
            "rhs": worst.rhs,
            "slack": worst.slack,
            "state": state_to_json(state),
        }
    if violations:
        out["violating_seeds"] = sorted({r.state_seed for r in violations})
    return out


def run_campaign(config: CampaignConfig) -> CampaignReport:
    """Evaluate ``config.samples`` seeded states; records are ordered by sample index."""
    jobs = [(config, i) for i in range(config.samples)]
    if config.workers == 1 or config.samples < 2:
        chunks = [_run_sample(j) for j in jobs]
    else:
        workers = None if config.workers <= 0 else config.workers
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_sample, jobs, chunksize=max(1, config.samples // 64)))
    records = [r for chunk in chunks for r in chunk]
    index = {sample_seed(config.seed, i): i for i in range(config.samples)}
    return CampaignReport(config, records, _summary(config, records, index))


# -- report I/O ---------------------------------------------------------------------


def _g(v: float) -> str:
    return "%.17g" % v


def report_rows(records) -> list[list[str]]:
    return [[r.inequality_id, str(r.n_qubits), _g(r.q), _g(r.s), r.mode,
             "" if r.state_seed is None else str(r.state_seed), _g(r.lhs), _g(r.rhs), _g(r.slack)]
            for r in records]


def write_report_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(report_rows(records))


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def report_json(report: CampaignReport) -> dict:
    return _jsonable({
        "config": report.config.to_dict(),
        "summary": report.summary,
        "records": [asdict(r) for r in report.records],
    })


def write_summary_json(report: CampaignReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_json(report), fh, indent=2)
        fh.write("\n")


# -- theorem1 region map -----------------------------------------------------------


def _region_cell(args) -> ScanCell:
    q, s, states = args
    frange = FRange(q, s)
    if not frange.valid_functional:
        value = math.nan
    else:
        value = min(verify_theorem1(psi, q, s, ANALYTIC, check_domain=False).slack for psi in states)
    return ScanCell(q, s, math.nan, math.nan, value, frange.valid_lemma2)


def domain_region(grid: GridSpec, samples: int = 20, n_qubits: int = 3, seed: int = 0,
                  workers: int = 1) -> list[ScanCell]:
    """Empirical min ``theorem1`` slack (analytic mode) per ``(q, s)`` node.

    The same ``samples`` Haar states are used at every node.  Nodes where
    ``f_qs`` is undefined get ``nan``; ``in_domain`` flags the ``theorem1`` domain.
    """
    states = [haar_random_pure(n_qubits, make_rng(sample_seed(seed, i))) for i in range(samples)]
    jobs = [(q, s, states) for q, s in grid.nodes()]
    if workers == 1 or len(jobs) < 2:
        return [_region_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=None if workers <= 0 else workers) as ex:
        return list(ex.map(_region_cell, jobs, chunksize=max(1, len(jobs) // 64)))
