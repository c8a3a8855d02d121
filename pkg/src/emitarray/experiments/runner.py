"""Monte Carlo orchestration: compile, attach noise, sample, decode, count."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..circuit import Circuit
from ..compiler import PROTOCOLS, compile_named
from ..decoder import BatchDecoder, dem_to_matching
from ..dem import build_dem, fault_table, sweep_signatures
from ..lattice import build_rhg
from ..noise import LOSS_MODES, NoiseSpec, attach_noise
from ..sim.sampler import DemSampler, make_rng
from .stats import ShotStats

OBSERVABLE_MODES = {"x": (0,), "any": (0, 1, 2)}
CSV_COLUMNS = (
    "protocol", "L", "d", "n_e", "p", "pe_ratio", "eta_z", "eta_loss",
    "shots", "failures", "p_logical", "ci_low", "ci_high", "seed",
)
DEFAULT_BUDGETS = (10_000, 100_000, 1_000_000)
BATCH = 10_000  # divides every default budget


# -- configuration ------------------------------------------------------------------


def parse_ne_rule(rule) -> Tuple[str, int]:
    """``3`` or ``"3"`` is a constant; ``"L/4"`` divides the lattice size."""
    if isinstance(rule, int):
        return "const", rule
    s = str(rule).strip().replace(" ", "")
    if s.startswith("L/"):
        m = int(s[2:])
        if m <= 0:
            raise ValueError(f"bad n_e rule {rule!r}")
        return "div", m
    return "const", int(s)


def ne_for(rule, L: int) -> int:
    kind, k = parse_ne_rule(rule)
    if kind == "const":
        return k
    if L % k:
        raise ValueError(f"n_e rule L/{k} needs L divisible by {k}, got L={L}")
    return L // k


@dataclass(frozen=True)
class Point:
    """One Monte Carlo point; everything but the seed."""

    protocol: str
    L: int
    n_e: int
    noise: NoiseSpec
    measure: str = "asap"
    weights: str = "probability"
    allow_interruption: bool = True

    def key(self) -> int:
        return zlib.crc32(json.dumps(asdict(self), sort_keys=True).encode())

    def row(self) -> dict:
        n = self.noise
        return dict(protocol=self.protocol, L=self.L, d=self.L // 2, n_e=self.n_e, p=n.p,
                    pe_ratio=n.pe_ratio, eta_z=n.eta_z, eta_loss=n.eta_loss)


@dataclass
class RunConfig:
    protocol: str = "S1"
    L: List[int] = field(default_factory=lambda: [4, 6, 8])
    n_e: object = 1
    p: List[float] = field(default_factory=lambda: [1e-3])
    pe_ratio: List[float] = field(default_factory=lambda: [1.0])
    eta_z: List[float] = field(default_factory=lambda: [0.0])
    eta_loss: List[float] = field(default_factory=lambda: [0.0])
    loss_mode: str = "flat_L2_over_ne"
    loss_constant: float = 1.0
    readout_gate: bool = True
    shots: int = 10_000
    max_shots: int = 0  # 0 disables adaptive escalation
    target_rel_width: float = 0.3
    seed: int = 0
    observable_mode: str = "x"
    measure: str = "asap"
    weights: str = "probability"
    allow_interruption: bool = True
    workers: int = 0  # 0 means available parallelism

    def __post_init__(self):
        kind, k = parse_ne_rule(self.n_e)
        self.n_e = k if kind == "const" else f"L/{k}"
        self.L = [int(x) for x in np.atleast_1d(self.L)]
        for name in ("p", "pe_ratio", "eta_z", "eta_loss"):
            setattr(self, name, [float(x) for x in np.atleast_1d(getattr(self, name))])
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.observable_mode not in OBSERVABLE_MODES:
            raise ValueError(f"unknown observable mode {self.observable_mode!r}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"unknown loss mode {self.loss_mode!r}")
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if self.max_shots and self.max_shots < self.shots:
            raise ValueError("max_shots must be at least shots")
        if not self.L:
            raise ValueError("empty L list")
        for L in self.L:
            if L < 4 or L % 2:
                raise ValueError(f"L must be even and at least 4, got {L}")
            n_e = ne_for(self.n_e, L)
            if self.protocol in ("S1", "S2") and n_e != 1:
                raise ValueError(f"{self.protocol} needs n_e=1, rule gives {n_e} at L={L}")
            if not 1 <= n_e <= L // 2:
                raise ValueError(f"n_e={n_e} outside [1, L/2] at L={L}")
            if not self.allow_interruption and (L // 2) % n_e:
                raise ValueError(f"n_e={n_e} does not divide L/2={L // 2}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def noise_specs(self) -> List[NoiseSpec]:
        return [
            NoiseSpec(p, r, ez, el, self.loss_mode, self.loss_constant, self.readout_gate)
            for p, r, ez, el in product(self.p, self.pe_ratio, self.eta_z, self.eta_loss)
        ]

    def points(self) -> List[Point]:
        return [
            Point(self.protocol, L, ne_for(self.n_e, L), spec, self.measure, self.weights, self.allow_interruption)
            for spec in self.noise_specs()
            for L in self.L
        ]

    def budgets(self) -> Tuple[int, ...]:
        if not self.max_shots:
            return (self.shots,)
        out = [self.shots]
        while out[-1] < self.max_shots:
            out.append(min(out[-1] * 10, self.max_shots))
        return tuple(out)


# -- pipeline -----------------------------------------------------------------------


@lru_cache(maxsize=16)
def clean_circuit(protocol: str, L: int, n_e: int, measure: str = "asap", allow_interruption: bool = True) -> Circuit:
    return compile_named(protocol, build_rhg(L), n_e, measure=measure, allow_interruption=allow_interruption)


@dataclass
class Pipeline:
    circuit: Circuit
    sampler: DemSampler
    decoder: BatchDecoder


@lru_cache(maxsize=4)
def pipeline(point: Point) -> Pipeline:
    c = clean_circuit(point.protocol, point.L, point.n_e, point.measure, point.allow_interruption)
    noisy = attach_noise(c, point.noise, point.L, point.n_e)
    sweep = sweep_signatures(noisy)
    graphs = dem_to_matching(build_dem(noisy), weights=point.weights)
    return Pipeline(noisy, DemSampler(fault_table(noisy, sweep)), BatchDecoder(graphs))


def count_failures(predicted: np.ndarray, actual: np.ndarray, mode: str = "x") -> int:
    cols = list(OBSERVABLE_MODES[mode])
    return int(np.any((predicted[:, cols] ^ actual[:, cols]) != 0, axis=1).sum())


def _run_batch(point: Point, seed: int, b: int, shots: int, mode: str) -> int:
    pl = pipeline(point)
    dets, obs, er = pl.sampler.sample(shots, make_rng(seed, point.key(), b))
    pred = pl.decoder.decode_batch(dets, er if point.noise.eta_loss else None)
    return count_failures(pred, obs, mode)


def _batches(lo: int, hi: int) -> Iterable[Tuple[int, int]]:
    """Batch ``b`` always covers shots ``[b*BATCH, (b+1)*BATCH)`` so totals reuse earlier work."""
    for b in range(lo // BATCH, -(-hi // BATCH)):
        start = max(lo, b * BATCH)
        stop = min(hi, (b + 1) * BATCH)
        if stop > start:
            yield b, stop - start


def run_point(
    point: Point,
    shots: int = 10_000,
    seed: int = 0,
    observable_mode: str = "x",
    budgets: Optional[Sequence[int]] = None,
    target_rel_width: float = 0.3,
) -> ShotStats:
    """Sample and decode until the Wilson interval is tight enough or the last budget is spent.

    Shot ``i`` always belongs to batch ``i // BATCH``, so escalating a budget reuses
    the shots already counted.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if observable_mode not in OBSERVABLE_MODES:
        raise ValueError(f"unknown observable mode {observable_mode!r}")
    budgets = tuple(budgets) if budgets else (shots,)
    stats = ShotStats(0, 0)
    done = 0
    for total in budgets:
        if done % BATCH:
            # the last batch was a prefix; start over so batch b is always the same draw
            stats, done = ShotStats(0, 0), 0
        for b, n in _batches(done, total):
            stats = stats + ShotStats(n, _run_batch(point, seed, b, n, observable_mode))
        done = total
        if stats.relative_width() < target_rel_width:
            break
    return stats


def _run_point_job(args) -> ShotStats:
    point, cfg = args
    return run_point(point, cfg.shots, cfg.seed, cfg.observable_mode, cfg.budgets(), cfg.target_rel_width)


def _workers(n: int) -> int:
    return n if n > 0 else (len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def run_config(cfg: RunConfig, points: Optional[Sequence[Point]] = None) -> List[dict]:
    """CSV rows for every point of ``cfg``; independent of the worker count."""
    points = list(points) if points is not None else cfg.points()
    jobs = [(pt, cfg) for pt in points]
    w = min(_workers(cfg.workers), len(jobs))
    if w <= 1:
        results = [_run_point_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(w) as ex:
            results = list(ex.map(_run_point_job, jobs))
    rows = []
    for pt, st in zip(points, results):
        d = st.to_dict()
        rows.append(dict(pt.row(), shots=st.shots, failures=st.failures, p_logical=d["p_logical"],
                         ci_low=d["ci_low"], ci_high=d["ci_high"], seed=cfg.seed))
    return rows


def rows_to_csv(rows: Sequence[dict], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k]) for k in CSV_COLUMNS})
    return buf.getvalue()


def read_csv(text: str) -> List[dict]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines):
        row = dict(r)
        for k in ("L", "d", "n_e", "shots", "failures", "seed"):
            row[k] = int(row[k])
        for k in ("p", "pe_ratio", "eta_z", "eta_loss", "p_logical", "ci_low", "ci_high"):
            row[k] = float(row[k])
        out.append(row)
    return out


# -- optimal lattice size -------------------------------------------------------------


@dataclass
class PStarResult:
    L_opt: int
    stats: ShotStats
    curve: List[Tuple[int, ShotStats]]
    flagged: bool
    reason: str = ""

    @property
    def pstar(self) -> float:
        return self.stats.p_logical

    def to_dict(self) -> dict:
        return dict(L_opt=self.L_opt, pstar=self.pstar, ci=list(self.stats.interval), shots=self.stats.shots,
                    failures=self.stats.failures, flagged=self.flagged, reason=self.reason,
                    curve=[(L, s.shots, s.failures) for L, s in self.curve])


def find_pstar(
    protocol: str,
    ne_rule,
    noise: NoiseSpec,
    L_values: Sequence[int] = (4, 6, 8, 10, 12),
    shots: int = 10_000,
    seed: int = 0,
    observable_mode: str = "x",
    budgets: Optional[Sequence[int]] = None,
    target_rel_width: float = 0.3,
    weights: str = "probability",
) -> PStarResult:
    """Minimum of ``p_logical`` over ascending even ``L``.

    The sweep stops once the estimate has risen for two consecutive sizes. Running
    out of sizes first, or seeing no failures at the minimum, flags the result.
    """
    if noise.eta_z <= 0 and noise.eta_loss <= 0:
        raise ValueError("find_pstar needs a delay-line error rate > 0")
    curve: List[Tuple[int, ShotStats]] = []
    rises = 0
    for L in sorted(L_values):
        try:
            n_e = ne_for(ne_rule, L)
        except ValueError:
            continue
        if protocol in ("M1", "M2") and not 1 <= n_e <= L // 2:
            continue
        pt = Point(protocol, L, n_e, noise, weights=weights)
        st = run_point(pt, shots, seed, observable_mode, budgets, target_rel_width)
        if curve and st.p_logical > curve[-1][1].p_logical:
            rises += 1
        else:
            rises = 0
        curve.append((L, st))
        if rises >= 2:
            break
    if not curve:
        raise ValueError("no lattice size is compatible with the n_e rule")
    L_opt, best = min(curve, key=lambda t: (t[1].p_logical, t[0]))
    flagged, reason = False, ""
    if rises < 2:
        flagged, reason = True, "sizes exhausted before two consecutive increases"
    if best.failures == 0:
        flagged, reason = True, "no failures observed at the minimum"
    return PStarResult(L_opt, best, curve, flagged, reason)
