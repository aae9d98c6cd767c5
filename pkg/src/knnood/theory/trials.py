"""Monte-Carlo checks of the k-NN guarantees on synthetic densities.

Each ``run_*`` function returns a :class:`TrialReport`. Trial ``t`` draws all
of its randomness from ``make_rng(seed + t)``, so trials are independent,
can run on a thread pool, and any single trial can be replayed alone.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameter, KTooLarge
from ..knn import build_index
from ..metrics import LabeledScores, roc_auc
from ..tensor_io import format_float
from .bounds import (
    confidence_factor,
    contraction_k_upper_bound,
    epsilon_kn,
    k_lower_bound,
    precision_error_bound,
    theorem1_thresholds,
)
from .densities import SyntheticDensity, make_rng
from .geometry import Ball, Box, contraction_map


@dataclass(frozen=True)
class TrialRow:
    trial: int
    check: str
    passed: bool | None  # None for rows that only carry a measurement
    value: float


@dataclass
class TrialReport:
    name: str
    rows: list[TrialRow] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def add(self, trial, check, passed, value):
        self.rows.append(TrialRow(trial, check, None if passed is None else bool(passed), float(value)))

    @property
    def checks(self) -> list[str]:
        seen = {}
        for row in self.rows:
            seen.setdefault(row.check, None)
        return list(seen)

    def values(self, check: str) -> np.ndarray:
        return np.array([r.value for r in self.rows if r.check == check])

    def passes(self, check: str) -> np.ndarray:
        return np.array([r.passed for r in self.rows if r.check == check and r.passed is not None], dtype=bool)

    def pass_rate(self, check: str) -> float:
        p = self.passes(check)
        if p.size == 0:
            raise KeyError(f"no pass/fail rows for check {check!r}")
        return float(p.mean())

    def summary(self) -> str:
        """One line: pass rate per check plus feasibility flags."""
        parts = []
        for check in self.checks:
            p = self.passes(check)
            if p.size:
                parts.append(f"{check}={p.mean():.4f}")
        flags = [f"{k}={v}" for k, v in self.params.items() if k.startswith("feasible")]
        return f"{self.name}: " + " ".join(parts + flags)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("trial,check,pass,value\n")
        for r in self.rows:
            passed = "" if r.passed is None else str(int(r.passed))
            buf.write(f"{r.trial},{r.check},{passed},{format_float(r.value)}\n")
        buf.write("\n")
        buf.write(f"# report={self.name}\n")
        for key, value in self.params.items():
            text = format_float(value) if isinstance(value, float) else str(value)
            buf.write(f"# {key}={text}\n")
        for check in self.checks:
            p = self.passes(check)
            if p.size:
                buf.write(f"# pass_rate[{check}]={format_float(float(p.mean()))}\n")
        return buf.getvalue()


def _run_trials(fn, seeds, threads):
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, seeds))
    return [fn(s) for s in seeds]


# recall / precision thresholds


@dataclass(frozen=True)
class TheoremOneConfig:
    density: SyntheticDensity
    n: int = 50_000
    k: int = 1000
    delta: float = 0.1
    trials: int = 200
    seed: int = 0
    margin: float = 0.05
    in_probes: int = 1000
    out_probes: int = 200
    grid_probes: int = 1000

    def __post_init__(self):
        if self.density.holder_constant is None:
            raise InvalidParameter(f"{self.density.family} has no Holder constant")
        if not 1 <= self.k <= self.n:
            raise InvalidParameter(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0 < self.delta < 1:
            raise InvalidParameter(f"delta must lie in (0, 1), got {self.delta}")
        if self.trials < 1 or self.margin <= 0:
            raise InvalidParameter("trials must be >= 1 and margin > 0")

    @property
    def k_lower_bound(self) -> float:
        return k_lower_bound(self.delta, self.density.d, self.n)

    @property
    def feasible(self) -> bool:
        return self.k >= self.k_lower_bound

    def thresholds(self) -> tuple[float, float]:
        sd = self.density
        return theorem1_thresholds(sd.holder_constant, sd.holder_exponent, sd.d, self.n, self.k)

    def precision_bound(self) -> float | None:
        sd = self.density
        if sd.boundary_constant is None:
            return None
        return precision_error_bound(
            sd.boundary_constant, sd.holder_constant, sd.holder_exponent, sd.d, self.n, self.k
        )


def run_theorem1_trial(cfg: TheoremOneConfig, threads: int = 1) -> TrialReport:
    """Per trial: (a) every outlier has ``r_k >= r``; (b) every probe with
    ``r_k >= r`` has ``f <= lambda``; (c) the flagged fraction of
    in-distribution probes is within the precision-error bound."""
    sd = cfg.density
    r, lam = cfg.thresholds()
    bound = cfg.precision_bound()
    lo, hi = sd.bounds
    pad = 2.0 * cfg.margin

    def one(t):
        rng = make_rng(cfg.seed + t)
        idx = build_index(sd.sample(cfg.n, rng))
        inliers = sd.sample(cfg.in_probes, rng)
        outliers = sd.sample_outside(cfg.out_probes, cfg.margin, cfg.margin, rng)
        grid = (lo - pad) + (hi - lo + 2 * pad) * rng.random((cfg.grid_probes, sd.d))
        r_in = idx.knn_radius_batch(inliers, cfg.k)
        r_out = idx.knn_radius_batch(outliers, cfg.k)
        r_grid = idx.knn_radius_batch(grid, cfg.k)

        probes = np.vstack([inliers, outliers, grid])
        radii = np.concatenate([r_in, r_out, r_grid])
        flagged = radii >= r
        f_flagged = sd.density_value(probes[flagged]) if flagged.any() else np.zeros(1)
        rows = [
            (t, "recall", bool(np.all(r_out >= r)), float(r_out.min())),
            (t, "low_density", bool(np.all(f_flagged <= lam)), float(f_flagged.max())),
        ]
        err = float(np.mean(r_in >= r))
        rows.append((t, "precision", None if bound is None else err <= bound, err))
        return rows

    report = TrialReport(
        "theorem1",
        params={
            "family": sd.family,
            "d": sd.d,
            "n": cfg.n,
            "k": cfg.k,
            "delta": cfg.delta,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "margin": cfg.margin,
            "in_probes": cfg.in_probes,
            "out_probes": cfg.out_probes,
            "grid_probes": cfg.grid_probes,
            "C_beta": sd.holder_constant,
            "beta": sd.holder_exponent,
            "C_eta": sd.boundary_constant,
            "r": r,
            "lambda": lam,
            "precision_bound": bound,
            "k_lower_bound": cfg.k_lower_bound,
            "feasible_k": cfg.feasible,
        },
    )
    for rows in _run_trials(one, list(range(cfg.trials)), threads):
        for row in rows:
            report.add(*row)
    return report


# ranking preservation


def _gap_pairs(sd, pairs, gap, rng, max_rounds=1000):
    lo, hi = sd.bounds
    need, got1, got2 = pairs, [], []
    for _ in range(max_rounds):
        a = lo + (hi - lo) * rng.random((4 * pairs, sd.d))
        b = lo + (hi - lo) * rng.random((4 * pairs, sd.d))
        fa, fb = sd.density_value(a), sd.density_value(b)
        keep = np.abs(fa - fb) >= gap
        swap = fb > fa
        x1 = np.where(swap[:, None], b, a)[keep]
        x2 = np.where(swap[:, None], a, b)[keep]
        got1.append(x1[:need])
        got2.append(x2[:need])
        need -= min(need, len(x1))
        if need == 0:
            return np.vstack(got1), np.vstack(got2)
    raise InvalidParameter(f"could not find {pairs} pairs with density gap >= {gap}")


def probe_grid(sd: SyntheticDensity, max_points: int = 4096) -> np.ndarray:
    """Regular grid over the support's bounding box, endpoints included."""
    lo, hi = sd.bounds
    m = max(2, int(round(max_points ** (1.0 / sd.d))))
    axes = [np.linspace(lo[i], hi[i], m) for i in range(sd.d)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, sd.d)


def run_ranking_trial(
    sd: SyntheticDensity,
    n: int,
    k: int | None = None,
    gap: float = 0.5,
    pairs: int = 500,
    seed: int = 0,
    delta: float = 0.1,
    threads: int = 1,
) -> TrialReport:
    """Fraction of pairs with ``f(x1) > f(x2) + gap`` whose radii keep the order,
    plus the sup-norm error of the k-NN density estimate on a probe grid."""
    if gap <= 0:
        raise InvalidParameter(f"density gap must be positive, got {gap}")
    if k is None:
        k = math.ceil(n**0.7)
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    rng = make_rng(seed)
    idx = build_index(sd.sample(n, rng))
    x1, x2 = _gap_pairs(sd, pairs, gap, rng)
    r1 = idx.knn_radius_batch(x1, k, workers=threads)
    r2 = idx.knn_radius_batch(x2, k, workers=threads)

    grid = probe_grid(sd)
    f_k = idx.knn_density_batch(grid, k, workers=threads)
    sup_err = float(np.max(np.abs(f_k - sd.density_value(grid))))
    c_dn, rate = epsilon_kn(sd.d, n, k, delta)

    report = TrialReport(
        "ranking",
        params={
            "family": sd.family,
            "d": sd.d,
            "n": n,
            "k": k,
            "gap": gap,
            "pairs": pairs,
            "seed": seed,
            "delta": delta,
            "C_delta_n": c_dn,
            "eps_rate": rate,
            "grid_points": len(grid),
            "feasible_k": k >= k_lower_bound(delta, sd.d, n),
        },
    )
    for j in range(pairs):
        report.add(0, "preserved", r1[j] < r2[j], r2[j] - r1[j])
    report.add(0, "sup_error", None, sup_err)
    return report


# contraction


@dataclass(frozen=True)
class ContractionConfig:
    density: SyntheticDensity
    gamma_in: float = 0.5
    gamma_out: float = 0.8
    r_min: float = 0.5
    n: int = 20_000
    k: int = 1
    pairs: int = 500
    trials: int = 1
    seed: int = 0
    delta: float = 0.1
    x0: np.ndarray | None = None
    c0: float | None = None
    margin_span: float = 1.0  # outlier distance drawn on [r_min, (1 + span) r_min]

    def __post_init__(self):
        if not isinstance(self.density.support, (Ball, Box)) or self.density.density_floor is None:
            raise InvalidParameter("contraction needs a uniform density on a ball or box")
        if not 0 < self.gamma_in < self.gamma_out < 1:
            raise InvalidParameter(
                f"need 0 < gamma_in < gamma_out < 1, got {self.gamma_in}, {self.gamma_out}"
            )
        if self.r_min <= 0:
            raise InvalidParameter(f"r_min must be positive, got {self.r_min}")
        if not 1 <= self.k <= self.n:
            raise InvalidParameter(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        x0 = self.density.support.center if self.x0 is None else np.asarray(self.x0, dtype=np.float64)
        if not self.density.support.contains(x0):
            raise InvalidParameter("anchor x0 must lie in the support")
        object.__setattr__(self, "x0", x0)
        if self.c0 is None:
            object.__setattr__(self, "c0", 2.0 ** (-self.density.d))

    @property
    def k_upper_bound(self) -> float:
        return contraction_k_upper_bound(
            self.c0, self.density.d, self.gamma_in, self.gamma_out, self.r_min, self.n
        )

    @property
    def k_condition(self) -> bool:
        return self.k <= self.k_upper_bound

    @property
    def feasible_lower(self) -> bool:
        return self.k >= k_lower_bound(self.delta, self.density.d, self.n)

    def apply(self, x) -> np.ndarray:
        return contraction_map(self.density.support, self.x0, self.gamma_in, self.gamma_out, x)


def run_contraction_trial(cfg: ContractionConfig, threads: int = 1) -> TrialReport:
    """Out/in radius ratio before vs after the contraction, per probe pair,
    and the AUC of the k-NN radius score before vs after."""
    sd = cfg.density

    def one(t):
        rng = make_rng(cfg.seed + t)
        train = sd.sample(cfg.n, rng)
        x_in = sd.sample(cfg.pairs, rng)
        x_out = sd.sample_outside(cfg.pairs, cfg.r_min, (1.0 + cfg.margin_span) * cfg.r_min, rng)
        before = build_index(train)
        after = build_index(cfg.apply(train))
        rb_in, rb_out = before.knn_radius_batch(x_in, cfg.k), before.knn_radius_batch(x_out, cfg.k)
        ra_in = after.knn_radius_batch(cfg.apply(x_in), cfg.k)
        ra_out = after.knn_radius_batch(cfg.apply(x_out), cfg.k)
        ratio_before = rb_out / rb_in
        ratio_after = ra_out / ra_in
        frac = float(np.mean(ratio_after > ratio_before))
        auc_before = roc_auc(LabeledScores(rb_in, rb_out))
        auc_after = roc_auc(LabeledScores(ra_in, ra_out))
        return [
            (t, "ratio", frac == 1.0, frac),
            (t, "auc_before", None, auc_before),
            (t, "auc_after", None, auc_after),
            (t, "auc_improved", auc_after >= auc_before, auc_after - auc_before),
            (t, "max_in_radius", None, float(rb_in.max())),
        ]

    report = TrialReport(
        "contraction",
        params={
            "family": sd.family,
            "d": sd.d,
            "n": cfg.n,
            "k": cfg.k,
            "gamma_in": cfg.gamma_in,
            "gamma_out": cfg.gamma_out,
            "r_min": cfg.r_min,
            "pairs": cfg.pairs,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "c0": cfg.c0,
            "k_upper_bound": cfg.k_upper_bound,
            "feasible_k_upper": cfg.k_condition,
            "feasible_k_lower": cfg.feasible_lower,
        },
    )
    for rows in _run_trials(one, list(range(cfg.trials)), threads):
        for row in rows:
            report.add(*row)
    return report


# uniform convergence of ball masses


def ball_mass_check(
    sd: SyntheticDensity,
    n: int,
    k: int,
    delta: float,
    trials: int = 1,
    seed: int = 0,
    balls: int = 1000,
    threads: int = 1,
) -> TrialReport:
    """Compare exact ball masses with empirical counts on random balls.

    The three implications checked, with ``C = C_{delta,n}``:

    * ``F(B) >= C sqrt(d log n) / n``  implies ``F_n(B) > 0``
    * ``F(B) >= k/n + C sqrt(k) / n``  implies ``F_n(B) >= k/n``
    * ``F(B) <= k/n - C sqrt(k) / n``  implies ``F_n(B) < k/n``

    A ball fails if any implication it triggers is violated.
    """
    d = sd.d
    if k < d * math.log(n):
        raise InvalidParameter(f"need k >= d log n = {d * math.log(n):.2f}, got k={k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    c = confidence_factor(delta, d, n)
    t_any = c * math.sqrt(d * math.log(n)) / n
    t_hi = k / n + c * math.sqrt(k) / n
    t_lo = k / n - c * math.sqrt(k) / n
    lo, hi = sd.bounds
    span = hi - lo
    diag = float(np.linalg.norm(span))

    def one(t):
        rng = make_rng(seed + t)
        idx = build_index(sd.sample(n, rng))
        centers = (lo - 0.25 * span) + 1.5 * span * rng.random((balls, d))
        radii = diag * np.exp(rng.uniform(math.log(1e-3), 0.0, size=balls))
        counts = idx.count_in_ball(centers, radii, workers=1)
        rows = []
        for j in range(balls):
            F = sd.ball_mass(centers[j], radii[j])
            Fn = counts[j] / n
            ok = not (F >= t_any and not Fn > 0)
            ok = ok and not (F >= t_hi and not Fn >= k / n)
            ok = ok and not (F <= t_lo and not Fn < k / n)
            rows.append((t, "ball", ok, F))
        return rows

    report = TrialReport(
        "ballmass",
        params={
            "family": sd.family,
            "d": d,
            "n": n,
            "k": k,
            "delta": delta,
            "trials": trials,
            "balls": balls,
            "seed": seed,
            "C_delta_n": c,
            "mass_nonempty": t_any,
            "mass_upper": t_hi,
            "mass_lower": t_lo,
        },
    )
    masses = []
    for rows in _run_trials(one, list(range(trials)), threads):
        for row in rows:
            report.add(*row)
            masses.append(row[3])
    masses = np.array(masses)
    report.params["triggered_nonempty"] = int(np.sum(masses >= t_any))
    report.params["triggered_upper"] = int(np.sum(masses >= t_hi))
    report.params["triggered_lower"] = int(np.sum(masses <= t_lo))
    return report


def violation_rate(report: TrialReport) -> float:
    return 1.0 - report.pass_rate("ball")
