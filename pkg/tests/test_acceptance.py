"""Acceptance criteria, one PASS/FAIL line each.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and repeated in the
terminal summary.  Tolerances and sizes are pinned; do not loosen them.
"""

import math
import time

import numpy as np
import pytest

import conftest
from knnood.cli import main
from knnood.knn import build_index
from knnood.metrics import LabeledScores, roc_auc, roc_auc_pairs
from knnood.scoring import estimate_normalizer, layer_statistic, loo_statistic
from knnood.theory import (
    ContractionConfig,
    SyntheticDensity,
    TheoremOneConfig,
    ball_mass_check,
    precision_error_bound,
    run_contraction_trial,
    run_ranking_trial,
    run_theorem1_trial,
    violation_rate,
)
from oracles import boundary_constant_1d, pair_auc_counts, sorted_radius
from data import regenerate


def record(tag, passed, detail):
    line = f"[{tag}] {'PASS' if passed else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


# AC1: kd-tree and brute force give the same radii


def test_ac1_index_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    cases, worst = 0, 0.0
    for d in (1, 2, 8, 32):
        for _ in range(25):
            n = int(rng.integers(1, 2001))
            pts = rng.standard_normal((n, d))
            if n > 4:  # inject exact duplicates so ties are exercised
                pts[: n // 5] = pts[rng.integers(0, n, size=n // 5)]
            brute, tree = build_index(pts, "brute"), build_index(pts, "kdtree")
            queries = np.vstack([rng.standard_normal((5, d)) * 1.5, pts[rng.integers(0, n, size=5)]])
            for q in queries:
                k = int(rng.integers(1, n + 1))
                a = brute.knn_radius(q, k).radius
                b = tree.knn_radius(q, k).radius
                if a != b:
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
                cases += 1
    elapsed = time.perf_counter() - start
    record("AC1", cases >= 1000 and worst <= 1e-12 and elapsed < 60,
           f"index equivalence: {cases} cases, max rel diff {worst:.3g} (tol 1e-12), {elapsed:.1f}s (limit 60s)")


# AC2: leave-one-out radius equals the radius against the set without the point


def test_ac2_loo_identity():
    rng = np.random.default_rng(202)
    checked, mismatches = 0, 0
    for s in range(50):
        n = int(rng.integers(7, 201))
        d = int(rng.choice([1, 2, 3, 8]))
        pts = np.round(rng.standard_normal((n, d)), 1 if s % 2 else 6)  # coarse rounding gives ties
        idx = build_index(pts)
        for i in range(n):
            rest = np.delete(pts, i, axis=0)
            sub = build_index(rest)
            for k in range(1, 6):
                want = sub.knn_radius(pts[i], k).radius
                got = idx.loo_radius(i, k)
                mismatches += got != want
                checked += 1
        if s < 5:  # independent sort oracle on a few sets
            for i in range(0, n, 7):
                rest = np.delete(pts, i, axis=0).tolist()
                for k in range(1, 6):
                    mismatches += not math.isclose(
                        idx.loo_radius(i, k), sorted_radius(rest, pts[i].tolist(), k), rel_tol=1e-12
                    )
    record("AC2", mismatches == 0, f"leave-one-out identity: {checked} (i, k) pairs on 50 sets, {mismatches} mismatches")


# AC3: scoring invariances


def test_ac3_scoring_invariances():
    rng = np.random.default_rng(303)
    worst_scale, perm_exact, worst_norm = 0.0, True, 0.0
    for trial in range(20):
        n, d, k = int(rng.integers(20, 400)), int(rng.integers(1, 12)), int(rng.integers(1, 6))
        strategy = ("brute", "kdtree")[trial % 2]
        tr = rng.standard_normal((n, d))
        q = rng.standard_normal((25, d)) * 2
        idx = build_index(tr, strategy)
        norm = estimate_normalizer(idx, k)
        base = layer_statistic(idx, norm, q, k)

        s = float(np.exp(rng.uniform(-6, 6)))
        scaled = build_index(tr * s, strategy)
        t_scaled = layer_statistic(scaled, estimate_normalizer(scaled, k), q * s, k)
        nz = base != 0
        worst_scale = max(worst_scale, float(np.max(np.abs(t_scaled[nz] / base[nz] - 1), initial=0)))

        perm = build_index(tr[rng.permutation(n)], strategy)
        pnorm = estimate_normalizer(perm, k)
        perm_exact &= pnorm.q_hat == norm.q_hat
        perm_exact &= bool(np.array_equal(layer_statistic(perm, pnorm, q, k), base))

        worst_norm = max(worst_norm, abs(math.fsum(loo_statistic(idx, norm)) / n - 1))
    passed = worst_scale <= 1e-9 and perm_exact and worst_norm <= 1e-12
    record("AC3", passed,
           f"scoring invariances: scale rel {worst_scale:.3g} (tol 1e-9), permutation exact={perm_exact}, "
           f"LOO mean - 1 = {worst_norm:.3g} (tol 1e-12)")


# AC4: rank AUC against pair counting


def test_ac4_auc_exact():
    rng = np.random.default_rng(404)
    mismatch, dup_mismatch = 0, 0
    for _ in range(200):
        a, b = int(rng.integers(1, 501)), int(rng.integers(1, 501))
        levels = int(rng.integers(2, 60))  # few levels, so many ties
        ins = rng.integers(0, levels, size=a) / 7.0
        outs = rng.integers(0, levels, size=b) / 7.0 + rng.integers(0, 3)
        ls = LabeledScores(ins, outs)
        auc = roc_auc(ls)
        mismatch += auc != pair_auc_counts(ins, outs) or auc != roc_auc_pairs(ls)
        c = int(rng.integers(2, 6))
        dup_mismatch += roc_auc(LabeledScores(np.tile(ins, c), outs)) != auc
        dup_mismatch += roc_auc(LabeledScores(ins, np.repeat(outs, c))) != auc
    record("AC4", mismatch == 0 and dup_mismatch == 0,
           f"AUC exact on 200 tied score sets: {mismatch} oracle mismatches, {dup_mismatch} duplication mismatches")


# AC5: threshold guarantees at desk scale


def test_ac5_theorem1_desk_scale():
    sd = SyntheticDensity.triangular_1d()
    lo, hi = sd.bounds
    c_eta = boundary_constant_1d(lambda x: float(sd.density_value(np.array([[x]]))[0]), lo[0], hi[0], sd.peak)
    cfg = TheoremOneConfig(sd, n=50_000, k=1000, delta=0.1, trials=200, seed=0, margin=0.05)
    start = time.perf_counter()
    rep = run_theorem1_trial(cfg, threads=1)
    elapsed = time.perf_counter() - start
    bound = precision_error_bound(c_eta, sd.holder_constant, sd.holder_exponent, sd.d, cfg.n, cfg.k)
    recall, low = rep.pass_rate("recall"), rep.pass_rate("low_density")
    precision = float(np.mean(rep.values("precision") <= bound))
    passed = min(recall, low, precision) >= 0.95 and elapsed <= 300
    record("AC5", passed,
           f"threshold guarantees: recall {recall:.3f}, low-density {low:.3f}, precision-error<=bound "
           f"{precision:.3f} (each >=0.95; C_eta={c_eta:.4f} by quadrature, bound {bound:.4f}), "
           f"{elapsed:.0f}s (limit 300s)")


# AC6: ranking preservation improves with n


def test_ac6_ranking_trend():
    sd = SyntheticDensity.triangular_1d()
    fracs, errs = [], []
    for n in (10**3, 10**4, 10**5):
        rep = run_ranking_trial(sd, n=n, k=math.ceil(n**0.7), gap=0.5, pairs=500, seed=6)
        fracs.append(rep.pass_rate("preserved"))
        errs.append(float(rep.values("sup_error")[0]))
    nondecreasing = fracs[0] <= fracs[1] <= fracs[2]
    decreasing = errs[0] > errs[1] > errs[2]
    passed = nondecreasing and fracs[2] >= 0.99 and decreasing
    record("AC6", passed,
           "ranking trend over n=1e3,1e4,1e5: preserved " + ", ".join(f"{f:.3f}" for f in fracs)
           + " (nondecreasing, last >=0.99); sup error " + ", ".join(f"{e:.3f}" for e in errs) + " (decreasing)")


# AC7: contraction sharpens the radius ratio


def test_ac7_contraction():
    cfg = ContractionConfig(SyntheticDensity.uniform_ball(2), gamma_in=0.5, gamma_out=0.8, r_min=0.5,
                            n=20_000, k=1, pairs=500, seed=7)
    start = time.perf_counter()
    rep = run_contraction_trial(cfg)
    elapsed = time.perf_counter() - start
    frac = float(rep.values("ratio")[0])
    before, after = float(rep.values("auc_before")[0]), float(rep.values("auc_after")[0])
    passed = cfg.k_condition and frac == 1.0 and after >= before and elapsed <= 120
    record("AC7", passed,
           f"contraction: k-condition {cfg.k_condition} (k<= {cfg.k_upper_bound:.1f}), ratio increased for "
           f"{frac:.3f} of 500 pairs (need 1.0), AUC {before:.4f} -> {after:.4f}, {elapsed:.1f}s (limit 120s)")


# AC8: ball masses against empirical counts


def test_ac8_ball_mass():
    rep = ball_mass_check(SyntheticDensity.uniform_box([0, 0], [1, 1]), n=10**5, k=200, delta=0.1,
                          balls=1000, seed=8)
    rate = violation_rate(rep)
    triggered = (rep.params["triggered_nonempty"], rep.params["triggered_upper"], rep.params["triggered_lower"])
    record("AC8", rate <= 0.1,
           f"ball-mass implications on 1000 balls: violation rate {rate:.3f} (limit 0.1), "
           f"triggered (nonempty, upper, lower) = {triggered}")


# AC9: golden outputs


def test_ac9_golden_files(tmp_path):
    golden = regenerate.GOLDEN
    diffs = []
    out = tmp_path / "scorecard.csv"
    main(regenerate.SCORE_COMMAND + ["--out", str(out)])
    if out.read_bytes() != (golden / "scorecard.csv").read_bytes():
        diffs.append("scorecard.csv")
    for name, argv in regenerate.SYNTH_COMMANDS.items():
        out = tmp_path / name
        main(argv + ["--out", str(out), "--threads", "1"])
        if out.read_bytes() != (golden / name).read_bytes():
            diffs.append(name)
    record("AC9", not diffs, f"golden files byte-identical: 1 scorecard + {len(regenerate.SYNTH_COMMANDS)} "
           f"trial reports, differing: {diffs or 'none'}")
