"""
Monte-Carlo checks of the finite-sample guarantees
==================================================

Small versions of the trial harnesses.  The full-size runs live in the
acceptance tests and behind ``knnood synth``.
"""

import math

from knnood.theory import (
    ContractionConfig,
    SyntheticDensity,
    TheoremOneConfig,
    ball_mass_check,
    run_contraction_trial,
    run_ranking_trial,
    run_theorem1_trial,
    violation_rate,
)

tri = SyntheticDensity.triangular_1d()

# outliers get large radii, and large radii only occur at low density
cfg = TheoremOneConfig(tri, n=10_000, k=300, trials=5, seed=3)
print("radius threshold, density level:", cfg.thresholds())
print(run_theorem1_trial(cfg).summary())

# denser points get smaller radii once n is large enough
for n in (1000, 10_000):
    rep = run_ranking_trial(tri, n=n, pairs=200, seed=3)
    print(n, math.ceil(n**0.7), rep.pass_rate("preserved"), rep.values("sup_error")[0])

# shrinking the support faster than the outside sharpens the out/in radius ratio
ball = SyntheticDensity.uniform_ball(2)
print(run_contraction_trial(ContractionConfig(ball, n=5000, pairs=200, seed=3)).summary())

# empirical ball counts agree with exact ball masses
box = SyntheticDensity.uniform_box([0, 0], [1, 1])
print("violation rate", violation_rate(ball_mass_check(box, n=20_000, k=60, delta=0.1, balls=200, seed=3)))
