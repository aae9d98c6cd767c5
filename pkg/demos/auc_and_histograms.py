"""
ROC-AUC, threshold metrics and radius histograms
================================================
"""

import numpy as np

from knnood import LabeledScores, pr_at_threshold, radius_histogram, roc_auc

rng = np.random.default_rng(2)
inlier = rng.gamma(4.0, 0.25, size=300)
outlier = rng.gamma(4.0, 0.25, size=100) + 1.0

ls = LabeledScores(inlier, outlier)
print("AUC", roc_auc(ls))

# ties count half
print(roc_auc(LabeledScores([0.5], [0.5])), roc_auc(LabeledScores([0.3], [0.1, 0.5])))

for t in (1.0, 1.5, 2.0):
    recall, err = pr_at_threshold(ls, t)
    print(f"t={t}: recall {recall:.3f}, in-distribution flagged {err:.3f}")

h = radius_histogram(inlier, outlier, bin_count=12)
for lo, n_in, n_out in zip(h.edges[:-1], h.count_in, h.count_out):
    print(f"{lo:5.2f} {'#' * (n_in // 4):<20} {'o' * (n_out // 2)}")
