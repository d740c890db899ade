"""Independent brute-force oracles for verifying selector replacement steps.

These deliberately avoid the library's hyperplane/kernel code paths: manifold
distances come from projecting onto the affine hull of the fixed points, and
all means/minima are recomputed directly from definitions.
"""

import numpy as np


def affine_hull_distance(point, anchors):
    """Distance from ``point`` to the affine hull of ``anchors`` rows."""
    p0 = anchors[0]
    B = (anchors[1:] - p0).T  # d x (k-1) basis of the hull directions
    v = point - p0
    if B.shape[1] == 0:
        return float(np.linalg.norm(v))
    coef, *_ = np.linalg.lstsq(B, v, rcond=None)
    return float(np.linalg.norm(v - B @ coef))


def ratio_objective_choice(X, fixed, use_repr=True):
    """Exhaustive argmin of the ratio objective.

    Candidates are every sample not pinned on the manifold: the other
    selected samples are the manifold's defining points, and the slot's own
    occupant competes for its place."""
    pinned = set(int(i) for i in fixed)
    candidates = [i for i in range(X.shape[0]) if i not in pinned]
    anchors = X[np.asarray(fixed, dtype=int)]
    best_idx, best_score = None, None
    for c in candidates:
        dist = affine_hull_distance(X[c], anchors)
        if use_repr:
            if dist == 0.0:
                score = float("inf")
            else:
                num = np.sqrt(np.mean(
                    np.linalg.norm(X - X[c], axis=1) ** 2))
                score = num / dist
        else:
            score = -dist
        if best_score is None or score < best_score:
            best_idx, best_score = c, score
    return best_idx


def cluster_score_choice(X, members, others, use_repr=True):
    """Exhaustive argmax of R*D (or D) over the cluster members."""
    others = np.asarray(others, dtype=int)
    best_idx, best_score = None, None
    for c in (int(i) for i in members):
        d_min = float(np.linalg.norm(X[others] - X[c], axis=1).min())
        if use_repr:
            ssd = float((np.linalg.norm(X[np.asarray(members, dtype=int)]
                                        - X[c], axis=1) ** 2).sum())
            if d_min == 0.0:
                score = 0.0
            elif ssd == 0.0:
                score = float("inf")
            else:
                score = len(members) / ssd * d_min
        else:
            score = d_min
        if best_score is None or score > best_score:
            best_idx, best_score = c, score
    return best_idx


def verify_trace(X, trace, use_repr=True):
    """Replay a recorded selection trace against the exhaustive oracles.

    Returns (checked_steps, mismatches)."""
    checked = 0
    mismatches = []
    for step in trace:
        if step["phase"] == "case_equal":
            expect = ratio_objective_choice(X, step["fixed"], use_repr)
        elif step["phase"] == "case_greater":
            others = [i for k, i in enumerate(step["before"])
                      if k != step["slot"]]
            expect = cluster_score_choice(X, step["cluster"], others, use_repr)
        else:
            continue
        checked += 1
        if expect != step["chosen"]:
            mismatches.append((step, expect))
    return checked, mismatches
