"""Independent scalar reference implementations used as test oracles.

Everything here is deliberately written with plain Python loops and the
math module so it shares no code path with the package's vectorized
implementations.
"""

import math


def unit(vector):
    norm = math.sqrt(sum(x * x for x in vector))
    return [x / norm for x in vector]


def cosine(a, b):
    ua, ub = unit(a), unit(b)
    return sum(x * y for x, y in zip(ua, ub))


def cs_scores(targets, refs, ref_classes, num_classes):
    """Mean cosine of each target to每 class's reference rows."""
    out = []
    for t in targets:
        row = []
        for c in range(num_classes):
            sims = [cosine(t, r) for r, rc in zip(refs, ref_classes) if rc == c]
            row.append(sum(sims) / len(sims))
        out.append(row)
    return out


def csea_scores(targets, refs, ref_classes, num_classes):
    """Cosine of each target to the mean of each class's unit-normalized rows."""
    dim = len(refs[0])
    centroids = []
    for c in range(num_classes):
        members = [unit(r) for r, rc in zip(refs, ref_classes) if rc == c]
        centroids.append([sum(m[d] for m in members) / len(members) for d in range(dim)])
    return [[cosine(t, centroid) for centroid in centroids] for t in targets]


def argmax(row):
    best = 0
    for i in range(1, len(row)):
        if row[i] > row[best]:
            best = i
    return best


def predict(scores):
    return [argmax(row) for row in scores]


def two_step_scores(score_fn, holdout, labeled, labeled_classes, unlabeled, num_classes):
    """Pseudo-label unlabeled rows with score_fn, then rescore holdout."""
    if unlabeled:
        pseudo = predict(score_fn(unlabeled, labeled, labeled_classes, num_classes))
        refs = list(labeled) + list(unlabeled)
        classes = list(labeled_classes) + pseudo
    else:
        refs, classes = list(labeled), list(labeled_classes)
    return score_fn(holdout, refs, classes, num_classes)


def affinity(points, sigma):
    n = len(points)
    w = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d2 = sum((a - b) ** 2 for a, b in zip(points[i], points[j]))
            w[i][j] = math.exp(-d2 / (sigma * sigma))
    return w


def degrees(w):
    return [sum(row) for row in w]


def operator(w):
    deg = degrees(w)
    n = len(w)
    return [
        [w[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)]
        for i in range(n)
    ]


def init_labels(n, num_classes, known):
    y = [[0.0] * num_classes for _ in range(n)]
    for node, cls in known:
        y[node][cls] = 1.0
    for c in range(num_classes):
        total = sum(y[i][c] for i in range(n))
        if total > 0:
            for i in range(n):
                y[i][c] /= total
    return y


def lp_iterate(s, y0, alpha, iterations=20000, tolerance=1e-12):
    """Plain-loop fixed point of y <- alpha * S y + (1 - alpha) * y0."""
    n, num_classes = len(y0), len(y0[0])
    y = [row[:] for row in y0]
    for _ in range(iterations):
        nxt = [
            [
                alpha * sum(s[i][k] * y[k][c] for k in range(n))
                + (1.0 - alpha) * y0[i][c]
                for c in range(num_classes)
            ]
            for i in range(n)
        ]
        delta = max(
            abs(nxt[i][c] - y[i][c]) for i in range(n) for c in range(num_classes)
        )
        y = nxt
        if delta < tolerance:
            break
    return y


def lp_holdout_scores(labeled, labeled_classes, unlabeled, holdout, num_classes,
                      sigma, alpha):
    """One-graph label propagation, reading off the holdout block."""
    points = list(labeled) + list(unlabeled) + list(holdout)
    s = operator(affinity(points, sigma))
    y0 = init_labels(len(points), num_classes, list(enumerate(labeled_classes)))
    y = lp_iterate(s, y0, alpha)
    start = len(labeled) + len(unlabeled)
    return y[start:]


def two_step_lp_holdout_scores(labeled, labeled_classes, unlabeled, holdout,
                               num_classes, sigma, alpha):
    """Step 1 over labeled+unlabeled; step 2 over all rows with pseudo-labels."""
    points1 = list(labeled) + list(unlabeled)
    s1 = operator(affinity(points1, sigma))
    y01 = init_labels(len(points1), num_classes, list(enumerate(labeled_classes)))
    y1 = lp_iterate(s1, y01, alpha)
    pseudo = predict(y1[len(labeled):])

    points2 = list(labeled) + list(unlabeled) + list(holdout)
    known = list(enumerate(labeled_classes)) + [
        (len(labeled) + i, c) for i, c in enumerate(pseudo)
    ]
    s2 = operator(affinity(points2, sigma))
    y02 = init_labels(len(points2), num_classes, known)
    y2 = lp_iterate(s2, y02, alpha)
    return y2[len(points1):]
