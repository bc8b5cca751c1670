"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package under test; every routine is a direct
loop-level transcription of the textbook definition.
"""
import math


def minmax_columns(rows):
    cols = list(zip(*rows))
    return [(min(c), max(c)) for c in cols]


def norm_value(v, lo, hi, clamp=False):
    if hi == lo:
        return 0.0
    z = (v - lo) / (hi - lo)
    if clamp:
        z = min(1.0, max(0.0, z))
    return z


def relieff_bruteforce(rows, labels, k):
    """ReliefF with every instance sampled once; neighbours by full enumeration."""
    n = len(rows)
    F = len(rows[0])
    bounds = minmax_columns(rows)
    Z = [[norm_value(r[a], *bounds[a]) for a in range(F)] for r in rows]
    prior = {c: labels.count(c) / n for c in set(labels)}
    W = [0.0] * F
    for i in range(n):
        dists = []
        for j in range(n):
            if j == i:
                continue
            d = 0.0
            for a in range(F):
                d += abs(Z[i][a] - Z[j][a])
            dists.append((d, j))
        dists.sort()
        for c in sorted(prior):
            nbrs = [j for _, j in dists if labels[j] == c][:k]
            if not nbrs:
                continue
            for a in range(F):
                mean_diff = sum(abs(Z[i][a] - Z[j][a]) for j in nbrs) / len(nbrs)
                if c == labels[i]:
                    W[a] -= mean_diff
                else:
                    W[a] += prior[c] / (1 - prior[labels[i]]) * mean_diff
    return [w / n for w in W]


def knn_bruteforce(train_rows, train_labels, query, k):
    """All-pairs k-NN on min-max normalised features (query clamped).

    Returns (predicted ordinal, vote fractions over ordinals 1..8).
    """
    F = len(train_rows[0])
    bounds = minmax_columns(train_rows)
    Ztr = [[norm_value(r[a], *bounds[a]) for a in range(F)] for r in train_rows]
    zq = [norm_value(query[a], *bounds[a], clamp=True) for a in range(F)]
    scored = []
    for idx, z in enumerate(Ztr):
        d = 0.0
        for a in range(F):
            diff = zq[a] - z[a]
            d += diff * diff
        scored.append((d, idx))
    scored.sort()
    votes = [0] * 8
    for _, idx in scored[:k]:
        votes[train_labels[idx] - 1] += 1
    best = max(votes)
    pred = votes.index(best) + 1
    return pred, [v / k for v in votes]


def metrics_cellwise(cm):
    """Per-class (tp, fp, fn, precision, recall, f) plus accuracy, cell by cell."""
    n = len(cm)
    out = []
    total = 0
    diag = 0
    for i in range(n):
        for j in range(n):
            total += cm[i][j]
            if i == j:
                diag += cm[i][j]
    for c in range(n):
        tp = cm[c][c]
        fp = 0
        fn = 0
        for r in range(n):
            if r != c:
                fp += cm[r][c]
                fn += cm[c][r]
        p = tp / (tp + fp) if (tp + fp) else 0.0
        rc = tp / (tp + fn) if (tp + fn) else 0.0
        f = (2 * p * rc / (p + rc)) if (p + rc) else 0.0
        out.append((tp, fp, fn, p, rc, f))
    return out, diag / total


def pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def class_correlation_textbook(rows, labels):
    n = len(rows)
    F = len(rows[0])
    out = []
    for a in range(F):
        col = [r[a] for r in rows]
        s = 0.0
        for c in sorted(set(labels)):
            ind = [1.0 if l == c else 0.0 for l in labels]
            s += labels.count(c) / n * abs(pearson(col, ind))
        out.append(s)
    return out


def cfs_merit_textbook(subset, rows, labels):
    r_cf = class_correlation_textbook(rows, labels)
    k = len(subset)
    mean_cf = sum(r_cf[a] for a in subset) / k
    pairs = [(a, b) for i, a in enumerate(subset) for b in subset[i + 1:]]
    if pairs:
        mean_ff = sum(abs(pearson([r[a] for r in rows], [r[b] for r in rows])) for a, b in pairs) / len(pairs)
    else:
        mean_ff = 0.0
    return k * mean_cf / math.sqrt(k + k * (k - 1) * mean_ff)
