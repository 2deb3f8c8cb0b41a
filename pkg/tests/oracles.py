"""Independent reference computations used by the tests.

Everything here is written with plain loops and the math module so that it
shares no code path with the package under test.
"""

import itertools
import math


def topsis_oracle(X, w, directions=None, weighted=True):
    n, m = len(X), len(X[0])
    directions = directions or ["benefit"] * m
    norms = []
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += X[i][j] ** 2
        norms.append(math.sqrt(s))
    V = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            x = X[i][j] / norms[j] if norms[j] > 0 else 0.0
            V[i][j] = x * w[j] if weighted else x
    best, worst = [], []
    for j in range(m):
        col = [V[i][j] for i in range(n)]
        if directions[j] == "benefit":
            best.append(max(col))
            worst.append(min(col))
        else:
            best.append(min(col))
            worst.append(max(col))
    out = []
    for i in range(n):
        dp = math.sqrt(sum((V[i][j] - best[j]) ** 2 for j in range(m)))
        dm = math.sqrt(sum((V[i][j] - worst[j]) ** 2 for j in range(m)))
        out.append(0.5 if dp + dm == 0 else dm / (dp + dm))
    return out


def average_ranks(x):
    """Rank i = 1 + (#values below) + (#ties, excluding itself) / 2."""
    out = []
    for v in x:
        below = sum(1 for u in x if u < v)
        equal = sum(1 for u in x if u == v)
        out.append(below + (equal + 1) / 2.0)
    return out


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)


def spearman_oracle(x, y):
    return pearson(average_ranks(list(x)), average_ranks(list(y)))


def permutation_p(x, y):
    rx, ry = average_ranks(list(x)), average_ranks(list(y))
    rho = pearson(rx, ry)
    hits = total = 0
    for perm in itertools.permutations(ry):
        total += 1
        if abs(pearson(rx, list(perm))) >= abs(rho) - 1e-12:
            hits += 1
    return hits / total


def logloss_oracle(theta, X, y):
    total = 0.0
    for row, label in zip(X, y):
        z = theta[0] + sum(t * v for t, v in zip(theta[1:], row))
        h = 1.0 / (1.0 + math.exp(-z))
        h = min(max(h, 1e-15), 1 - 1e-15)
        total += label * math.log(h) + (1 - label) * math.log(1 - h)
    return -total / len(y)


def fd_gradient(f, theta, step=1e-5):
    g = []
    for j in range(len(theta)):
        up = list(theta)
        dn = list(theta)
        up[j] += step
        dn[j] -= step
        g.append((f(up) - f(dn)) / (2 * step))
    return g


def fd_hessian(f, theta, step=1e-4):
    """Central second differences of a scalar function."""
    k = len(theta)
    H = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            def at(di, dj):
                t = list(theta)
                t[i] += di
                t[j] += dj
                return f(t)
            H[i][j] = (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4 * step * step)
    return H


def invert(M):
    """Gauss-Jordan inverse with partial pivoting."""
    n = len(M)
    A = [list(map(float, row)) + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(A[r][c]))
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [v / piv for v in A[c]]
        for r in range(n):
            if r != c:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return [row[n:] for row in A]


def confusion_oracle(y, pred):
    counts = {(a, b): 0 for a in (0, 1) for b in (0, 1)}
    for a, b in zip(y, pred):
        counts[(int(a), int(b))] += 1
    row0 = counts[(0, 0)] + counts[(0, 1)]
    row1 = counts[(1, 0)] + counts[(1, 1)]
    return (
        counts,
        100.0 * counts[(0, 0)] / row0 if row0 else float("nan"),
        100.0 * counts[(1, 1)] / row1 if row1 else float("nan"),
        100.0 * (counts[(0, 0)] + counts[(1, 1)]) / len(y),
    )
