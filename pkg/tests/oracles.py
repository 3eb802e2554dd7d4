"""Deliberately naive reference implementations used as test oracles.

Nothing here imports from wavemyo: each function re-derives its formula with
explicit loops (or a dense matrix, or exact rationals) so it cannot share a
bug with the code under test.
"""

import math
from fractions import Fraction


def _abs_diffs(x):
    return [x[n + 1] - x[n] for n in range(len(x) - 1)]


def naive_feature(kind, x, myop_t=None, wamp_t=None, ialv_offset=1.0, ialv_floor=1e-12):
    x = [float(v) for v in x]
    N = len(x)
    if myop_t is None or wamp_t is None:
        mean = sum(x) / N
        std = math.sqrt(sum((v - mean) ** 2 for v in x) / N)
        myop_t = 0.2 * std if myop_t is None else myop_t
        wamp_t = 0.2 * std if wamp_t is None else wamp_t
    d = _abs_diffs(x)
    if kind == "IEMG":
        return math.fsum(abs(v) for v in x)
    if kind == "MAV":
        return math.fsum(abs(v) for v in x) / N
    if kind == "SSI":
        return math.fsum(v * v for v in x)
    if kind == "RMS":
        return math.sqrt(math.fsum(v * v for v in x) / N)
    if kind == "VAR":
        return math.fsum(v * v for v in x) / (N - 1)
    if kind == "MYOP":
        count = 0
        for v in x:
            if abs(v) > myop_t:
                count += 1
        return count / N
    if kind == "WL":
        return math.fsum(abs(v) for v in d)
    if kind == "DAMV":
        return math.fsum(abs(v) for v in d) / (N - 1)
    if kind == "M2":
        return math.fsum(v * v for v in d)
    if kind == "DVARV":
        return math.fsum(v * v for v in d) / (N - 2)
    if kind == "DASDV":
        return math.sqrt(math.fsum(v * v for v in d) / (N - 1))
    if kind == "WAMP":
        count = 0
        for v in d:
            if abs(v) > wamp_t:
                count += 1
        return float(count)
    if kind == "IASD":
        d1 = _abs_diffs(x)
        return math.fsum(abs(d1[n + 1] - d1[n]) for n in range(N - 2))
    if kind == "IATD":
        d1 = _abs_diffs(x)
        d2 = [d1[n + 1] - d1[n] for n in range(N - 2)]
        return math.fsum(abs(d2[n + 1] - d2[n]) for n in range(N - 3))
    if kind == "IEAV":
        return math.fsum(math.exp(abs(v)) for v in x)
    if kind == "IALV":
        return math.fsum(abs(math.log(max(v + ialv_offset, ialv_floor))) for v in x)
    if kind == "IE":
        return math.fsum(math.exp(v) for v in x)
    raise KeyError(kind)


def haar_matrix(n):
    """Dense single-level orthonormal Haar analysis matrix: rows 0..n/2-1 approximation, rest detail."""
    s = 1 / math.sqrt(2)
    m = [[0.0] * n for _ in range(n)]
    for k in range(n // 2):
        m[k][2 * k] = s
        m[k][2 * k + 1] = s
        m[n // 2 + k][2 * k] = s
        m[n // 2 + k][2 * k + 1] = -s
    return m


def matvec(m, x):
    return [sum(m[i][j] * x[j] for j in range(len(x))) for i in range(len(m))]


def naive_window_count(n_samples, window, stride):
    count, start = 0, 0
    while start + window <= n_samples:
        count += 1
        start += stride
    return count


def _argmax_lowest(values):
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best + 1


def oracle_sum(posteriors):
    C = len(posteriors[0])
    return _argmax_lowest([sum((Fraction(p[i]) for p in posteriors), Fraction(0)) for i in range(C)])


def oracle_product(posteriors):
    C = len(posteriors[0])
    scores = []
    for i in range(C):
        prod = Fraction(1)
        for p in posteriors:
            prod *= Fraction(p[i])
        scores.append(prod)
    return _argmax_lowest(scores)


def oracle_majority(posteriors):
    C = len(posteriors[0])
    votes = [0] * C
    for p in posteriors:
        votes[_argmax_lowest(list(p)) - 1] += 1
    return _argmax_lowest(votes)


def grid_posteriors(C, denominator):
    """All length-C vectors of multiples of 1/denominator that sum to one, as Fractions."""
    out = []

    def rec(prefix, remaining):
        if len(prefix) == C - 1:
            out.append(tuple(Fraction(v, denominator) for v in prefix + [remaining]))
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v)

    rec([], denominator)
    return out
