"""Scalar, loop-based SMD reference used only as a cross-check.

Written straight from the published SMD definitions with plain ``math``;
shares no code with the vectorized package implementation.
"""

import math


def _cv(slacks):
    return sum(max(0.0, g) for g in slacks)


def _split(pid, xu, xl, p, q, r, s):
    k = q + s
    return list(xu[:p]), list(xu[p:p + r]), list(xl[:k]), list(xl[k:k + r])


def _ring(t):
    return t - math.floor(t + 0.5)


def _cubic(vec):
    # constraint x_j >= sum_{i != j} x_i^3 written as slack <= 0
    out = []
    for j, xj in enumerate(vec):
        total = 0.0
        for i, xi in enumerate(vec):
            if i != j:
                total += xi ** 3
        out.append(total - xj)
    return out


def smd(pid, xu, xl, p, q, r, s=0):
    """Return ((F, upper_cv), (f, lower_cv)) for one point."""
    u1, u2, l1, l2 = _split(pid, xu, xl, p, q, r, s)
    sq = lambda v: sum(a * a for a in v)
    G, g = [], []

    if pid == 1:
        t = [b - math.tan(c) for b, c in zip(u2, l2)]
        F = sq(u1) + sq(l1) + sq(u2) + sq(t)
        f = sq(u1) + sq(l1) + sq(t)
    elif pid == 2:
        t = [b - math.log(c) for b, c in zip(u2, l2)]
        F = sq(u1) - sq(l1) + sq(u2) - sq(t)
        f = sq(u1) + sq(l1) + sq(t)
    elif pid == 3:
        t = [b * b - math.tan(c) for b, c in zip(u2, l2)]
        F = sq(u1) + sq(l1) + sq(u2) + sq(t)
        f = sq(u1) + q + sum(a * a - math.cos(2 * math.pi * a) for a in l1) + sq(t)
    elif pid == 4:
        t = [abs(b) - math.log(1 + c) for b, c in zip(u2, l2)]
        F = sq(u1) - sq(l1) + sq(u2) - sq(t)
        f = sq(u1) + q + sum(a * a - math.cos(2 * math.pi * a) for a in l1) + sq(t)
    elif pid == 5:
        rosen = sum((l1[i + 1] - l1[i] ** 2) ** 2 + (l1[i] - 1) ** 2 for i in range(q - 1))
        t = [abs(b) - c * c for b, c in zip(u2, l2)]
        F = sq(u1) - rosen + sq(u2) - sq(t)
        f = sq(u1) + rosen + sq(t)
    elif pid == 6:
        t = [b - c for b, c in zip(u2, l2)]
        F = sq(u1) - sq(l1[:q]) + sq(l1[q:]) + sq(u2) - sq(t)
        pairs = sum((l1[i + 1] - l1[i]) ** 2 for i in range(q, q + s - 1, 2))
        f = sq(u1) + sq(l1[:q]) + pairs + sq(t)
    elif pid == 7:
        prod = 1.0
        for i, a in enumerate(u1, start=1):
            prod *= math.cos(a / math.sqrt(i))
        t = [b - math.log(c) for b, c in zip(u2, l2)]
        F = 1 + sq(u1) / 400 - prod - sq(l1) + sq(u2) - sq(t)
        f = sum(a ** 3 for a in u1) + sq(l1) + sq(t)
    elif pid == 8:
        F1 = (20 + math.e - 20 * math.exp(-0.2 * math.sqrt(sq(u1) / p))
              - math.exp(sum(math.cos(2 * math.pi * a) for a in u1) / p))
        rosen = sum((l1[i + 1] - l1[i] ** 2) ** 2 + (l1[i] - 1) ** 2 for i in range(q - 1))
        t = [b - c ** 3 for b, c in zip(u2, l2)]
        F = F1 - rosen + sq(u2) - sq(t)
        f = sum(abs(a) for a in u1) + rosen + sq(t)
    elif pid == 9:
        t = [b - math.log(1 + c) for b, c in zip(u2, l2)]
        F = sq(u1) - sq(l1) + sq(u2) - sq(t)
        f = sq(u1) + sq(l1) + sq(t)
        G.append(_ring(sq(u1) + sq(u2)))
        g.append(_ring(sq(l1) + sq(l2)))
    elif pid == 10:
        t = [b - math.tan(c) for b, c in zip(u2, l2)]
        F = sum((a - 2) ** 2 for a in u1) + sq(l1) + sum((b - 2) ** 2 for b in u2) - sq(t)
        f = sq(u1) + sum((a - 2) ** 2 for a in l1) + sq(t)
        G += _cubic(u1 + u2)
        g += _cubic(l1)
    elif pid == 11:
        t = [b - math.log(c) for b, c in zip(u2, l2)]
        F = sq(u1) - sq(l1) + sq(u2) - sq(t)
        f = sq(u1) + sq(l1) + sq(t)
        G += [1 / math.sqrt(r) + math.log(c) - b for b, c in zip(u2, l2)]
        g.append(1 - sq(t))
    elif pid == 12:
        t = [b - math.tan(c) for b, c in zip(u2, l2)]
        F = (sum((a - 2) ** 2 for a in u1) + sq(l1) + sum((b - 2) ** 2 for b in u2)
             + sum(math.tan(abs(c)) for c in l2) - sq(t))
        f = sq(u1) + sum((a - 2) ** 2 for a in l1) + sq(t)
        G += [-x for x in t]
        G += _cubic(u1 + u2)
        g.append(1 - sq(t))
        g += _cubic(l1)
    else:
        raise ValueError(pid)
    return (F, _cv(G)), (f, _cv(g))
