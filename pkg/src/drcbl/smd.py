"""SMD1-SMD12 scalable bilevel test problems (Sinha, Malo and Deb, 2014).

Variables are split into groups: ``x_u = (xu1[p], xu2[r])`` and
``x_l = (xl1[q], xl2[r])``; SMD6 has ``xl1`` of length ``q + s``. The
upper-only group ``xu1`` controls difficulty in convergence, ``xl1`` is
the lower-only group and the paired ``xu2``/``xl2`` groups carry the
interaction between levels.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from drcbl.problems import BilevelProblem

# open intervals such as (-pi/2, pi/2) or (0, e] are closed off by this margin
_OPEN = 1e-8
_HALF_PI = math.pi / 2


class Groups(NamedTuple):
    p: int
    q: int
    r: int
    s: int = 0


def canonical_groups(pid: int, m: int, n: int) -> Groups:
    """Canonical variable split for the standard (m, n) settings."""
    if (m, n) not in {(2, 3), (10, 10), (30, 30)}:
        raise ValueError(
            f"no canonical SMD split for (m={m}, n={n}); pass explicit groups"
        )
    r = m // 2
    p = m - r
    if pid == 6:
        q = int(math.floor((n - r) / 2 - 1e-9))
        s = int(math.ceil((n - r) / 2 + 1e-9))
        return Groups(p, q, r, s)
    return Groups(p, n - r, r)


def _sq(x):
    return np.sum(x * x, axis=1)


def _rosen(x):
    if x.shape[1] < 2:
        return np.zeros(x.shape[0])
    a, b = x[:, :-1], x[:, 1:]
    return np.sum((b - a * a) ** 2 + (a - 1) ** 2, axis=1)


def _cube_coupling(x):
    """Slack of x_j >= sum_{i != j} x_i^3 for every j."""
    cubes = x**3
    return cubes.sum(axis=1, keepdims=True) - cubes - x


def _none(x):
    return np.zeros((x.shape[0], 0))


def _bounds(*groups) -> np.ndarray:
    rows = [np.tile([lo, hi], (k, 1)) for k, lo, hi in groups if k > 0]
    return np.vstack(rows) if rows else np.zeros((0, 2))


def _coupled_value(k: int) -> float:
    """Optimum of sum (x_j - 2)^2 s.t. x_j >= sum_{i != j} x_i^3, symmetric."""
    return 2.0 if k == 1 else 1.0 / math.sqrt(k - 1)


def make_smd(pid: int, m: int, n: int, groups: Groups | tuple | None = None) -> BilevelProblem:
    if not 1 <= int(pid) <= 12:
        raise ValueError(f"unknown SMD id {pid}")
    pid = int(pid)
    if groups is None:
        g = canonical_groups(pid, m, n)
    else:
        g = Groups(*groups)
        if pid != 6 and g.s:
            raise ValueError("only SMD6 takes an s group")
    p, q, r, s = g
    if p < 1 or r < 1 or q < 0 or s < 0:
        raise ValueError(f"invalid SMD groups {g}")
    if p + r != m or q + s + r != n:
        raise ValueError(f"groups {g} do not split (m={m}, n={n})")
    if pid == 6 and s < 2:
        raise ValueError("SMD6 needs s >= 2")
    if pid in (5, 8) and q < 2:
        raise ValueError(f"SMD{pid} needs q >= 2")
    nl1 = q + s

    def split(xu, xl):
        return xu[:, :p], xu[:, p:], xl[:, :nl1], xl[:, nl1:]

    e = math.e
    xu_opt = np.zeros(m)
    xl_opt = np.zeros(n)

    if pid == 1:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _sq(l1) + _sq(u2) + _sq(u2 - np.tan(l2)), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _sq(l1) + _sq(u2 - np.tan(l2)), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((q, -5, 10), (r, -_HALF_PI + _OPEN, _HALF_PI - _OPEN))

    elif pid == 2:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) - _sq(l1) + _sq(u2) - _sq(u2 - np.log(l2)), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _sq(l1) + _sq(u2 - np.log(l2)), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 1))
        bl = _bounds((q, -5, 10), (r, _OPEN, e))
        xl_opt[q:] = 1.0

    elif pid == 3:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _sq(l1) + _sq(u2) + _sq(u2**2 - np.tan(l2)), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            rastrigin = q + np.sum(l1**2 - np.cos(2 * np.pi * l1), axis=1)
            return _sq(u1) + rastrigin + _sq(u2**2 - np.tan(l2)), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((q, -5, 10), (r, -_HALF_PI + _OPEN, _HALF_PI - _OPEN))

    elif pid == 4:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) - _sq(l1) + _sq(u2) - _sq(np.abs(u2) - np.log1p(l2)), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            rastrigin = q + np.sum(l1**2 - np.cos(2 * np.pi * l1), axis=1)
            return _sq(u1) + rastrigin + _sq(np.abs(u2) - np.log1p(l2)), _none(xu)

        bu = _bounds((p, -5, 10), (r, -1, 1))
        bl = _bounds((q, -5, 10), (r, 0, e))

    elif pid == 5:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) - _rosen(l1) + _sq(u2) - _sq(np.abs(u2) - l2**2), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _rosen(l1) + _sq(np.abs(u2) - l2**2), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((q, -5, 10), (r, -5, 10))
        xl_opt[:q] = 1.0

    elif pid == 6:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return (
                _sq(u1) - _sq(l1[:, :q]) + _sq(l1[:, q:]) + _sq(u2) - _sq(u2 - l2),
                _none(xu),
            )

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            tail = l1[:, q:]
            pairs = tail[:, 1 : 2 * (s // 2) : 2] - tail[:, 0 : 2 * (s // 2) : 2]
            return _sq(u1) + _sq(l1[:, :q]) + _sq(pairs) + _sq(u2 - l2), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((nl1, -5, 10), (r, -5, 10))

    elif pid == 7:
        root = np.sqrt(np.arange(1, p + 1))

        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            griewank = 1 + _sq(u1) / 400 - np.prod(np.cos(u1 / root), axis=1)
            return griewank - _sq(l1) + _sq(u2) - _sq(u2 - np.log(l2)), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return np.sum(u1**3, axis=1) + _sq(l1) + _sq(u2 - np.log(l2)), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 1))
        bl = _bounds((q, -5, 10), (r, _OPEN, e))
        xl_opt[q:] = 1.0

    elif pid == 8:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            ackley = (
                20 + e
                - 20 * np.exp(-0.2 * np.sqrt(_sq(u1) / p))
                - np.exp(np.sum(np.cos(2 * np.pi * u1), axis=1) / p)
            )
            return ackley - _rosen(l1) + _sq(u2) - _sq(u2 - l2**3), _none(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return np.sum(np.abs(u1), axis=1) + _rosen(l1) + _sq(u2 - l2**3), _none(xu)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((q, -5, 10), (r, -5, 10))
        xl_opt[:q] = 1.0

    elif pid == 9:
        def ring(t):
            return (t - np.floor(t + 0.5))[:, None]

        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            value = _sq(u1) - _sq(l1) + _sq(u2) - _sq(u2 - np.log1p(l2))
            return value, ring(_sq(u1) + _sq(u2))

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            value = _sq(u1) + _sq(l1) + _sq(u2 - np.log1p(l2))
            return value, ring(_sq(l1) + _sq(l2))

        bu = _bounds((p, -5, 10), (r, -5, 1))
        bl = _bounds((q, -5, 10), (r, -1 + _OPEN, -1 + e))

    elif pid == 10:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            value = _sq(u1 - 2) + _sq(l1) + _sq(u2 - 2) - _sq(u2 - np.tan(l2))
            return value, _cube_coupling(xu)

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            return _sq(u1) + _sq(l1 - 2) + _sq(u2 - np.tan(l2)), _cube_coupling(l1)

        bu = _bounds((p, -5, 10), (r, -5, 10))
        bl = _bounds((q, -5, 10), (r, -_HALF_PI + _OPEN, _HALF_PI - _OPEN))
        xu_opt[:] = _coupled_value(m)
        xl_opt[:q] = _coupled_value(q) if q else 0.0
        xl_opt[q:] = np.arctan(xu_opt[p:])

    elif pid == 11:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            value = _sq(u1) - _sq(l1) + _sq(u2) - _sq(u2 - np.log(l2))
            return value, 1 / math.sqrt(r) + np.log(l2) - u2

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            gap = _sq(u2 - np.log(l2))
            return _sq(u1) + _sq(l1) + gap, (1 - gap)[:, None]

        bu = _bounds((p, -5, 10), (r, -1, 1))
        bl = _bounds((q, -5, 10), (r, 1 / e, e))
        xl_opt[q:] = math.exp(-1 / math.sqrt(r))

    else:
        def upper(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            t = np.tan(l2)
            value = (
                _sq(u1 - 2) + _sq(l1) + _sq(u2 - 2)
                + np.sum(np.tan(np.abs(l2)), axis=1) - _sq(u2 - t)
            )
            return value, np.hstack([t - u2, _cube_coupling(xu)])

        def lower(xu, xl):
            u1, u2, l1, l2 = split(xu, xl)
            gap = _sq(u2 - np.tan(l2))
            return (
                _sq(u1) + _sq(l1 - 2) + gap,
                np.hstack([(1 - gap)[:, None], _cube_coupling(l1)]),
            )

        bu = _bounds((p, -5, 10), (r, -14.1, 14.1))
        bl = _bounds((q, -5, 10), (r, -1.5, 1.5))
        xu_opt[:] = _coupled_value(m)
        xl_opt[:q] = _coupled_value(q) if q else 0.0
        xl_opt[q:] = np.arctan(xu_opt[p:] - 1 / math.sqrt(r))

    F, _ = upper(xu_opt[None, :], xl_opt[None, :])
    f, _ = lower(xu_opt[None, :], xl_opt[None, :])
    return BilevelProblem(
        name=f"smd{pid}",
        dim_u=m,
        dim_l=n,
        bounds_u=bu,
        bounds_l=bl,
        upper_fn=upper,
        lower_fn=lower,
        f_star=float(F[0]),
        little_f_star=float(f[0]),
        x_u_opt=xu_opt,
        x_l_opt=xl_opt,
    )
