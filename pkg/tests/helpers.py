"""Shared brute-force oracles and random generators for the test suite.

Everything here is deliberately naive: grid minimization, exhaustive
enumeration, and small random cases with fixed seeds.  These are the
independent reference implementations the library is checked against, so
they must not reuse the library's own algebra beyond plain evaluation.
"""

from __future__ import annotations

import random
from fractions import Fraction

from flowbp.flowmodel import FlowNetwork
from flowbp.pwl import NEG_INF, POS_INF, PwlConvex


def t1_network(c3: int = 3, d: int = 1) -> FlowNetwork:
    """Three-node triangle: unit supply at 1, unit demand at 3, caps 2.

    Path arcs 1->2->3 cost ``d`` each, direct arc 1->3 cost ``c3``.  The
    default (d=1, c3=3) has the unique optimum (1, 1, 0) of cost 2 and
    exactly one alternative feasible integral flow (0, 0, 1) of cost 3.
    """
    return FlowNetwork.from_data(
        {1: 1, 2: 0, 3: -1},
        [(1, 1, 2, 2, d), (2, 2, 3, 2, d), (3, 1, 3, 2, c3)],
    )


def brute_min_pair(f: PwlConvex, g: PwlConvex, t, lo=-16, hi=16, per_unit=8):
    """min over x1 on the rational grid of f(x1) + g(t - x1)."""
    best = POS_INF
    for i in range((hi - lo) * per_unit + 1):
        x1 = Fraction(lo) + Fraction(i, per_unit)
        a = f.evaluate(x1)
        if a == POS_INF:
            continue
        b = g.evaluate(t - x1)
        if b == POS_INF:
            continue
        v = a + b
        if v < best:
            best = v
    return best


def brute_min_signed(fs, signs, t, lo=-8, hi=8):
    """min of sum f_i(x_i) subject to sum signs_i * x_i = t.

    Enumerates integer grids for all but one coordinate and solves for the
    remaining one; every choice of the free coordinate is tried, which
    covers all vertex patterns of the underlying LP, so the result is exact
    for integer-breakpoint operands and integer t.
    """
    k = len(fs)
    best = POS_INF
    span = range(lo, hi + 1)

    def rec(idx, partial, acc, free):
        nonlocal best
        if idx == k:
            if partial == t and free is None:
                best = min(best, acc)
            return
        if idx == free:
            # defer: solve for this coordinate once all others are chosen
            def rec_tail(j, part2, acc2):
                nonlocal best
                if j == k:
                    x_free = (t - part2) * signs[free]
                    v = fs[free].evaluate(x_free)
                    if v != POS_INF:
                        best = min(best, acc2 + v)
                    return
                for x in span:
                    v = fs[j].evaluate(x)
                    if v == POS_INF:
                        continue
                    rec_tail(j + 1, part2 + signs[j] * x, acc2 + v)

            rec_tail(idx + 1, partial, acc)
            return
        for x in span:
            v = fs[idx].evaluate(x)
            if v == POS_INF:
                continue
            rec(idx + 1, partial + signs[idx] * x, acc + v, free)

    for free in range(k):
        rec(0, 0, 0, free)
    return best


def random_pwl(rng: random.Random, allow_unbounded: bool = False) -> PwlConvex:
    """A random exact PwlConvex with breakpoints and slopes in [-5, 5]."""
    k = rng.randint(0, 4)
    if k == 0:
        x = rng.randint(-5, 5)
        return PwlConvex.point(x, rng.randint(-5, 5))
    bks = sorted(rng.sample(range(-5, 6), k + 1))
    sls = sorted(rng.sample(range(-5, 6), k))
    if allow_unbounded:
        if rng.random() < 0.3:
            bks[0] = NEG_INF
        if rng.random() < 0.3:
            bks[-1] = POS_INF
    anchor_x = next((b for b in bks if isinstance(b, int)), 0)
    return PwlConvex(bks, sls, (anchor_x, rng.randint(-5, 5)))
