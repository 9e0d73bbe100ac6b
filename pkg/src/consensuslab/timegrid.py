"""Exact rational time grids.

The exponential stepper is only free of integrator error when every
breakpoint, delay and the horizon land exactly on the sampling grid.  To
make that alignment testable (instead of hoping floats cooperate), grid
arithmetic is done with ``fractions.Fraction``: each float input is
mapped back to the small rational it was meant to denote, and the step
is chosen as a common divisor of all alignment spans.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

# Refining a step never produces more than this many samples; above it the
# caller falls back to the generic integrator.
MAX_STEPS = 2_000_000

_RECOVER_DENOMINATOR = 10**9
_RECOVER_TOL = 1e-12


def as_fraction(value) -> Fraction | None:
    """Recover the small rational a float was meant to denote.

    Returns None when the value is not finite or not recognizably
    rational (e.g. an irrational breakpoint), in which case exact
    stepping is impossible.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    x = float(value)
    if not math.isfinite(x):
        return None
    candidate = Fraction(x).limit_denominator(_RECOVER_DENOMINATOR)
    if abs(float(candidate) - x) <= _RECOVER_TOL * max(1.0, abs(x)):
        return candidate
    return None


def fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    num = math.gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


def choose_step(span: Fraction, requested: Fraction, anchors: Iterable[Fraction]) -> Fraction | None:
    """Largest step <= requested dividing the span and every anchor.

    ``span`` is the total simulated duration; ``anchors`` are offsets
    (breakpoints relative to the start, delay values, ...) that must be
    integer multiples of the step.  Returns None when the resulting grid
    would exceed MAX_STEPS or the span is empty.
    """
    if span < 0 or requested <= 0:
        return None
    g = span
    for a in anchors:
        a = abs(a)
        if a != 0:
            g = fraction_gcd(g, a)
    if g == 0:
        # Degenerate span with no anchors: a single point.
        return requested
    if g > requested:
        g = g / math.ceil(g / requested)
    if span / g > MAX_STEPS:
        return None
    return g


def exact_index(t: Fraction, origin: Fraction, step: Fraction) -> int | None:
    """Grid index of ``t`` on ``origin + k*step``, or None if off-grid."""
    ratio = (t - origin) / step
    if ratio.denominator != 1:
        return None
    return int(ratio)
