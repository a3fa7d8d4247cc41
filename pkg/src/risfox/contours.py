"""Contour planning for Mellin-Barnes evaluation.

Anchors sit at the Chebyshev center of the pole-separation polytope.  Each
variate's truncation half-width comes from the net exponential decay rate of
the gamma product along its vertical line (``|Gamma(x+iy)| ~ e^{-pi|y|/2}``
per unit weight), discounted by the phase of that variate's argument, which
multiplies the integrand by ``e^{-t arg(z)}``.

Variates whose argument phase eats the whole gamma budget (the ``sqrt(-K)``
arguments of the Rician product kernel) cannot be integrated along a line at
all; they are marked for collapse into the convergent residue series of
their single plain numerator factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import CompiledKernel, compile_kernel, feasible_anchor

__all__ = ["ContourPlan", "PlanningError", "plan_contours", "decay_rates"]

TRUNC_TARGET_LOG = 36.85  # ln(1e16): boundary magnitude target vs anchor
MIN_LINE_RATE = 0.05  # below this the line integral is treated as divergent
DEFAULT_SPACING = 0.08  # trapezoid step when no node budget is given
MAX_SERIES_TERMS = 96


class PlanningError(RuntimeError):
    """No usable contour exists for the requested kernel/arguments."""


@dataclass(frozen=True)
class ContourPlan:
    """Vertical-line anchors plus truncation and strategy choices.

    ``series`` flags variates that are collapsed into residue series instead
    of integrated along a line; ``series_factor`` holds the index (into the
    compiled factor list) of the generating plain numerator factor.
    """

    anchors: tuple
    half_widths: tuple
    nodes: tuple
    strategy: str  # "nested-deterministic" | "qmc"
    qmc_samples: int = 4096
    series: tuple = ()
    series_factor: tuple = ()
    margin: float = 0.0
    fingerprint: int = field(default=0, repr=False)

    @property
    def line_dims(self):
        return tuple(k for k, s in enumerate(self.series) if not s)

    @property
    def series_dims(self):
        return tuple(k for k, s in enumerate(self.series) if s)


def decay_rates(compiled):
    """Per-variate exponential decay rate of the gamma product, in nats
    per unit of |Im s_k| (positive means the line integral converges)."""
    if compiled.factor_count == 0:
        return np.zeros(compiled.variates)
    sgn = np.where(compiled.numerator, 1.0, -1.0)
    return (np.pi / 2.0) * (sgn[:, None] * np.abs(compiled.coeffs)).sum(axis=0)


def _poly_powers(compiled, anchor):
    """Per-variate net power of |Im s_k| in the integrand magnitude,
    from the |y|^(x - 1/2) part of the Stirling estimate."""
    out = np.zeros(compiled.variates)
    if compiled.factor_count == 0:
        return out
    re_arg = compiled.const + compiled.coeffs @ anchor
    sgn = np.where(compiled.numerator, 1.0, -1.0)
    contrib = sgn * (re_arg - 0.5)
    for k in range(compiled.variates):
        touched = compiled.coeffs[:, k] != 0.0
        out[k] = contrib[touched].sum()
    return out


def _series_generator(compiled, k):
    """Index of the unique plain numerator factor generating dim k's
    right-hand pole ladder, or None."""
    hits = [
        i
        for i in range(compiled.factor_count)
        if compiled.numerator[i]
        and compiled.coeffs[i, k] < 0.0
        and not np.any(np.delete(compiled.coeffs[i], k))
    ]
    return hits[0] if len(hits) == 1 else None


def plan_contours(
    kernel,
    density_constraint=None,
    budget=None,
    arg_phases=None,
    qmc_samples=4096,
):
    """Build a :class:`ContourPlan` for ``kernel``.

    ``arg_phases`` gives |arg z_k| of the intended argument vector (zeros
    when omitted); it decides which variates must be series-collapsed.
    ``budget`` is a total node budget distributed across the line dimensions
    proportionally to their half-widths; by default nodes are chosen from a
    fixed trapezoid spacing instead.
    """
    compiled = kernel if isinstance(kernel, CompiledKernel) else compile_kernel(kernel)
    m = compiled.variates
    anchor, margin, texts = feasible_anchor(compiled, density_constraint)
    if anchor is None:
        raise PlanningError(
            "empty pole-separation region; constraints: " + "; ".join(texts)
        )

    phases = np.zeros(m) if arg_phases is None else np.abs(np.asarray(arg_phases, float))
    rates = decay_rates(compiled)
    eff = rates - phases

    series = []
    series_factor = []
    for k in range(m):
        if eff[k] >= MIN_LINE_RATE:
            series.append(False)
            series_factor.append(-1)
            continue
        gen = _series_generator(compiled, k)
        if gen is None:
            raise PlanningError(
                f"line integral along variate {k + 1} diverges "
                f"(decay rate {eff[k]:.3f}) and no residue series is available"
            )
        series.append(True)
        series_factor.append(gen)

    poly = _poly_powers(compiled, np.asarray(anchor))
    half = np.empty(m)
    for k in range(m):
        lam = max(eff[k] if not series[k] else rates[k], MIN_LINE_RATE)
        t = TRUNC_TARGET_LOG / lam
        if poly[k] > 0.0:  # |t|^p growth delays the gamma decay
            for _ in range(8):
                t = (TRUNC_TARGET_LOG + poly[k] * math.log(max(t, 2.0))) / lam
        half[k] = t
    half = np.clip(half, 1.0, 5000.0)

    line = [k for k in range(m) if not series[k]]
    nodes = np.ones(m, dtype=int)
    if line:
        t = half[line]
        if budget is None:
            n = 2.0 * t / DEFAULT_SPACING
        else:
            per = float(budget) ** (1.0 / len(line))
            n = per * t / math.exp(np.mean(np.log(t)))
        for k, nk in zip(line, n):
            nk = int(np.clip(nk, 65, 20001))
            nodes[k] = nk + 1 - nk % 2  # odd, so the halved grid nests

    strategy = "nested-deterministic" if m <= 4 else "qmc"
    return ContourPlan(
        anchors=tuple(float(a) for a in anchor),
        half_widths=tuple(float(h) for h in half),
        nodes=tuple(int(n) for n in nodes),
        strategy=strategy,
        qmc_samples=int(qmc_samples),
        series=tuple(series),
        series_factor=tuple(series_factor),
        margin=margin,
        fingerprint=compiled.fingerprint,
    )
