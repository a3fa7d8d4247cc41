"""Descriptor types for multivariate Fox-H kernels and weighted densities.

A kernel is a bag of gamma factors of complex linear forms in the contour
variables ``s_1 .. s_M``.  Factors live in four groups (outer upper/lower and
per-variate upper/lower); the group plus the ``side`` tag determine the
actual gamma argument:

==============  =============  ========================================
group           side           contributes
==============  =============  ========================================
upper           num-shifted    Gamma(1 - offset + sum w_k s_k)
upper           denominator    1 / Gamma(offset - sum w_k s_k)
lower           num-plain      Gamma(offset - sum w_k s_k)
lower           denominator    1 / Gamma(1 - offset + sum w_k s_k)
==============  =============  ========================================

The integral itself is ``(1/2 pi j)^M`` times the contour integral of the
factor product times ``prod_k z_k^{s_k}`` along upward vertical lines, with
complex powers on the principal branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Side",
    "GammaFactor",
    "VariateBlock",
    "FoxHKernel",
    "WeightedDensity",
    "CompiledKernel",
    "KernelReport",
    "DescriptorError",
    "validate_kernel",
]


class DescriptorError(ValueError):
    """Malformed kernel or density descriptor."""


class Side(enum.Enum):
    NUM_SHIFTED = "numerator-shifted"
    NUM_PLAIN = "numerator-plain"
    DENOM = "denominator"


@dataclass(frozen=True)
class GammaFactor:
    """One gamma factor: constant ``offset`` plus weights on the variates.

    Outer factors carry one weight per variate; per-variate factors carry a
    single weight.
    """

    offset: float
    weights: tuple
    side: Side

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "offset", float(self.offset))
        if not math.isfinite(self.offset) or not all(map(math.isfinite, self.weights)):
            raise DescriptorError("non-finite gamma factor parameters")

    @property
    def is_constant(self):
        return all(w == 0.0 for w in self.weights)


@dataclass(frozen=True)
class VariateBlock:
    """Per-variate factor groups; weights are scalars (length-1 tuples)."""

    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(self.upper))
        object.__setattr__(self, "lower", tuple(self.lower))
        for f in self.upper + self.lower:
            if len(f.weights) != 1:
                raise DescriptorError(
                    f"per-variate factor must have exactly one weight, got {len(f.weights)}"
                )
        if any(f.side is Side.NUM_PLAIN for f in self.upper):
            raise DescriptorError("plain numerator factors belong to lower groups")
        if any(f.side is Side.NUM_SHIFTED for f in self.lower):
            raise DescriptorError("shifted numerator factors belong to upper groups")

    @property
    def counts(self):
        """(m, n, p, q) with m, n the numerator counts."""
        n = sum(f.side is Side.NUM_SHIFTED for f in self.upper)
        m = sum(f.side is Side.NUM_PLAIN for f in self.lower)
        return m, n, len(self.upper), len(self.lower)


@dataclass(frozen=True)
class FoxHKernel:
    """Pure parameter set of an M-variate Fox-H function."""

    variates: int
    outer_upper: tuple = ()
    outer_lower: tuple = ()
    per_variate: tuple = ()

    def __post_init__(self):
        if self.variates < 0:
            raise DescriptorError("variate count must be nonnegative")
        object.__setattr__(self, "outer_upper", tuple(self.outer_upper))
        object.__setattr__(self, "outer_lower", tuple(self.outer_lower))
        per = tuple(self.per_variate)
        if len(per) != self.variates:
            raise DescriptorError(
                f"need {self.variates} per-variate blocks, got {len(per)}"
            )
        object.__setattr__(self, "per_variate", per)
        for f in self.outer_upper + self.outer_lower:
            if len(f.weights) != self.variates:
                raise DescriptorError(
                    f"outer factor weight count {len(f.weights)} != variates {self.variates}"
                )
        if any(f.side is Side.NUM_PLAIN for f in self.outer_upper):
            raise DescriptorError("plain numerator factors belong to lower groups")
        if any(f.side is Side.NUM_SHIFTED for f in self.outer_lower):
            raise DescriptorError("shifted numerator factors belong to upper groups")

    @property
    def outer_counts(self):
        """(n, p, q) for the outer groups (outer m is structurally zero here)."""
        n = sum(f.side is Side.NUM_SHIFTED for f in self.outer_upper)
        return n, len(self.outer_upper), len(self.outer_lower)

    def iter_groups(self):
        """Yield (factor, group_is_upper, variate_index or None)."""
        for f in self.outer_upper:
            yield f, True, None
        for f in self.outer_lower:
            yield f, False, None
        for k, blk in enumerate(self.per_variate):
            for f in blk.upper:
                yield f, True, k
            for f in blk.lower:
                yield f, False, k


@dataclass(frozen=True)
class WeightedDensity:
    """Density of the form ``psi * x^(a-1) * H[{zeta_k x^(e_k)}]``."""

    prefactor: float
    power_offset: float
    scales: tuple
    exponents: tuple
    kernel: FoxHKernel

    def __post_init__(self):
        if self.prefactor <= 0.0:
            raise DescriptorError("prefactor must be positive")
        object.__setattr__(self, "scales", tuple(complex(z) for z in self.scales))
        object.__setattr__(self, "exponents", tuple(float(e) for e in self.exponents))
        m = self.kernel.variates
        if len(self.scales) != m or len(self.exponents) != m:
            raise DescriptorError(
                "scales/exponents length must equal the kernel variate count"
            )


# ---------------------------------------------------------------------------
# compilation: flatten groups into linear forms
# ---------------------------------------------------------------------------


def _linear_form(factor, group_is_upper, variate, m):
    """Return (const, coeffs, numerator) for the actual gamma argument."""
    w = np.zeros(m)
    if variate is None:
        w[:] = factor.weights
    else:
        w[variate] = factor.weights[0]
    shifted = (factor.side is Side.NUM_SHIFTED) or (
        factor.side is Side.DENOM and not group_is_upper
    )
    if shifted:
        const, coeffs = 1.0 - factor.offset, w
    else:
        const, coeffs = factor.offset, -w
    return const, coeffs, factor.side is not Side.DENOM


@dataclass(frozen=True)
class CompiledKernel:
    """Flat numeric view of a kernel: one (const, coeffs, sign) per factor."""

    variates: int
    const: np.ndarray  # (F,)
    coeffs: np.ndarray  # (F, M)
    numerator: np.ndarray  # (F,) bool
    log_const: complex  # folded constant factors
    fingerprint: int = field(default=0)

    @property
    def factor_count(self):
        return len(self.const)


def compile_kernel(kernel):
    """Flatten a kernel and fold constant factors into a log prefactor."""
    from .cgamma import log_gamma_complex

    consts, coeffs, nums = [], [], []
    log_const = 0.0 + 0.0j
    for f, up, k in kernel.iter_groups():
        c, w, num = _linear_form(f, up, k, kernel.variates)
        if not w.any():
            if abs(c - round(c)) < 1e-12 and round(c) <= 0:
                if num:
                    raise DescriptorError(
                        f"constant numerator factor at gamma pole {c}"
                    )
                # 1/Gamma(nonpositive int) == 0 would annihilate the kernel
                raise DescriptorError(
                    f"constant denominator factor at gamma pole {c}"
                )
            lg = log_gamma_complex(complex(c))
            log_const += lg if num else -lg
            continue
        consts.append(c)
        coeffs.append(w)
        nums.append(num)
    m = kernel.variates
    const = np.asarray(consts, dtype=float)
    carr = (
        np.asarray(coeffs, dtype=float) if coeffs else np.zeros((0, m), dtype=float)
    )
    return CompiledKernel(
        variates=m,
        const=const,
        coeffs=carr,
        numerator=np.asarray(nums, dtype=bool),
        log_const=log_const,
        fingerprint=hash(
            (m, const.tobytes(), carr.tobytes(), tuple(nums))
        ),
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelReport:
    """Outcome of structural plus pole-separation validation."""

    feasible: bool
    anchor: tuple = ()
    margin: float = 0.0
    violations: tuple = ()
    constraints: tuple = ()

    def __bool__(self):
        return self.feasible


def _constraint_rows(compiled, density_constraint=None):
    """Numerator positivity constraints: const + coeffs . c > 0.

    ``density_constraint`` is an optional (exponents, offset) pair adding
    ``offset + sum e_k c_k > 0`` (the strip required when the surrounding
    machinery integrates ``x^(sum e_k s_k + a - 1)`` over x).
    """
    rows = []
    mask = compiled.numerator
    for c, w in zip(compiled.const[mask], compiled.coeffs[mask]):
        rows.append((c, w, _describe_constraint(c, w)))
    if density_constraint is not None:
        exps, off = density_constraint
        w = np.asarray(exps, dtype=float)
        rows.append((float(off), w, _describe_constraint(float(off), w, tag="strip")))
    return rows


def _describe_constraint(const, coeffs, tag="gamma"):
    terms = [f"{const:g}"]
    for k, w in enumerate(coeffs):
        if w:
            terms.append(f"{w:+g}*Re(s{k + 1})")
    return f"{tag}: {' '.join(terms)} > 0"


def feasible_anchor(compiled, density_constraint=None, radius_cap=1.0):
    """Chebyshev-center anchor of the pole-separation polytope.

    Returns (anchor, margin, constraint texts) or (None, 0, texts) when the
    region is empty.  The Chebyshev radius is capped at ``radius_cap`` and
    ties are broken toward small anchors: unbounded strips (most kernels)
    would otherwise push the center arbitrarily far from the poles, where
    the gamma magnitudes explode and the quadrature cancels catastrophically.
    """
    from scipy.optimize import linprog

    m = compiled.variates
    rows = _constraint_rows(compiled, density_constraint)
    texts = tuple(r[2] for r in rows)
    if m == 0:
        return np.zeros(0), radius_cap, texts
    if not rows:
        return np.zeros(m), radius_cap, texts
    # variables: (c_1..c_m, a_1..a_m, r) with a_k >= |c_k|;
    # maximize r - eps * sum a subject to
    #   -(coeffs . c) + ||coeffs|| r <= const  for each constraint
    a_ub, b_ub = [], []
    for const, w, _ in rows:
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            if const <= 0:
                return None, 0.0, texts
            continue
        a_ub.append(np.concatenate([-w, np.zeros(m), [norm]]))
        b_ub.append(const)
    for k in range(m):
        for sgn in (1.0, -1.0):
            row = np.zeros(2 * m + 1)
            row[k] = sgn
            row[m + k] = -1.0
            a_ub.append(row)
            b_ub.append(0.0)
    cvec = np.zeros(2 * m + 1)
    cvec[-1] = -1.0
    cvec[m : 2 * m] = 1e-3
    box = 64.0
    res = linprog(
        cvec,
        A_ub=np.asarray(a_ub),
        b_ub=np.asarray(b_ub),
        bounds=[(-box, box)] * m + [(0.0, box)] * m + [(0.0, radius_cap)],
        method="highs",
    )
    if not res.success or res.x[-1] <= 1e-9:
        return None, 0.0, texts
    return res.x[:m], float(res.x[-1]), texts


def validate_kernel(kernel, density_constraint=None):
    """Structural and pole-separation validation; never raises.

    Structural problems (weight counts, non-finite values) surface when the
    descriptor is built; this reports pole-separation feasibility: either an
    admissible anchor (Chebyshev center, with its margin) or the violated
    constraint set.
    """
    try:
        compiled = compile_kernel(kernel)
    except DescriptorError as exc:
        return KernelReport(False, violations=(str(exc),))
    anchor, margin, texts = feasible_anchor(compiled, density_constraint)
    if anchor is None:
        return KernelReport(False, violations=texts, constraints=texts)
    return KernelReport(
        True, anchor=tuple(anchor), margin=margin, constraints=texts
    )
