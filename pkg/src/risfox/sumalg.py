"""Descriptor algebra for sums of Fox-H distributed variables.

Pure parameter manipulation: given component densities in the weighted
Fox-H form, build the MN-variate descriptors of the sum's PDF and CDF, the
component MGF, expectation descriptors (ergodic-rate and power moments),
and the dominant-pole small-argument expansion of the CDF.

The assembly follows the Laplace route: each component gains a numerator
factor ``Gamma(sum_k e_k s_k + a_i)`` (its transform closed in the MGF
strip), and inverting the product transform appends one global denominator
factor ``1/Gamma(sum_ik e_ik s_ik + sum_i a_i [+1 for the CDF])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import PlanningError, _series_generator, plan_contours
from .kernel import (
    DescriptorError,
    FoxHKernel,
    GammaFactor,
    Side,
    VariateBlock,
    WeightedDensity,
    compile_kernel,
    validate_kernel,
)
from .mellin import (
    EngineError,
    _circle,
    _resolve_series_depth,
    _series,
    _tensor_value,
    evaluate_raw,
    log_principal,
)

__all__ = [
    "SumComponent",
    "SumDescriptor",
    "AssemblyError",
    "TiedPoleError",
    "sum_pdf_descriptor",
    "sum_cdf_descriptor",
    "mgf_descriptor",
    "ExpectationDescriptor",
    "expectation_descriptor",
    "expectation_value",
    "asymptotic_cdf",
    "diversity_order",
    "arg_phases_of",
    "density_plan",
]

LOG2_E = 1.4426950408889634073599246810019


class AssemblyError(RuntimeError):
    """Descriptor assembly produced an unusable kernel."""


class TiedPoleError(RuntimeError):
    """Dominant pole cannot be separated from its neighbours."""


def arg_phases_of(density):
    """|arg| of each argument for x > 0 (x powers are real positive)."""
    return [abs(log_principal(z).imag) for z in density.scales]


def density_plan(density, budget=None, qmc_samples=4096, mgf_strip=False):
    """Contour plan for a weighted density, honoring its argument phases.

    With ``mgf_strip`` the anchors additionally satisfy
    ``Re(sum e_k s_k + a) > 0``, the strip used whenever the surrounding
    machinery closes an x-integral against ``exp(-s x)``.
    """
    constraint = (density.exponents, density.power_offset) if mgf_strip else None
    return plan_contours(
        density.kernel,
        density_constraint=constraint,
        budget=budget,
        arg_phases=arg_phases_of(density),
        qmc_samples=qmc_samples,
    )


@dataclass(frozen=True)
class SumComponent:
    """One summand, described by its weighted Fox-H density."""

    density: WeightedDensity

    def __post_init__(self):
        report = validate_kernel(self.density.kernel)
        if not report:
            raise AssemblyError(
                "component kernel fails pole separation: "
                + "; ".join(report.violations)
            )

    @property
    def kernel(self):
        return self.density.kernel


def _padded(weights, offset, total):
    w = [0.0] * total
    w[offset : offset + len(weights)] = list(weights)
    return tuple(w)


def _assemble(components, cdf):
    dens = [c.density for c in components]
    sizes = [d.kernel.variates for d in dens]
    total = sum(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    outer_upper, outer_lower, per_variate = [], [], []
    scales, exponents = [], []
    prefactor, offset_sum = 1.0, 0.0
    for i, d in enumerate(dens):
        s0 = int(starts[i])
        m = sizes[i]
        prefactor *= d.prefactor
        offset_sum += d.power_offset
        scales.extend(d.scales)
        exponents.extend(d.exponents)
        # the component's Laplace-closure numerator Gamma(sum e_k s_k + a_i)
        outer_upper.append(
            GammaFactor(
                1.0 - d.power_offset,
                _padded(d.exponents, s0, total),
                Side.NUM_SHIFTED,
            )
        )
        for f in d.kernel.outer_upper:
            outer_upper.append(
                GammaFactor(f.offset, _padded(f.weights, s0, total), f.side)
            )
        for f in d.kernel.outer_lower:
            outer_lower.append(
                GammaFactor(f.offset, _padded(f.weights, s0, total), f.side)
            )
        per_variate.extend(d.kernel.per_variate)

    # inverting the product transform leaves one global gamma downstairs
    shift = 0.0 if cdf else 1.0
    outer_lower.append(
        GammaFactor(shift - offset_sum, tuple(exponents), Side.DENOM)
    )
    kern = FoxHKernel(
        variates=total,
        outer_upper=tuple(outer_upper),
        outer_lower=tuple(outer_lower),
        per_variate=tuple(per_variate),
    )
    power = offset_sum + (1.0 if cdf else 0.0)
    out = WeightedDensity(prefactor, power, tuple(scales), tuple(exponents), kern)
    report = validate_kernel(
        kern, density_constraint=(tuple(exponents), offset_sum)
    )
    if not report:
        raise AssemblyError(
            "assembled kernel fails pole separation: " + "; ".join(report.violations)
        )
    return out


def sum_pdf_descriptor(components):
    """Density descriptor of the independent sum of the components."""
    if not components:
        raise AssemblyError("need at least one component")
    return _assemble(components, cdf=False)


def sum_cdf_descriptor(components):
    """Distribution-function descriptor of the independent sum.

    Same assembly as the PDF with the global factor shifted by one and an
    extra power of x; monotone and normalized wherever the components are
    genuine densities.
    """
    if not components:
        raise AssemblyError("need at least one component")
    return _assemble(components, cdf=True)


@dataclass(frozen=True)
class SumDescriptor:
    """Components plus their assembled PDF/CDF descriptors."""

    components: tuple
    assembled_pdf: WeightedDensity
    assembled_cdf: WeightedDensity


def make_sum_descriptor(components):
    components = tuple(components)
    return SumDescriptor(
        components,
        sum_pdf_descriptor(components),
        sum_cdf_descriptor(components),
    )


# ---------------------------------------------------------------------------
# MGF
# ---------------------------------------------------------------------------


class MgfTransform:
    """Laplace transform ``E[exp(-s X)]`` of one component, callable at s > 0.

    The x-integral closes as ``s^(-sum e_k s_k - a) Gamma(sum e_k s_k + a)``;
    the gamma joins the kernel upstairs and the s-powers rescale the
    arguments, so each call is a plain Fox-H evaluation.
    """

    def __init__(self, component, budget=None):
        d = component.density
        kern = d.kernel
        aug = FoxHKernel(
            variates=kern.variates,
            outer_upper=kern.outer_upper
            + (GammaFactor(1.0 - d.power_offset, d.exponents, Side.NUM_SHIFTED),),
            outer_lower=kern.outer_lower,
            per_variate=kern.per_variate,
        )
        self.density = d
        self.kernel = aug
        self.plan = plan_contours(
            aug,
            density_constraint=(d.exponents, d.power_offset),
            budget=budget,
            arg_phases=arg_phases_of(d),
        )

    def __call__(self, s, seed=0):
        if s <= 0.0:
            raise ValueError("MGF argument must be positive")
        d = self.density
        args = [z * s**-e for z, e in zip(d.scales, d.exponents)]
        scale = d.prefactor * s**-d.power_offset
        return evaluate_raw(self.kernel, args, self.plan, seed=seed, scale=scale)


def mgf_descriptor(component, budget=None):
    """Map ``s -> EvalResult`` for the component's MGF."""
    return MgfTransform(component, budget=budget)


# ---------------------------------------------------------------------------
# expectation descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpectationDescriptor:
    """Kernel + argument vector whose evaluation is E[g(X)].

    ``multiplier`` carries the scalar prefactor (including log2(e) for the
    rate functional).  With ``log_shift`` set, the kernel evaluates
    ``log2(e) E[ln(1 + 1/X)]`` and the caller must add ``log2(e) E[ln X]``
    (see :func:`expectation_descriptor`).
    """

    kernel: FoxHKernel
    args: tuple
    multiplier: float
    kind: str
    log_shift: bool = False


def _rate_block(exponents, offset, reciprocal):
    """Mellin multiplier of ln(1+x) (or ln(1+1/x)) as four gamma factors.

    ``int_0^inf x^(u-1) ln(1+x) dx = pi/(u sin(pi u))`` on ``-1 < Re u < 0``
    and ``int x^(u-1) ln(1+1/x) dx`` equals the same expression on
    ``0 < Re u < 1``; with ``u = sum e_k s_k + a`` the two gamma encodings
    place their numerator constraints on the matching strip:

    * direct:      ``Gamma(-u)^2 Gamma(1+u) / Gamma(1-u)`` (needs Re u < 0)
    * reciprocal:  ``Gamma(u)^2 Gamma(1-u) / Gamma(1+u)`` (needs Re u > 0)
    """
    e = tuple(exponents)
    if reciprocal:
        return (
            (GammaFactor(1.0 - offset, e, Side.NUM_SHIFTED), True),
            (GammaFactor(1.0 - offset, e, Side.NUM_SHIFTED), True),
            (GammaFactor(1.0 - offset, e, Side.NUM_PLAIN), False),
            (GammaFactor(-offset, e, Side.DENOM), False),
        )
    return (
        (GammaFactor(-offset, e, Side.NUM_SHIFTED), True),
        (GammaFactor(-offset, e, Side.NUM_PLAIN), False),
        (GammaFactor(-offset, e, Side.NUM_PLAIN), False),
        (GammaFactor(1.0 - offset, e, Side.DENOM), True),
    )


def _rate_kernel(pdf, reciprocal):
    kern = pdf.kernel
    upper = list(kern.outer_upper)
    lower = list(kern.outer_lower)
    for factor, is_upper in _rate_block(pdf.exponents, pdf.power_offset, reciprocal):
        (upper if is_upper else lower).append(factor)
    aug = FoxHKernel(
        variates=kern.variates,
        outer_upper=tuple(upper),
        outer_lower=tuple(lower),
        per_variate=kern.per_variate,
    )
    return aug, validate_kernel(aug)


def expectation_descriptor(pdf, g):
    """Expectation functional of a weighted density.

    ``g`` is ``"log2_1p"`` for ``E[log2(1+X)]`` or ``("power", n)`` for
    ``E[X^n]``.  The rate functional appends the ln(1+x) Mellin block to
    the kernel (no new variates; the regularized extra-variate pair has no
    convergent contour).  When the kernel's own constraints exclude the
    ``Re u < 0`` strip (sums always do: their Laplace-closure factors pin
    every x-variate left of zero), the block is assembled on the
    ``Re u > 0`` strip instead, which computes ``E[ln(1+1/X)]``; the exact
    complement ``E[ln X]`` is flagged via ``log_shift`` for the caller.

    Power moments pin the x-hyperplane, eliminating one variate (the
    Mellin transform of ``x^n`` alone does not exist).
    """
    if g == "log2_1p":
        aug, report = _rate_kernel(pdf, reciprocal=False)
        if report:
            return ExpectationDescriptor(
                aug, pdf.scales, LOG2_E * pdf.prefactor, "log2_1p"
            )
        aug, report = _rate_kernel(pdf, reciprocal=True)
        if not report:
            raise AssemblyError(
                "rate functional infeasible on both strips: "
                + "; ".join(report.violations)
            )
        return ExpectationDescriptor(
            aug, pdf.scales, LOG2_E * pdf.prefactor, "log2_1p", log_shift=True
        )
    if isinstance(g, tuple) and g[0] == "power":
        n = g[1]
        if int(n) != n or n < 1:
            raise ValueError("power moments need integer n >= 1")
        return _power_descriptor(pdf, n)
    raise ValueError(f"unsupported functional {g!r}")


def _power_descriptor(pdf, n):
    """Pinned Mellin continuation of E[X^n]; ``n`` may be real internally
    (the mean-log supplement differentiates through n near 0), the public
    surface restricts to integers >= 1."""
    n = float(n)
    exps = np.asarray(pdf.exponents)
    j = int(np.argmax(np.abs(exps)))
    if exps[j] == 0.0:
        raise AssemblyError("density carries no x dependence to pin")
    ej = exps[j]
    pin = -(pdf.power_offset + n) / ej
    compiled = compile_kernel(pdf.kernel)
    m = pdf.kernel.variates
    keep = [k for k in range(m) if k != j]

    def substitute(factor, is_upper, variate):
        # outer factor (or the pinned variate's own factors): rebuild the
        # linear form with s_j eliminated, then re-express in kind
        const = factor.offset
        if variate is None:
            w = np.asarray(factor.weights, dtype=float)
        else:
            w = np.zeros(m)
            w[variate] = factor.weights[0]
        shifted = (factor.side is Side.NUM_SHIFTED) or (
            factor.side is Side.DENOM and not is_upper
        )
        lin_const = (1.0 - const) if shifted else const
        lin_w = w if shifted else -w
        lin_const = lin_const + lin_w[j] * pin
        lin_w = lin_w - lin_w[j] * (exps / ej)
        lin_w[j] = 0.0
        lin_w = lin_w[keep]
        if shifted:
            return GammaFactor(1.0 - lin_const, tuple(lin_w), factor.side)
        return GammaFactor(lin_const, tuple(-lin_w), factor.side)

    upper, lower = [], []
    per = [[] for _ in keep]
    for f, is_upper, k in pdf.kernel.iter_groups():
        if k is not None and k != j:
            per[keep.index(k)].append((f, is_upper))  # untouched, stays put
        else:
            nf = substitute(f, is_upper, k)
            (upper if is_upper else lower).append(nf)
    blocks = tuple(
        VariateBlock(
            upper=tuple(f for f, up in fs if up),
            lower=tuple(f for f, up in fs if not up),
        )
        for fs in per
    )
    kern = FoxHKernel(
        variates=len(keep),
        outer_upper=tuple(upper),
        outer_lower=tuple(lower),
        per_variate=blocks,
    )
    report = validate_kernel(kern)
    if not report:
        raise AssemblyError(
            f"moment of order {n} does not exist: " + "; ".join(report.violations)
        )
    zj = complex(pdf.scales[j])
    lzj = log_principal(zj)
    args, logmult = [], 0.0 + 0.0j
    for k in keep:
        args.append(complex(pdf.scales[k]) * np.exp(-exps[k] / ej * lzj))
    logmult = pin * lzj
    mult = pdf.prefactor / abs(ej) * np.exp(logmult)
    if abs(mult.imag) > 1e-9 * abs(mult):
        raise AssemblyError("complex pinned multiplier; moment ill-defined")
    return ExpectationDescriptor(kern, tuple(args), float(mult.real), f"power{n}")


def expectation_value(desc, budget=None, qmc_samples=4096, seed=0):
    """Evaluate an expectation descriptor; returns an EvalResult."""
    phases = [abs(log_principal(z).imag) for z in desc.args]
    plan = plan_contours(
        desc.kernel, budget=budget, arg_phases=phases, qmc_samples=qmc_samples
    )
    return evaluate_raw(desc.kernel, desc.args, plan, seed=seed, scale=desc.multiplier)


# ---------------------------------------------------------------------------
# dominant-pole asymptotics
# ---------------------------------------------------------------------------


def _dominant_structure(cdf):
    """Classify variates of a CDF descriptor for the small-x expansion.

    Static variates (zero x-exponent) keep their convergent ladder; each
    x-carrying variate contributes its dominant pole: the closure direction
    follows the sign of the exponent, and the candidate poles of coupled
    factors are evaluated at the static ladders' first rungs.
    """
    compiled = compile_kernel(cdf.kernel)
    exps = np.asarray(cdf.exponents)
    m = compiled.variates
    static = [k for k in range(m) if exps[k] == 0.0]
    moving = [k for k in range(m) if exps[k] != 0.0]
    first_rung = {}
    for k in static:
        gen = _series_generator(compiled, k)
        if gen is None:
            raise TiedPoleError(
                f"static variate {k + 1} has no residue ladder; unsupported shape"
            )
        first_rung[k] = compiled.const[gen] / (-compiled.coeffs[gen, k])
    poles, orientations = {}, {}
    for k in moving:
        left, right = [], []
        for i in range(compiled.factor_count):
            if not compiled.numerator[i] or compiled.coeffs[i, k] == 0.0:
                continue
            others = [
                l for l in moving if l != k and compiled.coeffs[i, l] != 0.0
            ]
            if others:
                continue  # cross-component numerators do not arise here
            base = compiled.const[i]
            for l in static:
                base += compiled.coeffs[i, l] * first_rung[l]
            cand = -base / compiled.coeffs[i, k]
            (left if compiled.coeffs[i, k] > 0.0 else right).append(cand)
        if exps[k] > 0.0:
            if not right:
                raise TiedPoleError(f"no right-hand poles for variate {k + 1}")
            p = min(right)
            near = [c for c in left if abs(c - p) > 1e-9]
            orientations[k] = -1.0
        else:
            if not left:
                raise TiedPoleError(f"no left-hand poles for variate {k + 1}")
            p = max(left)
            near = [c for c in right if abs(c - p) > 1e-9]
            orientations[k] = 1.0
        gaps = [abs(c - p) for c in left + right if abs(c - p) > 1e-9]
        ladder_steps = [
            1.0 / abs(compiled.coeffs[i, k])
            for i in range(compiled.factor_count)
            if compiled.numerator[i] and compiled.coeffs[i, k] != 0.0
        ]
        gap = min(gaps + ladder_steps) if (gaps or ladder_steps) else 1.0
        if gap < 1e-3:
            raise TiedPoleError(
                f"poles {gap:.2e} apart in variate {k + 1}; "
                "higher-order residue extension not implemented"
            )
        poles[k] = (p, 0.35 * min(gap, 1.0))
        del near
    return compiled, exps, static, moving, poles, orientations


def diversity_order(components):
    """High-SNR slope implied by the dominant pole of the sum CDF.

    With the CDF behaving like ``x^(A + sum_k e_k p_k)`` as x -> 0 and the
    SNR mapping ``x = sqrt(gamma_th/gamma_0)``, the slope in gamma_0 is half
    the x-exponent.
    """
    cdf = sum_cdf_descriptor(tuple(components))
    compiled, exps, _, moving, poles, _ = _dominant_structure(cdf)
    expo = cdf.power_offset - 1.0
    for k in moving:
        expo += exps[k] * poles[k][0]
    return float(expo) / 2.0


def asymptotic_cdf(components, x, seed=0):
    """Leading small-x term of the sum CDF via dominant-pole residues.

    Each x-carrying variate is integrated over a small circle around its
    dominant pole (capturing higher-order poles and their logarithmic terms
    exactly); static variates keep their full residue ladders, so the
    returned coefficient is the complete leading x-power including the
    log factor where the pole is double.
    """
    cdf = sum_cdf_descriptor(tuple(components))
    compiled, exps, static, moving, poles, orientations = _dominant_structure(cdf)
    x = float(x)
    if x <= 0.0:
        raise ValueError("asymptotic expansion needs x > 0")
    logz = np.asarray(
        [
            log_principal(z) + e * math.log(x)
            for z, e in zip(cdf.scales, cdf.exponents)
        ],
        dtype=complex,
    )
    # probe point for ladder depths sits on the circle, not at the pole
    anchors = [0.0] * compiled.variates
    for k in moving:
        anchors[k] = poles[k][0] + poles[k][1]
    dense = [
        _circle(k, poles[k][0], poles[k][1], 64, orientations[k]) for k in moving
    ]
    series = []
    for k in static:
        gen = _series_generator(compiled, k)
        depth = _resolve_series_depth(compiled, logz, k, gen, anchors)
        series.append(_series(compiled, k, gen, depth))
    raw, _, _, _ = _tensor_value(compiled, logz, dense, series)
    return float(raw.real) * cdf.prefactor * x ** (cdf.power_offset - 1.0)
