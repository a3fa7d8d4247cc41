"""Numerical evaluation of multivariate Fox-H integrals.

The integral is a tensor of one-dimensional paths, one per variate:

* line paths: truncated upward vertical lines, trapezoid rule (spectrally
  accurate for analytic integrands decaying at +-i oo);
* series paths: the convergent right-hand residue ladder of a single plain
  numerator factor, used where an argument phase makes every vertical line
  divergent (complex arguments) or where an argument is exactly zero;
* circle paths: small positively-oriented circles around a dominant pole,
  used by the asymptotic machinery (they capture higher-order poles,
  logarithmic terms included, without symbolic residue calculus).

Everything is accumulated in log space with a single exponentiation per
factor product.  Deterministic tensor quadrature is used for small variate
counts, randomized Sobol sampling of the line dimensions otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cgamma import GammaPoleError, _log_gamma_nocheck, is_near_nonpositive_int
from .contours import MIN_LINE_RATE, PlanningError, decay_rates
from .kernel import compile_kernel

__all__ = [
    "EvalResult",
    "EngineError",
    "EvalConsistencyError",
    "EvalOverflowError",
    "integrand",
    "evaluate",
    "evaluate_raw",
    "evaluate_density_grid",
]

CHUNK = 1 << 19
QMC_REPLICATES = 8
SERIES_TOL = 1e-18
SERIES_CAP = 96


class EngineError(RuntimeError):
    """Evaluation could not be carried out with the supplied plan."""


class EvalConsistencyError(EngineError):
    """Residual imaginary part too large: bad contour or branch handling."""


class EvalOverflowError(EngineError):
    """Non-finite intermediate encountered."""


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_error_estimate: float
    imag_residual: float
    work: int

    def __post_init__(self):
        if not (math.isfinite(self.abs_error_estimate) and math.isfinite(self.imag_residual)):
            raise EvalOverflowError("non-finite error estimate")


def log_principal(z):
    """Principal log with arg in (-pi, pi]; negative reals map to +i pi."""
    z = complex(z)
    if z == 0:
        return complex(-np.inf, 0.0)
    if z.imag == 0.0:
        return complex(math.log(abs(z.real)), 0.0 if z.real > 0 else math.pi)
    return complex(math.log(abs(z)), math.atan2(z.imag, z.real))


# ---------------------------------------------------------------------------
# public single-point integrand
# ---------------------------------------------------------------------------


def integrand(kernel, s):
    """Gamma-ratio product of ``kernel`` at the contour point ``s``.

    Computed as one exponentiation of the signed sum of complex log-gammas.
    Raises :class:`GammaPoleError` when ``s`` hits a pole of a numerator
    factor (denominator poles are regular zeros and return 0).
    """
    compiled = kernel if hasattr(kernel, "coeffs") else compile_kernel(kernel)
    s = np.asarray(s, dtype=complex)
    if s.shape != (compiled.variates,):
        raise EngineError(f"expected {compiled.variates} contour coordinates")
    args = compiled.const + compiled.coeffs @ s
    near = is_near_nonpositive_int(args)
    if np.any(near & compiled.numerator):
        raise GammaPoleError(complex(args[near & compiled.numerator][0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = _log_gamma_nocheck(args)
    total = compiled.log_const + np.sum(np.where(compiled.numerator, lg, -lg))
    return complex(np.exp(total))


# ---------------------------------------------------------------------------
# path construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Dense:
    dim: int
    nodes: np.ndarray  # complex s values
    weights: np.ndarray  # complex quadrature weights incl. 1/(2 pi) or circle
    is_line: bool


def _line(dim, anchor, half_width, n):
    t = np.linspace(-half_width, half_width, n)
    w = np.full(n, (t[1] - t[0]) / (2.0 * np.pi), dtype=complex)
    w[0] *= 0.5
    w[-1] *= 0.5
    return _Dense(dim, anchor + 1j * t, w, True)


def _circle(dim, center, radius, n, orientation):
    th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    e = radius * np.exp(1j * th)
    return _Dense(dim, center + e, orientation * e / n, False)


@dataclass(frozen=True)
class _Series:
    dim: int
    gen: int  # compiled factor index generating the ladder
    poles: np.ndarray  # real pole locations, ascending
    log_w: np.ndarray  # log |residue weight|
    sign: np.ndarray  # (-1)^m


def _series(compiled, dim, gen, m_max):
    c = compiled.coeffs[gen, dim]
    m = np.arange(m_max + 1)
    poles = (m + compiled.const[gen]) / (-c)
    from scipy.special import gammaln

    log_w = -gammaln(m + 1.0) - math.log(abs(c))
    return _Series(dim, gen, poles, log_w, np.where(m % 2 == 0, 1.0, -1.0))


def _resolve_series_depth(compiled, logz, dim, gen, anchors):
    """Pick the ladder truncation from term magnitudes at the anchor point."""
    probe = _series(compiled, dim, gen, SERIES_CAP)
    s = np.asarray(anchors, dtype=complex)
    mags = np.zeros(len(probe.poles))
    for i in range(compiled.factor_count):
        if i == gen or compiled.coeffs[i, dim] == 0.0:
            continue
        base = compiled.const[i] + compiled.coeffs[i] @ s - compiled.coeffs[i, dim] * s[dim]
        arg = base + compiled.coeffs[i, dim] * probe.poles
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = _log_gamma_nocheck(arg).real
        mags += lg if compiled.numerator[i] else -lg
    with np.errstate(invalid="ignore"):
        zpart = np.where(probe.poles == 0.0, 0.0, probe.poles * logz[dim].real)
    mags += probe.log_w + zpart
    finite = np.isfinite(mags)
    if not np.any(finite):
        return SERIES_CAP
    mags = mags - mags[finite].max()
    with np.errstate(invalid="ignore"):
        keep = np.nonzero(finite & (mags > math.log(SERIES_TOL)))[0]
    depth = int(keep[-1]) + 4 if len(keep) else 8
    return min(max(depth, 8), SERIES_CAP)


# ---------------------------------------------------------------------------
# core tensor evaluation
# ---------------------------------------------------------------------------


def _split_factors(compiled, series_dims):
    """Partition factor indices into dense factors and per-series-dim lists."""
    sset = list(series_dims)
    dense, per = [], {k: [] for k in sset}
    for i in range(compiled.factor_count):
        touched = [k for k in sset if compiled.coeffs[i, k] != 0.0]
        if not touched:
            dense.append(i)
        elif len(touched) == 1:
            per[touched[0]].append(i)
        else:
            raise EngineError(
                "factor couples two series-collapsed variates; "
                "no convergent evaluation order exists for this descriptor"
            )
    return dense, per


def _series_values(compiled, logz, ser, per_factors, s_flat):
    """Collapsed ladder sum for one series dim at every dense grid point.

    Returns (values (B,), relative tail estimate).
    """
    poles = ser.poles[None, :]
    acc = np.zeros((s_flat.shape[0], ser.poles.size), dtype=complex)
    for i in per_factors:
        if i == ser.gen:
            continue
        base = compiled.const[i] + s_flat @ compiled.coeffs[i]
        arg = base[:, None] + compiled.coeffs[i, ser.dim] * poles
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = _log_gamma_nocheck(arg)
        acc += lg if compiled.numerator[i] else -lg
    lz = logz[ser.dim]
    if np.isneginf(lz.real):
        zp = np.where(ser.poles == 0.0, 0.0, -np.inf)
    else:
        zp = ser.poles * lz
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(acc + (ser.log_w + zp)[None, :]) * ser.sign[None, :]
    vals = terms.sum(axis=1)
    mags = np.abs(terms[:, -1])
    scale = np.maximum(np.abs(vals), 1e-300)
    tail = float(np.max(mags / scale)) if len(mags) else 0.0
    return vals, tail


def _dense_logs(compiled, logz, dense_factors, dense_dims, s_flat):
    total = np.full(s_flat.shape[0], compiled.log_const, dtype=complex)
    for i in dense_factors:
        arg = compiled.const[i] + s_flat @ compiled.coeffs[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = _log_gamma_nocheck(arg)
        total += lg if compiled.numerator[i] else -lg
    for k in dense_dims:
        total += s_flat[:, k] * logz[k]
    return total


class _TensorEval:
    """Shared machinery for deterministic tensor and QMC evaluation."""

    def __init__(self, compiled, logz, dense, series):
        self.compiled = compiled
        self.logz = logz
        self.dense = dense
        self.series = series
        self.dense_factors, per = _split_factors(
            compiled, [s.dim for s in series]
        )
        self.per = per
        self.tail = 0.0
        self.work = 0

    def integrand_flat(self, s_flat, weight_flat=None):
        """Weighted integrand at a flat batch of dense-dim points."""
        dense_dims = [d.dim for d in self.dense]
        logs = _dense_logs(self.compiled, self.logz, self.dense_factors, dense_dims, s_flat)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.exp(logs)
        blowup = 1
        for ser in self.series:
            sv, tail = _series_values(
                self.compiled, self.logz, ser, self.per[ser.dim], s_flat
            )
            vals = vals * sv
            self.tail = max(self.tail, tail)
            blowup *= ser.poles.size
        self.work += s_flat.shape[0] * max(blowup, 1)
        if weight_flat is not None:
            vals = vals * weight_flat
        if not np.all(np.isfinite(vals)):
            raise EvalOverflowError("non-finite integrand value on the contour")
        return vals


def _tensor_value(compiled, logz, dense, series, chunk=CHUNK):
    """Deterministic tensor contraction.

    Returns (value, doubling_error, tail_rel, work).  The doubling error is
    |full - half| where "half" drops every other node of the outermost line
    dimension (its own endpoints re-weighted), the standard trapezoid
    error estimate.
    """
    ev = _TensorEval(compiled, logz, dense, series)
    if not dense:
        # series columns stay zero: the ladder substitution happens inside
        # _series_values, never through s_flat
        s_flat = np.zeros((1, compiled.variates), dtype=complex)
        v = ev.integrand_flat(s_flat)[0]
        return v, 0.0, ev.tail, ev.work

    # outermost dimension: the line dim with the most nodes, else first dense
    order = sorted(
        range(len(dense)),
        key=lambda i: (not dense[i].is_line, -len(dense[i].nodes)),
    )
    outer = dense[order[0]]
    inner = [dense[i] for i in order[1:]]

    inner_count = int(np.prod([len(d.nodes) for d in inner])) if inner else 1
    m = compiled.variates
    partials = np.zeros(len(outer.nodes), dtype=complex)

    # precompute the inner mesh once (re-used for every outer slab)
    if inner:
        grids = np.meshgrid(*[d.nodes for d in inner], indexing="ij")
        wgrids = np.meshgrid(*[d.weights for d in inner], indexing="ij")
        inner_s = np.stack([g.reshape(-1) for g in grids], axis=1)
        inner_w = np.prod(np.stack([w.reshape(-1) for w in wgrids], axis=1), axis=1)
    else:
        inner_s = np.zeros((1, 0), dtype=complex)
        inner_w = np.ones(1, dtype=complex)

    block = max(1, chunk // max(inner_count, 1))
    for j0 in range(0, len(outer.nodes), block):
        j1 = min(j0 + block, len(outer.nodes))
        nb = j1 - j0
        s_flat = np.zeros((nb * inner_count, m), dtype=complex)
        s_flat[:, outer.dim] = np.repeat(outer.nodes[j0:j1], inner_count)
        for col, d in enumerate(inner):
            s_flat[:, d.dim] = np.tile(inner_s[:, col], nb)
        vals = ev.integrand_flat(s_flat, np.tile(inner_w, nb))
        partials[j0:j1] = vals.reshape(nb, inner_count).sum(axis=1)

    full = complex(np.sum(partials * outer.weights))
    if outer.is_line and len(outer.nodes) >= 5:
        half_idx = np.arange(0, len(outer.nodes), 2)
        wh = np.full(len(half_idx), 2.0, dtype=complex) * outer.weights[half_idx]
        wh[0] = outer.weights[0] * 2.0
        wh[-1] = outer.weights[-1] * 2.0
        half = complex(np.sum(partials[half_idx] * wh))
        derr = abs(full - half)
    else:
        derr = 0.0
    return full, derr, ev.tail, ev.work


class _ImportanceMap:
    """Per-dimension truncated-Laplace map for Sobol sampling of the lines.

    Uniform sampling of a [-T, T] box starves the integrand's peak (the
    gamma product decays like e^{-lambda |t|}); mapping through the
    two-sided exponential with the dimension's own decay rate flattens the
    sampled integrand, with the density divided back out.
    """

    def __init__(self, compiled, logz, line_info):
        rates = decay_rates(compiled)
        self.info = []
        for dim, anchor, t in line_info:
            lam = max(rates[dim] - abs(logz[dim].imag), 0.05)
            self.info.append((dim, anchor, t, lam, 1.0 - math.exp(-lam * t)))

    def sample(self, u):
        """Map uniforms (n, d) -> contour points and inverse densities."""
        n, d = u.shape
        s_cols, inv = [], np.ones(n)
        for col, (dim, anchor, t, lam, c) in enumerate(self.info):
            v = 2.0 * u[:, col] - 1.0
            tt = -np.sign(v) * np.log1p(-np.abs(v) * c) / lam
            pdf = lam * np.exp(-lam * np.abs(tt)) / (2.0 * c)
            s_cols.append(anchor + 1j * tt)
            inv = inv / pdf
        return s_cols, inv / (2.0 * np.pi) ** d


def _qmc_value(compiled, logz, line_info, series, n_samples, seed):
    """Randomized Sobol estimate over the line dimensions.

    ``line_info`` is a list of (dim, anchor, half_width).  Error is the
    standard error across replicates.
    """
    from scipy.stats import qmc

    d = len(line_info)
    if d == 0:
        raise EngineError("qmc evaluation requires at least one line dimension")
    ev = _TensorEval(compiled, logz, [], series)
    dims = [dim for dim, _, _ in line_info]
    imap = _ImportanceMap(compiled, logz, line_info)
    estimates = []
    m = compiled.variates
    mbits = max(6, int(math.ceil(math.log2(max(n_samples, 64)))))
    for r in range(QMC_REPLICATES):
        eng = qmc.Sobol(d, scramble=True, seed=seed * 1009 + 7919 * r + 13)
        u = eng.random(2**mbits)
        s_cols, inv = imap.sample(u)
        s_flat = np.zeros((u.shape[0], m), dtype=complex)
        for col, dim in enumerate(dims):
            s_flat[:, dim] = s_cols[col]
        logs = _dense_logs(compiled, logz, ev.dense_factors, dims, s_flat)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.exp(logs)
        for ser in series:
            sv, tail = _series_values(compiled, logz, ser, ev.per[ser.dim], s_flat)
            vals = vals * sv
            ev.tail = max(ev.tail, tail)
        if not np.all(np.isfinite(vals)):
            raise EvalOverflowError("non-finite integrand value in qmc sampling")
        ev.work += s_flat.shape[0]
        estimates.append(complex(np.mean(vals * inv)))
    estimates = np.asarray(estimates)
    value = complex(np.mean(estimates))
    err = float(np.std(estimates.real, ddof=1) / math.sqrt(len(estimates)))
    err += float(np.std(estimates.imag, ddof=1) / math.sqrt(len(estimates)))
    return value, err, ev.tail, ev.work


# ---------------------------------------------------------------------------
# plan-driven evaluation
# ---------------------------------------------------------------------------


def _check_plan(compiled, plan):
    if plan.fingerprint and plan.fingerprint != compiled.fingerprint:
        raise EngineError("contour plan was built for a different kernel")


def _build_paths(compiled, plan, logz):
    """Instantiate dense/series paths from a plan and argument logs.

    Re-checks line convergence with the actual argument phases and
    re-routes zero arguments through their residue ladder.
    """
    rates = decay_rates(compiled)
    dense, series = [], []
    for k in range(compiled.variates):
        want_series = plan.series[k] if plan.series else False
        if np.isneginf(logz[k].real) and not want_series:
            gen = _find_gen(compiled, k)
            if gen is None:
                raise EngineError(
                    f"argument {k + 1} is zero and the variate has no residue ladder"
                )
            want_series = True
        if want_series:
            gen = plan.series_factor[k] if plan.series and plan.series[k] else _find_gen(compiled, k)
            depth = _resolve_series_depth(compiled, logz, k, gen, plan.anchors)
            series.append(_series(compiled, k, gen, depth))
        else:
            eff = rates[k] - abs(logz[k].imag)
            if eff < 0.8 * MIN_LINE_RATE:
                raise PlanningError(
                    f"line integral along variate {k + 1} diverges for these "
                    f"arguments (decay rate {eff:.3f}); re-plan with arg_phases"
                )
            dense.append(_line(k, plan.anchors[k], plan.half_widths[k], plan.nodes[k]))
    return dense, series


def _find_gen(compiled, k):
    from .contours import _series_generator

    return _series_generator(compiled, k)


def _finish(raw, quad_err, tail, work, scale=1.0):
    value = raw * scale
    err = (quad_err + tail * abs(raw) + 4e-16 * abs(raw)) * abs(scale)
    imag = abs(value.imag)
    res = EvalResult(float(value.real), float(err), float(imag), int(work))
    if imag > 100.0 * max(err, 1e-300) and imag > 1e-6:
        raise EvalConsistencyError(
            f"imaginary residual {imag:.3e} exceeds 100 x error estimate {err:.3e}"
        )
    return res


def evaluate_raw(kernel, args, plan, *, seed=0, scale=1.0):
    """Evaluate ``H[args]`` for a kernel under a contour plan.

    ``scale`` multiplies the result (used by density/expectation wrappers).
    Returns an :class:`EvalResult`; the ``value`` is the real part and the
    imaginary residual is reported (and checked) separately.
    """
    compiled = kernel if hasattr(kernel, "coeffs") else compile_kernel(kernel)
    _check_plan(compiled, plan)
    args = [complex(z) for z in args]
    if len(args) != compiled.variates:
        raise EngineError(f"expected {compiled.variates} arguments")
    logz = np.asarray([log_principal(z) for z in args], dtype=complex)
    dense, series = _build_paths(compiled, plan, logz)
    if plan.strategy == "qmc" and any(d.is_line for d in dense):
        line_info = [
            (d.dim, plan.anchors[d.dim], plan.half_widths[d.dim]) for d in dense
        ]
        raw, err, tail, work = _qmc_value(
            compiled, logz, line_info, series, plan.qmc_samples, seed
        )
        return _finish(raw, err, tail, work, scale)
    raw, derr, tail, work = _tensor_value(compiled, logz, dense, series)
    return _finish(raw, derr, tail, work, scale)


def evaluate(density, x, plan, *, seed=0):
    """Evaluate a weighted density ``psi x^(a-1) H[{zeta_k x^(e_k)}]`` at x > 0."""
    if x <= 0.0:
        raise EngineError("densities are defined for x > 0")
    args = [z * x**e for z, e in zip(density.scales, density.exponents)]
    scale = density.prefactor * x ** (density.power_offset - 1.0)
    return evaluate_raw(density.kernel, args, plan, seed=seed, scale=scale)


def evaluate_density_grid(density, xs, plan, *, seed=0):
    """Vectorized density evaluation over a grid of abscissae.

    The x-dependence enters only через the argument powers
    ``x^(sum_k e_k s_k)``, so the integrand tensor is built once and
    re-contracted per abscissa.  Requires every series-collapsed variate to
    carry a zero x-exponent (true for all descriptors built here).
    Returns (values, error_estimates) arrays.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0.0):
        raise EngineError("densities are defined for x > 0")
    compiled = compile_kernel(density.kernel)
    _check_plan(compiled, plan)
    logz = np.asarray([log_principal(z) for z in density.scales], dtype=complex)
    exps = np.asarray(density.exponents)
    dense, series = _build_paths(compiled, plan, logz)
    if any(exps[s.dim] != 0.0 for s in series):
        vals = np.empty(len(xs))
        errs = np.empty(len(xs))
        for i, x in enumerate(xs):
            r = evaluate(density, float(x), plan, seed=seed)
            vals[i], errs[i] = r.value, r.abs_error_estimate
        return vals, errs
    if plan.strategy == "qmc" and dense:
        return _density_grid_qmc(
            compiled, density, xs, plan, logz, exps, dense, series, seed
        )

    def contraction(dense_paths):
        ev = _TensorEval(compiled, logz, dense_paths, series)
        if dense_paths:
            grids = np.meshgrid(*[d.nodes for d in dense_paths], indexing="ij")
            wg = np.meshgrid(*[d.weights for d in dense_paths], indexing="ij")
            m = compiled.variates
            s_flat = np.zeros((grids[0].size, m), dtype=complex)
            for g, d in zip(grids, dense_paths):
                s_flat[:, d.dim] = g.reshape(-1)
            w_flat = np.prod(np.stack([w.reshape(-1) for w in wg], axis=1), axis=1)
        else:
            s_flat = np.zeros((1, compiled.variates), dtype=complex)
            w_flat = np.ones(1, dtype=complex)
        amp = ev.integrand_flat(s_flat, w_flat)
        u = s_flat @ exps.astype(complex)
        lx = np.log(xs)
        out = np.empty(len(xs), dtype=complex)
        step = max(1, (1 << 22) // max(len(xs), 1))
        for i0 in range(0, len(amp), step):
            i1 = min(i0 + step, len(amp))
            out_part = np.exp(np.outer(lx, u[i0:i1])) @ amp[i0:i1]
            if i0 == 0:
                out = out_part
            else:
                out += out_part
        return out, ev.tail, ev.work

    full, tail, work = contraction(dense)
    halved = [
        _line(d.dim, plan.anchors[d.dim], plan.half_widths[d.dim], (len(d.nodes) + 1) // 2)
        if d.is_line and len(d.nodes) >= 5
        else d
        for d in dense
    ]
    half, _, work2 = contraction(halved)
    scale = density.prefactor * xs ** (density.power_offset - 1.0)
    values = full.real * scale
    errs = (np.abs(full - half) + tail * np.abs(full) + 4e-16 * np.abs(full)) * scale
    imag = np.abs(full.imag) * scale
    bad = (imag > 100.0 * np.maximum(errs, 1e-300)) & (imag > 1e-6)
    if np.any(bad):
        raise EvalConsistencyError(
            f"imaginary residual {imag[bad][0]:.3e} at x={xs[bad][0]:g}"
        )
    if not np.all(np.isfinite(values)):
        raise EvalOverflowError("non-finite density value")
    return values, errs


def _density_grid_qmc(compiled, density, xs, plan, logz, exps, dense, series, seed):
    """Replicated-Sobol density grid: per-replicate amplitudes are built
    once and re-scaled per abscissa exactly as in the tensor path."""
    from scipy.stats import qmc

    line_info = [(d.dim, plan.anchors[d.dim], plan.half_widths[d.dim]) for d in dense]
    d = len(line_info)
    ev = _TensorEval(compiled, logz, [], series)
    imap = _ImportanceMap(compiled, logz, line_info)
    mbits = max(6, int(math.ceil(math.log2(max(plan.qmc_samples, 64)))))
    lx = np.log(xs)
    reps = np.empty((QMC_REPLICATES, len(xs)), dtype=complex)
    for r in range(QMC_REPLICATES):
        eng = qmc.Sobol(d, scramble=True, seed=seed * 1009 + 7919 * r + 13)
        u = eng.random(2**mbits)
        s_cols, inv = imap.sample(u)
        s_flat = np.zeros((u.shape[0], compiled.variates), dtype=complex)
        for col, (dim, anchor, t) in enumerate(line_info):
            s_flat[:, dim] = s_cols[col]
        logs = _dense_logs(compiled, logz, ev.dense_factors, [i[0] for i in line_info], s_flat)
        with np.errstate(over="ignore", invalid="ignore"):
            amp = np.exp(logs)
        for ser in series:
            sv, tail = _series_values(compiled, logz, ser, ev.per[ser.dim], s_flat)
            amp = amp * sv
        if not np.all(np.isfinite(amp)):
            raise EvalOverflowError("non-finite integrand value in qmc sampling")
        amp = amp * inv
        uvec = s_flat @ exps.astype(complex)
        step = max(1, (1 << 22) // max(len(xs), 1))
        acc = np.zeros(len(xs), dtype=complex)
        for i0 in range(0, len(amp), step):
            i1 = min(i0 + step, len(amp))
            acc += np.exp(np.outer(lx, uvec[i0:i1])) @ amp[i0:i1]
        reps[r] = acc / len(amp)
    scale = density.prefactor * xs ** (density.power_offset - 1.0)
    values = reps.real.mean(axis=0) * scale
    errs = (
        reps.real.std(axis=0, ddof=1) + reps.imag.std(axis=0, ddof=1)
    ) / math.sqrt(QMC_REPLICATES) * scale
    errs += np.abs(values) * 1e-15
    return values, errs
