"""Least-squares fitting, AIC model selection and derived-quantity extractors.

The optimizer is ``scipy.optimize.least_squares`` (MINPACK Levenberg-Marquardt
when unbounded, trust-region reflective when bounds are given). Count data are
weighted with Poisson errors sqrt(max(counts, 1)) unless sigma is supplied;
derived quantities (centers, widths, areas) use unit weights by default.

AIC convention: n ln(RSS/n) + 2k with k free parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from . import lineshapes as ls
from .emitters import StarkResponse
from .errors import DomainError, FitError

AIC_THRESHOLD = 5.0
MAX_ITER = 200
GTOL = 1e-10


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------

@dataclass
class Spectrum:
    frequency: np.ndarray
    intensity: np.ndarray
    sigma: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequency = np.asarray(self.frequency, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.frequency.shape != self.intensity.shape or self.frequency.ndim != 1:
            raise DomainError("frequency and intensity must be 1-D and the same length")
        if self.frequency.size and np.any(np.diff(self.frequency) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != self.frequency.shape or np.any(self.sigma <= 0):
                raise DomainError("sigma must be positive and match the data length")

    def poisson_sigma(self):
        if self.sigma is not None:
            return self.sigma
        return np.sqrt(np.maximum(self.intensity, 1.0))


@dataclass
class DecayTransient:
    time: np.ndarray
    counts: np.ndarray
    bin_width: float = 0.0

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.time.shape != self.counts.shape or self.time.ndim != 1:
            raise DomainError("time and counts must be 1-D and the same length")
        if self.time.size > 1:
            d = np.diff(self.time)
            if np.any(d <= 0):
                raise DomainError("times must be strictly increasing")
            if not np.allclose(d, d[0], rtol=1e-6, atol=0):
                raise DomainError("time bins must be uniform")
            if not self.bin_width:
                self.bin_width = float(d[0])


# ---------------------------------------------------------------------------
# Core fit
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    model: str
    param_names: tuple
    params: np.ndarray
    covariance: np.ndarray
    rss: float
    n_points: int
    n_free: int
    aic: float
    converged: bool = True
    free: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def residual_norm(self):
        return math.sqrt(self.rss)

    @property
    def errors(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    @property
    def named(self):
        return dict(zip(self.param_names, self.params.tolist()))

    def __getitem__(self, name):
        return float(self.params[self.param_names.index(name)])

    def error(self, name):
        return float(self.errors[self.param_names.index(name)])

    def to_dict(self):
        return {
            "model": self.model,
            "params": self.named,
            "errors": dict(zip(self.param_names, self.errors.tolist())),
            "covariance": self.covariance.tolist(),
            "residual_norm": self.residual_norm,
            "n_points": self.n_points,
            "n_free": self.n_free,
            "aic": self.aic,
            "converged": self.converged,
            **({"extra": self.extra} if self.extra else {}),
        }


def aic_value(rss, n, k, scale=0.0):
    """n ln(RSS/n) + 2k; RSS is floored at roundoff level of ``scale``."""
    floor = n * (1e-12 * scale) ** 2 if scale > 0 else 0.0
    rss = max(rss, floor, np.finfo(float).tiny)
    return n * math.log(rss / n) + 2 * k


def _covariance(jac, rss, n, k, absolute_sigma):
    norms = np.linalg.norm(jac, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(jac)):
        raise FitError("parameters not identifiable (zero sensitivity)")
    jn = jac / norms
    s = np.linalg.svd(jn, compute_uv=False)
    if s[-1] < 1e-10 * s[0]:
        raise FitError(f"parameters not identifiable (condition {s[0] / s[-1]:.3g})")
    cov = np.linalg.inv(jn.T @ jn) / np.outer(norms, norms)
    if not absolute_sigma:
        cov = cov * (rss / (n - k) if n > k else np.inf)
    return 0.5 * (cov + cov.T)


def nls_fit(func: Union[str, Callable], x, y, p0, *, sigma=None, bounds=None, fixed=None,
            param_names: Optional[Sequence[str]] = None, model: Optional[str] = None,
            absolute_sigma: Optional[bool] = None, max_iter: int = MAX_ITER,
            gtol: float = GTOL) -> FitResult:
    """Weighted nonlinear least squares.

    ``func`` is a callable f(x, *params) or a lineshape kind name. ``fixed`` is
    a boolean mask of parameters held at their ``p0`` value. Raises
    ``FitError`` (carrying the best-so-far vector) on non-convergence or a
    rank-deficient Jacobian at the solution.
    """
    if isinstance(func, str):
        spec = ls.SHAPES[func]
        model = model or func
        param_names = param_names or spec.param_names
        func = spec.func
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    names = tuple(param_names) if param_names else tuple(f"p{i}" for i in range(p0.size))
    free = np.ones(p0.size, bool) if fixed is None else ~np.asarray(fixed, bool)
    k = int(free.sum())
    n = y.size
    if n <= k:
        raise DomainError(f"need more than {k} points for {k} free parameters, got {n}")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    if absolute_sigma is None:
        absolute_sigma = sigma is not None

    def full(q):
        p = p0.copy()
        p[free] = q
        return p

    def resid(q):
        return (func(x, *full(q)) - y) * w

    q0 = p0[free]
    if bounds is not None:
        lo = np.broadcast_to(np.asarray(bounds[0], float), p0.shape)[free]
        hi = np.broadcast_to(np.asarray(bounds[1], float), p0.shape)[free]
        if np.any(q0 < lo) or np.any(q0 > hi):
            raise DomainError("initial parameters outside bounds")
        res = least_squares(resid, q0, bounds=(lo, hi), method="trf", x_scale="jac",
                            ftol=1e-15, xtol=1e-15, gtol=gtol, max_nfev=max_iter * (k + 1))
    else:
        res = least_squares(resid, q0, method="lm", x_scale="jac", ftol=1e-15, xtol=1e-15,
                            gtol=gtol, max_nfev=max_iter * (k + 1))
    best = full(res.x)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"{model or 'fit'} did not converge: {res.message}", best=best,
                       diagnostics={"nfev": res.nfev, "cost": float(res.cost)})
    rss = float(np.sum(res.fun**2))
    try:
        cov_free = _covariance(res.jac, rss, n, k, absolute_sigma)
    except FitError as e:
        raise FitError(f"{model or 'fit'}: {e}", best=best) from None
    cov = np.zeros((p0.size, p0.size))
    cov[np.ix_(free, free)] = cov_free
    scale = float(np.max(np.abs(y * w))) if n else 0.0
    return FitResult(model=model or "custom", param_names=names, params=best,
                     covariance=cov, rss=rss, n_points=n, n_free=k,
                     aic=aic_value(rss, n, k, scale), free=free,
                     extra={"nfev": int(res.nfev)})


def aic_select(fits: Sequence[FitResult], threshold: float = AIC_THRESHOLD) -> FitResult:
    """Keep the smallest model unless a larger one lowers AIC by more than ``threshold``."""
    if not fits:
        raise ValueError("no candidate fits")
    ordered = sorted(fits, key=lambda f: f.n_free)
    best = ordered[0]
    for f in ordered[1:]:
        if f.n_free > best.n_free and f.aic < best.aic - threshold:
            best = f
    return best


def poly_fit(x, y, degree, *, sigma=None, model="poly") -> FitResult:
    """Weighted polynomial least squares, coefficients in increasing order."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n, k = y.size, degree + 1
    if n <= k:
        raise DomainError(f"need more than {k} points for a degree-{degree} fit")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float)
    X = np.vander(x, k, increasing=True)
    xs = np.max(np.abs(x)) or 1.0
    Xs = X / xs ** np.arange(k)
    yc = y.mean()
    coef_s, *_ = np.linalg.lstsq(Xs * w[:, None], (y - yc) * w, rcond=None)
    coef = coef_s / xs ** np.arange(k)
    coef[0] += yc
    r = (X @ coef - y) * w
    rss = float(r @ r)
    cov = _covariance(X * w[:, None], rss, n, k, sigma is not None)
    scale = float(np.max(np.abs((y - yc) * w)))
    names = tuple(f"c{i}" for i in range(k))
    return FitResult(model=model, param_names=names, params=coef, covariance=cov,
                     rss=rss, n_points=n, n_free=k, aic=aic_value(rss, n, k, scale))


# ---------------------------------------------------------------------------
# Shape fits
# ---------------------------------------------------------------------------

def _wrap_phase(phi):
    return (phi + math.pi) % (2 * math.pi) - math.pi


def _fringe_scan(x, y, w, p, ratios=np.linspace(0.7, 1.3, 121)):
    """Pick (A, f, phi) by linear least squares over a grid of fringe frequencies."""
    A, f0, phi, y0, y1, a0, nc, g = p
    d = x - nc
    b = y0 + y1 * d
    h2 = (0.5 * g) ** 2
    dip = b - a0 * h2 / (d * d + h2)
    target = (y - b * dip) * w
    best = None
    for r in ratios:
        f = f0 * r
        M = np.column_stack([dip * np.sin(f * x), dip * np.cos(f * x)]) * w[:, None]
        (ca, cb), *_ = np.linalg.lstsq(M, target, rcond=None)
        rss = float(np.sum((M @ [ca, cb] - target) ** 2))
        if best is None or rss < best[0]:
            best = (rss, math.hypot(ca, cb), f, math.atan2(cb, ca))
    return best[1:]


def fit_cavity_params(x, y, p0, *, sigma=None, scan=True) -> FitResult:
    """Cavity composite fit with phase referenced to the scan centre.

    (A, f, phi) are first chosen by a fringe-frequency scan with a linear solve
    for amplitude and phase; then all eight parameters are refined together.
    The reported phase is wrapped to [-pi, pi).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float)
    p = np.asarray(p0, float).copy()
    if scan and p[1] != 0:
        p[0], p[1], p[2] = _fringe_scan(x, y, w, p)
    x_ref = float(np.mean(x))

    def centred(nu, A, f, phc, y0, y1, a0, nc, g):
        return ls.cavity_reflection(nu, A, f, phc - f * x_ref, y0, y1, a0, nc, g)

    pc = p.copy()
    pc[2] = _wrap_phase(p[2] + p[1] * x_ref)
    fit = nls_fit(centred, x, y, pc, sigma=sigma, param_names=ls.SHAPES["cavity"].param_names,
                  model="cavity")
    T = np.eye(8)
    T[2, 1] = -x_ref
    fit.params = fit.params.copy()
    if fit.params[0] < 0:
        fit.params[0] = -fit.params[0]
        fit.params[2] += math.pi
    fit.params[2] = _wrap_phase(fit.params[2] - fit.params[1] * x_ref)
    fit.params[5] = fit.params[5]
    fit.params[7] = abs(fit.params[7])
    fit.covariance = T @ fit.covariance @ T.T
    return fit


DEFAULT_FIXED = {"double_decay": ("t1f", "t1s")}


def fit_shape(kind: str, x, y, p0, *, sigma=None, fixed=None, bounds=None) -> FitResult:
    """Fit one of the ``lineshapes.SHAPES`` kinds.

    Onset times of the exponential first-peak terms of ``double_decay`` are held
    fixed by default: a pure exponential cannot distinguish amplitude from onset.
    """
    if kind == "cavity":
        return fit_cavity_params(x, y, p0, sigma=sigma)
    names = ls.SHAPES[kind].param_names
    if fixed is None and kind in DEFAULT_FIXED:
        fixed = [nm in DEFAULT_FIXED[kind] for nm in names]
    fit = nls_fit(kind, x, y, p0, sigma=sigma, fixed=fixed, bounds=bounds)
    # widths enter by magnitude; report them positive
    for i, nm in enumerate(names):
        if nm.startswith(("gamma", "sigma", "tau", "width")) and nm != "gamma_cav":
            fit.params[i] = abs(fit.params[i])
    return fit


# ---------------------------------------------------------------------------
# PLE peaks
# ---------------------------------------------------------------------------

def _half_width_scan(x, y, base):
    i = int(np.argmax(y))
    half = base + 0.5 * (y[i] - base)
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    return i, max(x[hi] - x[lo], 2 * float(np.min(np.diff(x))))


def _gl_baseline(nu, a, c, gg, gl, base):
    return ls.gauss_lorentz(nu, a, c, gg, gl) + base


def fit_ple(spectrum: Spectrum, p0=None) -> FitResult:
    """Gaussian-Lorentzian product plus flat background on a PLE scan.

    Initial guess: argmax for the centre, half-maximum scan for the width,
    lower decile for the background.
    """
    x, y = spectrum.frequency, spectrum.intensity
    if p0 is None:
        base = float(np.quantile(y, 0.1))
        i, fw = _half_width_scan(x, y, base)
        wdt = fw * ls.EQUAL_WIDTH_SCALE
        p0 = [y[i] - base, x[i], wdt, wdt, base]
    fit = nls_fit(_gl_baseline, x, y, p0, sigma=spectrum.poisson_sigma(),
                  param_names=("amplitude", "center", "gamma_g", "gamma_l", "background"),
                  model="gauss_lorentz")
    fit.params[2:4] = np.abs(fit.params[2:4])
    span = x[-1] - x[0]
    if (max(fit.params[2:4]) > 10 * span or not x[0] <= fit["center"] <= x[-1]
            or fit["amplitude"] <= 0):
        raise FitError("no resolvable peak in scan", best=fit.params)
    # the peak must beat a flat background by the same AIC margin as any other model choice
    sig = spectrum.poisson_sigma()
    wt = sig**-2
    flat_rss = float(np.sum((y - (y * wt).sum() / wt.sum()) ** 2 * wt))
    gain = aic_value(flat_rss, y.size, 1) - aic_value(fit.rss, y.size, fit.n_free)
    fit.extra["aic_gain_over_flat"] = gain
    if gain <= AIC_THRESHOLD:
        raise FitError(f"no significant peak in scan (AIC gain {gain:.2f} over flat background)",
                       best=fit.params)
    return fit


def peak_summary(fit: FitResult) -> dict:
    """Centre, product FWHM and amplitude with 1-sigma errors."""
    gg, gl = fit["gamma_g"], fit["gamma_l"]
    fw = ls.gl_product_fwhm(gg, gl)
    i, j = fit.param_names.index("gamma_g"), fit.param_names.index("gamma_l")
    h = 1e-6
    grad = np.array([(ls.gl_product_fwhm(gg * (1 + h), gl) - fw) / (gg * h),
                     (ls.gl_product_fwhm(gg, gl * (1 + h)) - fw) / (gl * h)])
    c = fit.covariance[np.ix_([i, j], [i, j])]
    return {
        "center": fit["center"], "center_err": fit.error("center"),
        "fwhm": fw, "fwhm_err": float(math.sqrt(max(grad @ c @ grad, 0.0))),
        "amplitude": fit["amplitude"], "amplitude_err": fit.error("amplitude"),
    }


def _cavity_smooth(nu, y0, y1, a0, nu_cav, gamma_cav):
    d = nu - nu_cav
    b = y0 + y1 * d
    h2 = (0.5 * gamma_cav) ** 2
    return b * (b - a0 * h2 / (d * d + h2))


def cavity_initial_guess(x, y, sigma=None):
    """Staged start for the cavity fit.

    The dip and background are fitted first without fringes; the fringe
    frequency is then the dominant line in the windowed spectrum of the
    residual divided by the dip. Amplitude and phase are left to the
    fringe scan in ``fit_cavity_params``.
    """
    edge = max(3, x.size // 10)
    ex = np.r_[x[:edge], x[-edge:]]
    ey = np.r_[y[:edge], y[-edge:]]
    i = int(np.argmin(y))
    slope, icpt = np.polyfit(ex - x[i], ey, 1)
    # S ~ B^2 near the edges, so B ~ sqrt(S)
    y0 = math.sqrt(max(icpt, 1e-12))
    y1 = slope / (2 * y0)
    a0 = y0 - y[i] / y0
    inside = np.nonzero(y < 0.5 * (icpt + y[i]))[0]
    dx = float(np.mean(np.diff(x)))
    g = max(x[inside[-1]] - x[inside[0]] if inside.size > 1 else 0, 3 * dx)
    sm = nls_fit(_cavity_smooth, x, y, [y0, y1, a0, x[i], g], sigma=sigma,
                 param_names=("y0", "y1", "a0", "nu_cav", "gamma_cav"), model="cavity_smooth")
    y0, y1, a0, nc, g = sm.params
    d = x - nc
    b = y0 + y1 * d
    dip = b - a0 * (0.5 * g) ** 2 / (d * d + (0.5 * g) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(np.abs(dip) > 1e-12, (y - b * dip) / dip, 0.0)
    spec = np.abs(np.fft.rfft((r - r.mean()) * np.hanning(r.size)))
    freqs = np.fft.rfftfreq(x.size, d=dx)
    kf = int(np.argmax(spec[2:]) + 2)
    return [0.0, 2 * math.pi * freqs[kf], 0.0, y0, y1, a0, nc, abs(g)]


def fit_cavity(spectrum: Spectrum, p0=None) -> FitResult:
    """Cavity reflection fit; Q = nu_cav / Gamma_cav lands in ``extra``."""
    x, y = spectrum.frequency, spectrum.intensity
    if p0 is None:
        p0 = cavity_initial_guess(x, y, spectrum.poisson_sigma())
    fit = fit_cavity_params(x, y, p0, sigma=spectrum.poisson_sigma())
    q = fit["nu_cav"] / fit["gamma_cav"]
    qerr = q * math.hypot(fit.error("nu_cav") / fit["nu_cav"], fit.error("gamma_cav") / fit["gamma_cav"])
    fit.extra.update({"q_factor": q, "q_factor_err": qerr})
    return fit


# ---------------------------------------------------------------------------
# Decay transients
# ---------------------------------------------------------------------------

def _exp_bg(t, a, tau, bg):
    return ls.single_exp(t, a, tau) + bg


def fit_decay(tr: DecayTransient, p0=None) -> FitResult:
    """Single exponential plus constant background.

    Initial guess: background from the last decile, lifetime from a
    log-linear regression over the first half of the trace.
    """
    t, c = tr.time, tr.counts
    if p0 is None:
        bg = float(np.median(c[-max(3, c.size // 10):]))
        head = slice(0, max(3, c.size // 2))
        sig = np.maximum(c[head] - bg, 1.0)
        slope, icpt = np.polyfit(t[head], np.log(sig), 1)
        tau = -1.0 / slope if slope < 0 else (t[-1] - t[0]) / 3
        p0 = [math.exp(icpt), tau, bg]
    sigma = np.sqrt(np.maximum(c, 1.0))
    fit = nls_fit(_exp_bg, t, c, p0, sigma=sigma, param_names=("amplitude", "tau", "background"),
                  model="single_exp")
    fit.params[1] = abs(fit.params[1])
    return fit


def _dd_binned_bg(width):
    def f(t, *p):
        return ls.double_decay_binned(t, width, *p[:-1]) + p[-1]
    return f


def fit_double_decay(tr: DecayTransient, p0, fixed=None, background: float = 0.0) -> FitResult:
    """Double-decay fit of a binned shelving transient, Poisson weights.

    Weights come from the data in a first pass and from the fitted model in a
    second.

    The model is the exact integral of the rate over each bin plus a constant
    background per bin, so fitted amplitudes are rates per unit time. Onset
    times of the first-peak terms are held fixed unless ``fixed`` says otherwise.
    """
    names = ls.SHAPES["double_decay"].param_names + ("background",)
    if fixed is None:
        fixed = [nm in DEFAULT_FIXED["double_decay"] for nm in names]
    p = np.r_[np.asarray(p0, float), background]
    model = _dd_binned_bg(tr.bin_width)
    fit = nls_fit(model, tr.time, tr.counts, p, param_names=names,
                  sigma=np.sqrt(np.maximum(tr.counts, 1.0)), fixed=fixed, model="double_decay")
    # weights from the observed counts bias low-count bins downward; one pass
    # with weights from the fitted model removes most of that bias
    mu = model(tr.time, *fit.params)
    fit = nls_fit(model, tr.time, tr.counts, fit.params, param_names=names,
                  sigma=np.sqrt(np.maximum(mu, 1.0)), fixed=fixed, model="double_decay")
    for i in (2, 5, 8, 9):
        fit.params[i] = abs(fit.params[i])
    return fit


def delayed_peak_area(fit: FitResult):
    """Area a2 (tau_fall - tau_rise) of the delayed peak with its 1-sigma error."""
    a2, tf, tr = fit["a2"], fit["tau2_fall"], fit["tau2_rise"]
    idx = [fit.param_names.index(n) for n in ("a2", "tau2_fall", "tau2_rise")]
    jac = np.array([tf - tr, a2, -a2])
    var = jac @ fit.covariance[np.ix_(idx, idx)] @ jac
    return a2 * (tf - tr), float(np.sqrt(max(var, 0.0)))


# ---------------------------------------------------------------------------
# Stark series
# ---------------------------------------------------------------------------

@dataclass
class StarkFit:
    response: StarkResponse
    shift_fit: FitResult
    width_fit: FitResult
    shift_candidates: list
    width_candidates: list

    @property
    def shift_quadratic(self):
        return self.shift_fit.n_free == 3

    @property
    def width_quadratic(self):
        return self.width_fit.n_free == 3


def fit_stark_series(voltages, centers, widths, fit_range, *, center_sigma=None,
                     width_sigma=None, threshold: float = AIC_THRESHOLD, name: str = "",
                     quench=None) -> StarkFit:
    """Fit linear and quadratic Stark laws to peak centres and widths.

    Only points with v_min <= V <= V_T (``fit_range``) are used; polynomial
    order is chosen by AIC separately for shift and broadening.
    """
    v_min, v_t = fit_range
    v = np.asarray(voltages, float)
    keep = (v >= v_min) & (v <= v_t)
    if keep.sum() < 3:
        raise DomainError(f"need >= 3 voltages inside [{v_min}, {v_t}] V, got {int(keep.sum())}")
    x = v[keep] - v_t
    c = np.asarray(centers, float)[keep]
    g = np.asarray(widths, float)[keep]
    cs = None if center_sigma is None else np.asarray(center_sigma, float)[keep]
    gs = None if width_sigma is None else np.asarray(width_sigma, float)[keep]
    shift_c = [poly_fit(x, c, d, sigma=cs, model=f"stark_shift_deg{d}") for d in (1, 2)
               if keep.sum() > d + 1]
    width_c = [poly_fit(x, g, d, sigma=gs, model=f"stark_width_deg{d}") for d in (1, 2)
               if keep.sum() > d + 1]
    sf = aic_select(shift_c, threshold)
    wf = aic_select(width_c, threshold)
    sp = list(sf.params) + [0.0] * (3 - sf.params.size)
    wp = list(wf.params) + [0.0] * (3 - wf.params.size)
    resp = StarkResponse(name=name, nu0=sp[0], gamma0=wp[0], v_threshold=v_t, v_min=v_min,
                         alpha1=sp[1], alpha2=sp[2], gamma1=wp[1], gamma2=wp[2], quench=quench)
    return StarkFit(resp, sf, wf, shift_c, width_c)


def series_from_peak_fits(pairs):
    """Split [(voltage, FitResult of fit_ple), ...] into arrays for fit_stark_series."""
    rows = []
    for v, fit in pairs:
        s = peak_summary(fit)
        rows.append((v, s["center"], s["fwhm"], s["center_err"], s["fwhm_err"]))
    a = np.array(rows, float).T
    return {"voltages": a[0], "centers": a[1], "widths": a[2],
            "center_sigma": a[3], "width_sigma": a[4]}


# ---------------------------------------------------------------------------
# Skewed-Voigt peak area
# ---------------------------------------------------------------------------

@dataclass
class AreaResult:
    area: float
    uncertainty: float
    skew: float
    low_confidence: bool
    fit: FitResult
    area_numeric: float


def _sv_baseline(nu, area, c, s, g, skew, base):
    return ls.skewed_voigt(nu, area, c, s, g, skew) + base


def peak_area_skewed_voigt(spectrum: Spectrum, p0=None, chi2_limit: float = 3.0) -> AreaResult:
    """Two-stage skewed-Voigt area.

    Stage 1 holds skew at 0 to pin the centre; stage 2 starts there and frees
    the skew. The result is flagged low-confidence when the reduced chi-square
    exceeds ``chi2_limit`` (typically a neighbouring peak in the window).
    """
    x, y = spectrum.frequency, spectrum.intensity
    sig = spectrum.poisson_sigma()
    names = ("area", "center", "sigma", "gamma_l", "skew", "background")
    if p0 is None:
        base = float(np.quantile(y, 0.1))
        i, fw = _half_width_scan(x, y, base)
        p0 = [(y[i] - base) * fw * 1.06, x[i], fw / 3.6, fw / 2, 0.0, base]
    p0 = np.asarray(p0, float).copy()
    p0[4] = 0.0
    try:
        st1 = nls_fit(_sv_baseline, x, y, p0, sigma=sig, param_names=names,
                      fixed=[False, False, False, False, True, False], model="voigt")
    except FitError as e:
        raise FitError(f"stage 1 (skew fixed at 0) failed: {e}", best=e.best,
                       diagnostics={"stage": 1, **e.diagnostics}) from None
    st2 = nls_fit(_sv_baseline, x, y, st1.params, sigma=sig, param_names=names,
                  model="skewed_voigt")
    st2.params[2:4] = np.abs(st2.params[2:4])
    a, c, s, g, sk, _ = st2.params
    num, _ = quad(lambda u: ls.skewed_voigt(u, a, c, s, g, sk), -np.inf, np.inf,
                  epsabs=1e-10 * abs(a), epsrel=1e-10, limit=400, points=None)
    red = st2.rss / max(st2.n_points - st2.n_free, 1)
    st2.extra["reduced_chi2"] = red
    return AreaResult(area=float(a), uncertainty=st2.error("area"), skew=float(sk),
                      low_confidence=bool(red > chi2_limit), fit=st2, area_numeric=float(num))


# ---------------------------------------------------------------------------
# g2 background correction
# ---------------------------------------------------------------------------

def g2_correct(areas, n1, n2, b1, b2, bin_width, period, duration):
    """Background-corrected g2 per peak.

    g2(n) = (area_n - Bg) / Norm with Bg = (B1 N2 + B2 N1 - B1 B2) d T and
    Norm = (N1 - B1)(N2 - B2) theta T. Rates in 1/s, times in s (or any
    consistent units).
    """
    if min(bin_width, period, duration) <= 0 or b1 < 0 or b2 < 0:
        raise DomainError("need d, theta, T > 0 and non-negative backgrounds")
    bg = (b1 * n2 + b2 * n1 - b1 * b2) * bin_width * duration
    norm = (n1 - b1) * (n2 - b2) * period * duration
    if not norm > 0:
        raise DomainError("normalisation (N1-B1)(N2-B2) theta T must be > 0")
    return (np.asarray(areas, float) - bg) / norm


def coincidence_areas(t1, t2, period, window, n_peaks=5):
    """Cross-coincidence counts in windows of width ``window`` centred on n * period.

    Returns (orders, counts) for n = -n_peaks..n_peaks. Timestamps must be sorted.
    """
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    orders = np.arange(-n_peaks, n_peaks + 1)
    counts = np.empty(orders.size, dtype=np.int64)
    for j, n in enumerate(orders):
        lo = np.searchsorted(t2, t1 + n * period - window / 2, side="left")
        hi = np.searchsorted(t2, t1 + n * period + window / 2, side="left")
        counts[j] = int(np.sum(hi - lo))
    return orders, counts


def raw_g2(orders, counts):
    """Zero-delay peak over the mean side peak."""
    counts = np.asarray(counts, float)
    side = counts[np.asarray(orders) != 0]
    return counts[np.asarray(orders) == 0][0] / side.mean()


# ---------------------------------------------------------------------------
# Hole burning, dark-state lifetime, rise time
# ---------------------------------------------------------------------------

@dataclass
class HoleBurnResult:
    hom_linewidth: float
    hom_linewidth_err: float
    p_sat: float
    p_sat_err: float
    unbounded: bool
    fit: FitResult

    @property
    def low_power_hole_width(self):
        return 2 * self.hom_linewidth


def _hole_inv(p, hom, inv_psat):
    return hom * (1.0 + np.sqrt(1.0 + np.asarray(p) * inv_psat))


def fit_holeburning(powers, widths, sigma=None) -> HoleBurnResult:
    """Fit hole width = hom (1 + sqrt(1 + P/P_sat)) over a power series.

    Fitted in 1/P_sat >= 0 so a power-independent series converges to the
    bound instead of running away. When 1/P_sat is within 2 sigma of zero the
    result is flagged ``unbounded`` and P_sat is reported as infinite.
    """
    p = np.asarray(powers, float)
    w = np.asarray(widths, float)
    if np.unique(p).size < 3:
        raise DomainError("need at least three distinct powers")
    pmax = float(np.max(p))
    best = None
    for u in np.r_[0.0, np.logspace(-4, 4, 81) / pmax]:
        gcol = 1.0 + np.sqrt(1.0 + p * u)
        h = float(w @ gcol / (gcol @ gcol))
        rss = float(np.sum((h * gcol - w) ** 2))
        if best is None or rss < best[0]:
            best = (rss, h, u)
    _, h0, u0 = best
    fit = nls_fit(_hole_inv, p, w, [h0, u0], sigma=sigma, bounds=([0, 0], [np.inf, np.inf]),
                  param_names=("hom_linewidth", "inv_p_sat"), model="hole_width")
    h, u = fit.params
    # P_sat is unresolved when 1/P_sat is not distinguishable from zero
    unbounded = u * pmax < 1e-9 or u < 2 * fit.error("inv_p_sat")
    psat = math.inf if unbounded else 1.0 / u
    psat_err = math.inf if unbounded else fit.error("inv_p_sat") / u**2
    return HoleBurnResult(float(h), fit.error("hom_linewidth"), psat, psat_err, bool(unbounded), fit)


@dataclass
class DarkLifetimeResult:
    tau: float
    tau_err: float
    amplitude: float
    unbounded: bool
    low_confidence: bool
    fit: Optional[FitResult] = None


def _exp_rate(w, a, k):
    return a * np.exp(-k * np.asarray(w))


def fit_dark_lifetime(pulse_widths, areas, sigma=None) -> DarkLifetimeResult:
    """Single-exponential decay of delayed-peak area with electrical pulse width."""
    w = np.asarray(pulse_widths, float)
    a = np.asarray(areas, float)
    order = np.argsort(w)
    w, a = w[order], a[order]
    if w.size < 2:
        raise DomainError("need at least two pulse widths")
    if w.size == 2:
        if a[0] <= 0 or a[1] <= 0:
            raise DomainError("areas must be positive for a two-point estimate")
        k = math.log(a[0] / a[1]) / (w[1] - w[0])
        if k <= 0:
            return DarkLifetimeResult(math.inf, math.inf, float(a[0]), True, True)
        return DarkLifetimeResult(1.0 / k, 0.0, float(a[0] * math.exp(k * w[0])), False, False)
    pos = a > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(w[pos], np.log(a[pos]), 1)
    else:
        slope, icpt = 0.0, math.log(max(a.max(), 1e-300))
    k0 = max(-slope, 0.0)
    sig = None if sigma is None else np.asarray(sigma, float)[order]
    fit = nls_fit(_exp_rate, w, a, [math.exp(icpt), k0], sigma=sig,
                  bounds=([0, 0], [np.inf, np.inf]), param_names=("amplitude", "rate"),
                  model="dark_lifetime")
    amp, k = fit.params
    span = w[-1] - w[0]
    unbounded = k * span < 1e-6
    if sig is None:
        resid = a - _exp_rate(w, amp, k)
        noise = np.full_like(a, math.sqrt(np.sum(resid**2) / max(a.size - 2, 1)))
    else:
        noise = sig
    jumps = np.diff(a) - 3 * np.hypot(noise[:-1], noise[1:])
    low = bool(np.any(jumps > 0)) or unbounded
    tau = math.inf if unbounded else 1.0 / k
    tau_err = math.inf if unbounded else fit.error("rate") / k**2
    return DarkLifetimeResult(tau, tau_err, float(amp), bool(unbounded), low, fit)


def _crossing(t, y, level):
    idx = np.nonzero(y >= level)[0]
    if idx.size == 0:
        raise DomainError("trace never crosses level")
    i = int(idx[0])
    if i == 0:
        return float(t[0])
    y0, y1 = y[i - 1], y[i]
    return float(t[i - 1] + (level - y0) * (t[i] - t[i - 1]) / (y1 - y0))


def rise_time_10_90(t, y, edge: Optional[int] = None) -> float:
    """10 %-90 % rise time of a step response.

    Baseline and plateau are the medians of the first and last ``edge``
    samples; crossing times are linearly interpolated.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    edge = edge or max(3, y.size // 20)
    base = float(np.median(y[:edge]))
    plat = float(np.median(y[-edge:]))
    amp = plat - base
    if not amp > 0:
        raise DomainError("trace does not rise")
    tail = y[-edge:]
    drift = abs(np.polyfit(t[-edge:], tail, 1)[0]) * (t[-1] - t[-edge])
    if drift > 0.02 * amp:
        raise DomainError("plateau not reached")
    if y[0] > base + 0.1 * amp:
        raise DomainError("trace starts above the 10 % level")
    return _crossing(t, y, base + 0.9 * amp) - _crossing(t, y, base + 0.1 * amp)
