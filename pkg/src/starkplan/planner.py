"""Tuneable fraction of an inhomogeneous ensemble and pairwise tuning plans."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import networkx as nx
import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .emitters import (StarkResponse, neutral_fraction, shift_range, stark_frequency,
                       stark_linewidth, voltage_for_shift)
from .errors import DomainError, ModelValidityError, UnreachableError
from .interference import QUENCH_LIMIT, pair_overlap

# ---------------------------------------------------------------------------
# Inhomogeneous distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InhomogeneousPdf:
    grid: np.ndarray
    density: np.ndarray
    background_level: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid, float)
        d = np.asarray(self.density, float)
        if g.ndim != 1 or g.shape != d.shape or g.size < 2:
            raise DomainError("grid and density must be 1-D, same length, >= 2 points")
        if np.any(np.diff(g) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(d < 0):
            raise DomainError("density must be >= 0")
        total = np.trapezoid(d, g)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"density integrates to {total}, not 1")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", d)

    @classmethod
    def normalized(cls, grid, values, background_level=0.0):
        g = np.asarray(grid, float)
        v = np.asarray(values, float)
        total = np.trapezoid(v, g)
        if not total > 0:
            raise DomainError("distribution has no positive weight")
        return cls(g, v / total, background_level)

    def shifted(self, offset):
        return InhomogeneousPdf(self.grid + offset, self.density, self.background_level)


def pdf_from_spectrum(frequency, intensity, background: float = 0.0) -> InhomogeneousPdf:
    """Background-subtract, clamp at zero and normalise an ensemble spectrum."""
    if background < 0:
        raise DomainError("background must be >= 0")
    f = np.asarray(frequency, float)
    y = np.asarray(intensity, float)
    if f.size == 0:
        raise DomainError("empty spectrum")
    y = np.clip(y - background, 0.0, None)
    if not np.any(y > 0):
        raise DomainError("spectrum is zero everywhere after background subtraction")
    return InhomogeneousPdf.normalized(f, y, background)


def _cumulative(g, d, x):
    """Integral of the linearly interpolated density from g[0] to x."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(g))])
    x = np.clip(np.asarray(x, float), g[0], g[-1])
    k = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
    h = g[k + 1] - g[k]
    u = x - g[k]
    slope = (d[k + 1] - d[k]) / h
    return cum[k] + d[k] * u + 0.5 * slope * u * u


def tunable_fraction(pdf: InhomogeneousPdf, window: float) -> float:
    """Largest probability mass inside any frequency window of the given width.

    The windowed integral is piecewise quadratic in the window start, with
    breakpoints where either edge crosses a grid node, so the maximum is found
    exactly from segment endpoints and vertices.
    """
    if not window > 0:
        raise DomainError("window must be > 0")
    g, d = pdf.grid, pdf.density
    lo, hi = g[0], g[-1] - window
    if hi <= lo:
        return 1.0
    bp = np.concatenate([g, g - window, [lo, hi]])
    bp = np.unique(bp[(bp >= lo) & (bp <= hi)])
    cand = [bp]
    if bp.size > 1:
        a, b = bp[:-1], bp[1:]
        m = 0.5 * (a + b)
        # F(s) = C(s + w) - C(s); F' is linear on each segment
        fa = np.interp(a + window, g, d) - np.interp(a, g, d)
        fb = np.interp(b + window, g, d) - np.interp(b, g, d)
        denom = fa - fb
        with np.errstate(divide="ignore", invalid="ignore"):
            s = a + fa * (b - a) / denom
        ok = (denom > 0) & (fa > 0) & (fb < 0) & np.isfinite(s)
        cand += [s[ok], m]
    s = np.concatenate(cand)
    vals = _cumulative(g, d, s + window) - _cumulative(g, d, s)
    return float(np.clip(vals.max(), 0.0, 1.0))


# ---------------------------------------------------------------------------
# Pair planning
# ---------------------------------------------------------------------------

BiasLimit = Union[None, float, Mapping[str, float]]


@dataclass(frozen=True)
class PlanConstraints:
    """``max_reverse_bias`` is a magnitude in V, global or per emitter name.

    ``objective`` 'log' maximises the sum of ln(p / p_floor) over pairs;
    'linear' maximises the sum of p. Pairs with p <= p_floor are never formed.
    """

    max_reverse_bias: BiasLimit = None
    min_neutral_fraction: float = QUENCH_LIMIT
    red_shift_only: bool = True
    objective: str = "log"
    p_floor: float = 1e-6
    exact_limit: int = 64
    grid_points: int = 129

    def __post_init__(self):
        if not self.red_shift_only:
            raise DomainError("only red-shift tuning is modelled")
        if self.objective not in ("log", "linear"):
            raise DomainError("objective must be 'log' or 'linear'")
        if not 0 <= self.min_neutral_fraction < 1:
            raise DomainError("min_neutral_fraction must lie in [0, 1)")
        if not 0 < self.p_floor < 1:
            raise DomainError("p_floor must lie in (0, 1)")

    def bias_limit(self, name):
        m = self.max_reverse_bias
        if m is None:
            return None
        if isinstance(m, Mapping):
            m = m.get(name)
            if m is None:
                return None
        return -abs(float(m))

    def weight(self, p):
        if self.objective == "log":
            return math.log(p / self.p_floor)
        return p


@dataclass(frozen=True)
class PairAssignment:
    a: str
    b: str
    target_ghz: float
    v_a: float
    v_b: float
    p_exc: float
    quench_a: bool
    quench_b: bool

    def to_dict(self):
        return {"emitter_a": self.a, "emitter_b": self.b, "target_ghz": self.target_ghz,
                "v_a_v": self.v_a, "v_b_v": self.v_b, "p_exc": self.p_exc,
                "quenched_a": self.quench_a, "quenched_b": self.quench_b}


@dataclass(frozen=True)
class TuningPlan:
    pairs: list
    unpaired: list
    objective_value: float
    objective: str = "log"
    method: str = "exact"
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"objective": self.objective, "objective_value": self.objective_value,
                "method": self.method, "pairs": [p.to_dict() for p in self.pairs],
                "unpaired": list(self.unpaired)}


def effective_v_min(r: StarkResponse, c: PlanConstraints) -> Optional[float]:
    """Most negative usable bias after range, bias and quench limits; None if unusable."""
    lo = r.v_min
    lim = c.bias_limit(r.name)
    if lim is not None:
        lo = max(lo, lim)
    if r.quench is not None and c.min_neutral_fraction > 0:
        f = lambda v: neutral_fraction(r.quench, v) - c.min_neutral_fraction
        if f(0.0) < 0:
            return None
        if f(lo) < 0:
            lo = brentq(f, lo, 0.0, xtol=1e-12)
            # step inside so the limit itself satisfies the constraint
            while f(lo) < 0:
                lo = np.nextafter(lo, 0.0)
    return float(lo)


def _bias_for(r, target, v_lo):
    shift = target - r.nu0
    if shift == 0:
        return 0.0
    return voltage_for_shift(r, min(shift, 0.0), v_lo)


def _pair_p(ra, rb, va, vb):
    return pair_overlap(stark_linewidth(ra, va), stark_linewidth(rb, vb),
                        stark_frequency(ra, va) - stark_frequency(rb, vb))


def best_pair(ra: StarkResponse, rb: StarkResponse, c: PlanConstraints,
              v_lo: Optional[dict] = None) -> Optional[PairAssignment]:
    """Best common (mutually resonant) frequency for two emitters, or None."""
    la = v_lo[ra.name] if v_lo else effective_v_min(ra, c)
    lb = v_lo[rb.name] if v_lo else effective_v_min(rb, c)
    if la is None or lb is None:
        return None
    lo = max(ra.nu0 + shift_range(ra, la)[0], rb.nu0 + shift_range(rb, lb)[0])
    hi = min(ra.nu0, rb.nu0)
    if lo > hi:
        return None

    def score(nu):
        try:
            va, vb = _bias_for(ra, nu, la), _bias_for(rb, nu, lb)
            return _pair_p(ra, rb, va, vb)
        except (UnreachableError, ModelValidityError):
            return -1.0

    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        nus = np.array([hi])
    else:
        # descending, so ties go to the smallest bias
        nus = np.unique(np.r_[np.linspace(lo, hi, c.grid_points), lo, hi])[::-1]
    vals = np.array([score(x) for x in nus])
    i = int(np.argmax(vals))
    best_nu, best_p = float(nus[i]), float(vals[i])
    if nus.size > 1:
        padded = np.r_[-np.inf, vals, -np.inf]
        peaks = np.nonzero((vals >= padded[:-2]) & (vals >= padded[2:]) & (vals > 0))[0]
        for k in peaks:
            a, b = sorted((nus[max(k - 1, 0)], nus[min(k + 1, nus.size - 1)]))
            # search in the offset from a: Brent's tolerance scales with |x|, and
            # absolute frequencies (~2e5 GHz) would cap it near 3 MHz
            res = minimize_scalar(lambda u: -score(a + u), bounds=(0.0, b - a),
                                  method="bounded", options={"xatol": 1e-12, "maxiter": 2000})
            if np.isfinite(res.fun) and -res.fun > best_p:
                best_nu, best_p = float(a + res.x), float(-res.fun)
    if best_p <= c.p_floor:
        return None
    va, vb = _bias_for(ra, best_nu, la), _bias_for(rb, best_nu, lb)
    nfa = float(neutral_fraction(ra.quench, va))
    nfb = float(neutral_fraction(rb.quench, vb))
    return PairAssignment(ra.name, rb.name, best_nu, va, vb, _pair_p(ra, rb, va, vb),
                          nfa < QUENCH_LIMIT, nfb < QUENCH_LIMIT)


def candidate_pairs(emitters: Sequence[StarkResponse], c: PlanConstraints) -> dict:
    names = [r.name for r in emitters]
    if len(set(names)) != len(names):
        raise DomainError("emitter names must be unique")
    v_lo = {r.name: effective_v_min(r, c) for r in emitters}
    out = {}
    for i, j in itertools.combinations(range(len(emitters)), 2):
        pa = best_pair(emitters[i], emitters[j], c, v_lo)
        if pa is not None:
            out[(i, j)] = pa
    return out


def _plan(emitters, cands, chosen, c, method):
    pairs = [cands[k] for k in sorted(chosen)]
    used = {i for k in chosen for i in k}
    unpaired = [r.name for i, r in enumerate(emitters) if i not in used]
    obj = float(sum(c.weight(p.p_exc) for p in pairs))
    return TuningPlan(pairs, unpaired, obj, c.objective, method)


def plan_pairs(emitters: Sequence[StarkResponse], constraints: Optional[PlanConstraints] = None
               ) -> TuningPlan:
    """Pair emitters and assign biases to maximise the summed pair weight.

    Exact maximum-weight matching up to ``exact_limit`` emitters; greedy by
    descending weight beyond.
    """
    c = constraints or PlanConstraints()
    if len(emitters) < 2:
        raise DomainError("need at least two emitters")
    cands = candidate_pairs(emitters, c)
    if len(emitters) <= c.exact_limit:
        g = nx.Graph()
        for (i, j), pa in cands.items():
            g.add_edge(i, j, weight=c.weight(pa.p_exc))
        m = nx.max_weight_matching(g, maxcardinality=False)
        chosen = [tuple(sorted(e)) for e in m]
        return _plan(emitters, cands, chosen, c, "exact")
    chosen, used = [], set()
    for k, pa in sorted(cands.items(), key=lambda kv: -c.weight(kv[1].p_exc)):
        if k[0] not in used and k[1] not in used:
            chosen.append(k)
            used.update(k)
    return _plan(emitters, cands, chosen, c, "greedy")


def brute_force_plan(emitters: Sequence[StarkResponse], constraints: Optional[PlanConstraints] = None
                     ) -> TuningPlan:
    """Enumerate every matching (small inputs only); reference for ``plan_pairs``."""
    c = constraints or PlanConstraints()
    n = len(emitters)
    if n > 10:
        raise DomainError("brute force limited to 10 emitters")
    cands = candidate_pairs(emitters, c)
    w = {k: c.weight(p.p_exc) for k, p in cands.items()}

    def matchings(free):
        if not free:
            yield []
            return
        first, rest = free[0], free[1:]
        yield from matchings(rest)
        for j in rest:
            if (first, j) in w:
                others = [x for x in rest if x != j]
                for m in matchings(others):
                    yield [(first, j)] + m

    best = max(matchings(list(range(n))), key=lambda m: sum(w[k] for k in m))
    return _plan(emitters, cands, best, c, "brute_force")
