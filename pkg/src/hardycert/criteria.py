"""Muckenhoupt-type suprema and the constant sandwiches for (P) and (HP).

All suprema have the shape

    sup_{t in (m, end)}  A(t) * V(t)**(q-1),
    A(t) = ∫_t^end w1,   V(t) = ∫_m^t w2**(-1/(q-1)),

so one scanner serves B+ directly, B- by reflection, H_M with m = 0 and both
halves of H2.  Finiteness is first decided from the weights' exponents; the
numeric scan (log-spaced grid plus golden-section refinement, everything in
log space) supplies the value and cross-checks the verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import quad
from .errors import MassInfinite, NonFiniteSample, QOutOfRange, W1NotIntegrable
from .tails import Model, classify_end
from .weights import (INF, LineWeight, RadialFamily, WeightPair, line_mass_is_finite,
                      line_median, mass, mass_is_finite, median, radial_pair_lines,
                      surface)

FINITE = "finite"
PROVEN_INFINITE = "proven_infinite"
NUMERICALLY_DIVERGENT = "numerically_divergent"
INNER_DIVERGES = "InnerIntegralDiverges"
OUTER_DIVERGES = "OuterIntegralDiverges"


@dataclass(frozen=True)
class ScanSpec:
    n_points: int = 200
    horizon_factor: float = 1e6
    max_extensions: int = 3
    rel_tol: float = 1e-8
    quad: quad.QuadratureSpec = quad.QuadratureSpec(rel_tol=1e-10, max_subdivisions=20000)


DEFAULT_SCAN = ScanSpec()


@dataclass(frozen=True)
class SupremumScanResult:
    value: float
    argmax: float  # +-inf means the supremum is approached at that end
    scan_points: int
    refined: bool
    status: str = FINITE
    cause: str = ""
    notes: tuple = ()

    @property
    def is_finite(self) -> bool:
        return self.status == FINITE

    @property
    def at_infinity(self) -> bool:
        return math.isinf(self.argmax)

    def mirrored(self) -> "SupremumScanResult":
        return SupremumScanResult(self.value, -self.argmax, self.scan_points, self.refined,
                                  self.status, self.cause, self.notes)

    def to_json(self) -> dict:
        d = asdict(self)
        d["value"] = _num(self.value)
        d["argmax"] = "AtInfinity" if self.at_infinity else _num(self.argmax)
        d["notes"] = list(self.notes)
        return d


def _num(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def _infinite(status, cause, scan_points=0, notes=()):
    return SupremumScanResult(INF, math.nan, scan_points, False, status, cause, tuple(notes))


# --------------------------------------------------------------------------- #
# exponent analysis

def _dual_exponent(a2, q):
    return None if a2 is None else -a2 / (q - 1.0)


def analyse_upper(w1: LineWeight, w2: LineWeight, m: float, q: float):
    """(verdict, cause) with verdict True/False/None for sup over t in (m, end of w1)."""
    lo1, hi = w1.bounds()
    lo2, hi2 = w2.bounds()
    unknown = []
    if lo2 > m or hi2 < hi:
        return False, INNER_DIVERGES + ": w2 vanishes on a set where w1 has mass"
    # lower end: A tends to a constant unless w1 is singular at m
    a1m, a2m = w1.local_exponent(m), w2.local_exponent(m)
    if a1m is None or a2m is None:
        unknown.append("lower end")
    else:
        v = classify_end(Model.at_finite_end(a1m), Model.at_finite_end(_dual_exponent(a2m, q)),
                         q, upper=False)
        if v.finite is False:
            cause = INNER_DIVERGES if "inner" in v.cause else OUTER_DIVERGES
            return False, f"{cause}: {v.cause} at t={m:g}"
    for p, e in w2.special_points():
        if m < p < hi and e >= q - 1.0:
            return False, f"{INNER_DIVERGES}: w2^(1/(1-q)) not integrable at s={p:g}"
    for p, e in w1.special_points():
        if m < p <= hi and e <= -1.0:
            return False, f"{OUTER_DIVERGES}: w1 not integrable at s={p:g}"
    # upper end
    if math.isinf(hi):
        m1 = w1.end_model(INF)
        m2 = w2.end_model(INF)
        md = None if m2 is None else m2.pow(-1.0 / (q - 1.0))
    else:
        a1, a2 = w1.local_exponent(hi), w2.local_exponent(hi)
        m1 = None if a1 is None else Model.at_finite_end(a1)
        md = None if a2 is None else Model.at_finite_end(_dual_exponent(a2, q))
    v = classify_end(m1, md, q, upper=True)
    if v.finite is False:
        cause = INNER_DIVERGES if "inner" in v.cause else OUTER_DIVERGES
        return False, f"{cause}: {v.cause} as t -> {hi:g}"
    if v.finite is None:
        unknown.append("upper end")
    if unknown:
        return None, "no exponent model at " + " and ".join(unknown)
    return True, ""


# --------------------------------------------------------------------------- #
# numeric scan

def _log_cum(logvals):
    return np.logaddexp.accumulate(logvals)


class _Scanner:
    """Evaluates log A(t) + (q-1) log V(t) on grids and at single points."""

    def __init__(self, w1, w2, m, q, spec):
        self.w1, self.w2, self.m, self.q, self.spec = w1, w2, m, q, spec
        self.logw1 = w1.log
        self.logu = lambda s: -w2.log(s) / (q - 1.0)

    def _logint(self, logf, edges):
        vals, _ = quad.log_integrate_segments(logf, edges, self.spec.quad)
        return vals

    def grid(self, hi_scan, n):
        m = self.m
        if math.isinf(hi_scan):
            raise ValueError("scan horizon must be finite")
        span = hi_scan - m
        half = n // 2
        x = np.concatenate([np.geomspace(1e-10, 0.5, half),
                            1.0 - np.geomspace(0.5, 1e-10, n - half)[1:]])
        if span > 1e3:
            # long horizons are covered log-uniformly
            x = np.geomspace(1e-8 * max(1.0, abs(m)) / span, 1.0, n)
        t = m + span * x
        pts = [p for p, _ in self.w1.special_points() + self.w2.special_points()
               if m < p < hi_scan]
        return np.unique(np.concatenate([t, pts]))

    def values(self, t, hi_cut):
        logV = _log_cum(self._logint(self.logu, np.concatenate([[self.m], t])))
        segA = self._logint(self.logw1, np.concatenate([t, [hi_cut]]))
        logA = _log_cum(segA[::-1])[::-1]
        with np.errstate(invalid="ignore"):
            out = logA + (self.q - 1.0) * logV
        return np.where(np.isnan(out), -INF, out), logA, logV

    def point(self, t, t_left, logV_left, t_right, logA_right):
        lv = self._logint(self.logu, [t_left, t])[0]
        la = self._logint(self.logw1, [t, t_right])[0]
        logV = np.logaddexp(logV_left, lv)
        logA = np.logaddexp(logA_right, la)
        return logA + (self.q - 1.0) * logV


def _numeric_sup(w1, w2, m, q, spec, analytic):
    """Scan-based sup; returns (SupremumScanResult, growing_at_horizon)."""
    sc = _Scanner(w1, w2, m, q, spec)
    hi = w1.bounds()[1]
    notes = []
    horizon = min(hi, m + spec.horizon_factor * (abs(m) + 1.0))
    best_prev = -INF
    n_total = 0
    for ext in range(spec.max_extensions + 1):
        t = sc.grid(horizon, spec.n_points)
        logP, logA, logV = sc.values(t, hi)
        n_total += t.size
        j = int(np.argmax(logP))
        best = logP[j]
        at_edge = j == t.size - 1 and math.isinf(hi)
        if not at_edge or ext == spec.max_extensions:
            break
        if best <= best_prev + spec.rel_tol:
            break
        best_prev = best
        horizon = m + 10.0 * (horizon - m)
        notes.append(f"horizon extended to {horizon:.3g}")

    growing = False
    if math.isinf(hi) and np.isfinite(best) and logP[-1] >= best - spec.rel_tol:
        j = t.size - 1
    if j == t.size - 1 and math.isinf(hi):
        tail = logP[-8:]
        lt = np.log(t[-8:] - m)
        slope = np.polyfit(lt, tail, 1)[0] if np.all(np.isfinite(tail)) else 0.0
        growing = slope > 1e-3
        if analytic is not True and growing:
            notes.append(f"scan still growing at horizon (log-log slope {slope:.3g})")
        return (SupremumScanResult(float(np.exp(best)), INF, n_total, False, FINITE, "",
                                   tuple(notes)), growing)

    refined = False
    value = float(np.exp(best)) if np.isfinite(best) else 0.0
    argmax = float(t[j])
    if 0 < j < t.size - 1 and np.isfinite(best):
        def negP(s):
            if not t[j - 1] < s < t[j + 1]:
                return INF
            return -sc.point(s, t[j - 1], logV[j - 1], t[j + 1], logA[j + 1])
        try:
            res = minimize_scalar(negP, bracket=(t[j - 1], t[j], t[j + 1]), method="golden",
                                  tol=1e-10)
            if np.isfinite(res.fun) and -res.fun >= best:
                value, argmax = float(np.exp(-res.fun)), float(res.x)
            refined = bool(abs(value - math.exp(best)) <= spec.rel_tol * value
                           or -res.fun >= best)
        except (ValueError, NonFiniteSample):
            notes.append("golden-section refinement failed; scan value kept")
    elif j == t.size - 1 and not math.isinf(hi):
        argmax = float(hi)
    return SupremumScanResult(value, argmax, n_total, refined, FINITE, "", tuple(notes)), False


def _truncation_growth(w1, w2, m, q, spec):
    """Cross-check of an infinite verdict: the sup over truncated weights keeps growing."""
    lo1, hi = w1.bounds()
    sc = _Scanner(w1, w2, m, q, spec)
    vals = []
    for k in range(3):
        try:
            if math.isinf(hi):
                cut = m + 10.0 ** (1 + k) * (abs(m) + 1.0)
                t = sc.grid(cut * 0.999 + m * 0.001, 60)
                logP, _, _ = sc.values(t, cut)
            else:
                d = 10.0 ** (-2 - 2 * k) * (hi - m)
                t = sc.grid(hi - d, 60)
                t = t[t > m + d]
                logP, _, _ = sc.values(t, hi)
            vals.append(float(np.max(logP)))
        except NonFiniteSample:
            vals.append(INF)
    confirmed = all(b > a + 1e-3 for a, b in zip(vals, vals[1:]))
    return confirmed, vals


def _inner_growth(w1, w2, m, q, spec):
    """Cross-check of an inner divergence at the lower end: sup grows as the start moves to m."""
    vals = []
    hi = w1.bounds()[1]
    top = m + 1.0 if math.isinf(hi) else 0.5 * (m + hi)
    for k in range(3):
        start = m + 10.0 ** (-2 - 2 * k) * (top - m)
        sc = _Scanner(w1, w2, start, q, spec)
        try:
            t = sc.grid(top, 60)
            logP, _, _ = sc.values(t, hi)
            vals.append(float(np.max(logP)))
        except NonFiniteSample:
            vals.append(INF)
    return all(b > a + 1e-3 for a, b in zip(vals, vals[1:])), vals


def sup_upper(w1: LineWeight, w2: LineWeight, m: float, q: float,
              spec: ScanSpec = DEFAULT_SCAN) -> SupremumScanResult:
    """sup_{t >= m} [∫_t^∞ w1] [∫_m^t w2^(1/(1-q))]^(q-1)."""
    if not q > 1:
        raise QOutOfRange("q must exceed 1")
    hi = w1.bounds()[1]
    if hi <= m:
        return SupremumScanResult(0.0, m, 0, False, FINITE, "", ("w1 has no mass beyond m",))
    analytic, cause = analyse_upper(w1, w2, m, q)
    if analytic is False:
        if " at t=" in cause:
            ok, vals = _inner_growth(w1, w2, m, q, spec)
        elif " as t -> " in cause:
            ok, vals = _truncation_growth(w1, w2, m, q, spec)
        else:
            ok, vals = True, []
        note = ("numerics confirm growth of truncated suprema"
                if ok else "numeric cross-check inconclusive")
        return _infinite(PROVEN_INFINITE, cause, 0, (note,))
    try:
        res, growing = _numeric_sup(w1, w2, m, q, spec, analytic)
    except NonFiniteSample as exc:
        return _infinite(NUMERICALLY_DIVERGENT, f"{INNER_DIVERGES}: {exc}", 0,
                         ("non-finite dual weight sample",))
    if analytic is None:
        notes = res.notes + (cause + "; verdict is numeric",)
        if growing:
            return _infinite(NUMERICALLY_DIVERGENT, "scan growing at horizon", res.scan_points,
                             notes)
        return SupremumScanResult(res.value, res.argmax, res.scan_points, res.refined,
                                  FINITE, "", notes)
    return res


def b_plus(w1, w2, m, q, spec: ScanSpec = DEFAULT_SCAN) -> SupremumScanResult:
    return sup_upper(w1, w2, m, q, spec)


def b_minus(w1, w2, m, q, spec: ScanSpec = DEFAULT_SCAN) -> SupremumScanResult:
    """sup_{t <= m} [∫_{-∞}^t w1] [∫_t^m w2^(1/(1-q))]^(q-1), by reflection."""
    return sup_upper(w1.reflected(), w2.reflected(), -m, q, spec).mirrored()


def muckenhoupt_HM(w1: LineWeight, w2: LineWeight, q: float,
                   spec: ScanSpec = DEFAULT_SCAN) -> SupremumScanResult:
    """sup_{rho > 0} [∫_rho^∞ w1] [∫_0^rho w2^(-1/(q-1))]^(q-1) on the half-line."""
    return sup_upper(w1.restricted(0.0, INF), w2.restricted(0.0, INF), 0.0, q, spec)


def h2(family: RadialFamily, m: float, q: float,
       spec: ScanSpec = DEFAULT_SCAN) -> SupremumScanResult:
    """max of the two radial suprema with weights r^(N-1) h and r^(N-1+q) h."""
    if not q > 1:
        raise QOutOfRange("q must exceed 1")
    if not m > 0:
        raise ValueError("m must be positive")
    W1, W2 = radial_pair_lines(family, q)
    up = sup_upper(W1, W2, m, q, spec)
    down = b_minus(W1, W2, m, q, spec)
    best = up if (not up.is_finite or (down.is_finite and up.value >= down.value)) else down
    note = ("outer part" if best is up else "inner part",)
    return SupremumScanResult(best.value, best.argmax, up.scan_points + down.scan_points,
                              best.refined, best.status, best.cause, best.notes + note)


# --------------------------------------------------------------------------- #
# certification reports

def lower_factor(q: float) -> float:
    return (2.0 ** ((q - 1.0) / q) - 1.0) ** q / 2.0 ** (q - 1.0)


def upper_factor(q: float) -> float:
    return (2.0 * q) ** q / (q - 1.0) ** (q - 1.0)


def muckenhoupt_upper_factor(q: float) -> float:
    """q (q')^(q-1) with q' = q/(q-1), the Hölder conjugate."""
    return q * (q / (q - 1.0)) ** (q - 1.0)


@dataclass(frozen=True)
class CertificationReport:
    kind: str
    q: float
    median: float
    b_plus: SupremumScanResult | None
    b_minus: SupremumScanResult | None
    h2: SupremumScanResult | None
    holds: bool
    lower_bound: float
    upper_bound: float
    notes: tuple = field(default=())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.q,
            "median": _num(self.median),
            "b_plus": self.b_plus.to_json() if self.b_plus else None,
            "b_minus": self.b_minus.to_json() if self.b_minus else None,
            "h2": self.h2.to_json() if self.h2 else None,
            "holds": self.holds,
            "lower_bound": _num(self.lower_bound),
            "upper_bound": _num(self.upper_bound),
            "notes": list(self.notes),
        }


def _verdict_notes(*results):
    out = []
    for name, r in results:
        if r is None:
            continue
        if r.status != FINITE:
            out.append(f"{name}: {r.status} ({r.cause})")
        out.extend(f"{name}: {n}" for n in r.notes)
    return out


def certify_poincare_line(pair: WeightPair, spec: ScanSpec = DEFAULT_SCAN) -> CertificationReport:
    """Median, B+- and the two-sided bound on the optimal Poincaré constant on the line."""
    if pair.domain != "line":
        raise ValueError("certify_poincare_line needs a line pair")
    q = pair.q
    w1, w2 = pair.left, pair.right
    if line_mass_is_finite(w1) is False:
        raise W1NotIntegrable("w1 is not integrable on the line")
    med = line_median(w1)
    if not math.isfinite(med.mass):
        raise W1NotIntegrable("w1 is not integrable on the line")
    eta = med.median
    bp = b_plus(w1, w2, eta, q, spec)
    bm = b_minus(w1, w2, eta, q, spec)
    holds = bp.is_finite and bm.is_finite
    B = max(bp.value, bm.value)
    notes = _verdict_notes(("b_plus", bp), ("b_minus", bm))
    notes.append(f"mass of w1 = {med.mass:.12g}")
    return CertificationReport("PoincareLine", q, eta, bp, bm, None, holds,
                               lower_factor(q) * B, upper_factor(q) * B, tuple(notes))


def _check_q(N: int, q: float):
    if N == 2:
        if not 1 < q <= 2:
            raise QOutOfRange("need 1 < q <= 2 for N = 2")
    elif N >= 3:
        if not 1 < q < N:
            raise QOutOfRange(f"need 1 < q < N = {N}")
    else:
        raise QOutOfRange("the Hardy-Poincaré criterion needs N >= 2")


def sphere_poincare_constant(N: int, q: float) -> float | None:
    """Optimal Poincaré constant on S^{N-1}; known in closed form only for q = 2."""
    return 1.0 / (N - 1.0) if q == 2 else None


def certify_hardy_poincare(family: RadialFamily, q: float,
                           spec: ScanSpec = DEFAULT_SCAN) -> CertificationReport:
    """Hardy-Poincaré criterion for w1 = h(|x|), w2 = |x|^q h(|x|)."""
    N = family.dimension
    _check_q(N, q)
    notes = []
    finite_mass = mass_is_finite(family)
    if finite_mass is False:
        # H2(m) is infinite for every m: its outer integral is the radial mass tail
        W1, W2 = radial_pair_lines(family, q)
        res = sup_upper(W1, W2, 1.0, q, spec)
        notes.append("mass H1 is infinite (exponent analysis); no median exists, "
                     "H2 evaluated at m = 1")
        notes += _verdict_notes(("h2", res))
        return CertificationReport("HardyPoincareRN", q, math.nan, None, None, res, False,
                                   INF, INF, tuple(notes))
    mm = median(family)
    eta = mm.median
    if not eta > 0:
        raise MassInfinite("median must be positive")
    res = h2(family, eta, q, spec)
    holds = res.is_finite
    lo, up = lower_factor(q) * res.value, upper_factor(q) * res.value
    notes += _verdict_notes(("h2", res))
    H1 = mm.mass
    notes.append(f"mass H1 = {H1:.12g}")
    if holds:
        c1 = 2.0 ** q * muckenhoupt_upper_factor(q) * res.value
        c_sph = sphere_poincare_constant(N, q)
        if c_sph is None:
            notes.append("radial-plus-spherical bound: C_sph unknown for q != 2; "
                         f"bound is 2^(q-1) max(C1={c1:.6g}, H1^q C_sph |S^(N-1)|^(-q))")
        else:
            sph = H1 ** q * c_sph * surface(N) ** (-q)
            alt = 2.0 ** (q - 1.0) * max(c1, sph)
            smaller = "radial-plus-spherical" if alt < up else "two-sided"
            notes.append(f"radial-plus-spherical upper bound = {alt:.10g} "
                         f"(C1 = {c1:.6g}, spherical term = {sph:.6g}); smaller: {smaller}")
    return CertificationReport("HardyPoincareRN", q, eta, None, None, res, holds, lo, up,
                               tuple(notes))
