"""Hardy inequalities built from a radial function g and its theta-Laplacian.

For positive g with Δ_θ g of constant sign, the pair

    w1 = |Δ_θ g|,   w2 = |∇g|^{q(θ-1)} |Δ_θ g|^{1-q},   C_H = q^q

satisfies ∫|φ|^q w1 <= C_H ∫|∇φ|^q w2.  For the power profile
g(r) = r^{γ+2} (1 + r^β)^α everything reduces to two functions of s = r^β:

    |g'|        = g/r · |L(s)|/(1+s),            L(s) = a + (a + αβ) s,
    Δ_θ g       = |g'|^{θ-2} g/r² · Q_θ(s)/(1+s)²,

with a = γ + 2 and Q_θ a quadratic.  At θ = 2, comparing with h = r^γ(1+r^β)^α
gives the family constants c1 = inf Q/(1+s)², c2 = sup f^q (Q/(1+s)²)^{1-q},
f = |L|/(1+s), and C_H <= q^q c2/c1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit

from . import quad
from .errors import ConditionsViolated, NotDifferentiable, SignNotConstant
from .functions import TestFunction
from .tails import Model
from .weights import INF, RadialFamily, surface

NONNEGATIVE, NONPOSITIVE, MIXED = "Nonnegative", "Nonpositive", "Mixed"


# --------------------------------------------------------------------------- #
# profiles

@dataclass(frozen=True)
class PowerTypeG:
    """g(r) = r^(gamma+2) (1 + r^beta)^alpha."""

    gamma: float
    beta: float
    alpha: float
    kind: ClassVar[str] = "power"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def a(self):
        return self.gamma + 2.0

    @property
    def b(self):
        # slope of L at infinity: a + alpha*beta
        return self.gamma + 2.0 + self.alpha * self.beta

    @property
    def eta_shift(self):
        """alpha*beta + gamma."""
        return self.alpha * self.beta + self.gamma

    def value(self, r):
        r = np.asarray(r, float)
        return r ** self.a * (1.0 + r ** self.beta) ** self.alpha

    def to_json(self):
        return {"kind": self.kind, "gamma": self.gamma, "beta": self.beta, "alpha": self.alpha}


@dataclass(frozen=True)
class TabulatedG:
    """Radial samples of g; derivatives from the quadratic through 3 nearest nodes."""

    nodes: tuple
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        nodes = tuple((float(r), float(v)) for r, v in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        r = np.array([n[0] for n in nodes])
        if r.size and (np.any(np.diff(r) <= 0) or r[0] < 0):
            raise ValueError("node radii must be nonnegative and increasing")

    @property
    def radii(self):
        return np.array([n[0] for n in self.nodes])

    @property
    def samples(self):
        return np.array([n[1] for n in self.nodes])

    def value(self, r):
        return np.interp(np.asarray(r, float), self.radii, self.samples)

    def derivatives(self, r: float):
        """(g, g', g'') at r from the local quadratic interpolant."""
        R, G = self.radii, self.samples
        if R.size < 3:
            raise NotDifferentiable("need at least 3 nodes")
        if not R[0] <= r <= R[-1]:
            raise NotDifferentiable(f"r={r} outside the tabulated range")
        j = int(np.clip(np.searchsorted(R, r) - 1, 0, R.size - 3))
        if j + 1 < R.size - 1 and abs(R[j + 2] - r) < abs(R[j] - r):
            j += 1
        j = min(j, R.size - 3)
        x, y = R[j:j + 3], G[j:j + 3]
        c = np.polyfit(x - r, y, 2)
        return c[2], c[1], 2.0 * c[0]

    def to_json(self):
        return {"kind": self.kind, "nodes": [list(n) for n in self.nodes]}


@dataclass(frozen=True)
class ThetaLaplaceProfile:
    g: PowerTypeG | TabulatedG
    theta: float = 2.0
    q: float = 2.0
    dimension: int = 3

    def __post_init__(self):
        if not self.theta > 1 or not self.q > 1:
            raise ValueError("theta and q must exceed 1")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    # quadratic Q_theta(s) = c0 + c1 s + c2 s^2 for power profiles
    def q_coefficients(self):
        g = self.g
        th, N = self.theta, self.dimension
        a, b, ab = g.a, g.b, g.alpha * g.beta
        c0 = a * ((th - 1.0) * (a - 1.0) + N - 1.0)
        c1 = (th - 1.0) * (2.0 * a * b - 2.0 * a + ab * (g.beta - 1.0)) + (N - 1.0) * (a + b)
        c2 = b * ((th - 1.0) * (b - 1.0) + N - 1.0)
        return c0, c1, c2

    def to_json(self):
        return {"g": self.g.to_json(), "theta": self.theta, "q": self.q,
                "dimension": self.dimension}


def _split(profile, r):
    """log r, u = s/(1+s), v = 1/(1+s), log(1+s) for s = r^beta."""
    g = profile.g
    lr = np.log(np.asarray(r, float))
    z = g.beta * lr
    return lr, expit(z), expit(-z), np.logaddexp(0.0, z)


def _power_parts(profile, r):
    """(log g, L/(1+s), Q/(1+s)^2) for a power profile."""
    g = profile.g
    lr, u, v, l1s = _split(profile, r)
    logg = g.a * lr + g.alpha * l1s
    lfrac = g.a * v + g.b * u
    c0, c1, c2 = profile.q_coefficients()
    qfrac = c0 * v * v + c1 * u * v + c2 * u * u
    return lr, logg, lfrac, qfrac


def grad_abs(profile: ThetaLaplaceProfile, r):
    """|g'(r)|."""
    if isinstance(profile.g, TabulatedG):
        return np.array([abs(profile.g.derivatives(float(x))[1]) for x in np.atleast_1d(r)])
    lr, logg, lfrac, _ = _power_parts(profile, r)
    return np.exp(logg - lr) * np.abs(lfrac)


def theta_laplacian(profile: ThetaLaplaceProfile, r):
    """Radial Δ_θ g = r^{1-N} (r^{N-1} |g'|^{θ-2} g')' at r > 0."""
    r_arr = np.asarray(r, float)
    if np.any(r_arr <= 0):
        raise ValueError("theta_laplacian needs r > 0")
    th, N = profile.theta, profile.dimension
    if isinstance(profile.g, TabulatedG):
        out = []
        for x in np.atleast_1d(r_arr):
            _, d1, d2 = profile.g.derivatives(float(x))
            out.append(abs(d1) ** (th - 2.0) * ((th - 1.0) * d2 + (N - 1.0) * d1 / x))
        out = np.array(out)
        return float(out[0]) if r_arr.ndim == 0 else out
    lr, logg, lfrac, qfrac = _power_parts(profile, r_arr)
    with np.errstate(divide="ignore"):
        log_grad = logg - lr + np.log(np.abs(lfrac))
    out = np.exp((th - 2.0) * log_grad + logg - 2.0 * lr) * qfrac
    return float(out) if r_arr.ndim == 0 else out


def log_abs_theta_laplacian(profile: ThetaLaplaceProfile, r):
    lr, logg, lfrac, qfrac = _power_parts(profile, r)
    with np.errstate(divide="ignore"):
        log_grad = logg - lr + np.log(np.abs(lfrac))
        return (profile.theta - 2.0) * log_grad + logg - 2.0 * lr + np.log(np.abs(qfrac))


# --------------------------------------------------------------------------- #
# exponent bookkeeping for power profiles

def _leading(coeffs_low_to_high, at_zero: bool):
    """Index of the leading nonzero coefficient (lowest at 0, highest at infinity)."""
    idx = range(len(coeffs_low_to_high))
    order = idx if at_zero else reversed(idx)
    for i in order:
        if coeffs_low_to_high[i] != 0:
            return i
    return None


def _exponents(profile: ThetaLaplaceProfile):
    """Power-law exponents of |g'|, |Δ_θ g| and w2 at r -> 0 and r -> ∞."""
    g = profile.g
    th, q, beta = profile.theta, profile.q, g.beta
    c = profile.q_coefficients()
    out = {}
    for at_zero in (True, False):
        # L/(1+s) ~ a (s->0) or b (s->inf); zero leading coefficient shifts by beta
        if at_zero:
            eL = 0.0 if g.a != 0 else beta
            iq = _leading(c, True)
            eQ = None if iq is None else beta * iq
            eg = g.a
        else:
            eL = 0.0 if g.b != 0 else -beta
            iq = _leading(c, False)
            eQ = None if iq is None else -beta * (2 - iq)
            eg = g.a + g.alpha * beta
        e_grad = eg - 1.0 + eL
        e_lap = None if eQ is None else (th - 2.0) * e_grad + eg - 2.0 + eQ
        e_w2 = None if e_lap is None else q * (th - 1.0) * e_grad + (1.0 - q) * e_lap
        out["zero" if at_zero else "inf"] = {"g": eg, "grad": e_grad, "lap": e_lap, "w2": e_w2}
    return out


def _sign_on_positive_axis(coeffs):
    """Sign of c0 + c1 s + c2 s^2 on s > 0: +1, -1, or 0 when it vanishes or changes sign."""
    c0, c1, c2 = coeffs
    poly = np.polynomial.Polynomial([c0, c1, c2]).trim()
    if poly.degree() == 0 and poly.coef[0] == 0:
        return 0
    roots = poly.roots() if poly.degree() > 0 else np.array([])
    for z in roots:
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)) and z.real > 0:
            return 0
    # no positive root: evaluate anywhere on the axis
    return int(np.sign(poly(1.0)))


# --------------------------------------------------------------------------- #
# derived weights as radial families

@dataclass(frozen=True)
class DerivedWeight(RadialFamily):
    """w1 = |Δ_θ g| or w2 = |∇g|^{q(θ-1)} |Δ_θ g|^{1-q} as a radial family."""

    profile: ThetaLaplaceProfile = None
    which: str = "w1"
    kind: ClassVar[str] = "derived"

    @property
    def dimension(self):
        return self.profile.dimension

    def log_h(self, r):
        r = np.asarray(r, float)
        p = self.profile
        with np.errstate(divide="ignore", invalid="ignore"):
            lap = log_abs_theta_laplacian(p, r)
            if self.which == "w1":
                out = lap
            else:
                lr, logg, lfrac, _ = _power_parts(p, r)
                log_grad = logg - lr + np.log(np.abs(lfrac))
                out = p.q * (p.theta - 1.0) * log_grad + (1.0 - p.q) * lap
        return np.where(r > 0, out, INF if self._e("zero") < 0 else -INF)

    def _e(self, where):
        e = _exponents(self.profile)[where]
        return e["lap"] if self.which == "w1" else e["w2"]

    @property
    def origin_exponent(self):
        return self._e("zero")

    @property
    def tail_model(self):
        e = self._e("inf")
        return None if e is None else Model(e)

    def params(self):
        return {"profile": self.profile.to_json(), "which": self.which}


# --------------------------------------------------------------------------- #
# derivation

@dataclass(frozen=True)
class HardyDerivation:
    profile: ThetaLaplaceProfile
    w1: RadialFamily
    w2: RadialFamily
    c_h: float
    sign: str
    c1: float | None = None
    c2: float | None = None
    c_h_family: float | None = None
    optimal: bool = False
    conditions: dict = field(default_factory=dict)

    @property
    def q(self):
        return self.profile.q

    @property
    def dimension(self):
        return self.profile.dimension

    def family_weight(self):
        """h(r) = r^gamma (1 + r^beta)^alpha of the power profile."""
        from .weights import PowerType
        g = self.profile.g
        return PowerType(g.gamma, g.beta, g.alpha, self.profile.dimension)

    def to_json(self):
        return {
            "profile": self.profile.to_json(),
            "w1": self.w1.to_json(),
            "w2": self.w2.to_json(),
            "c_h": self.c_h,
            "sign": self.sign,
            "c1": self.c1,
            "c2": self.c2,
            "c_h_family": self.c_h_family,
            "optimal": self.optimal,
            "conditions": self.conditions,
        }


def example_conditions(g: PowerTypeG, N: int) -> dict:
    """The four parameter conditions of the power family at theta = 2."""
    ab = g.alpha * g.beta
    return {
        "war1": bool(np.sign(ab + g.gamma + 2) == np.sign(g.gamma + 2)),
        "|ab+gamma+2| >= |gamma+2|": bool(abs(ab + g.gamma + 2) >= abs(g.gamma + 2)),
        "gamma+N>0": bool(g.gamma + N > 0),
        "ab+gamma+N>0": bool(ab + g.gamma + N > 0),
    }


def optimality_condition(g: PowerTypeG, N: int) -> bool:
    """alpha*beta + 2(gamma+1) + N <= 0."""
    return g.alpha * g.beta + 2.0 * (g.gamma + 1.0) + N <= 0


def c1_curve(profile, s):
    """𝒞₁(s) = |Q(s)| / (1+s)^2 at theta = 2."""
    c0, c1, c2 = profile.q_coefficients()
    s = np.asarray(s, float)
    u, v = s / (1.0 + s), 1.0 / (1.0 + s)
    return np.abs(c0 * v * v + c1 * u * v + c2 * u * u)


def f_curve(profile, s):
    """f(s) = |a + (a + alpha beta) s| / (1 + s)."""
    g = profile.g
    s = np.asarray(s, float)
    return np.abs(g.a / (1.0 + s) + g.b * s / (1.0 + s))


def _numeric_extremum(fun, limits, maximize):
    """inf or sup of fun over s in [0, ∞] on a log grid, then bounded refinement."""
    s = np.concatenate([[0.0], np.geomspace(1e-12, 1e12, 4001)])
    vals = fun(s)
    sign = -1.0 if maximize else 1.0
    j = int(np.argmin(sign * vals))
    best = float(vals[j])
    if 0 < j < s.size - 1:
        res = minimize_scalar(lambda x: sign * float(fun(np.array([math.exp(x)]))[0]),
                              bounds=(math.log(max(s[j - 1], 1e-300)), math.log(s[j + 1])),
                              method="bounded", options={"xatol": 1e-12})
        cand = sign * float(res.fun)
        best = max(best, cand) if maximize else min(best, cand)
    for lim in limits:
        best = max(best, lim) if maximize else min(best, lim)
    return best


def family_constants(profile: ThetaLaplaceProfile):
    """(c1, c2, closed_form_used) at theta = 2 for a power profile."""
    g, q, N = profile.g, profile.q, profile.dimension
    conds = example_conditions(g, N)
    if all(conds.values()) and optimality_condition(g, N):
        e = g.eta_shift
        c1 = abs(e + 2.0) * (e + N)
        c2 = abs(e + 2.0) * abs(e + N) ** (1.0 - q)
        return c1, c2, True
    c0, cq1, cq2 = profile.q_coefficients()
    c1 = _numeric_extremum(lambda s: c1_curve(profile, s), [abs(c0), abs(cq2)], False)
    lim0 = abs(g.a) ** q * abs(c0) ** (1.0 - q) if c0 != 0 else INF
    liminf = abs(g.b) ** q * abs(cq2) ** (1.0 - q) if cq2 != 0 else INF
    c2 = _numeric_extremum(
        lambda s: f_curve(profile, s) ** q * c1_curve(profile, s) ** (1.0 - q),
        [lim0, liminf], True)
    return c1, c2, False


def derive_hardy(profile: ThetaLaplaceProfile, *, check_conditions: bool = True) -> HardyDerivation:
    """Weights and constant of the Hardy inequality generated by g."""
    th, q, N = profile.theta, profile.q, profile.dimension
    if isinstance(profile.g, TabulatedG):
        return _derive_tabulated(profile)
    g = profile.g
    conds = example_conditions(g, N)
    if check_conditions and th == 2:
        for name, ok in conds.items():
            if not ok:
                raise ConditionsViolated(name, f"gamma={g.gamma}, beta={g.beta}, alpha={g.alpha}")
    # g' must not vanish on r > 0 (otherwise |g'|^(theta-2) degenerates)
    if g.a * g.b < 0 or (g.a == 0 and g.b == 0):
        raise SignNotConstant("g' vanishes at some r > 0")
    sgn = _sign_on_positive_axis(profile.q_coefficients())
    if sgn == 0:
        raise SignNotConstant("theta-Laplacian of g changes sign or vanishes on r > 0")
    ex = _exponents(profile)["zero"]
    if ex["lap"] is None or ex["lap"] + N <= 0:
        raise SignNotConstant("theta-Laplacian of g is not locally integrable at the origin")
    if ex["g"] + N <= 0 or ex["grad"] + N <= 0:
        raise SignNotConstant("g is not locally W^{1,1} at the origin")
    sign = NONNEGATIVE if sgn > 0 else NONPOSITIVE
    conditions = dict(conds)
    conditions["opt-as"] = bool(optimality_condition(g, N))
    c1 = c2 = c_fam = None
    optimal = False
    if th == 2:
        c1, c2, closed = family_constants(profile)
        c_fam = q ** q * c2 / c1
        optimal = closed
    return HardyDerivation(profile, DerivedWeight(profile=profile, which="w1"),
                           DerivedWeight(profile=profile, which="w2"), q ** q, sign,
                           c1, c2, c_fam, optimal, conditions)


def _derive_tabulated(profile):
    g = profile.g
    R = g.radii
    if R.size < 3:
        raise NotDifferentiable("need at least 3 nodes")
    r = np.linspace(R[1], R[-2], 512) if R.size > 3 else np.array([R[1]])
    lap = np.array([theta_laplacian(profile, float(x)) for x in r])
    if np.all(lap > 0):
        sign = NONNEGATIVE
    elif np.all(lap < 0):
        sign = NONPOSITIVE
    else:
        raise SignNotConstant("sampled theta-Laplacian changes sign")
    return HardyDerivation(profile, None, None, profile.q ** profile.q, sign)


# --------------------------------------------------------------------------- #
# Corollary family (p-Laplace asymptotics)

def _exact_sqrt(fr: Fraction):
    n, d = fr.numerator, fr.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return math.sqrt(fr)


@dataclass(frozen=True)
class PRange:
    p_minus: Fraction | float | None
    p_plus: Fraction | float | None
    applicable: bool


def corollary_p_range(N: int) -> PRange:
    """p_± = 3/2 ∓ (1/2) sqrt((N-7)/(N+1)); the exclusion interval is nonempty only for N > 7."""
    if N <= 2:
        raise ValueError("N must exceed 2")
    if N < 7:
        return PRange(None, None, False)
    root = _exact_sqrt(Fraction(N - 7, N + 1))
    half = Fraction(1, 2)
    return PRange(Fraction(3, 2) - half * root, Fraction(3, 2) + half * root, N > 7)


def corollary_profile(p: float, N: int, q: float = 2.0) -> ThetaLaplaceProfile:
    """Power profile with gamma = -p/(p-1), beta = p/(p-1), alpha = -(p-1)/(2-p)."""
    if not 1 < p < 2:
        raise ValueError("need 1 < p < 2")
    g = PowerTypeG(gamma=-p / (p - 1.0), beta=p / (p - 1.0), alpha=-(p - 1.0) / (2.0 - p))
    return ThetaLaplaceProfile(g, theta=2.0, q=q, dimension=N)


def corollary_constant(p: float, N: int) -> float:
    """4 (N - p/((2-p)(p-1)))^(-2)."""
    return 4.0 / (N - p / ((2.0 - p) * (p - 1.0))) ** 2


def corollary_optimal(p: float, N: int) -> bool:
    rng = corollary_p_range(N)
    if not rng.applicable:
        return True
    return not (float(rng.p_minus) < p < float(rng.p_plus))


# --------------------------------------------------------------------------- #
# sampled verification

_VERIFY_SPEC = quad.QuadratureSpec(rel_tol=1e-10, max_subdivisions=20000)


def _radial_sides(phi: TestFunction, N, q, w1_log, w2_log, left_origin_exp=None):
    """(∫ |φ|^q w1 r^{N-1}, ∫ |φ'|^q w2 r^{N-1}) over the support of φ, times |S^{N-1}|."""
    grid = phi.grid
    edges = grid
    singular = [0.0] if grid[0] == 0 else []

    def lhs_f(r):
        with np.errstate(all="ignore"):
            val = np.abs(phi(r)) ** q * np.exp(w1_log(r) + (N - 1) * np.log(r))
        return np.where(r > 0, np.nan_to_num(val, nan=0.0, posinf=0.0), 0.0)

    lv, _, _, _ = quad.integrate_segments(lhs_f, edges, _VERIFY_SPEC, singular)
    slopes = phi.slopes()
    active = np.abs(slopes) > 0
    rhs = 0.0
    if np.any(active):
        def dens(r):
            with np.errstate(all="ignore"):
                return np.exp(w2_log(r) + (N - 1) * np.log(r))
        cells, _, _, _ = quad.integrate_segments(dens, edges, _VERIFY_SPEC, singular)
        rhs = float(np.sum(np.abs(slopes[active]) ** q * cells[active]))
    S = surface(N)
    return S * float(np.sum(lv)), S * rhs


@dataclass(frozen=True)
class SampleCheck:
    lhs: float
    rhs: float
    ratio: float


def _ratio(lhs, rhs):
    if lhs == 0 and rhs == 0:
        return 0.0
    if rhs == 0:
        return INF
    return lhs / rhs


def verify_hardy_sample(derivation: HardyDerivation, phi: TestFunction) -> SampleCheck:
    """lhs = ∫|φ|^q w1, rhs = C_H ∫|∇φ|^q w2 for a radial piecewise-linear φ."""
    if np.all(phi.values == 0):
        return SampleCheck(0.0, 0.0, 0.0)
    N, q = derivation.dimension, derivation.q
    lhs, rhs = _radial_sides(phi, N, q, derivation.w1.log_h, derivation.w2.log_h)
    rhs *= derivation.c_h
    return SampleCheck(lhs, rhs, _ratio(lhs, rhs))


def verify_family_sample(derivation: HardyDerivation, phi: TestFunction) -> SampleCheck:
    """Same check for the family form ∫|φ|^q h <= C ∫|∇φ|^q |x|^q h, C = q^q c2/c1."""
    if derivation.c_h_family is None:
        raise ValueError("family constant is only available at theta = 2")
    if np.all(phi.values == 0):
        return SampleCheck(0.0, 0.0, 0.0)
    h = derivation.family_weight()
    q, N = derivation.q, derivation.dimension
    lhs, rhs = _radial_sides(phi, N, q, h.log_h,
                             lambda r: h.log_h(r) + q * np.log(r))
    rhs *= derivation.c_h_family
    return SampleCheck(lhs, rhs, _ratio(lhs, rhs))


def hardy_extremal_profile(derivation: HardyDerivation, r_inner: float, r_outer: float,
                           n: int = 200) -> TestFunction:
    """Truncated power r^{-(eta_shift+N)/q} between r_inner and r_outer, linear cutoffs."""
    g, N, q = derivation.profile.g, derivation.dimension, derivation.q
    kappa = (g.eta_shift + N) / q
    r = np.geomspace(r_inner, r_outer, n)
    vals = (r / r_inner) ** (-kappa)
    grid = np.concatenate([[0.0], r, [r_outer * 1.5]])
    vals = np.concatenate([[1.0], vals, [0.0]])
    return TestFunction(grid, vals, radial=True)


def rescaling_trend(derivation: HardyDerivation, phi: TestFunction, scales) -> list[float]:
    """Family-form ratios for φ_s(x) = φ(s x) along the given scales."""
    return [verify_family_sample(derivation, phi.rescaled(s)).ratio for s in scales]
