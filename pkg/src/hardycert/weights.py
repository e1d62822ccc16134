"""Weight families, their radial measures, L1 mass and medians.

Two kinds of weights live here:

* radial families ``h(r)`` on ``[0, inf)`` with a dimension ``N``; the induced
  measure is ``r**(N-1) h(r) dr``;
* line weights ``w(s)`` on the real line, used by the Poincaré criterion and,
  through `RadialLine`, by every radial supremum.

Every weight knows its own asymptotics (local exponents at special points and
a `tails.Model` at infinity), so divergence can be decided from exponents
before anything is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np
from scipy.special import gammaln

from . import quad
from .errors import (BracketViolation, DomainError, Inconclusive, MassInfinite,
                     SingularAtZero)
from .tails import INFINITE, Model, tail_integral

INF = math.inf
MEDIAN_REL_TOL = 1e-10
_MASS_SPEC = quad.QuadratureSpec(rel_tol=1e-12, max_subdivisions=20000)
_OVERFLOW_CAP = 1e300


def surface(N: int) -> float:
    """|S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)."""
    return float(2.0 * math.exp(0.5 * N * math.log(math.pi) - gammaln(0.5 * N)))


def _as_array(r):
    return np.asarray(r, dtype=float)


# --------------------------------------------------------------------------- #
# radial families

@dataclass(frozen=True)
class RadialFamily:
    """Common interface; subclasses implement `log_h` and the asymptotics."""

    kind: ClassVar[str] = ""

    def log_h(self, r):
        raise NotImplementedError

    def h(self, r):
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(self.log_h(r))

    # h ~ r**origin_exponent as r -> 0 (None when unknown)
    @property
    def origin_exponent(self) -> float | None:
        return 0.0

    # support is [0, support_end]; tail_model describes h at infinity in x = r
    @property
    def support_end(self) -> float:
        return INF

    @property
    def tail_model(self) -> Model | None:
        return None

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params(), "dimension": self.dimension}


@dataclass(frozen=True)
class PowerType(RadialFamily):
    """h(r) = r^gamma (1 + r^beta)^alpha."""

    gamma: float
    beta: float
    alpha: float
    dimension: int = 1
    kind: ClassVar[str] = "power"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        _check_dim(self.dimension)

    def log_h(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            out = self.gamma * lr + self.alpha * np.logaddexp(0.0, self.beta * lr)
        if self.gamma == 0:
            out = np.where(r == 0, 0.0, out)
        return out

    @property
    def origin_exponent(self):
        return float(self.gamma)

    @property
    def tail_model(self):
        return Model(self.gamma + self.alpha * self.beta)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta, "alpha": self.alpha}


@dataclass(frozen=True)
class Exponential(RadialFamily):
    """h(r) = exp(-rate r)."""

    rate: float = 1.0
    dimension: int = 1
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("rate must be positive")
        _check_dim(self.dimension)

    def log_h(self, r):
        return -self.rate * _as_array(r)

    @property
    def tail_model(self):
        return Model(0.0, ((1.0, -self.rate),))

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class BarenblattLinearized(RadialFamily):
    """Weights of the linearised entropy/Fisher functionals around a Barenblatt profile.

    With sigma = m + (p-2)/(p-1), beta = p/(p-1) and k = (1-sigma)(p-1)/(p m):

    * ``w1``    = (1/m) (1 + k r^beta)^((2-sigma)/(sigma-1))
    * ``w2``    = r^((p-2)/(p-1)) (1 + k r^beta)^(1/(sigma-1))
    * ``w2eps`` = (1 + k r^beta)^(1/(sigma-1)) (eps + r^(1/(p-1)))^(-(2-p))
    """

    m: float
    p: float
    variant: str = "w1"
    eps: float = 0.5
    dimension: int = 3
    kind: ClassVar[str] = "barenblatt_linearized"

    def __post_init__(self):
        _check_dim(self.dimension)
        if self.variant not in ("w1", "w2", "w2eps"):
            raise DomainError(f"unknown variant {self.variant!r}")
        if not (self.m > 0 and self.p > 1):
            raise DomainError("need m > 0 and p > 1")
        if self.variant == "w2eps" and not 0 < self.eps < 1:
            raise DomainError("eps must lie in (0, 1)")
        if not self.sigma < 1:
            raise DomainError("sigma = m + (p-2)/(p-1) must be < 1 (fast diffusion)")

    @property
    def sigma(self):
        return self.m + (self.p - 2.0) / (self.p - 1.0)

    @property
    def _k(self):
        return (1.0 - self.sigma) * (self.p - 1.0) / (self.p * self.m)

    @property
    def _beta(self):
        return self.p / (self.p - 1.0)

    def log_h(self, r):
        r = _as_array(r)
        s = self.sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            base = np.logaddexp(0.0, math.log(self._k) + self._beta * lr)
            if self.variant == "w1":
                return -math.log(self.m) + (2.0 - s) / (s - 1.0) * base
            if self.variant == "w2":
                e0 = (self.p - 2.0) / (self.p - 1.0)
                out = e0 * lr + base / (s - 1.0)
                return np.where(r == 0, 0.0, out) if e0 == 0 else out
            tail = np.log(self.eps + np.power(r, 1.0 / (self.p - 1.0)))
            return base / (s - 1.0) - (2.0 - self.p) * tail

    @property
    def origin_exponent(self):
        if self.variant == "w2":
            return (self.p - 2.0) / (self.p - 1.0)
        return 0.0

    @property
    def tail_model(self):
        s, b = self.sigma, self._beta
        if self.variant == "w1":
            return Model(b * (2.0 - s) / (s - 1.0))
        if self.variant == "w2":
            return Model((self.p - 2.0) / (self.p - 1.0) + b / (s - 1.0))
        return Model(b / (s - 1.0) - (2.0 - self.p) / (self.p - 1.0))

    def params(self):
        out = {"m": self.m, "p": self.p, "variant": self.variant}
        if self.variant == "w2eps":
            out["eps"] = self.eps
        return out


@dataclass(frozen=True)
class Tabulated(RadialFamily):
    """Piecewise-linear h through `nodes`; zero outside the node range."""

    nodes: tuple = ()
    dimension: int = 1
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        _check_dim(self.dimension)
        nodes = tuple((float(a), float(b)) for a, b in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if len(nodes) < 2:
            raise DomainError("need at least two nodes")
        r = np.array([a for a, _ in nodes])
        v = np.array([b for _, b in nodes])
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise DomainError("node radii must be nonnegative and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("node values must be finite and nonnegative")

    @property
    def radii(self):
        return np.array([a for a, _ in self.nodes])

    @property
    def values(self):
        return np.array([b for _, b in self.nodes])

    def h(self, r):
        r = _as_array(r)
        return np.interp(r, self.radii, self.values, left=0.0, right=0.0)

    def log_h(self, r):
        with np.errstate(divide="ignore"):
            return np.log(self.h(r))

    @property
    def origin_exponent(self):
        return 0.0

    @property
    def support_end(self):
        return float(self.radii[-1])

    def params(self):
        return {"nodes": [list(n) for n in self.nodes]}


@dataclass(frozen=True)
class Rescaled(RadialFamily):
    """h(r / scale) for a base family (used for scale-covariance checks)."""

    base: RadialFamily = None
    scale: float = 1.0
    kind: ClassVar[str] = "rescaled"

    @property
    def dimension(self):
        return self.base.dimension

    def log_h(self, r):
        return self.base.log_h(_as_array(r) / self.scale)

    def h(self, r):
        return self.base.h(_as_array(r) / self.scale)

    @property
    def origin_exponent(self):
        return self.base.origin_exponent

    @property
    def support_end(self):
        return self.base.support_end * self.scale

    @property
    def tail_model(self):
        tm = self.base.tail_model
        if tm is None:
            return None
        return Model(tm.power, tuple((k, c * self.scale ** -k) for k, c in tm.exp_terms))

    def params(self):
        return {"base": self.base.to_json(), "scale": self.scale}


def _check_dim(N):
    if int(N) != N or N < 1:
        raise DomainError("dimension must be an integer >= 1")


_FAMILIES = {c.kind: c for c in (PowerType, Exponential, BarenblattLinearized, Tabulated)}


def family_from_json(obj: dict) -> RadialFamily:
    kind = obj.get("kind")
    params = dict(obj.get("params", {}))
    N = int(obj.get("dimension", 1))
    if kind == "rescaled":
        return Rescaled(base=family_from_json(params["base"]), scale=float(params["scale"]))
    if kind not in _FAMILIES:
        raise DomainError(f"unknown family kind {kind!r}")
    if kind == "tabulated":
        params["nodes"] = tuple(tuple(n) for n in params["nodes"])
    return _FAMILIES[kind](**params, dimension=N)


# --------------------------------------------------------------------------- #
# operations on radial families

def evaluate(family: RadialFamily, r, *, extended: bool = False):
    """h(r) for r >= 0.

    A family singular at the origin raises `SingularAtZero` at r = 0 unless
    ``extended=True``, in which case the extended value +inf is returned.
    """
    arr = _as_array(r)
    if not np.all(np.isfinite(arr)):
        raise DomainError("r must be finite")
    if np.any(arr < 0):
        raise DomainError("r must be nonnegative")
    a0 = family.origin_exponent
    at_zero = arr == 0
    if a0 is not None and a0 < 0 and np.any(at_zero):
        if not extended:
            raise SingularAtZero(f"{family.kind} weight is singular at r=0")
        safe = np.where(at_zero, 1.0, arr)
        out = np.where(at_zero, INF, family.h(safe))
    else:
        out = family.h(arr)
    return float(out) if np.ndim(out) == 0 else out


def radial_density(family: RadialFamily, r):
    """r^(N-1) h(r); the origin itself carries no mass."""
    r = _as_array(r)
    pos = r > 0
    safe = np.where(pos, r, 1.0)
    # log space: r^(N-1) overflows long before h underflows
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp((family.dimension - 1) * np.log(safe) + family.log_h(safe))
    return np.where(pos, out, 0.0)


def mass_is_finite(family: RadialFamily) -> bool | None:
    """Analytic finiteness verdict for ∫ r^(N-1) h; None when undecided."""
    N = family.dimension
    a0 = family.origin_exponent
    if a0 is not None and N + a0 <= 0:
        return False
    if family.support_end < INF:
        return True if a0 is not None else None
    tm = family.tail_model
    if tm is None:
        return None
    return tail_integral(tm.times_power(N - 1)) is not INFINITE


def _radial_segments(family):
    end = family.support_end
    if isinstance(family, Tabulated):
        return list(family.radii) if family.radii[0] > 0 else list(family.radii), []
    return [0.0, 1.0, end] if end > 1 else [0.0, end], [0.0]


def radial_integral(family: RadialFamily, spec=_MASS_SPEC) -> quad.IntegralResult:
    """∫_0^∞ r^(N-1) h(r) dr by quadrature (no analytic shortcut)."""
    edges, singular = _radial_segments(family)
    vals, errs, conv, panels = quad.integrate_segments(
        lambda r: radial_density(family, r), edges, spec, singular)
    return quad.IntegralResult(float(np.sum(vals)), float(np.sum(errs)), bool(np.all(conv)),
                               int(np.sum(panels)))


def mass(family: RadialFamily) -> float:
    """H1 = |S^{N-1}| ∫ r^(N-1) h(r) dr, or math.inf when divergence is proven."""
    verdict = mass_is_finite(family)
    if verdict is False:
        return INF
    res = radial_integral(family)
    if verdict is None and (not res.converged or res.value > _OVERFLOW_CAP):
        raise Inconclusive("numerical mass exceeds the cap without an analytic proof")
    return surface(family.dimension) * res.value


@dataclass(frozen=True)
class MassAndMedian:
    mass: float
    median: float
    tolerance: float
    radial_mass: float = field(default=float("nan"))


def median_bracket(family: PowerType) -> tuple[float, float] | None:
    """Two-sided a-priori bracket for the median of a power-type radial measure."""
    if not isinstance(family, PowerType):
        return None
    N, g, a, b = family.dimension, family.gamma, family.alpha, family.beta
    tail = N + g + a * b
    if not (N + g > 0 and tail < 0 and a < 0 < b):
        return None
    lo = ((N + g) / (2.0 ** (abs(a) + 1) * abs(tail))) ** (1.0 / (N + g))
    hi = 2.0 ** ((abs(a) + 1) / abs(tail))
    return lo, hi


def _bisect_median(piece, lo, hi, c_lo, target, total):
    """Smallest x in [lo, hi] with CDF(x) >= target; `piece(a, b)` integrates."""
    tol_x = 1e-15
    while hi - lo > tol_x * max(1.0, abs(hi)) + 1e-300:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        c_mid = c_lo + piece(lo, mid)
        if c_mid >= target:
            hi = mid
        else:
            lo, c_lo = mid, c_mid
    c_hi = c_lo + piece(lo, hi)
    return hi, c_hi


def median(family: RadialFamily, *, check_bracket: bool = True) -> MassAndMedian:
    """Median of r^(N-1) h(r) dr: smallest eta with ∫_0^eta = half the radial mass."""
    if mass_is_finite(family) is False:
        raise MassInfinite(f"{family.kind} weight has infinite mass")
    total_res = radial_integral(family)
    total = total_res.value
    if not total > 0:
        raise MassInfinite("mass must be positive")
    target = 0.5 * total
    _, singular = _radial_segments(family)

    def piece(a, b):
        return quad.integrate(lambda r: radial_density(family, r), a, b, _MASS_SPEC,
                              singular=[s for s in singular if a <= s <= b]).value

    # bracket the median, then bisect using incremental integrals
    hi = 1.0 if family.support_end == INF else family.support_end
    c_hi = piece(0.0, hi)
    while c_hi < target and family.support_end == INF:
        hi, c_hi = 2.0 * hi, c_hi + piece(hi, 2.0 * hi)
    lo, c_lo = 0.0, 0.0
    while lo == 0.0 and hi > 1e-300:
        trial = 0.5 * hi
        c_trial = piece(0.0, trial)
        if c_trial < target:
            lo, c_lo = trial, c_trial
            break
        hi, c_hi = trial, c_trial
    eta, c_eta = _bisect_median(piece, lo, hi, c_lo, target, total)
    err = abs(c_eta - target)
    tol = max(err, total_res.error_estimate)
    out = MassAndMedian(surface(family.dimension) * total, eta, tol / total, total)
    if check_bracket:
        br = median_bracket(family)
        if br is not None:
            slack = MEDIAN_REL_TOL * total
            if piece(0.0, br[0]) > target + slack or piece(0.0, br[1]) < target - slack:
                raise BracketViolation(
                    f"median {eta!r} outside analytic bracket {br!r}")
    return out


# --------------------------------------------------------------------------- #
# line weights

@dataclass(frozen=True, kw_only=True)
class LineWeight:
    """w(s) on the real line; `support` and the base shape live in the u = ±s frame."""

    scale: float = 1.0
    support: tuple = (-INF, INF)
    flip: bool = False
    kind: ClassVar[str] = ""

    # -- to implement
    def _log_base(self, u):
        raise NotImplementedError

    def _special(self) -> list:
        """[(u0, local exponent)] points where the base is singular or vanishes."""
        return []

    def _inf_model(self, sign: int) -> Model | None:
        raise NotImplementedError

    def _params(self) -> dict:
        raise NotImplementedError

    # -- generic behaviour
    def _u(self, s):
        s = _as_array(s)
        return -s if self.flip else s

    def log(self, s):
        u = self._u(s)
        lo, hi = self.support
        with np.errstate(all="ignore"):
            out = math.log(self.scale) + self._log_base(u)
        out = np.where((u < lo) | (u > hi), -INF, out)
        return out

    def __call__(self, s):
        with np.errstate(over="ignore"):
            return np.exp(self.log(s))

    def bounds(self) -> tuple:
        lo, hi = self.support
        return (-hi, -lo) if self.flip else (lo, hi)

    def special_points(self) -> list:
        """Special points in s coordinates, within the support."""
        lo, hi = self.bounds()
        pts = [(-u if self.flip else u, e) for u, e in self._special()]
        return sorted((p, e) for p, e in pts if lo <= p <= hi)

    def breakpoints(self) -> list:
        lo, hi = self.bounds()
        pts = {p for p, _ in self.special_points()}
        pts.update(x for x in (lo, hi) if math.isfinite(x))
        return sorted(pts)

    def local_exponent(self, s0: float) -> float | None:
        """a with w ~ |s - s0|^a near s0 (one-sided, from inside the support)."""
        for p, e in self.special_points():
            if p == s0:
                return e
        with np.errstate(all="ignore"):
            lv = float(self.log(np.array([s0]))[0])
        lo, hi = self.bounds()
        if math.isfinite(lv) and lo <= s0 <= hi:
            return 0.0
        if not math.isfinite(lv) and lv < 0 and (s0 == lo or s0 == hi):
            # support edge where the base itself is positive: jump to zero
            inner = s0 + (1e-9 if s0 == lo else -1e-9) * max(1.0, abs(s0))
            if math.isfinite(float(self.log(np.array([inner]))[0])):
                return 0.0
        return None

    def end_model(self, end: float) -> Model | None:
        """Model of w near s -> +inf (end=+inf) or s -> -inf (end=-inf), in x = |s|."""
        lo, hi = self.bounds()
        if (end > 0 and hi < INF) or (end < 0 and lo > -INF):
            return None
        sign = 1 if end > 0 else -1
        if self.flip:
            sign = -sign
        return self._inf_model(sign)

    def reflected(self) -> "LineWeight":
        return replace(self, flip=not self.flip)

    def scaled(self, c: float) -> "LineWeight":
        return replace(self, scale=self.scale * c)

    def restricted(self, lo: float, hi: float) -> "LineWeight":
        """Zero the weight outside [lo, hi] (given in s coordinates)."""
        if self.flip:
            lo, hi = -hi, -lo
        a, b = self.support
        return replace(self, support=(max(a, lo), min(b, hi)))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "params": self._params()}
        if self.scale != 1.0:
            out["scale"] = self.scale
        if self.support != (-INF, INF):
            out["support"] = [_enc(x) for x in self.support]
        if self.flip:
            out["flip"] = True
        return out


def _enc(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _dec(x):
    return float(x)


@dataclass(frozen=True, kw_only=True)
class ExpLine(LineWeight):
    """exp(-rate |u - center|)."""

    rate: float = 1.0
    center: float = 0.0
    kind: ClassVar[str] = "exp"

    def _log_base(self, u):
        return -self.rate * np.abs(u - self.center)

    def _inf_model(self, sign):
        return Model(0.0, ((1.0, -self.rate),))

    def _params(self):
        return {"rate": self.rate, "center": self.center}


@dataclass(frozen=True, kw_only=True)
class GaussianLine(LineWeight):
    """exp(-(u - center)^2 / (2 sigma^2))."""

    sigma: float = 1.0
    center: float = 0.0
    kind: ClassVar[str] = "gaussian"

    def _log_base(self, u):
        return -0.5 * ((u - self.center) / self.sigma) ** 2

    def _inf_model(self, sign):
        s2 = self.sigma ** 2
        return Model(0.0, ((1.0, sign * self.center / s2), (2.0, -0.5 / s2)))

    def _params(self):
        return {"sigma": self.sigma, "center": self.center}


@dataclass(frozen=True, kw_only=True)
class PowerLine(LineWeight):
    """|u - center|^gamma (1 + |u - center|^beta)^alpha."""

    gamma: float = 0.0
    beta: float = 2.0
    alpha: float = -1.0
    center: float = 0.0
    kind: ClassVar[str] = "power"

    def _log_base(self, u):
        d = np.abs(u - self.center)
        with np.errstate(divide="ignore", invalid="ignore"):
            ld = np.log(d)
            out = self.alpha * np.logaddexp(0.0, self.beta * ld)
            if self.gamma != 0:
                out = out + self.gamma * ld
        return out

    def _special(self):
        return [(self.center, float(self.gamma))] if self.gamma != 0 else []

    def _inf_model(self, sign):
        return Model(self.gamma + self.alpha * self.beta)

    def _params(self):
        return {"gamma": self.gamma, "beta": self.beta, "alpha": self.alpha,
                "center": self.center}


@dataclass(frozen=True, kw_only=True)
class ConstantLine(LineWeight):
    value: float = 1.0
    kind: ClassVar[str] = "constant"

    def _log_base(self, u):
        return np.full(np.shape(u), math.log(self.value))

    def _inf_model(self, sign):
        return Model(0.0)

    def _params(self):
        return {"value": self.value}


@dataclass(frozen=True, kw_only=True)
class MonomialLine(LineWeight):
    """|u - center|^power, usually restricted to one side of the center."""

    power: float = 0.0
    center: float = 0.0
    kind: ClassVar[str] = "monomial"

    def _log_base(self, u):
        with np.errstate(divide="ignore"):
            return self.power * np.log(np.abs(u - self.center))

    def _special(self):
        return [(self.center, float(self.power))] if self.power != 0 else []

    def _inf_model(self, sign):
        return Model(self.power)

    def _params(self):
        return {"power": self.power, "center": self.center}


@dataclass(frozen=True, kw_only=True)
class RadialLine(LineWeight):
    """|u|^extra_power h(|u|) for a radial family h.

    With ``support=(0, inf)`` and ``extra_power=N-1`` this is the radial
    measure on the half-line; with the full line and ``extra_power=0`` it is
    the even extension of h.
    """

    family: RadialFamily = None
    extra_power: float = 0.0
    kind: ClassVar[str] = "radial"

    def __post_init__(self):
        if self.family is None:
            raise DomainError("radial line weight needs a family")

    def _log_base(self, u):
        r = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.family.log_h(r)
            if self.extra_power != 0:
                out = out + self.extra_power * np.log(r)
        end = self.family.support_end
        return np.where(r > end, -INF, out)

    def _special(self):
        a0 = self.family.origin_exponent
        if a0 is None:
            return []
        e = a0 + self.extra_power
        return [(0.0, e)] if e != 0 else []

    def _inf_model(self, sign):
        if self.family.support_end < INF:
            return None
        tm = self.family.tail_model
        return None if tm is None else tm.times_power(self.extra_power)

    def _params(self):
        return {"family": self.family.to_json(), "extra_power": self.extra_power}

    def bounds(self):
        lo, hi = super().bounds()
        end = self.family.support_end
        return max(lo, -end), min(hi, end)

    def end_model(self, end):
        if self.family.support_end < INF:
            return None
        return super().end_model(end)


_LINE_KINDS = {c.kind: c for c in (ExpLine, GaussianLine, PowerLine, ConstantLine,
                                   MonomialLine, RadialLine)}


def line_weight_from_json(obj: dict) -> LineWeight:
    kind = obj.get("kind")
    if kind not in _LINE_KINDS:
        raise DomainError(f"unknown line weight kind {kind!r}")
    params = dict(obj.get("params", {}))
    if kind == "radial":
        params["family"] = family_from_json(params["family"])
    extra = {}
    if "scale" in obj:
        extra["scale"] = float(obj["scale"])
    if "support" in obj:
        extra["support"] = tuple(_dec(x) for x in obj["support"])
    if "flip" in obj:
        extra["flip"] = bool(obj["flip"])
    return _LINE_KINDS[kind](**params, **extra)


def radial_pair_lines(family: RadialFamily, q: float):
    """Half-line weights r^(N-1) h and r^(N-1+q) h of the Hardy-Poincaré criterion."""
    N = family.dimension
    w1 = RadialLine(family=family, extra_power=N - 1.0, support=(0.0, INF))
    w2 = RadialLine(family=family, extra_power=N - 1.0 + q, support=(0.0, INF))
    return w1, w2


@dataclass(frozen=True)
class WeightPair:
    """(w1, w2) with a domain tag: "line" or "radial" (with dimension N)."""

    left: LineWeight
    right: LineWeight
    q: float = 2.0
    domain: str = "line"
    dimension: int | None = None

    def __post_init__(self):
        if not self.q > 1:
            raise DomainError("q must exceed 1")
        if self.domain not in ("line", "radial"):
            raise DomainError("domain must be 'line' or 'radial'")

    def reflected(self) -> "WeightPair":
        return replace(self, left=self.left.reflected(), right=self.right.reflected())

    def to_json(self):
        out = {"w1": self.left.to_json(), "w2": self.right.to_json(), "q": self.q,
               "domain": self.domain}
        if self.dimension is not None:
            out["dimension"] = self.dimension
        return out


# --------------------------------------------------------------------------- #
# line mass and median

def _line_edges(w: LineWeight):
    lo, hi = w.bounds()
    pts = [p for p in w.breakpoints() if lo < p < hi]
    edges = [lo] + pts + [hi]
    if math.isinf(lo) and math.isinf(hi) and not pts:
        edges = [lo, 0.0, hi]
    return edges, [p for p, _ in w.special_points()]


def line_mass_is_finite(w: LineWeight) -> bool | None:
    lo, hi = w.bounds()
    for p, e in w.special_points():
        if e <= -1:
            return False
    for end, finite in ((hi, math.isinf(hi)), (lo, math.isinf(lo))):
        if finite:
            mdl = w.end_model(end)
            if mdl is None:
                return None
            if tail_integral(mdl) is INFINITE:
                return False
    return True


def line_mass(w: LineWeight) -> float:
    if line_mass_is_finite(w) is False:
        return INF
    edges, singular = _line_edges(w)
    vals, _, _, _ = quad.integrate_segments(w, edges, _MASS_SPEC, singular)
    return float(np.sum(vals))


def line_median(w: LineWeight) -> MassAndMedian:
    """Smallest s with ∫_{-inf}^s w = half the mass."""
    if line_mass_is_finite(w) is False:
        raise MassInfinite("line weight is not integrable")
    edges, singular = _line_edges(w)
    vals, errs, _, _ = quad.integrate_segments(w, edges, _MASS_SPEC, singular)
    total = float(np.sum(vals))
    if not total > 0:
        raise MassInfinite("line weight has zero mass")
    target = 0.5 * total
    cum = np.concatenate([[0.0], np.cumsum(vals)])

    def piece(a, b):
        return quad.integrate(w, a, b, _MASS_SPEC,
                              singular=[s for s in singular if a <= s <= b]).value

    j = int(np.searchsorted(cum, target, side="left")) - 1
    j = min(max(j, 0), len(edges) - 2)
    a, b = edges[j], edges[j + 1]
    if math.isinf(a):
        step = 1.0
        a = b - step
        while cum[j + 1] - piece(a, b) >= target:
            step *= 2.0
            a = b - step
        c_a = cum[j + 1] - piece(a, b)
    else:
        c_a = cum[j]
        if math.isinf(b):
            step = 1.0
            b = a + step
            while c_a + piece(a, b) < target:
                step *= 2.0
                b = a + step
    eta, c_eta = _bisect_median(piece, a, b, c_a, target, total)
    if abs(eta) < 1e-13:
        eta = 0.0
    tol = max(abs(c_eta - target), float(np.sum(errs)))
    return MassAndMedian(total, eta, tol / total, total)
