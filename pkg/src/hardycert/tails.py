"""Asymptotic bookkeeping for weights of the form x^a exp(sum_k c_k x^k).

Near an end of an integration range we measure size with a variable x -> inf
(x = |s| at an infinite end, x = 1/distance at a finite one).  A `Model`
records the integrand's behaviour in that variable; a `Growth` records the
leading behaviour of log(size) of an integral built from it.  This is all the
exponent analysis the criteria need to classify a supremum as finite or
provably infinite without sampling it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ZERO_TOL = 1e-12


def _clean(d):
    return {k: v for k, v in d.items() if abs(v) > ZERO_TOL}


@dataclass(frozen=True)
class Model:
    """Integrand ~ x**power * exp(sum(coef * x**k for k, coef in exp_terms))."""

    power: float = 0.0
    exp_terms: tuple = ()  # ((k, coef), ...) with k > 0

    @property
    def exp_dict(self):
        return dict(self.exp_terms)

    def leading_exp(self):
        d = _clean(self.exp_dict)
        if not d:
            return None
        k = max(d)
        return k, d[k]

    def pow(self, s: float) -> "Model":
        return Model(self.power * s, tuple((k, c * s) for k, c in self.exp_terms))

    def times_power(self, b: float) -> "Model":
        return Model(self.power + b, self.exp_terms)

    @classmethod
    def at_finite_end(cls, local_exponent: float) -> "Model":
        # f ~ d**a0 with d = 1/x and ds = dx / x**2
        return cls(-local_exponent - 2.0)


@dataclass(frozen=True)
class Growth:
    """log(size) ~ sum c_k x**k + log_coef*log x + loglog_coef*log log x."""

    exp_terms: tuple = ()
    log_coef: float = 0.0
    loglog_coef: float = 0.0

    def __add__(self, other: "Growth") -> "Growth":
        d = dict(self.exp_terms)
        for k, c in other.exp_terms:
            d[k] = d.get(k, 0.0) + c
        return Growth(tuple(sorted(_clean(d).items())), self.log_coef + other.log_coef,
                      self.loglog_coef + other.loglog_coef)

    def scale(self, s: float) -> "Growth":
        return Growth(tuple((k, c * s) for k, c in self.exp_terms), self.log_coef * s,
                      self.loglog_coef * s)

    def sign(self) -> int:
        """+1 if the quantity grows without bound, -1 if it decays, 0 if bounded."""
        d = _clean(dict(self.exp_terms))
        if d:
            k = max(d)
            return 1 if d[k] > 0 else -1
        for c in (self.log_coef, self.loglog_coef):
            if abs(c) > ZERO_TOL:
                return 1 if c > 0 else -1
        return 0


BOUNDED = Growth()
INFINITE = None  # sentinel for a divergent integral


def tail_integral(m: Model):
    """Growth of ∫_x^∞ g as x -> ∞, or INFINITE if the integral diverges."""
    lead = m.leading_exp()
    if lead is not None:
        k, c = lead
        if c > 0:
            return INFINITE
        return Growth(m.exp_terms, m.power - k + 1.0)
    if m.power < -1.0 - ZERO_TOL:
        return Growth((), m.power + 1.0)
    return INFINITE


def head_integral(m: Model) -> Growth:
    """Growth of ∫_{x0}^x g as x -> ∞ (bounded integrals give BOUNDED)."""
    lead = m.leading_exp()
    if lead is not None:
        k, c = lead
        if c < 0:
            return BOUNDED
        return Growth(m.exp_terms, m.power - k + 1.0)
    if m.power < -1.0 - ZERO_TOL:
        return BOUNDED
    if abs(m.power + 1.0) <= ZERO_TOL:
        return Growth((), 0.0, 1.0)
    return Growth((), m.power + 1.0)


@dataclass
class EndVerdict:
    """Classification of A(t) * V(t)**(q-1) near one end of the scan range."""

    finite: bool | None
    cause: str = ""
    growth: Growth | None = field(default=None)


def classify_end(w1_model: Model | None, dual_model: Model | None, q: float,
                 upper: bool) -> EndVerdict:
    """Classify the Muckenhoupt product near the upper (A is a tail) or lower end.

    At the upper end A(t) = ∫_t^{end} w1 and V(t) = ∫_{start}^t dual grows;
    at the lower end the roles swap: A grows toward the end, V is a tail.
    """
    if w1_model is None or dual_model is None:
        return EndVerdict(None, "no asymptotic model")
    if upper:
        a = tail_integral(w1_model)
        if a is INFINITE:
            return EndVerdict(False, "outer integral of w1 diverges")
        v = head_integral(dual_model)
    else:
        v = tail_integral(dual_model)
        if v is INFINITE:
            return EndVerdict(False, "inner integral of w2^(1/(1-q)) diverges")
        a = head_integral(w1_model)
    g = a + v.scale(q - 1.0)
    if g.sign() > 0:
        return EndVerdict(False, "product grows without bound", g)
    return EndVerdict(True, "", g)
