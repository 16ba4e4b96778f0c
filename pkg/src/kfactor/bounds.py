"""Threshold formulas and first/second-moment quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParameterError

DIVB_CONSTANT = Fraction(1, 64)


def phi(s: int) -> Fraction:
    """The exponent 2s / ((s-1)(s+2)) as an exact rational."""
    if s < 2:
        raise ParameterError(f"phi(s) needs s >= 2, got {s}")
    return Fraction(2 * s, (s - 1) * (s + 2))


def p_s(n: float, s: int) -> float:
    """ln(n)/n for s = 2, n^(-phi(s)) otherwise (natural log)."""
    if n < 3:
        raise ParameterError(f"p_s needs n >= 3, got {n}")
    if s < 2:
        raise ParameterError(f"p_s needs s >= 2, got {s}")
    if s == 2:
        return math.log(n) / n
    return math.exp(-float(phi(s)) * math.log(n))


def nps_exponent(s: int) -> Fraction:
    """Exponent of n in n^s * p_s^(C(s+1,2)-1), exactly; zero for every s >= 3."""
    if s < 3:
        raise ParameterError("the identity concerns s >= 3")
    return s - phi(s) * (math.comb(s + 1, 2) - 1)


def nps_value(n: float, s: int) -> float:
    """Floating-point evaluation of n^s * p_s(n)^(C(s+1,2)-1)."""
    return float(n) ** s * p_s(n, s) ** (math.comb(s + 1, 2) - 1)


@dataclass
class JansonReport:
    mu: float
    delta_bar: float
    exponent_bound: float
    terms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "delta_bar": self.delta_bar, "exponent_bound": self.exponent_bound,
                "terms": self.terms, **self.extra}


def _janson_exponent(mu: float, delta_bar: float) -> float:
    if mu + delta_bar == 0:
        return 0.0
    return mu * mu / (8.0 * (mu + delta_bar))


def expected_ks_count(n_sub: int, p: float, s: int) -> JansonReport:
    """Moments of the number of K_s copies of G(n_sub, p).

    ``delta_bar`` sums P(both present) over ordered pairs of distinct
    s-sets sharing between 2 and s-1 vertices.
    """
    if s < 1 or n_sub < s:
        raise ParameterError("need n_sub >= s >= 1")
    if not 0 <= p <= 1:
        raise ParameterError(f"p={p} is not a probability")
    e_s = math.comb(s, 2)
    sets = math.comb(n_sub, s)
    mu = sets * p ** e_s
    delta_bar = 0.0
    terms = {}
    for i in range(2, s):
        pairs = sets * math.comb(s, i) * math.comb(n_sub - s, s - i)
        val = pairs * p ** (2 * e_s - math.comb(i, 2))
        terms[str(i)] = val
        delta_bar += val
    return JansonReport(mu, delta_bar, _janson_exponent(mu, delta_bar), terms)


def harvest_split(n: int) -> tuple[int, int, int]:
    """Sizes of the A/B/D thirds used by the harvesting construction."""
    a = n // 3
    b = (n + 1) // 3
    return a, b, n - a - b


def canonical_w_size(n: int, g: int, s: int) -> int:
    a, _, d = harvest_split(n)
    return a * math.ceil(g / 5) * math.comb(d, s - 1)


def harvest_moments(n: int, g: int, s: int, C: float, delta: float | None = None,
                    w_size: int | None = None) -> JansonReport:
    """First moment of the surviving candidate count and the conflict-pair table.

    ``w_size`` is the realised candidate count |W|; by default it is computed
    for the canonical thirds split with ceil(g/5) thinned degrees.  ``delta``
    bounds the host's maximum degree as a fraction of n (default g/n, the
    regular case).  Each table entry (i, j) counts conflicting pairs sharing i
    vertices, j of them outside D, and records its integer exponents of g, n,
    p and delta together with the numeric bound.
    """
    if s < 2 or g < 1 or n < 3:
        raise ParameterError("need s >= 2, g >= 1, n >= 3")
    p = C * p_s(n, s)
    if delta is None:
        delta = g / n
    if w_size is None:
        w_size = canonical_w_size(n, g, s)
    e1 = math.comb(s + 1, 2)
    mu = w_size * p ** (e1 - 1)
    kappa = w_size / (g * float(n) ** s)
    terms = {}
    f1 = 0.0
    f2 = 0.0
    for i in range(1, s + 1):
        ci = math.comb(i, 2)
        for j, (g_exp, n_exp, d_exp, p_exp) in enumerate((
                (2, 2 * s - i, 0, 2 * e1 - 2 - ci),
                (1, 2 * s - i + 1, 1, 2 * e1 - 2 - ci),
                (1, 2 * s - i + 1, 0, 2 * e1 - 1 - ci))):
            if i == 1 and j == 2:
                continue  # a single shared vertex cannot contain a G'-edge
            val = float(g) ** g_exp * float(n) ** n_exp * delta ** d_exp * p ** p_exp
            terms[f"{i},{j}"] = {"g_exp": g_exp, "n_exp": n_exp, "delta_exp": d_exp,
                                 "p_exp": p_exp, "value": val}
            if i == 1:
                f1 += val
            else:
                f2 += val
    delta_bar = f1 + f2
    return JansonReport(mu, delta_bar, _janson_exponent(mu, delta_bar), terms,
                        {"p": p, "kappa": kappa, "w_size": w_size, "F1": f1, "F2": f2,
                         "C_prime": C ** (e1 - 1)})


def divb_bound(n: int, nu: float, s: int, C: float) -> float:
    """Failure exponent c_s * nu^2 * n^2 * p with p = C p_s(n) and c_s = 1/64."""
    if not 0 <= nu <= 1:
        raise ParameterError("nu must lie in [0, 1]")
    return float(DIVB_CONSTANT) * nu * nu * n * n * C * p_s(n, s)
