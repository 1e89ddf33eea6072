"""Reaction nonlinearities g(x, t), their primitives and growth metadata.

A Nonlinearity bundles the pointwise evaluator g, its primitive
G(x, t) = integral of g(x, .) from 0 to t (so G(x, 0) = 0), and declared
growth metadata.  Three metadata families are supported:

* superlinear with the Ambrosetti-Rabinowitz structure: constants
  (a1, a2, q) bounding |g| <= a1 + a2|t|^(q-1), (mu, r_ar) with
  0 < mu*G <= g*t for |t| > r_ar, and (mu_tilde, a3, a4) with
  G >= a3|t|^mu_tilde - a4(x);
* superlinear without it: (a, c, r) bounding |f| <= a(x) + c|t|^(r-1) and
  (theta, beta_star) controlling sigma(x, t) = f t - p F along ordered pairs;
* p-linear: (a, b) bounding |g| <= a(x) + b|t|^(p-1) and the asymptotic slope
  bound alpha_bar(x) for g(x,t)/(|t|^(p-2) t) at infinity.

Evaluators are vectorised over numpy arrays in both x and t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError, ParameterError

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


def odd_power(t, exponent: float):
    """sign(t) |t|^exponent, safe at t = 0 for every exponent > 0."""
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.abs(t) ** exponent


def eval_coefficient(coef: Coefficient, x: np.ndarray) -> np.ndarray:
    """Evaluate a constant-or-callable coefficient on cell centers."""
    x = np.asarray(x, dtype=float)
    if callable(coef):
        return np.broadcast_to(np.asarray(coef(x), dtype=float), x.shape)
    return np.full(x.shape, float(coef))


@dataclass(frozen=True)
class ARGrowth:
    """Constants for the superlinear case with the Ambrosetti-Rabinowitz bound."""

    p: float
    a1: float
    a2: float
    q: float
    mu: float
    r_ar: float
    mu_tilde: float
    a3: float
    a4: Coefficient = 0.0


@dataclass(frozen=True)
class SuperlinearGrowth:
    """Constants for the superlinear case driven by the sigma comparison."""

    p: float
    a: Coefficient
    c: float
    r: float
    theta: float
    beta_star: Coefficient = 0.0
    # closed-form sigma(x, t) = f t - p F when available, for cross-checks
    sigma: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class LinearGrowth:
    """Constants for the p-linear case: |g| <= a(x) + b|t|^(p-1)."""

    p: float
    a: Coefficient
    b: float
    alpha_bar: Coefficient


@dataclass(frozen=True)
class Nonlinearity:
    """Pointwise reaction term with primitive and declared growth metadata."""

    name: str
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    primitive: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ar: Optional[ARGrowth] = None
    superlinear: Optional[SuperlinearGrowth] = None
    linear: Optional[LinearGrowth] = None
    odd: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, x, t):
        return self.g(np.asarray(x, dtype=float), np.asarray(t, dtype=float))

    def G(self, x, t):
        return self.primitive(np.asarray(x, dtype=float), np.asarray(t, dtype=float))

    def require(self, meta: str):
        value = getattr(self, meta)
        if value is None:
            raise ConfigurationError(
                f"nonlinearity {self.name!r} declares no {meta!r} growth metadata"
            )
        return value


ZERO = Nonlinearity(
    name="zero",
    g=lambda x, t: np.zeros(np.broadcast(x, t).shape),
    primitive=lambda x, t: np.zeros(np.broadcast(x, t).shape),
    odd=True,
)


def power(kappa: float = 1.0, q: float = 4.0, p: float = 2.0) -> Nonlinearity:
    """Pure power g(x, t) = kappa |t|^(q-2) t with primitive kappa |t|^q / q.

    Certifies every superlinear hypothesis for q > p: the Ambrosetti-
    Rabinowitz constants are (mu = q, r_ar = 0) and sigma(x, t) =
    kappa (1 - p/q) |t|^q is nondecreasing in |t|.
    """
    if not kappa > 0:
        raise ParameterError(f"kappa must be > 0 (got {kappa})")
    if not q > p:
        raise ParameterError(f"q must exceed p (got q={q}, p={p})")

    def g(x, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(kappa * odd_power(t, q - 1.0), np.broadcast(x, t).shape)

    def G(x, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(kappa / q * np.abs(t) ** q, np.broadcast(x, t).shape)

    def sigma(x, t):
        t = np.asarray(t, dtype=float)
        return kappa * (1.0 - p / q) * np.abs(t) ** q

    return Nonlinearity(
        name="power",
        g=g,
        primitive=G,
        ar=ARGrowth(p=p, a1=0.0, a2=kappa, q=q, mu=q, r_ar=0.0, mu_tilde=q, a3=kappa / q, a4=0.0),
        superlinear=SuperlinearGrowth(p=p, a=0.0, c=kappa, r=q, theta=1.0, beta_star=0.0, sigma=sigma),
        odd=True,
        params={"kappa": kappa, "q": q, "p": p},
    )


def power_perturbed(
    kappa: float = 1.0,
    r: float = 4.0,
    kappa2: float = 0.5,
    r2: float = 3.0,
    p: float = 2.0,
) -> Nonlinearity:
    """Two superlinear powers f = kappa |t|^(r-2) t + kappa2 |t|^(r2-2) t.

    With p < r2 < r both sigma contributions are nondecreasing in |t|, so the
    ordered-pair comparison holds with theta = 1, beta_star = 0 even though a
    single Ambrosetti-Rabinowitz exponent need not be sharp.
    """
    if not (kappa > 0 and kappa2 >= 0):
        raise ParameterError(f"kappa must be > 0 and kappa2 >= 0 (got {kappa}, {kappa2})")
    if not p < r2 < r:
        raise ParameterError(f"exponents must satisfy p < r2 < r (got p={p}, r2={r2}, r={r})")

    def g(x, t):
        t = np.asarray(t, dtype=float)
        val = kappa * odd_power(t, r - 1.0) + kappa2 * odd_power(t, r2 - 1.0)
        return np.broadcast_to(val, np.broadcast(x, t).shape)

    def G(x, t):
        t = np.asarray(t, dtype=float)
        val = kappa / r * np.abs(t) ** r + kappa2 / r2 * np.abs(t) ** r2
        return np.broadcast_to(val, np.broadcast(x, t).shape)

    def sigma(x, t):
        t = np.asarray(t, dtype=float)
        return kappa * (1.0 - p / r) * np.abs(t) ** r + kappa2 * (1.0 - p / r2) * np.abs(t) ** r2

    # |f| <= (kappa + kappa2)|t|^(r-1) + kappa2 on |t| <= 1 absorbed into a(x)
    return Nonlinearity(
        name="power_perturbed",
        g=g,
        primitive=G,
        superlinear=SuperlinearGrowth(
            p=p, a=kappa2, c=kappa + kappa2, r=r, theta=1.0, beta_star=0.0, sigma=sigma
        ),
        odd=True,
        params={"kappa": kappa, "r": r, "kappa2": kappa2, "r2": r2, "p": p},
    )


_PROFILES = {
    "const": lambda x: np.ones_like(x),
    "sin": np.sin,
    "cos": np.cos,
    "linear": lambda x: np.asarray(x, dtype=float),
}


def affine_decay(
    gamma: float = 1.0,
    f0: Coefficient = 1.0,
    p: float = 2.0,
    f0_profile: str = "const",
    f0_scale: float = 1.0,
) -> Nonlinearity:
    """Decaying p-linear term g(x, t) = -gamma |t|^(p-2) t + f0(x).

    The asymptotic slope g(x,t)/(|t|^(p-2) t) tends to -gamma < 0, which makes
    the associated free energy coercive; the source f0 may be a constant, a
    callable, or a named profile scaled by ``f0_scale``.
    """
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0 (got {gamma})")
    if callable(f0):
        source = f0
    elif f0_profile == "const":
        source = float(f0)
    else:
        if f0_profile not in _PROFILES:
            raise ParameterError(
                f"f0_profile must be one of {sorted(_PROFILES)} (got {f0_profile!r})"
            )
        base = _PROFILES[f0_profile]
        source = lambda x: f0_scale * base(np.asarray(x, dtype=float))

    def g(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return -gamma * odd_power(t, p - 1.0) + eval_coefficient(source, x)

    def G(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return -gamma / p * np.abs(t) ** p + eval_coefficient(source, x) * t

    bound_a = (lambda x: np.abs(eval_coefficient(source, x))) if callable(source) else abs(source)
    return Nonlinearity(
        name="affine_decay",
        g=g,
        primitive=G,
        linear=LinearGrowth(p=p, a=bound_a, b=gamma, alpha_bar=-gamma),
        odd=False,
        params={"gamma": gamma, "p": p, "f0_profile": f0_profile, "f0_scale": f0_scale},
    )


_BUILTINS = {
    "zero": lambda **kw: ZERO,
    "power": power,
    "power_perturbed": power_perturbed,
    "affine_decay": affine_decay,
}


def make_nonlinearity(name: str, **params) -> Nonlinearity:
    """Instantiate a built-in nonlinearity by name."""
    if name not in _BUILTINS:
        raise ConfigurationError(
            f"unknown nonlinearity {name!r}; built-ins: {sorted(_BUILTINS)}"
        )
    try:
        return _BUILTINS[name](**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for nonlinearity {name!r}: {exc}") from exc
