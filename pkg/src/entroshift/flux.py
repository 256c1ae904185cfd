"""Flux/entropy pairs and the pointwise functionals built from them.

All functionals take a :class:`FluxEntropyModel` first. Scalars in, scalars out;
the model caches entropy-flux values because the shift integrator asks for the
same states many times.
"""

from dataclasses import dataclass

import numpy as np

from .quadrature import checked_gauss, quad_tol

ZERO_DENOM_TOL = 1e-12
MARGIN_FRACTION = 0.05


class DomainError(ValueError):
    """A state lies outside the model's working interval."""


class DegenerateShockError(ValueError):
    """A jump with equal left and right states was treated as a shock."""


class OrderingError(ValueError):
    """States or data violate a required ordering."""


class ModelInvalidError(ValueError):
    """Flux or entropy fails strict convexity on the working interval."""


def _poly(coeffs):
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    return p, p.deriv(1), p.deriv(2)


FLUXES = {
    "burgers": (
        lambda u: 0.5 * u * u,
        lambda u: u,
        lambda u: np.ones_like(np.asarray(u, dtype=float)) * 1.0,
    ),
    "quartic": (
        lambda u: 0.25 * u ** 4 + 0.5 * u * u,
        lambda u: u ** 3 + u,
        lambda u: 3.0 * u * u + 1.0,
    ),
}

ENTROPIES = {
    "square": (
        lambda u: u * u,
        lambda u: 2.0 * u,
        lambda u: np.ones_like(np.asarray(u, dtype=float)) * 2.0,
    ),
    "exp-cosh": (np.cosh, np.sinh, np.cosh),
}


class FluxEntropyModel:
    """Strictly convex flux ``A`` with a strictly convex entropy ``eta``.

    ``B`` bounds every state the model is asked about; evaluations are allowed
    on the working interval ``[-B - margin, B + margin]`` with a 5% margin.
    """

    def __init__(self, A, dA, ddA, eta, deta, ddeta, B, name="custom",
                 validate=True):
        if not B > 0:
            raise ValueError(f"state bound B must be positive, got {B}")
        self.A, self.dA, self.ddA = A, dA, ddA
        self.eta, self.deta, self.ddeta = eta, deta, ddeta
        self.B = float(B)
        self.margin = MARGIN_FRACTION * self.B
        self.name = name
        self._q_cache = {}
        if validate:
            self.validate()

    @property
    def working_interval(self):
        return (-self.B - self.margin, self.B + self.margin)

    @classmethod
    def from_spec(cls, flux="burgers", entropy="square", B=1.0):
        """Build a model from names or polynomial coefficient lists.

        Coefficient lists are in ascending order: ``[c0, c1, c2, ...]``.
        """
        if isinstance(flux, str):
            if flux not in FLUXES:
                raise ValueError(f"unknown flux {flux!r}")
            fA = FLUXES[flux]
            fname = flux
        else:
            fA = _poly(flux)
            fname = "poly" + repr(list(flux))
        if isinstance(entropy, str):
            if entropy not in ENTROPIES:
                raise ValueError(f"unknown entropy {entropy!r}")
            fe = ENTROPIES[entropy]
            ename = entropy
        else:
            fe = _poly(entropy)
            ename = "poly" + repr(list(entropy))
        return cls(*fA, *fe, B=B, name=f"{fname}/{ename}")

    def validate(self, n=2001):
        lo, hi = self.working_interval
        u = np.linspace(lo, hi, n)
        a2 = np.asarray(self.ddA(u), dtype=float)
        e2 = np.asarray(self.ddeta(u), dtype=float)
        if not np.all(a2 > 0):
            raise ModelInvalidError(
                f"flux is not strictly convex on [{lo:g}, {hi:g}]: "
                f"min A'' = {a2.min():.3g}")
        if not np.all(e2 > 0):
            raise ModelInvalidError(
                f"entropy is not strictly convex on [{lo:g}, {hi:g}]: "
                f"min eta'' = {e2.min():.3g}")
        if not np.all(np.diff(np.asarray(self.dA(u), dtype=float)) > 0):
            raise ModelInvalidError("A' is not strictly increasing")

    def check(self, *states):
        lo, hi = self.working_interval
        for u in states:
            if not lo <= u <= hi:
                raise DomainError(
                    f"state {u!r} outside working interval [{lo:g}, {hi:g}]")

    def __repr__(self):
        return f"FluxEntropyModel({self.name}, B={self.B:g})"


def entropy_flux(model, u):
    """q(u) = int_0^u eta'(v) A'(v) dv."""
    u = float(u)
    cached = model._q_cache.get(u)
    if cached is not None:
        return cached
    model.check(u)
    deta, dA = model.deta, model.dA
    val = checked_gauss(lambda v: deta(v) * dA(v), 0.0, u, quad_tol())
    if len(model._q_cache) > 1_000_000:
        model._q_cache.clear()
    model._q_cache[u] = val
    return val


def relative_entropy(model, a, b):
    """eta(a|b) = eta(a) - eta(b) - eta'(b)(a - b)."""
    model.check(a, b)
    if a == b:
        return 0.0
    return float(model.eta(a) - model.eta(b) - model.deta(b) * (a - b))


def relative_flux(model, a, b):
    """q(a;b) = q(a) - q(b) - eta'(b)(A(a) - A(b))."""
    model.check(a, b)
    if a == b:
        return 0.0
    return float(entropy_flux(model, a) - entropy_flux(model, b)
                 - model.deta(b) * (model.A(a) - model.A(b)))


def rh_speed(model, uL, uR):
    if uL == uR:
        raise DegenerateShockError(f"no jump: uL = uR = {uL!r}")
    return float((model.A(uR) - model.A(uL)) / (uR - uL))


def shock_dissipation(model, uL, uR):
    """Entropy production q(uR) - q(uL) - sigma (eta(uR) - eta(uL)) of a jump.

    Negative exactly for Lax shocks uL > uR.
    """
    model.check(uL, uR)
    sigma = rh_speed(model, uL, uR)
    return float(entropy_flux(model, uR) - entropy_flux(model, uL)
                 - sigma * (model.eta(uR) - model.eta(uL)))


def v_epsilon(model, u, uL, uR, eps):
    if uL < uR:
        raise OrderingError(f"v_epsilon needs uL >= uR, got {uL!r} < {uR!r}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    denom = relative_entropy(model, u, uR) - relative_entropy(model, u, uL)
    if abs(denom) < ZERO_DENOM_TOL:
        return 0.0
    num = relative_flux(model, u, uR) - relative_flux(model, u, uL) - eps
    if num <= 0.0:
        return 0.0
    return num / denom


def shift_dissipation(model, u_minus, u_plus, ubar1, ubar2, velocity):
    """q(u+;ubar2) - q(u-;ubar1) - velocity (eta(u+|ubar2) - eta(u-|ubar1))."""
    return (relative_flux(model, u_plus, ubar2)
            - relative_flux(model, u_minus, ubar1)
            - velocity * (relative_entropy(model, u_plus, ubar2)
                          - relative_entropy(model, u_minus, ubar1)))


def equal_entropy_state(model, uL, uR):
    """The state u with eta(u|uL) = eta(u|uR); it is unique when uL != uR."""
    if uL == uR:
        raise DegenerateShockError("equal states")
    dL, dR = model.deta(uL), model.deta(uR)
    gL = dL * uL - model.eta(uL)
    gR = dR * uR - model.eta(uR)
    return float((gR - gL) / (dR - dL))


@dataclass(frozen=True)
class DerivedConstants:
    inf_A2: float
    sup_absA1: float
    c_star: float
    c_dstar: float
    s: float


def derive_constants(model, safety=1.1, n=10_000, B=None):
    """Grid estimates of the global constants on ``[-B, B]``.

    Lower bounds are divided by ``safety`` and upper bounds multiplied by it.
    ``s`` is the larger of the analytic bound sup|A'| and the sampled ratio
    sup |q(a;b)| / eta(a|b).
    """
    if safety < 1:
        raise ValueError("safety factor must be >= 1")
    B = model.B if B is None else float(B)
    u = np.linspace(-B, B, n)
    a2 = np.asarray(model.ddA(u), dtype=float) * np.ones_like(u)
    e2 = np.asarray(model.ddeta(u), dtype=float) * np.ones_like(u)
    if a2.min() <= 0 or e2.min() <= 0:
        raise ModelInvalidError("convexity violated on [-B, B]")
    inf_A2 = float(a2.min()) / safety
    sup_absA1 = float(np.abs(model.dA(u)).max()) * safety
    c_star = 0.5 * float(e2.min()) / safety
    c_dstar = 0.5 * float(e2.max()) * safety
    ratio = flux_entropy_ratio_sup(model, B, 60)
    s = max(ratio, float(np.abs(model.dA(u)).max())) * safety
    return DerivedConstants(inf_A2, sup_absA1, c_star, c_dstar, s)


def flux_entropy_ratio_sup(model, B, n):
    grid = np.linspace(-B, B, n)
    best = 0.0
    for a in grid:
        for b in grid:
            if a != b:
                best = max(best, abs(relative_flux(model, a, b))
                           / relative_entropy(model, a, b))
    return best
