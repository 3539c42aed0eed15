"""Asymptotic breakdown curves for orthogonal-invariant references on the unit ball.

For a reference that is invariant under rotations and supported on the closed
unit ball, the depth of ``alpha * v`` is the mass of the cap
``{x : x_1 >= alpha}``.  That cap mass is a tail integral of the first
marginal density, which is all this module computes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure, UnsupportedDimension
from .numeric import ceil_fraction

KINDS = ("sphunif", "ball")

# per-panel quadrature targets; the error bound asserted on the result is looser
_EPSREL = 1e-10
_EPSABS = 1e-12
MAX_ERROR = 1e-8


def spherical_constant(d: int) -> float:
    """Normalizing constant Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)), d >= 2."""
    if d < 2:
        raise UnsupportedDimension(f"spherical marginal needs d >= 2, got {d}")
    return math.exp(math.lgamma(d / 2) - math.lgamma((d - 1) / 2)) / math.sqrt(math.pi)


def ball_constant(d: int) -> float:
    """Normalizing constant Gamma((d+2)/2) / (sqrt(pi) Gamma((d+1)/2))."""
    if d < 1:
        raise UnsupportedDimension(f"dimension must be positive, got {d}")
    return math.exp(math.lgamma((d + 2) / 2) - math.lgamma((d + 1) / 2)) / math.sqrt(math.pi)


def _quad(f, a, b, what):
    val, err = integrate.quad(f, a, b, epsabs=_EPSABS, epsrel=_EPSREL, limit=200)
    if not err <= MAX_ERROR:
        raise QuadratureFailure(err, f"{what}: error bound {err:.2e}")
    return val, err


def marginal_density_spherical(d: int, x: float) -> float:
    """First-coordinate density of the spherical uniform law on the unit ball.

    The radial integrand ``r^-(d-2) (r^2 - x^2)^((d-3)/2)`` has an integrable
    singularity at ``r = |x|`` when d = 2.  Substituting ``r = |x| cosh(tau)``
    turns it into the bounded integrand ``tanh(tau)^(d-2)`` on
    ``[0, arccosh(1/|x|)]``.
    """
    if d < 2:
        raise UnsupportedDimension("the spherical marginal is only defined for d >= 2")
    ax = abs(float(x))
    if ax > 1.0:
        return 0.0
    if ax == 1.0:
        return 0.0
    if ax == 0.0:
        return math.inf
    upper = math.acosh(1.0 / ax)
    if d == 2:
        inner = upper
    else:
        inner, _ = _quad(lambda t: math.tanh(t) ** (d - 2), 0.0, upper, "spherical marginal")
    return spherical_constant(d) * inner


def marginal_density_ball(d: int, x: float) -> float:
    """First-coordinate density of the uniform law on the unit ball."""
    ax = abs(float(x))
    if ax > 1.0:
        return 0.0
    return ball_constant(d) * (1.0 - ax * ax) ** ((d - 1) / 2)


@lru_cache(maxsize=65536)
def _tail(kind: str, d: int, alpha: float) -> float:
    if d == 1:
        return (1.0 - alpha) / 2.0
    if kind == "ball":
        c = ball_constant(d)
        val, _ = _quad(lambda x: (1.0 - x * x) ** ((d - 1) / 2), alpha, 1.0, "ball tail")
        return c * val
    if kind == "sphunif":
        val, _ = _quad(lambda x: marginal_density_spherical(d, x), alpha, 1.0, "spherical tail")
        return val
    raise ValueError(f"unknown kind {kind!r}")


def tail_mass(kind: str, d: int, alpha: float) -> float:
    """Mass of ``{x : x_1 >= alpha}`` for ``kind`` in {"sphunif", "ball"}.

    Negative ``alpha`` is handled through ``1 - tail(-alpha)``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if d < 1:
        raise UnsupportedDimension(f"dimension must be positive, got {d}")
    a = float(alpha)
    if a >= 1.0:
        return 0.0
    if a <= -1.0:
        return 1.0
    if a < 0.0:
        return 1.0 - _tail(kind, d, -a)
    return _tail(kind, d, a)


@dataclass(frozen=True)
class CurveSpec:
    kinds: tuple = KINDS
    dims: tuple = (1, 2, 3, 5, 10)
    alphas: tuple = field(default_factory=lambda: tuple(np.linspace(0.0, 1.0, 201)))
    n: int | None = None

    def __post_init__(self):
        for k in self.kinds:
            if k not in KINDS:
                raise ValueError(f"unknown kind {k!r}")
        a = np.asarray(self.alphas, dtype=float)
        if a.size == 0 or a.min() < 0 or a.max() > 1 or np.any(np.diff(a) <= 0):
            raise ValueError("alphas must be strictly increasing within [0, 1]")
        if any(int(d) < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be a positive integer or None")


def bdp_curve(spec: CurveSpec) -> list[tuple[str, int, float, float]]:
    """Rows ``(kind, d, alpha, value)``.

    With ``spec.n`` unset the asymptotic value (the cap mass) is returned;
    otherwise the finite-sample value ``ceil(n * mass) / n``.
    """
    rows = []
    for kind in spec.kinds:
        for d in spec.dims:
            for a in spec.alphas:
                value = tail_mass(kind, int(d), float(a))
                if spec.n is not None:
                    value = ceil_fraction(spec.n, value)
                rows.append((kind, int(d), float(a), value))
    return rows


def emit_figure1(spec: CurveSpec, out=None, config: dict | None = None) -> str:
    """Write the curve table as long-format CSV and return the text."""
    buf = io.StringIO()
    header = {"kinds": list(spec.kinds), "dims": [int(d) for d in spec.dims],
              "n_alpha": len(spec.alphas), "n": spec.n}
    if config:
        header.update(config)
    buf.write(f"# config: {json.dumps(header, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "d", "alpha", "bdp"])
    for kind, d, a, v in bdp_curve(spec):
        w.writerow([kind, d, repr(a), repr(v)])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
    return text
