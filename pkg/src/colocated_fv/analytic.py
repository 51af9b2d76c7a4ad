"""Continuous fields: point evaluators and a separable test-function family.

:class:`AnalyticField` wraps a vectorised function of ``(x, y)`` or
``(x, y, t)``.  A field built as the curl of a stream function carries that
stream function, which lets edge fluxes be integrated exactly.

:class:`Separable` represents ``sum_i c_i F_i(s) G_i(t)`` where ``(s, t)`` are
the affine coordinates of a parallelogram (for the generated meshes, the
rhombus).  Derivatives of any order in physical coordinates follow from the
chain rule, so divergence-free velocities, their Laplacians and convective
terms are available in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial


@dataclass(frozen=True)
class AnalyticField:
    func: Callable
    vector: bool = False
    time_dependent: bool = False
    smoothness: str = "C-infinity"
    stream: Callable | None = None  # psi(x, y[, t]) with field = (psi_y, -psi_x)

    def __call__(self, pts, t: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        val = self.func(x, y, t) if self.time_dependent else self.func(x, y)
        if self.vector:
            if isinstance(val, (tuple, list)):
                val = np.stack([np.broadcast_to(np.asarray(c, float), x.shape) for c in val], -1)
            return np.broadcast_to(np.asarray(val, float), x.shape + (2,)).copy()
        return np.broadcast_to(np.asarray(val, float), x.shape).copy()

    def stream_values(self, pts, t: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        val = self.stream(x, y, t) if self.time_dependent else self.stream(x, y)
        return np.broadcast_to(np.asarray(val, float), x.shape).copy()


def constant(value) -> AnalyticField:
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return AnalyticField(lambda x, y: float(value))
    return AnalyticField(lambda x, y: (value[0], value[1]), vector=True)


ZERO_VECTOR = constant([0.0, 0.0])


# -- one-dimensional factors --------------------------------------------------

class Factor:
    """Scalar function of one variable with derivatives of any order."""

    def __call__(self, x, k: int = 0):
        raise NotImplementedError


@dataclass(frozen=True)
class Poly(Factor):
    coef: tuple  # ascending powers

    def __call__(self, x, k=0):
        p = Polynomial(self.coef)
        return p.deriv(k)(x) if k else p(x)


@dataclass(frozen=True)
class Cos(Factor):
    """``cos(freq * x + phase)``."""

    freq: float
    phase: float = 0.0

    def __call__(self, x, k=0):
        return self.freq**k * np.cos(self.freq * np.asarray(x) + self.phase + k * np.pi / 2)


def bump() -> Poly:
    """``x^2 (1 - x)^2``: vanishes with its first derivative at 0 and 1."""
    return Poly((0.0, 0.0, 1.0, -2.0, 1.0))


@dataclass(frozen=True)
class AffineMap:
    """``p = origin + s * a1 + t * a2``."""

    origin: tuple
    a1: tuple
    a2: tuple

    @property
    def jacobian(self):
        return np.column_stack([self.a1, self.a2]).astype(float)

    @property
    def inverse(self):
        return np.linalg.inv(self.jacobian)

    def to_reference(self, x, y):
        b = self.inverse
        dx = np.asarray(x) - self.origin[0]
        dy = np.asarray(y) - self.origin[1]
        return b[0, 0] * dx + b[0, 1] * dy, b[1, 0] * dx + b[1, 1] * dy


def rhombus_map(rows: int, cols: int, side: float = 1.0) -> AffineMap:
    """Reference map of the domain produced by ``build_equilateral_mesh``."""
    return AffineMap((0.0, 0.0), (cols * side, 0.0),
                     (0.5 * rows * side, 0.5 * np.sqrt(3.0) * rows * side))


def bbox_map(vertices) -> AffineMap:
    v = np.asarray(vertices, dtype=float)
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    return AffineMap(tuple(lo), (hi[0] - lo[0], 0.0), (0.0, hi[1] - lo[1]))


@dataclass(frozen=True)
class Separable:
    """``sum(c * F(s) * G(t))`` over ``terms`` in physical coordinates."""

    domain: AffineMap
    terms: tuple = field(default_factory=tuple)  # ((c, F, G), ...)

    def deriv(self, x, y, dirs=()):
        """Physical derivative; ``dirs`` lists axes, e.g. ``(0, 1, 1)`` is d^3/dx dy^2."""
        s, t = self.domain.to_reference(x, y)
        b = self.domain.inverse
        out = np.zeros(np.broadcast(s, t).shape)
        for ref in itertools.product((0, 1), repeat=len(dirs)):
            w = 1.0
            for j, i in zip(ref, dirs):
                w *= b[j, i]
            if w == 0.0:
                continue
            ns = ref.count(0)
            nt = len(ref) - ns
            for c, f, g in self.terms:
                out = out + (c * w) * f(s, ns) * g(t, nt)
        return out

    def __call__(self, x, y):
        return self.deriv(x, y)

    def laplacian_deriv(self, x, y, dirs=()):
        return self.deriv(x, y, (0, 0) + tuple(dirs)) + self.deriv(x, y, (1, 1) + tuple(dirs))


def stream_bump(domain: AffineMap, amplitude: float = 1.0) -> Separable:
    """``[s t (1-s)(1-t)]^2``; its curl vanishes on the whole boundary."""
    return Separable(domain, ((amplitude, bump(), bump()),))


def curl_field(psi: Separable) -> AnalyticField:
    return AnalyticField(
        lambda x, y: (psi.deriv(x, y, (1,)), -psi.deriv(x, y, (0,))),
        vector=True, stream=psi)


def curl_laplacian(psi: Separable) -> AnalyticField:
    """Vector Laplacian of ``curl psi``."""
    return AnalyticField(
        lambda x, y: (psi.laplacian_deriv(x, y, (1,)), -psi.laplacian_deriv(x, y, (0,))),
        vector=True)


def scalar_field(phi: Separable) -> AnalyticField:
    return AnalyticField(lambda x, y: phi(x, y))


def gradient_field(phi: Separable) -> AnalyticField:
    return AnalyticField(lambda x, y: (phi.deriv(x, y, (0,)), phi.deriv(x, y, (1,))),
                         vector=True)


def vector_field(phi1: Separable, phi2: Separable) -> AnalyticField:
    return AnalyticField(lambda x, y: (phi1(x, y), phi2(x, y)), vector=True)


def convection_of(psi: Separable, phi1: Separable, phi2: Separable) -> AnalyticField:
    """``(div(v1 u), div(v2 u))`` for ``u = curl psi`` and ``v = (phi1, phi2)``.

    Since ``div u = 0`` this equals ``(u . grad) v``.
    """
    def f(x, y):
        ux = psi.deriv(x, y, (1,))
        uy = -psi.deriv(x, y, (0,))
        return (ux * phi1.deriv(x, y, (0,)) + uy * phi1.deriv(x, y, (1,)),
                ux * phi2.deriv(x, y, (0,)) + uy * phi2.deriv(x, y, (1,)))
    return AnalyticField(f, vector=True)
