"""Named flow problems with closed-form data.

Every problem is defined on a parallelogram described by an
:class:`~colocated_fv.analytic.AffineMap` and uses the stream function
``psi = [s t (1-s)(1-t)]^2`` in reference coordinates, so its velocity
vanishes on the whole boundary and is exactly divergence-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import (ZERO_VECTOR, AffineMap, AnalyticField, Poly, Separable,
                       bump, constant, curl_field, stream_bump)

PROBLEMS = ("zero", "vortex", "forced", "spinup", "manufactured", "steady")


@dataclass(frozen=True)
class Problem:
    name: str
    initial_velocity: AnalyticField
    forcing: AnalyticField
    exact_velocity: AnalyticField | None = None
    exact_pressure: AnalyticField | None = None


def _pressure_profile(domain: AffineMap) -> Separable:
    # 100 (b(s) b(t) - 1/900) with b = bump: mean zero, gradient zero on the boundary
    one = Poly((1.0,))
    return Separable(domain, ((100.0, bump(), bump()), (-100.0 / 900.0, one, one)))


def _flow_terms(psi: Separable, phi: Separable, reynolds: float):
    """Viscous, convective and pressure-gradient terms of the steady profile."""

    def terms(x, y):
        u = np.stack([psi.deriv(x, y, (1,)), -psi.deriv(x, y, (0,))], -1)
        lap = np.stack([psi.laplacian_deriv(x, y, (1,)), -psi.laplacian_deriv(x, y, (0,))], -1)
        # (u . grad) u with u = (psi_y, -psi_x)
        conv = np.stack([
            u[..., 0] * psi.deriv(x, y, (1, 0)) + u[..., 1] * psi.deriv(x, y, (1, 1)),
            -u[..., 0] * psi.deriv(x, y, (0, 0)) - u[..., 1] * psi.deriv(x, y, (0, 1)),
        ], -1)
        grad_p = np.stack([phi.deriv(x, y, (0,)), phi.deriv(x, y, (1,))], -1)
        return u, -lap / reynolds, conv, grad_p

    return terms


def make_problem(name: str, domain: AffineMap, reynolds: float = 1.0,
                 amplitude: float = 10.0) -> Problem:
    """Build a named problem.

    ``amplitude`` scales the stream function; the bump profile peaks at
    ``1/256`` so the default gives velocities of order ``0.1``.

    * ``zero``: no flow, no forcing.
    * ``vortex``: a decaying vortex with no forcing.
    * ``forced``: the vortex driven by a time-periodic forcing that has a
      gradient part, so the pressure is nontrivial.
    * ``spinup``: fluid at rest driven by ``(1 - cos 2 pi t)`` times a fixed
      field with both a solenoidal and a gradient part.  Starting from rest
      with forcing that vanishes at ``t = 0`` keeps the discrete start free of
      an initial layer.
    * ``manufactured``: exact solution ``u = g(t) curl psi``,
      ``p = g(t) * 100 (b(s) b(t) - 1/900)`` (``b`` the bump) with ``g(t) = 1 + t/2``.
    * ``steady``: the same profiles with ``g = 1``.
    """
    if reynolds <= 0:
        raise ValueError("reynolds must be positive")
    psi = stream_bump(domain, amplitude)
    u = curl_field(psi)
    if name == "zero":
        return Problem(name, ZERO_VECTOR, ZERO_VECTOR, ZERO_VECTOR, constant(0.0))
    if name == "vortex":
        return Problem(name, u, ZERO_VECTOR)
    phi = _pressure_profile(domain)
    terms = _flow_terms(psi, phi, reynolds)
    if name == "forced":
        def forcing(x, y, t):
            uu, visc, _, gp = terms(x, y)
            return (1.0 + 0.5 * np.sin(2.0 * np.pi * t)) * (visc + uu) + 0.1 * gp
        return Problem(name, u, AnalyticField(forcing, vector=True, time_dependent=True))
    if name == "spinup":
        def forcing(x, y, t):
            uu, _, _, gp = terms(x, y)
            return (1.0 - np.cos(2.0 * np.pi * t)) * (uu + 0.1 * gp)
        return Problem(name, ZERO_VECTOR, AnalyticField(forcing, vector=True, time_dependent=True))
    if name == "steady":
        def forcing(x, y):
            _, visc, conv, gp = terms(x, y)
            return visc + conv + gp
        return Problem(name, u, AnalyticField(forcing, vector=True), u,
                       AnalyticField(lambda x, y: phi(x, y)))
    if name == "manufactured":
        g = Poly((1.0, 0.5))

        def forcing(x, y, t):
            uu, visc, conv, gp = terms(x, y)
            gt = g(t)
            return g(t, 1) * uu + gt * visc + gt**2 * conv + gt * gp

        def velocity(x, y, t):
            return g(t) * np.stack([psi.deriv(x, y, (1,)), -psi.deriv(x, y, (0,))], -1)

        exact_u = AnalyticField(velocity, vector=True, time_dependent=True,
                                stream=lambda x, y, t: g(t) * psi(x, y))
        exact_p = AnalyticField(lambda x, y, t: g(t) * phi(x, y), time_dependent=True)
        return Problem(name, u, AnalyticField(forcing, vector=True, time_dependent=True),
                       exact_u, exact_p)
    raise ValueError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")
