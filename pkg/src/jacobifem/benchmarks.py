"""Manufactured Poisson benchmarks with exact solutions and gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError
from .mesh import l_shaped_mesh_dict, rect_mesh_dict


@dataclass(frozen=True)
class Benchmark:
    name: str
    u: Callable
    grad_u: Callable
    f: Callable
    default_mesh: dict


def smooth_sine() -> Benchmark:
    """u = sin(pi x) sin(pi y) on the unit square."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad_u(x, y):
        return pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)

    def f(x, y):
        return 2.0 * pi * pi * np.sin(pi * x) * np.sin(pi * y)

    return Benchmark("smooth-sine", u, grad_u, f, rect_mesh_dict(2, 2))


def bubble_exact() -> Benchmark:
    """u = (1-x^2)(1-y^2) on (-1,1)^2; lies in the discrete space for p >= 2."""

    def u(x, y):
        return (1.0 - x**2) * (1.0 - y**2)

    def grad_u(x, y):
        return -2.0 * x * (1.0 - y**2), -2.0 * y * (1.0 - x**2)

    def f(x, y):
        return 2.0 * (1.0 - x**2) + 2.0 * (1.0 - y**2)

    return Benchmark(
        "bubble-exact", u, grad_u, f,
        rect_mesh_dict(1, 1, x0=-1.0, y0=-1.0, width=2.0, height=2.0),
    )


def _bump(t: np.ndarray):
    """C-infinity step h with h(t<=0) = 1, h(t>=1) = 0, and h', h''."""
    t = np.asarray(t, dtype=float)
    # clipping keeps the clamped branch finite; exp(-1/1e-6) underflows to 0 anyway
    tt = np.clip(t, 1e-6, None)
    st = np.clip(1.0 - t, 1e-6, None)
    with np.errstate(over="ignore", under="ignore"):
        B = np.where(t > 0.0, np.exp(-1.0 / tt), 0.0)
        A = np.where(t < 1.0, np.exp(-1.0 / st), 0.0)
        Ap = np.where(t < 1.0, -A / st**2, 0.0)
        Bp = np.where(t > 0.0, B / tt**2, 0.0)
        App = np.where(t < 1.0, A / st**4 - 2.0 * A / st**3, 0.0)
        Bpp = np.where(t > 0.0, B / tt**4 - 2.0 * B / tt**3, 0.0)
    den = A + B
    den = np.where(den > 0.0, den, 1.0)
    h = A / den
    num1 = Ap * B - A * Bp
    hp = num1 / den**2
    hpp = (App * B - A * Bpp) / den**2 - 2.0 * num1 * (Ap + Bp) / den**3
    inside = t <= 0.0
    outside = t >= 1.0
    h = np.where(inside, 1.0, np.where(outside, 0.0, h))
    hp = np.where(inside | outside, 0.0, hp)
    hpp = np.where(inside | outside, 0.0, hpp)
    return h, hp, hpp


def corner_cutoff(r_inner: float = 0.3, r_outer: float = 0.9) -> Benchmark:
    """Reentrant-corner solution on the L-shaped domain: the singular harmonic
    r^{2/3} sin(2 theta / 3) times a smooth radial cutoff that kills the trace
    on the outer boundary; the load vanishes near the corner."""
    if not 0.0 < r_inner < r_outer <= 1.0:
        raise ParameterError("need 0 < r_inner < r_outer <= 1")
    width = r_outer - r_inner
    two_thirds = 2.0 / 3.0

    def polar(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        theta = np.where(theta < 0.0, theta + 2.0 * np.pi, theta)
        return r, theta

    def chi(r):
        return _bump((r - r_inner) / width)

    def u(x, y):
        r, th = polar(x, y)
        h, _, _ = chi(r)
        return h * r**two_thirds * np.sin(two_thirds * th)

    def grad_u(x, y):
        r, th = polar(x, y)
        h, hp, _ = chi(r)
        hp = hp / width
        rs = np.where(r > 0.0, r, 1.0)
        v = rs**two_thirds * np.sin(two_thirds * th)
        # gradient of the singular harmonic part in closed form
        vx = -two_thirds * rs ** (-1.0 / 3.0) * np.sin(th / 3.0)
        vy = two_thirds * rs ** (-1.0 / 3.0) * np.cos(th / 3.0)
        gx = hp * (x / rs) * v + h * vx
        gy = hp * (y / rs) * v + h * vy
        zero = r <= 0.0
        return np.where(zero, 0.0, gx), np.where(zero, 0.0, gy)

    def f(x, y):
        r, th = polar(x, y)
        _, hp, hpp = chi(r)
        hp = hp / width
        hpp = hpp / width**2
        rs = np.where(r > 0.0, r, 1.0)
        s = np.sin(two_thirds * th)
        val = -s * (7.0 / 3.0 * hp * rs ** (-1.0 / 3.0) + hpp * rs**two_thirds)
        return np.where(r <= 0.0, 0.0, val)

    # the finer default mesh leaves room for the adaptive loop to separate
    # corner-adjacent degrees from the far field under |dp| <= 1 smoothing
    return Benchmark("corner-cutoff", u, grad_u, f, l_shaped_mesh_dict(4))


_BENCHMARKS = {
    "smooth-sine": smooth_sine,
    "bubble-exact": bubble_exact,
    "corner-cutoff": corner_cutoff,
}


def get_benchmark(name: str) -> Benchmark:
    if name not in _BENCHMARKS:
        raise ParameterError(
            f"unknown benchmark {name!r}; choose from {sorted(_BENCHMARKS)}"
        )
    return _BENCHMARKS[name]()
