"""Shared fixtures and oracles for the test suite."""

import math

import numpy as np
import pytest

from spinflow.testfn import TestFunction

TWO_PI = 2 * math.pi
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def fourier_quadrature(tf: TestFunction, t) -> np.ndarray:
    """``int tf(x) exp(-i t x) dx`` by Gauss-Legendre on each polynomial piece."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lam, n = tf.stretch, tf.n
    # (1/2 1_[-1,1])^{*n} is a polynomial between knots -n, -n + 2, ..., n
    edges = lam * (-n + 2.0 * np.arange(n + 1))
    out = np.zeros(t.shape, dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        # sub-panels keep the oscillatory factor well resolved
        sub = np.linspace(a, b, 9)
        for c, d in zip(sub[:-1], sub[1:]):
            x = 0.5 * (c + d) + 0.5 * (d - c) * _GL_NODES
            w = 0.5 * (d - c) * _GL_WEIGHTS
            fx = tf.value(x)
            out += np.exp(-1j * np.outer(t, x)) @ (w * fx)
    return out


def direct_terms(data, tf, kind):
    """Per-geodesic coefficients and volume term, before the twisting character."""
    g = data.geodesics
    w = g.prime_length / (4 * (np.sinh(g.length / 2) ** 2 + np.sin(g.holonomy / 2) ** 2))
    h = tf.value(g.length)
    if kind == "coexact":
        return w * np.cos(g.holonomy) * h, data.volume / TWO_PI * (float(tf.value(0.0)) - tf.second_deriv_at_zero())
    if kind == "dirac_even":
        vol = data.volume / TWO_PI * (0.25 * float(tf.value(0.0)) - tf.second_deriv_at_zero())
        return w * np.cos(g.spin_holonomy) * h, vol
    if kind == "dirac_odd":
        return w * np.sin(g.spin_holonomy) * h, 0.0
    # d/dtau of the odd-kind term
    return -TWO_PI * g.free_class * w * np.sin(g.spin_holonomy) * h, 0.0


def direct_sum(data, tf, kind, tau, k, terms=None):
    """Per-geodesic sum at one (tau, k), with no grouping by class; returns (value, sum |terms|)."""
    g = data.geodesics
    m = data.torsion_order
    coef, vol = terms if terms is not None else direct_terms(data, tf, kind)
    ang = TWO_PI * (tau * g.free_class + (k * g.torsion_class % m) / m)
    t = coef * (np.sin(ang) if kind == "dirac_odd_derivative" else np.cos(ang))
    return math.fsum(t) + vol, math.fsum(np.abs(t)) + abs(vol)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sinc(t):
    t = np.asarray(t, dtype=float)
    return np.sinc(t / math.pi)
