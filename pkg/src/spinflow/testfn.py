"""Compactly supported test functions built from convolution powers of a box.

The base object is the ``n``-fold convolution power of ``1/2 * 1_[-1, 1]``,
a scaled cardinal B-spline supported in ``[-n, n]`` whose Fourier transform
(convention ``H^(t) = int H(x) exp(-i t x) dx``) is ``sinc(t)**n``.  On top of
that a :class:`TestFunction` may carry

* a modulation factor ``2 cos(nu x)``,
* an odd prefactor ``x``,
* a stretch ``x -> x / lam`` applied to the whole product, so that the
  transform picks up ``lam * F(lam t)``.

Time-domain values use the exact B-spline recursion; transforms use closed
forms for derivatives of ``sinc**n`` with a power series near the origin.

Every function object exposes the same small surface used by the trace
module: ``parity``, ``support_radius``, ``value``, ``deriv``, ``profile`` and
``profile_deriv``.  ``profile`` is the real spectral profile: ``H^`` for even
functions and ``-i K^`` for odd ones.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "TestFunction",
    "SymmetricShift",
    "BandSuppressed",
    "bspline",
    "sinc_derivs",
    "sinc_power_derivs",
    "parse_test_function",
    "regularity_norm",
    "certified_min",
    "certified_max_abs",
    "profile_deriv_bound",
]

# below this |t| the sinc derivatives come from the Taylor series
SERIES_RADIUS = 2.0
_SERIES_TERMS = 32


# --------------------------------------------------------------------------
# time domain: cardinal B-splines
# --------------------------------------------------------------------------

def _cardinal_table(u: np.ndarray, m: int) -> list[np.ndarray]:
    """Return ``[M_m(u - j) for j in 0..K]`` built bottom-up (Cox-de Boor)."""
    # M_1(u - j) for the shifts needed by the recursion
    cols = [((u - j >= 0.0) & (u - j < 1.0)).astype(float) for j in range(m)]
    for r in range(2, m + 1):
        cols = [
            ((u - j) * cols[j] + (r - (u - j)) * cols[j + 1]) / (r - 1)
            for j in range(len(cols) - 1)
        ]
    return cols


def _cardinal(u: np.ndarray, m: int) -> np.ndarray:
    return _cardinal_table(u, m)[0]


def bspline(x, n: int, deriv: int = 0) -> np.ndarray:
    """``deriv``-th derivative of ``(1/2 * 1_[-1,1])^{*n}`` at ``x``.

    Uses ``B_n(x) = M_n((x + n) / 2) / 2`` with ``M_n`` the cardinal B-spline
    on ``[0, n]`` and the difference rule for its derivatives.  Derivatives of
    order ``>= n`` are distributions and are refused.
    """
    if n < 1:
        raise ValueError("convolution power must be >= 1")
    if not 0 <= deriv < n:
        raise ValueError(f"derivative order {deriv} not defined pointwise for n={n}")
    x = np.asarray(x, dtype=float)
    u = (x + n) / 2.0
    m = n - deriv
    out = np.zeros_like(u)
    for j in range(deriv + 1):
        out = out + (-1) ** j * math.comb(deriv, j) * _cardinal(u - j, m)
    # the outermost knot belongs to the support closure; M_n vanishes there anyway
    return out * 0.5 ** (deriv + 1)


# --------------------------------------------------------------------------
# frequency domain: derivatives of sinc and its powers
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _series_coeffs(k: int) -> np.ndarray:
    """Coefficients in ``t`` of the k-th derivative of ``sum_m (-1)^m t^{2m} / (2m+1)!``."""
    c = np.zeros(2 * _SERIES_TERMS)
    for m in range(_SERIES_TERMS):
        p = 2 * m - k
        if p >= 0:
            c[p] = (-1) ** m * math.factorial(2 * m) / (math.factorial(2 * m + 1) * math.factorial(p))
    return c


def sinc_derivs(t, order: int) -> np.ndarray:
    """Array ``D[k] = sinc^{(k)}(t)`` for ``k = 0..order`` with ``sinc = sin(t)/t``."""
    t = np.asarray(t, dtype=float)
    out = np.empty((order + 1,) + t.shape)
    flat = t.ravel()
    res = out.reshape(order + 1, -1)
    small = np.abs(flat) < SERIES_RADIUS
    ts = flat[small]
    tl = flat[~small]
    for k in range(order + 1):
        res[k, small] = np.polynomial.polynomial.polyval(ts, _series_coeffs(k))
    if tl.size:
        # Leibniz on sin(t) * t^{-1}; sin(t + j pi/2) cycles through sin, cos, -sin, -cos
        cyc = (np.sin(tl), np.cos(tl), -np.sin(tl), -np.cos(tl))
        inv = 1.0 / tl
        inv_pows = [inv]
        for j in range(order):
            inv_pows.append(inv_pows[-1] * inv)
        for k in range(order + 1):
            acc = np.zeros_like(tl)
            for j in range(k + 1):
                acc += math.comb(k, j) * (-1) ** j * math.factorial(j) * cyc[(k - j) % 4] * inv_pows[j]
            res[k, ~small] = acc
    return out


def _jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(a.shape[0]):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def _jet_pow(jet: np.ndarray, n: int) -> np.ndarray:
    res = jet
    for _ in range(n - 1):
        res = _jet_mul(res, jet)
    return res


def _to_jet(derivs: np.ndarray) -> np.ndarray:
    fact = np.array([math.factorial(k) for k in range(derivs.shape[0])], dtype=float)
    return derivs / fact.reshape((-1,) + (1,) * (derivs.ndim - 1))


def _from_jet(jet: np.ndarray) -> np.ndarray:
    fact = np.array([math.factorial(k) for k in range(jet.shape[0])], dtype=float)
    return jet * fact.reshape((-1,) + (1,) * (jet.ndim - 1))


def sinc_power_derivs(t, n: int, order: int) -> np.ndarray:
    """``D[k] = (sinc**n)^{(k)}(t)`` for ``k = 0..order``."""
    return _from_jet(_jet_pow(_to_jet(sinc_derivs(t, order)), n))


def _sinc_power_deriv_bounds(n: int, order: int, per_factor) -> np.ndarray:
    jet = np.array([per_factor(j) / math.factorial(j) for j in range(order + 1)])
    return _from_jet(_jet_pow(jet, n))


# --------------------------------------------------------------------------
# the test-function family
# --------------------------------------------------------------------------

_ID_RE = re.compile(
    r"^conv(?P<n>\d+)(?P<x>_x)?(?:_mod:(?P<nu>[-+0-9.eE]+))?(?:_stretch:(?P<lam>[-+0-9.eE]+))?$"
)


@dataclass(frozen=True)
class TestFunction:
    """``x -> [x]^odd * [2 cos(nu x)] * B_n(x)`` evaluated at ``x / stretch``.

    ``modulation=None`` means no cosine factor; ``modulation=0.0`` is the
    factor ``2 cos(0) = 2``, i.e. the ``nu = 0`` member of the modulated family.
    """

    __test__ = False  # keep pytest from collecting this class

    n: int
    modulation: Optional[float] = None
    stretch: float = 1.0
    odd: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("base_power must be a positive integer")
        if self.stretch <= 0:
            raise ValueError("stretch must be positive")
        if self.modulation is not None and self.modulation < 0:
            raise ValueError("modulation must be >= 0")

    # -- identity ---------------------------------------------------------
    @property
    def parity(self) -> str:
        return "odd" if self.odd else "even"

    @property
    def support_radius(self) -> float:
        return self.stretch * self.n

    @property
    def id(self) -> str:
        s = f"conv{self.n}"
        if self.odd:
            s += "_x"
        if self.modulation is not None:
            s += f"_mod:{self.modulation!r}"
        if self.stretch != 1.0:
            s += f"_stretch:{self.stretch!r}"
        return s

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        return parse_test_function(text)

    def modulated(self, nu: float) -> "TestFunction":
        return TestFunction(self.n, nu, self.stretch, self.odd)

    # -- time domain ------------------------------------------------------
    def _base_deriv(self, y: np.ndarray, k: int) -> np.ndarray:
        nu = self.modulation
        total = np.zeros_like(y)
        for a in range(0, 2 if self.odd else 1):
            if a > k:
                break
            pa = (y if a == 0 else np.ones_like(y)) if self.odd else np.ones_like(y)
            for b in range(0, k - a + 1):
                c = k - a - b
                if nu is None:
                    if b > 0:
                        continue
                    mb = np.ones_like(y)
                else:
                    mb = 2.0 * nu**b * np.cos(nu * y + b * math.pi / 2)
                coef = math.factorial(k) // (math.factorial(a) * math.factorial(b) * math.factorial(c))
                total = total + coef * pa * mb * bspline(y, self.n, c)
        return total

    def value(self, x) -> np.ndarray:
        return self.deriv(x, 0)

    def deriv(self, x, order: int) -> np.ndarray:
        """``order``-th derivative in ``x`` of the stretched function."""
        y = np.asarray(x, dtype=float) / self.stretch
        return self._base_deriv(y, order) / self.stretch**order

    def second_deriv_at_zero(self) -> float:
        """``H''(0)``; only meaningful for even functions (volume terms)."""
        if self.odd:
            raise ValueError("volume term undefined for odd test functions")
        return float(self.deriv(0.0, 2))

    # -- frequency domain -------------------------------------------------
    def _shape_derivs(self, u: np.ndarray, order: int) -> np.ndarray:
        """Derivatives of S(u) = sinc^n(u) or sinc^n(u-nu) + sinc^n(u+nu)."""
        if self.modulation is None:
            return sinc_power_derivs(u, self.n, order)
        nu = self.modulation
        return sinc_power_derivs(u - nu, self.n, order) + sinc_power_derivs(u + nu, self.n, order)

    def profile_deriv(self, t, order: int) -> np.ndarray:
        """``order``-th derivative of the real profile (``H^`` or ``-i K^``)."""
        t = np.asarray(t, dtype=float)
        lam = self.stretch
        k = order + (1 if self.odd else 0)
        return lam ** (order + 1) * self._shape_derivs(lam * t, k)[k]

    def profile(self, t) -> np.ndarray:
        return self.profile_deriv(t, 0)

    def fourier(self, t) -> np.ndarray:
        """Complex Fourier transform ``int f(x) exp(-i t x) dx``."""
        p = self.profile(t)
        return 1j * p if self.odd else p.astype(complex)

    def fourier_deriv(self, t, order: int) -> np.ndarray:
        if order < 1:
            raise ValueError("order must be >= 1")
        p = self.profile_deriv(t, order)
        return 1j * p if self.odd else p.astype(complex)

    def is_fourier_nonnegative(self) -> bool:
        """Structural check: even power of sinc, no odd prefactor."""
        return not self.odd and self.n % 2 == 0


def parse_test_function(text: str) -> TestFunction:
    m = _ID_RE.match(text.strip())
    if not m:
        raise ValueError(f"unrecognised test function id {text!r}")
    nu = m.group("nu")
    lam = m.group("lam")
    return TestFunction(
        n=int(m.group("n")),
        modulation=None if nu is None else float(nu),
        stretch=1.0 if lam is None else float(lam),
        odd=m.group("x") is not None,
    )


# --------------------------------------------------------------------------
# derived functions used by the certificates and the bound basis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricShift:
    """``x -> (f(x - d) + f(x + d)) / 2`` for an even or odd base ``f``.

    For even ``f`` the transform is ``f^(t) cos(d t)``.
    """

    base: TestFunction
    shift: float

    @property
    def parity(self) -> str:
        if self.base.odd:
            raise ValueError("symmetric shifts are only used for even bases")
        return "even"

    @property
    def support_radius(self) -> float:
        return self.base.support_radius + abs(self.shift)

    @property
    def id(self) -> str:
        return f"{self.base.id}_shift:{self.shift!r}"

    def deriv(self, x, order: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 0.5 * (self.base.deriv(x - self.shift, order) + self.base.deriv(x + self.shift, order))

    def value(self, x) -> np.ndarray:
        return self.deriv(x, 0)

    def second_deriv_at_zero(self) -> float:
        return float(self.deriv(0.0, 2))

    def profile(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.base.profile(t) * np.cos(self.shift * t)


@dataclass(frozen=True)
class BandSuppressed:
    """``G = H + H'' / L^2`` so that ``G^(t) = H^(t) (1 - t^2 / L^2)``.

    ``G^`` is non-positive outside ``[-L, L]`` whenever ``H^ >= 0``.
    """

    base: TestFunction
    L: float

    @property
    def parity(self) -> str:
        return self.base.parity

    @property
    def support_radius(self) -> float:
        return self.base.support_radius

    @property
    def id(self) -> str:
        return f"{self.base.id}_band:{self.L!r}"

    def deriv(self, x, order: int) -> np.ndarray:
        return self.base.deriv(x, order) + self.base.deriv(x, order + 2) / self.L**2

    def value(self, x) -> np.ndarray:
        return self.deriv(x, 0)

    def second_deriv_at_zero(self) -> float:
        return float(self.deriv(0.0, 2))

    def profile(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.base.profile(t) * (1.0 - t**2 / self.L**2)


# --------------------------------------------------------------------------
# analytic bounds on the profile family
# --------------------------------------------------------------------------

def profile_deriv_bound(tf: TestFunction, order: int) -> float:
    """Global bound on ``|profile^{(order)}|`` over the real line.

    Uses ``|sinc^{(j)}| <= 1/(j+1)`` (from ``sinc(t) = int_0^1 cos(t x) dx``).
    """
    k = order + (1 if tf.odd else 0)
    b = _sinc_power_deriv_bounds(tf.n, k, lambda j: 1.0 / (j + 1))[k]
    if tf.modulation is not None:
        b *= 2.0
    return float(tf.stretch ** (order + 1) * b)


def _local_slope(tf, t: np.ndarray, h: float, order: int) -> float:
    """Bound on ``|profile^{(order+1)}|`` near the samples ``t`` (spacing ``h``)."""
    if isinstance(tf, TestFunction):
        d = np.abs(tf.profile_deriv(t, order + 1))
        return float(np.max(d) + 0.5 * h * profile_deriv_bound(tf, order + 2))
    return profile_sup(tf, order + 1)


def certified_min(tf, lo: float, hi: float, samples: int = 20001) -> float:
    """Lower bound for ``min profile`` on ``[lo, hi]``: sampled min minus slope slack."""
    if hi < lo:
        raise ValueError("empty interval")
    t = np.linspace(lo, hi, samples)
    h = (hi - lo) / (samples - 1) if samples > 1 else 0.0
    return float(np.min(tf.profile(t)) - 0.5 * h * _local_slope(tf, t, h, 0))


def certified_max_abs(tf: TestFunction, lo: float, hi: float, order: int = 0, samples: int = 2001) -> float:
    """Upper bound for ``max |profile^{(order)}|`` on ``[lo, hi]``."""
    if hi < lo:
        raise ValueError("empty interval")
    t = np.linspace(lo, hi, samples)
    h = (hi - lo) / (samples - 1) if samples > 1 else 0.0
    vals = np.abs(tf.profile_deriv(t, order))
    return float(np.max(vals) + 0.5 * h * _local_slope(tf, t, h, order))


def _decay_envelope(tf: TestFunction, order: int) -> float:
    """``E`` with ``|profile^{(order)}(t)| <= E |t|^{-n}`` for ``|t| >= T0(tf)``."""
    k = order + (1 if tf.odd else 0)
    # for |u| >= 1: |sinc^{(j)}(u)| <= sum_i C(j,i) i! / |u|^{i+1} <= e_j / |u|
    e = lambda j: float(sum(math.comb(j, i) * math.factorial(i) for i in range(j + 1)))
    b = _sinc_power_deriv_bounds(tf.n, k, e)[k]
    lam = tf.stretch
    if tf.modulation is not None:
        # |t +- nu| >= |t| / 2 once |t| >= 2 nu
        b *= 2.0 * 2.0**tf.n
    return float(lam ** (order + 1) * b * lam ** (-tf.n))


def _tail_start(tf: TestFunction) -> float:
    t0 = 2.0 / tf.stretch
    if tf.modulation is not None:
        t0 = max(t0, 2.0 * tf.modulation + 2.0 / tf.stretch)
    return max(t0, 1.0)


def regularity_norm(tf: TestFunction, delta: float, T: float = 200.0, panels_per_unit: int = 2) -> float:
    """Upper estimate of ``int (|f^|^2 + |f^'|^2 + |f^''|^2) (1 + t^2)^delta dt``.

    Gauss-Legendre quadrature on ``[-T, T]`` plus an explicit tail bound from
    the ``|t|^{-n}`` decay envelope.  Raises ``ValueError`` when the integral
    diverges, i.e. when ``2 n - 2 delta <= 1``.
    """
    if delta <= 2.5:
        raise ValueError("delta must exceed 5/2")
    p = 2 * tf.n - 2 * delta
    if p <= 1:
        raise ValueError(
            f"regularity integral diverges: |f^|^2 decays like t^-{2 * tf.n} "
            f"against weight t^{2 * delta:g}"
        )
    T = max(T, _tail_start(tf) + 1.0)
    body = _regularity_quadrature(tf, delta, T, panels_per_unit)
    env = sum(_decay_envelope(tf, k) ** 2 for k in range(3))
    # for t >= 1: (1 + t^2)^delta <= 2^delta t^{2 delta}
    tail = 2.0 * env * 2.0**delta * T ** (1.0 - p) / (p - 1.0)
    return float(body + tail)


def _regularity_quadrature(tf: TestFunction, delta: float, T: float, panels_per_unit: int = 2) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(20)
    npan = int(math.ceil(T * panels_per_unit))
    edges = np.linspace(0.0, T, npan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    f = sum(tf.profile_deriv(t, k) ** 2 for k in range(3))
    # integrand is even in t
    return 2.0 * float(np.sum(w * f * (1.0 + t**2) ** delta))


def profile_sup(tf, order: int = 0) -> float:
    """Global bound on ``|profile^{(order)}|`` for a test function or a symmetric shift."""
    if isinstance(tf, TestFunction):
        return profile_deriv_bound(tf, order)
    if isinstance(tf, SymmetricShift) and order <= 1:
        b0 = profile_deriv_bound(tf.base, 0)
        return b0 if order == 0 else profile_deriv_bound(tf.base, 1) + abs(tf.shift) * b0
    raise ValueError(f"no profile bound available for {tf.id} at order {order}")
