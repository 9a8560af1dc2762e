"""Compensated (Kahan-Babuska-Neumaier) summation.

``neumaier_rows`` sums the rows of a 2-D array column-wise, so that a whole
grid of parameter values is reduced in one pass while every column still sees
the same fixed order of addends.
"""

from __future__ import annotations

import numpy as np

EPS = float(np.finfo(float).eps)


def neumaier(values) -> float:
    """Compensated sum of a 1-D sequence in the given order."""
    s = 0.0
    c = 0.0
    for v in np.asarray(values, dtype=float).ravel():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def neumaier_rows(terms: np.ndarray) -> np.ndarray:
    """Compensated sum over axis 0 of ``terms`` (shape ``(N, ...)``)."""
    terms = np.asarray(terms, dtype=float)
    s = np.zeros(terms.shape[1:])
    c = np.zeros(terms.shape[1:])
    for v in terms:
        t = s + v
        big = np.abs(s) >= np.abs(v)
        c += np.where(big, (s - t) + v, (v - t) + s)
        s = t
    return s + c


class RowAccumulator:
    """Running column-wise compensated sum, for streaming addends."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, v) -> None:
        v = np.asarray(v, dtype=float)
        t = self.s + v
        big = np.abs(self.s) >= np.abs(v)
        self.c += np.where(big, (self.s - t) + v, (v - t) + self.s)
        self.s = t

    @property
    def total(self) -> np.ndarray:
        return self.s + self.c
