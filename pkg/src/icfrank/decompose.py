"""Iterative convolution filter decomposition.

A mask ``a_{-N..N}`` defines the low-pass filter ``L(X)(t) = sum_j a_j X(t+j)``.
A mode function is the limit of ``(I - L)^n X``; repeating on the remainder
gives ``X = F_1 + ... + F_m + R``.

Boundaries use half-sample symmetric extension (``x[1] x[0] | x[0] x[1] ...``).
With that extension and a symmetric mask, ``L`` is diagonal in the orthonormal
DCT-II basis with eigenvalues ``A(pi k / n)``, where ``A`` is the mask's
frequency response. :func:`extract_mode` uses this to evaluate ``(I - L)^n``
in closed form; :func:`extract_mode_direct` runs the literal iteration and
serves as the cross-check.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import fft

from .errors import DegenerateFilterError, InsufficientLengthError, ValidationError

DEFAULT_WINDOW = 50
DEFAULT_MODES = 2
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000

# ||h|| below this fraction of ||x|| counts as exhausted (zero mode).
_UNDERFLOW = 1e-14


@dataclass(frozen=True)
class Mask:
    """Symmetric, nonnegative convolution coefficients summing to one."""

    coefficients: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=float)
        if a.ndim != 1 or len(a) % 2 != 1 or len(a) < 3:
            raise DegenerateFilterError("mask needs odd length 2N+1 with N >= 1")
        if np.any(a < 0):
            raise ValidationError("mask coefficients must be nonnegative")
        if not np.array_equal(a, a[::-1]):
            raise ValidationError("mask must be symmetric")
        if abs(a.sum() - 1.0) > 1e-12:
            raise ValidationError(f"mask must sum to 1, got {a.sum()!r}")
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)

    @property
    def window(self):
        return len(self.coefficients) // 2

    def response(self, omega):
        """Frequency response ``a_0 + 2 sum_j a_j cos(j omega)`` (real)."""
        omega = np.asarray(omega, dtype=float)
        N = self.window
        a = self.coefficients
        j = np.arange(1, N + 1)
        return a[N] + 2.0 * np.cos(np.multiply.outer(omega, j)) @ a[N + 1:]


def build_mask(window):
    """Triangular (Fejer) mask ``a_j = (N + 1 - |j|) / (N + 1)^2``.

    Its frequency response is a squared Dirichlet kernel, hence nonnegative,
    which keeps every eigenvalue of ``I - L`` in ``[0, 1]``.

    >>> build_mask(1).coefficients.tolist()
    [0.25, 0.5, 0.25]
    """
    N = int(window)
    if N < 1:
        raise DegenerateFilterError(f"window must be >= 1, got {window}")
    j = np.arange(-N, N + 1)
    a = (N + 1 - np.abs(j)) / float((N + 1) ** 2)
    # exact symmetry despite rounding in the division
    a = 0.5 * (a + a[::-1])
    return Mask(a)


def _check_length(x, mask):
    N = mask.window
    if len(x) < 2 * N + 1:
        raise InsufficientLengthError(
            f"series of length {len(x)} is shorter than 2N+1 = {2 * N + 1}"
        )


def lowpass(x, mask):
    """Convolve ``x`` with the mask under symmetric boundary extension."""
    x = np.asarray(x, dtype=float)
    _check_length(x, mask)
    N = mask.window
    padded = np.pad(x, N, mode="symmetric")
    return np.convolve(padded, mask.coefficients, mode="valid")


def _dct_eigenvalues(n, mask):
    return mask.response(np.pi * np.arange(n) / n)


def extract_mode_direct(x, mask, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Literal iteration ``h <- h - L(h)`` from ``h = x``.

    Stops once ``||L h|| / ||h|| < tol`` or after ``max_iter`` updates.
    Returns ``(mode, iterations)``.
    """
    x = np.asarray(x, dtype=float)
    _check_length(x, mask)
    scale = np.linalg.norm(x)
    h = x.copy()
    if scale == 0.0:
        return np.zeros_like(x), 0
    low = lowpass(h, mask)
    for it in range(1, max_iter + 1):
        h = h - low
        nh = np.linalg.norm(h)
        if nh <= _UNDERFLOW * scale:
            return np.zeros_like(x), it
        low = lowpass(h, mask)
        if np.linalg.norm(low) < tol * nh:
            break
    return h, it


def extract_mode(x, mask, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Mode function ``T(x) = lim (I - L)^n x`` with the same stopping rule
    as :func:`extract_mode_direct`, evaluated in the DCT-II eigenbasis.
    """
    x = np.asarray(x, dtype=float)
    _check_length(x, mask)
    n = len(x)
    scale2 = float(x @ x)
    if scale2 == 0.0:
        return np.zeros_like(x), 0

    c = fft.dct(x, type=2, norm="ortho")
    lam = _dct_eigenvalues(n, mask)
    g = 1.0 - lam
    g2 = g * g
    lam2 = lam * lam
    power = c * c
    floor2 = (_UNDERFLOW ** 2) * scale2

    it = 0
    for it in range(1, max_iter + 1):
        power *= g2
        energy = power.sum()
        if energy <= floor2:
            return np.zeros_like(x), it
        if power @ lam2 < tol * tol * energy:
            break
    h = fft.idct(c * g ** it, type=2, norm="ortho")
    return h, it


@dataclass(frozen=True)
class Decomposition:
    """Mode functions ``F_1..F_m`` and trend ``R`` of one series."""

    modes: List[np.ndarray]
    residual: np.ndarray
    window: int
    iterations_per_mode: List[int] = field(default_factory=list)

    @property
    def num_modes(self):
        return len(self.modes)

    def components(self):
        """``[F_1, ..., F_m, R]``."""
        return list(self.modes) + [self.residual]

    def component(self, which):
        """Component by 1-based mode index or ``"R"``."""
        if which == "R":
            return self.residual
        return self.modes[int(which) - 1]

    def reconstruct(self):
        return np.sum(self.modes, axis=0) + self.residual


def decompose(x, window=DEFAULT_WINDOW, num_modes=DEFAULT_MODES,
              tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, mask=None, direct=False):
    """Split ``x`` into ``num_modes`` mode functions plus a trend.

    ``F_k = T(x - F_1 - ... - F_{k-1})`` and ``R = x - sum F_k``. Pass a
    custom ``mask`` to override the Fejer mask of half-width ``window``;
    ``direct=True`` runs the spatial iteration instead of the spectral one.
    """
    x = np.asarray(x, dtype=float)
    if num_modes < 1:
        raise ValidationError("num_modes must be >= 1")
    if mask is None:
        mask = build_mask(window)
    _check_length(x, mask)
    extract = extract_mode_direct if direct else extract_mode

    modes = []
    iters = []
    rest = x.copy()
    for _ in range(num_modes):
        f, it = extract(rest, mask, tol=tol, max_iter=max_iter)
        modes.append(f)
        iters.append(it)
        rest = rest - f
    return Decomposition(modes=modes, residual=rest, window=mask.window,
                         iterations_per_mode=iters)
