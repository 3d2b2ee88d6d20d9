"""Entropy utilities and small dense Hermitian linear algebra.

All entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
CLAMP_TOL = 1e-12


class NumericalFault(ValueError):
    """Raised when an input violates a density-matrix or spectrum invariant."""


@dataclass(frozen=True)
class DensityMatrix:
    """A labelled square complex matrix representing a quantum state.

    Parameters
    ----------
    data : ndarray, shape (dim, dim)
        Matrix entries.
    labels : tuple of str
        One label per basis vector, e.g. ``"|0,3>"``.
    """

    data: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        if len(self.labels) != data.shape[0]:
            raise ValueError("need exactly one label per basis vector")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.data)

    def entropy(self) -> float:
        return von_neumann_entropy(self.eigenvalues())

    def validate(self) -> "DensityMatrix":
        """Check hermiticity, unit trace and positivity; return self."""
        _check_hermitian(self.data)
        tr = np.trace(self.data)
        if abs(tr - 1) > TRACE_TOL:
            raise NumericalFault(f"trace {tr} differs from 1")
        lo = self.eigenvalues()[0]
        if lo < -PSD_TOL:
            raise NumericalFault(f"negative eigenvalue {lo}")
        return self

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _check_hermitian(m: np.ndarray) -> None:
    dev = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) if m.size else 0.0
    if dev > HERMITIAN_TOL:
        raise NumericalFault(f"matrix is not Hermitian (deviation {dev:.3e})")


def hermitian_eigenvalues(m) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix in ascending order.

    Accepts a :class:`DensityMatrix`, a single ``(d, d)`` array or a stack
    of shape ``(..., d, d)``. Diagonal 2-D input is handled exactly, without
    calling the general solver.
    """
    if isinstance(m, DensityMatrix):
        m = m.data
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    _check_hermitian(m)
    if m.ndim == 2 and not np.any(m - np.diag(np.diagonal(m))):
        return np.sort(np.diagonal(m).real)
    return np.linalg.eigvalsh(m)


def _clamped(values: np.ndarray) -> np.ndarray:
    lo = values.min() if values.size else 0.0
    if lo < -CLAMP_TOL:
        raise NumericalFault(f"spectrum has negative value {lo:.3e}")
    return np.where(values < 0, 0.0, values)


def von_neumann_entropy(spectrum: Sequence[float], normalized: bool = True) -> float:
    """Entropy ``-sum(p log2 p)`` of a spectrum, with ``0 log 0 = 0``.

    Parameters
    ----------
    spectrum : sequence of float
        Eigenvalues of a density matrix.
    normalized : bool, optional
        If True (default) the values must sum to one within ``1e-10``.

    Raises
    ------
    NumericalFault
        If a value is below ``-1e-12`` or the normalisation check fails.
    """
    p = _clamped(np.asarray(spectrum, dtype=float).ravel())
    if normalized and abs(p.sum() - 1) > TRACE_TOL:
        raise NumericalFault(f"spectrum sums to {p.sum()!r}, not 1")
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def binary_entropy(p):
    """Shannon entropy ``h(p)`` in bits. Works elementwise on arrays."""
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("binary_entropy needs 0 <= p <= 1")
    return _h2(arr) if arr.ndim else float(_h2(arr))


def _h2(p: np.ndarray) -> np.ndarray:
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        b = np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return a + b


def xlog2x(x):
    """Elementwise ``x log2 x`` with the ``x = 0`` limit set to 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log2(safe), 0.0)
