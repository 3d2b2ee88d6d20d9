"""Analytic evolution of a thermal atom coupled to an n-photon cavity mode.

Time is the dimensionless ``tau = beta * t``. Atomic level ``|1>`` is the
excited state: ``|1, n>`` exchanges a photon with ``|0, n+1>`` and
``|0, n>`` with ``|1, n-1>``.

The formulas in this module broadcast, so ``tau`` may be a numpy array
wherever a single value is documented; matrix-valued results
(:func:`joint_state`, :func:`atom_reduced`) need scalar input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix


@dataclass(frozen=True)
class ThermalWeights:
    """Populations of the two atomic levels before the interaction.

    ``x`` is the ratio omega/kT the weights were built from, if any.
    """

    lambda0: float
    lambda1: float
    x: float | None = None

    def __post_init__(self):
        for v in (self.lambda0, self.lambda1):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"population {v} outside [0, 1]")
        if abs(self.lambda0 + self.lambda1 - 1.0) > 1e-15:
            raise ValueError("populations must sum to 1")

    @classmethod
    def from_lambda0(cls, lambda0: float) -> "ThermalWeights":
        return cls(float(lambda0), 1.0 - float(lambda0))


def weights_from_temperature(x: float) -> ThermalWeights:
    """Boltzmann weights for ``x = omega / kT >= 0``.

    ``lambda0 = 1 / (1 + exp(-x))`` and ``lambda1 = exp(-x) / (1 + exp(-x))``.
    """
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"temperature ratio must be finite and >= 0, got {x}")
    e = math.exp(-x)
    lambda1 = e / (1.0 + e)
    return ThermalWeights(1.0 - lambda1, lambda1, x=x)


@dataclass(frozen=True)
class EvolutionAngles:
    """Rabi angles ``tau sqrt(n)``, ``tau sqrt(n+1)`` and their sines/cosines."""

    n: int
    tau: float
    psi_n: float
    psi_np1: float
    cn: float
    sn: float
    cnp1: float
    snp1: float


def evolution_angles(n: int, tau) -> EvolutionAngles:
    if int(n) != n or n < 0:
        raise ValueError(f"photon number must be a nonnegative integer, got {n}")
    n = int(n)
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise ValueError("tau must be finite")
    if tau.ndim == 0:
        tau = float(tau)
    psi_n = tau * math.sqrt(n)
    psi_np1 = tau * math.sqrt(n + 1)
    return EvolutionAngles(
        n=n,
        tau=tau,
        psi_n=psi_n,
        psi_np1=psi_np1,
        cn=np.cos(psi_n),
        sn=np.sin(psi_n),
        cnp1=np.cos(psi_np1),
        snp1=np.sin(psi_np1),
    )


def ket_label(atom: int, photons: int) -> str:
    return f"|{atom},{photons}>"


def joint_labels(n: int) -> tuple[str, ...]:
    """Basis of the joint state: ``|0,n-1>, |0,n>, |0,n+1>, |1,n-1>, |1,n>, |1,n+1>``."""
    return tuple(ket_label(a, n + k) for a in (0, 1) for k in (-1, 0, 1))


def evolve_basis_ket(which: int, n: int, ang: EvolutionAngles) -> dict[str, complex]:
    """Evolved image of ``|which, n>`` as a ``{label: amplitude}`` mapping."""
    if ang.n != n:
        raise ValueError(f"angles were built for n={ang.n}, not n={n}")
    if which == 0:
        if n == 0:
            return {ket_label(0, 0): 1.0 + 0j}
        return {ket_label(0, n): complex(ang.cn), ket_label(1, n - 1): -1j * ang.sn}
    if which == 1:
        return {ket_label(1, n): complex(ang.cnp1), ket_label(0, n + 1): -1j * ang.snp1}
    raise ValueError(f"atomic level must be 0 or 1, got {which}")


def joint_state(w: ThermalWeights, ang: EvolutionAngles) -> DensityMatrix:
    """Evolved 6x6 atom-cavity density matrix in the :func:`joint_labels` basis."""
    l0, l1 = w.lambda0, w.lambda1
    cn, sn, c1, s1 = (float(v) for v in (ang.cn, ang.sn, ang.cnp1, ang.snp1))
    rho = np.zeros((6, 6), dtype=complex)
    # indices: 0 |0,n-1>  1 |0,n>  2 |0,n+1>  3 |1,n-1>  4 |1,n>  5 |1,n+1>
    rho[1, 1] = l0 * cn**2
    rho[3, 3] = l0 * sn**2
    rho[1, 3] = 1j * l0 * cn * sn
    rho[3, 1] = -1j * l0 * cn * sn
    rho[4, 4] = l1 * c1**2
    rho[2, 2] = l1 * s1**2
    rho[2, 4] = -1j * l1 * c1 * s1
    rho[4, 2] = 1j * l1 * c1 * s1
    return DensityMatrix(rho, joint_labels(ang.n))


def atom_populations(w: ThermalWeights, ang: EvolutionAngles):
    """Diagonal of the reduced atomic state, ``(p0, p1)``."""
    p0 = w.lambda0 * ang.cn**2 + w.lambda1 * ang.snp1**2
    p1 = w.lambda0 * ang.sn**2 + w.lambda1 * ang.cnp1**2
    return p0, p1


def atom_reduced(w: ThermalWeights, ang: EvolutionAngles) -> DensityMatrix:
    p0, p1 = atom_populations(w, ang)
    return DensityMatrix(np.diag([float(p0), float(p1)]).astype(complex), ("|0>", "|1>"))


def joint_spectrum(w: ThermalWeights) -> np.ndarray:
    """Eigenvalues of the joint state, ascending. They never change in time."""
    return np.sort(np.array([w.lambda0, w.lambda1, 0.0, 0.0, 0.0, 0.0]))


def inversion(w: ThermalWeights, ang: EvolutionAngles):
    """Population difference ``<sigma_z>``, with sigma_z = |0><0| - |1><1|."""
    return (w.lambda0 * (ang.cn**2 - ang.sn**2)
            - w.lambda1 * (ang.cnp1**2 - ang.snp1**2))


def inversion_via_trace(joint: DensityMatrix) -> float:
    """``Tr[rho (sigma_z x I)]`` read off a labelled joint state."""
    signs = np.array([1.0 if lab.startswith("|0,") else -1.0 for lab in joint.labels])
    return float(np.sum(signs * np.diagonal(joint.data).real))
