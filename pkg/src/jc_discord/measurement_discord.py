"""Projective measurement on the atom and the resulting quantum discord.

The measurement basis is ``|pi_0> = cos(theta)|0> + e^{i phi} sin(theta)|1>``,
``|pi_1> = e^{-i phi} sin(theta)|0> - cos(theta)|1>``. Conditional cavity
states live on the three Fock levels ``n-1, n, n+1``.

Everything except :func:`conditional_cavity_state` broadcasts over arrays
of ``tau`` (through :class:`EvolutionAngles`) and ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import EvolutionAngles, ThermalWeights, atom_populations
from .core import DensityMatrix, NumericalFault, _h2, binary_entropy, xlog2x

#: Outcomes with probability at or below this are treated as absent.
PROB_FLOOR = 1e-14

#: Minimisation candidates within this of the best value count as tied.
TIE_TOL = 1e-15

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class UndefinedConditionalState(ArithmeticError):
    """The requested measurement outcome has (numerically) zero probability."""


@dataclass(frozen=True)
class MeasurementBasis:
    theta: float
    phi: float = 0.0

    def kets(self) -> tuple[np.ndarray, np.ndarray]:
        c, s, z = math.cos(self.theta), math.sin(self.theta), np.exp(1j * self.phi)
        return (np.array([c, z * s]), np.array([np.conj(z) * s, -c]))

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.outer(k, k.conj()) for k in self.kets())


@dataclass(frozen=True)
class ConditionalOutcome:
    outcome: int
    probability: float
    state: DensityMatrix
    y: float

    def spectrum(self) -> np.ndarray:
        return conditional_spectrum(self.y)


@dataclass(frozen=True)
class DiscordBreakdown:
    """Entropies (bits) entering the discord of one measurement basis."""

    s_atom: float
    s_cavity: float
    s_joint: float
    s_conditional: float
    mutual_info_i: float
    mutual_info_j: float
    discord: float


@dataclass(frozen=True)
class DiscordMinimum:
    delta: float
    theta_star: float
    evaluations: int


def _trig(theta):
    theta = np.asarray(theta, dtype=float)
    return np.cos(theta), np.sin(theta)


def outcome_probabilities(w: ThermalWeights, ang: EvolutionAngles, b: MeasurementBasis):
    """Probabilities ``(P0, P1)`` of the two measurement outcomes.

    Each is assembled from nonnegative terms, so neither loses relative
    precision when it is small.
    """
    return _probabilities(w.lambda0, w.lambda1, ang, *_trig(b.theta))


def _probabilities(l0, l1, ang, C, S):
    C2, S2 = C * C, S * S
    p0 = l0 * (C2 * ang.cn**2 + S2 * ang.sn**2) + l1 * (C2 * ang.snp1**2 + S2 * ang.cnp1**2)
    p1 = l0 * (S2 * ang.cn**2 + C2 * ang.sn**2) + l1 * (S2 * ang.snp1**2 + C2 * ang.cnp1**2)
    return p0, p1


def _y_numerators(l0, l1, ang, C, S):
    C2, S2 = C * C, S * S
    cn2, sn2, c12, s12 = ang.cn**2, ang.sn**2, ang.cnp1**2, ang.snp1**2
    cross = C2 * S2 * sn2 * s12
    k = l0 * l1
    y0 = k * (C2 * C2 * cn2 * s12 + S2 * S2 * sn2 * c12 + cross)
    y1 = k * (S2 * S2 * cn2 * s12 + C2 * C2 * sn2 * c12 + cross)
    return y0, y1


def _y_values(p, num):
    ok = p > PROB_FLOOR
    y = np.where(ok, num / np.where(ok, p, 1.0) ** 2, 0.0)
    if np.any(1.0 - 4.0 * y < -1e-12):
        raise NumericalFault("conditional state has 1 - 4y < 0")
    return np.clip(y, 0.0, 0.25), ok


def _small_eigenvalue(y):
    # 2y / (1 + r) equals (1 - r) / 2 without the cancellation
    r = np.sqrt(np.clip(1.0 - 4.0 * y, 0.0, None))
    return 2.0 * y / (1.0 + r)


def conditional_spectrum(y) -> np.ndarray:
    """Spectrum ``{0, (1 - r)/2, (1 + r)/2}`` with ``r = sqrt(1 - 4y)``, ascending."""
    lo = float(_small_eigenvalue(np.asarray(y, dtype=float)))
    return np.array([0.0, lo, 1.0 - lo])


def conditional_cavity_state(w: ThermalWeights, ang: EvolutionAngles,
                             b: MeasurementBasis, outcome: int) -> ConditionalOutcome:
    """Normalised cavity state after the atom is found in ``|pi_outcome>``.

    Raises
    ------
    UndefinedConditionalState
        If the outcome probability is at or below ``PROB_FLOOR``.
    """
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    l0, l1 = w.lambda0, w.lambda1
    C, S = math.cos(b.theta), math.sin(b.theta)
    z = np.exp(1j * b.phi)
    cn, sn, c1, s1 = (float(v) for v in (ang.cn, ang.sn, ang.cnp1, ang.snp1))
    probs = _probabilities(l0, l1, ang, C, S)
    p = float(probs[outcome])
    if p <= PROB_FLOOR:
        raise UndefinedConditionalState(f"outcome {outcome} has probability {p:.3e}")

    off_lo = l0 * C * S * cn * sn
    off_hi = l1 * C * S * c1 * s1
    if outcome == 0:
        diag = (l0 * S * S * sn * sn, l0 * C * C * cn * cn + l1 * S * S * c1 * c1, l1 * C * C * s1 * s1)
        sign = 1.0
    else:
        diag = (l0 * C * C * sn * sn, l0 * S * S * cn * cn + l1 * C * C * c1 * c1, l1 * S * S * s1 * s1)
        sign = -1.0
    m = np.diag(np.array(diag, dtype=complex))
    m[0, 1] = -sign * 1j * np.conj(z) * off_lo
    m[1, 0] = sign * 1j * z * off_lo
    m[1, 2] = sign * 1j * np.conj(z) * off_hi
    m[2, 1] = -sign * 1j * z * off_hi

    num = _y_numerators(l0, l1, ang, C, S)[outcome]
    y, _ = _y_values(np.float64(p), num)
    n = ang.n
    labels = tuple(f"|{k}>" for k in (n - 1, n, n + 1))
    return ConditionalOutcome(outcome, p, DensityMatrix(m / p, labels), float(y))


def _conditional_terms(l0, l1, ang, C, S):
    p0, p1 = _probabilities(l0, l1, ang, C, S)
    n0, n1 = _y_numerators(l0, l1, ang, C, S)
    y0, ok0 = _y_values(p0, n0)
    y1, ok1 = _y_values(p1, n1)
    return (p0, y0, ok0), (p1, y1, ok1)


def _conditional_entropy(l0, l1, ang, C, S):
    total = 0.0
    for p, y, ok in _conditional_terms(l0, l1, ang, C, S):
        total = total + np.where(ok, p * _h2(_small_eigenvalue(y)), 0.0)
    return total


def conditional_entropy(w: ThermalWeights, ang: EvolutionAngles, b: MeasurementBasis):
    """Outcome-weighted entropy ``sum_j P_j S(rho_c|j)`` in bits."""
    out = _conditional_entropy(w.lambda0, w.lambda1, ang, *_trig(b.theta))
    return out if np.ndim(out) else float(out)


def _entropy3(a, b, c):
    return -(xlog2x(a) + xlog2x(b) + xlog2x(c))


def _scalar(x):
    return x if np.ndim(x) else float(x)


def discord(w: ThermalWeights, ang: EvolutionAngles, b: MeasurementBasis) -> DiscordBreakdown:
    """Discord ``S(rho_a) - S(rho_ac) + sum_j P_j S(rho_c|j)`` with its parts."""
    pa0, pa1 = atom_populations(w, ang)
    s_atom = _h2(np.clip(pa0, 0.0, 1.0))
    s_joint = binary_entropy(w.lambda0)
    s_cavity = _entropy3(w.lambda0 * ang.sn**2,
                         w.lambda0 * ang.cn**2 + w.lambda1 * ang.cnp1**2,
                         w.lambda1 * ang.snp1**2)
    s_cond = _conditional_entropy(w.lambda0, w.lambda1, ang, *_trig(b.theta))
    s_cond = s_cond + np.zeros_like(s_atom)
    return DiscordBreakdown(
        s_atom=_scalar(s_atom),
        s_cavity=_scalar(s_cavity),
        s_joint=s_joint,
        s_conditional=_scalar(s_cond),
        mutual_info_i=_scalar(s_atom + s_cavity - s_joint),
        mutual_info_j=_scalar(s_cavity - s_cond),
        discord=_scalar(s_atom - s_joint + s_cond),
    )


def discord_value(w: ThermalWeights, ang: EvolutionAngles, theta):
    """Just the discord, broadcasting over ``ang.tau`` and ``theta``."""
    return _discord_value(w.lambda0, w.lambda1, ang, theta)


def _discord_value(l0, l1, ang, theta):
    pa0 = np.clip(l0 * ang.cn**2 + l1 * ang.snp1**2, 0.0, 1.0)
    C, S = _trig(theta)
    return _h2(pa0) - _h2(np.float64(l0)) + _conditional_entropy(l0, l1, ang, C, S)


def discord_printed_formula(w: ThermalWeights, ang: EvolutionAngles, b: MeasurementBasis):
    """Closed-form discord written out in terms of ``P_j`` and ``y_j``.

    This is the expanded expression with the conditional term written as
    ``-(P_j / 2) [(1+r) log(1+r) + (1-r) log(1-r)]``. It lacks the constant
    ``sum_j P_j log 2`` that comes from the 1/2 inside the eigenvalues, so it
    sits exactly 1 bit below :func:`discord`. Kept for diagnostics.
    """
    l0, l1 = w.lambda0, w.lambda1
    pa0, pa1 = atom_populations(w, ang)
    first = -(xlog2x(pa0) + xlog2x(pa1))
    second = xlog2x(l0) + xlog2x(l1)
    third = 0.0
    for p, y, ok in _conditional_terms(l0, l1, ang, *_trig(b.theta)):
        r = np.sqrt(np.clip(1.0 - 4.0 * y, 0.0, None))
        bracket = xlog2x(1.0 + r) + xlog2x(1.0 - r)
        third = third + np.where(ok, 0.5 * p * bracket, 0.0)
    return _scalar(first + second - third)


def minimize_discord(w: ThermalWeights, ang: EvolutionAngles, grid_points: int = 1801,
                     tol: float = 1e-10, chunk: int = 256) -> DiscordMinimum:
    """Minimise the discord over ``theta in [0, pi/2]`` (``phi`` fixed at 0).

    A uniform grid locates the best bracket and golden-section search
    shrinks it below ``tol``. The angles 0, pi/4 and pi/2 are always
    evaluated. If ``ang.tau`` is an array the result fields are arrays.

    Parameters
    ----------
    grid_points : int
        Size of the coarse grid, endpoints included.
    tol : float
        Final bracket width in theta.
    chunk : int
        Number of tau values evaluated together on the grid.
    """
    if grid_points < 3:
        raise ValueError("need at least 3 grid points")
    tau = np.atleast_1d(np.asarray(ang.tau, dtype=float))
    flat = tau.ravel()
    delta = np.empty_like(flat)
    theta_star = np.empty_like(flat)
    iters = 0
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        d, t, iters = _minimize_block(w, ang.n, flat[sl], grid_points, tol)
        delta[sl], theta_star[sl] = d, t
    evaluations = grid_points + 2 * iters + 2 + 3
    if np.ndim(ang.tau) == 0:
        return DiscordMinimum(float(delta[0]), float(theta_star[0]), evaluations)
    return DiscordMinimum(delta.reshape(tau.shape), theta_star.reshape(tau.shape), evaluations)


def _angles_for(n, tau):
    # avoids the validation overhead of evolution_angles on inner loops
    rn, rn1 = math.sqrt(n), math.sqrt(n + 1)
    return EvolutionAngles(n, tau, tau * rn, tau * rn1, np.cos(tau * rn), np.sin(tau * rn),
                           np.cos(tau * rn1), np.sin(tau * rn1))


def _minimize_block(w, n, tau, grid_points, tol):
    l0, l1 = w.lambda0, w.lambda1
    col = _angles_for(n, tau[:, None])
    grid = np.linspace(0.0, math.pi / 2, grid_points)
    values = _discord_value(l0, l1, col, grid[None, :])
    k = np.argmin(values, axis=1)
    best = values[np.arange(tau.size), k]
    best_theta = grid[k]

    ang = _angles_for(n, tau)
    f = lambda th: _discord_value(l0, l1, ang, th)  # noqa: E731
    a = grid[np.maximum(k - 1, 0)]
    b = grid[np.minimum(k + 1, grid_points - 1)]
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    # fixed count from the widest possible bracket keeps every lane's
    # arithmetic independent of how tau values are grouped
    widest = 2 * (grid[1] - grid[0])
    iters = max(0, math.ceil(math.log(widest / tol) / -math.log(_INV_PHI)))
    for _ in range(iters):
        left = f1 <= f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x2_new = np.where(left, x1, a + _INV_PHI * (b - a))
        x1_new = np.where(left, b - _INV_PHI * (b - a), x2)
        f2_new = np.where(left, f1, np.nan)
        f1_new = np.where(left, np.nan, f2)
        x1, x2 = x1_new, x2_new
        # one fresh evaluation per lane: x1 on the left branch, x2 on the right
        fresh = f(np.where(left, x1, x2))
        f1 = np.where(left, fresh, f1_new)
        f2 = np.where(left, f2_new, fresh)

    # the probes go first so that round-off ties resolve to the exact angle
    candidates = []
    for probe in (0.0, math.pi / 4, math.pi / 2):
        th = np.full_like(tau, probe)
        candidates.append((f(th), th))
    candidates += [(best, best_theta), (f(x1), x1), (f(x2), x2)]
    vals = np.stack([c[0] for c in candidates])
    thetas = np.stack([c[1] for c in candidates])
    j = np.argmax(vals <= vals.min(axis=0) + TIE_TOL, axis=0)
    idx = np.arange(tau.size)
    return vals[j, idx], thetas[j, idx], iters
