"""Brute-force numerical reference for the analytic results.

Builds the interaction Hamiltonian on a truncated Fock space, evolves the
product initial state with an eigendecomposition of H, and computes reduced
states, measurement conditioning and discord from numerically obtained
spectra. Only :mod:`jc_discord.core` is shared with the analytic path;
:func:`cross_validate` is the one place the two meet.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .core import DensityMatrix, NumericalFault, hermitian_eigenvalues, von_neumann_entropy

ALGEBRAIC_TOL = 1e-10
MINIMIZATION_TOL = 1e-8


@dataclass(frozen=True)
class TruncatedSpace:
    """Atom (x) Fock levels ``0..n_max``; basis index ``a * (n_max + 1) + k``."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * self.levels

    def index(self, atom: int, k: int) -> int:
        return atom * self.levels + k

    def labels(self) -> tuple[str, ...]:
        return tuple(f"|{a},{k}>" for a in (0, 1) for k in range(self.levels))

    @classmethod
    def for_photons(cls, n: int, extra: int = 0) -> "TruncatedSpace":
        return cls(n + 1 + extra)


def _space_of(rho: DensityMatrix) -> TruncatedSpace:
    if rho.dim % 2:
        raise ValueError("state is not defined on atom (x) cavity")
    return TruncatedSpace(rho.dim // 2 - 1)


def annihilation(space: TruncatedSpace) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, space.levels)), k=1).astype(complex)


def build_interaction_hamiltonian(space: TruncatedSpace, beta: float = 1.0) -> np.ndarray:
    """``beta (a^dag sigma_- + a sigma_+)`` with ``|1>`` the excited level."""
    a = annihilation(space)
    sigma_minus = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    h = beta * (np.kron(sigma_minus, a.conj().T) + np.kron(sigma_minus.conj().T, a))
    return h


def excitation_number(space: TruncatedSpace) -> np.ndarray:
    a = annihilation(space)
    excited = np.diag([0.0, 1.0])
    return np.kron(np.eye(2), a.conj().T @ a) + np.kron(excited, np.eye(space.levels))


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T


def evolve_numeric(rho0: DensityMatrix, h: np.ndarray, t: float) -> DensityMatrix:
    """``U rho0 U^dag`` with ``U = exp(-i h t)``."""
    h = np.asarray(h)
    if h.shape != rho0.data.shape:
        raise ValueError(f"dimension mismatch: H {h.shape} vs rho {rho0.data.shape}")
    if t == 0:
        return rho0
    u = propagator(h, t)
    out = u @ rho0.data @ u.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), rho0.labels)


def thermal_fock_state(space: TruncatedSpace, lambda0: float, lambda1: float, n: int) -> DensityMatrix:
    """``(lambda0 |0><0| + lambda1 |1><1|) (x) |n><n|``."""
    if n > space.n_max - 1:
        raise ValueError(f"n_max={space.n_max} cannot hold the dynamics of n={n}")
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[space.index(0, n), space.index(0, n)] = lambda0
    rho[space.index(1, n), space.index(1, n)] = lambda1
    return DensityMatrix(rho, space.labels())


def evolved_state(n: int, lambda0: float, lambda1: float, tau: float, extra_levels: int = 0) -> DensityMatrix:
    space = TruncatedSpace.for_photons(n, extra_levels)
    rho0 = thermal_fock_state(space, lambda0, lambda1, n)
    return evolve_numeric(rho0, build_interaction_hamiltonian(space), tau)


def _blocks(rho: np.ndarray, levels: int) -> np.ndarray:
    return rho.reshape(2, levels, 2, levels)


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduced state of ``"atom"`` or ``"cavity"``."""
    space = _space_of(rho)
    r = _blocks(rho.data, space.levels)
    if keep == "atom":
        return DensityMatrix(np.einsum("akbk->ab", r), ("|0>", "|1>"))
    if keep == "cavity":
        return DensityMatrix(np.einsum("akal->kl", r), tuple(f"|{k}>" for k in range(space.levels)))
    raise ValueError(f"keep must be 'atom' or 'cavity', got {keep!r}")


def sigma_z_expectation(rho: DensityMatrix) -> float:
    atom = partial_trace(rho, "atom").data
    return float((atom[0, 0] - atom[1, 1]).real)


def _measurement_kets(theta, phi) -> np.ndarray:
    """Stack of measurement kets, shape ``(..., 2 outcomes, 2 components)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s, z = np.cos(theta), np.sin(theta), np.exp(1j * phi)
    k0 = np.stack([c + 0j, z * s], axis=-1)
    k1 = np.stack([np.conj(z) * s, -c + 0j], axis=-1)
    return np.stack([k0, k1], axis=-2)


def _unnormalised_conditionals(r4: np.ndarray, theta, phi) -> np.ndarray:
    """``<pi_j| rho |pi_j>`` over the atom, shape ``(..., 2, levels, levels)``."""
    kets = _measurement_kets(theta, phi)
    levels = r4.shape[1]
    weights = (kets.conj()[..., :, None] * kets[..., None, :]).reshape(*kets.shape[:-1], 4)
    blocks = r4.transpose(0, 2, 1, 3).reshape(4, levels * levels)
    return (weights @ blocks).reshape(*kets.shape[:-1], levels, levels)


def condition_on_measurement(rho: DensityMatrix, b, outcome: int):
    """Probability of ``outcome`` and the cavity state it leaves behind.

    ``b`` only needs ``theta`` and ``phi`` attributes. When the probability
    is at or below ``1e-14`` the returned state is ``None``.
    """
    space = _space_of(rho)
    m = _unnormalised_conditionals(_blocks(rho.data, space.levels), b.theta, b.phi)[outcome]
    m = 0.5 * (m + m.conj().T)
    p = float(np.trace(m).real)
    if p <= 1e-14:
        return p, None
    return p, DensityMatrix(m / p, tuple(f"|{k}>" for k in range(space.levels)))


def _weighted_entropy(m: np.ndarray) -> np.ndarray:
    """``P S(M / P)`` for unnormalised PSD blocks ``M`` with ``P = Tr M``."""
    mu = np.linalg.eigvalsh(m)
    if mu.size and mu.min() < -1e-12:
        raise NumericalFault(f"conditional block has eigenvalue {mu.min():.3e}")
    mu = np.where(mu < 0, 0.0, mu)
    p = mu.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mu > 0, -mu * np.log2(np.where(mu > 0, mu, 1.0) / np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def _conditional_entropy_batch(rho: DensityMatrix, theta, phi) -> np.ndarray:
    space = _space_of(rho)
    m = _unnormalised_conditionals(_blocks(rho.data, space.levels), theta, phi)
    m = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    return _weighted_entropy(m).sum(axis=-1)


def _marginal_term(rho: DensityMatrix) -> float:
    return von_neumann_entropy(hermitian_eigenvalues(partial_trace(rho, "atom"))) - von_neumann_entropy(
        hermitian_eigenvalues(rho)
    )


def discord_numeric(rho: DensityMatrix, b) -> float:
    """Discord with the measurement on the atom, from numerical spectra only."""
    return float(_marginal_term(rho) + _conditional_entropy_batch(rho, b.theta, b.phi))


def minimize_discord_numeric(rho: DensityMatrix, theta_points: int = 181, phi_points: int = 37):
    """Grid search over ``theta in [0, pi/2]`` and ``phi in [0, 2 pi)``, then
    a bounded scalar refinement in ``theta`` at the best ``phi``.

    Returns ``(delta, theta_star, phi_star)``.
    """
    if theta_points < 3 or phi_points < 3:
        raise ValueError("grids need at least 3 points")
    base = _marginal_term(rho)
    thetas = np.linspace(0.0, math.pi / 2, theta_points)
    phis = np.linspace(0.0, 2 * math.pi, phi_points, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    values = _conditional_entropy_batch(rho, tt, pp)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    best, theta_star, phi_star = values[i, j], thetas[i], phis[j]

    step = thetas[1] - thetas[0]
    lo, hi = max(0.0, theta_star - step), min(math.pi / 2, theta_star + step)
    res = minimize_scalar(
        lambda th: float(_conditional_entropy_batch(rho, th, phi_star)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if res.fun < best:
        best, theta_star = res.fun, float(res.x)
    return float(base + best), float(theta_star), float(phi_star)


# --- cross validation -------------------------------------------------------

QUANTITIES = (
    "joint_state",
    "atom_reduced",
    "conditional_state",
    "spectrum_joint",
    "spectrum_atom",
    "spectrum_conditional",
    "probabilities",
    "y",
    "discord",
    "inversion",
    "delta",
)


@dataclass
class ValidationReport:
    """Worst-case deviations between the analytic and numerical paths."""

    deviations: dict[str, float] = field(default_factory=lambda: {q: 0.0 for q in QUANTITIES})
    samples: int = 0

    @staticmethod
    def threshold(quantity: str) -> float:
        return MINIMIZATION_TOL if quantity == "delta" else ALGEBRAIC_TOL

    @property
    def passed(self) -> bool:
        return all(v < self.threshold(q) for q, v in self.deviations.items())

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        for q, v in other.deviations.items():
            self.deviations[q] = max(self.deviations.get(q, 0.0), v)
        self.samples += other.samples
        return self

    def to_text(self) -> str:
        lines = [f"{'quantity':<22}{'max |dev|':>14}{'threshold':>12}  status"]
        for q in QUANTITIES:
            v = self.deviations[q]
            ok = "PASS" if v < self.threshold(q) else "FAIL"
            lines.append(f"{q:<22}{v:>14.3e}{self.threshold(q):>12.0e}  {ok}")
        lines.append(f"samples: {self.samples}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)

    def to_keyvalue(self) -> str:
        lines = [f"{q}={self.deviations[q]!r}" for q in QUANTITIES]
        lines += [f"samples={self.samples}", f"passed={str(self.passed).lower()}"]
        return "\n".join(lines) + "\n"


def _embed_joint(closed: np.ndarray, n: int, space: TruncatedSpace) -> np.ndarray:
    """Place the analytic 6x6 block into the truncated space."""
    kets = [(a, n + k) for a in (0, 1) for k in (-1, 0, 1)]
    kept = [(i, space.index(a, m)) for i, (a, m) in enumerate(kets) if m >= 0]
    dropped = [i for i, (_, m) in enumerate(kets) if m < 0]
    if dropped and np.any(closed[dropped, :] != 0):
        raise NumericalFault("analytic state populates the level n-1 = -1")
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for i, gi in kept:
        for j, gj in kept:
            out[gi, gj] = closed[i, j]
    return out


def _embed_cavity(closed: np.ndarray, n: int, space: TruncatedSpace) -> np.ndarray:
    out = np.zeros((space.levels, space.levels), dtype=complex)
    ks = [n - 1, n, n + 1]
    for i, ki in enumerate(ks):
        for j, kj in enumerate(ks):
            if ki >= 0 and kj >= 0:
                out[ki, kj] = closed[i, j]
    return out


def _spectrum_gap(a, b) -> float:
    """Max deviation of two ascending spectra, zero-padding the shorter."""
    a, b = np.sort(np.asarray(a, dtype=float)), np.sort(np.asarray(b, dtype=float))
    size = max(a.size, b.size)
    a = np.concatenate([np.zeros(size - a.size), a])
    b = np.concatenate([np.zeros(size - b.size), b])
    return float(np.max(np.abs(a - b)))


def _validate_chunk(args) -> ValidationReport:
    from . import closed_form as cf
    from . import measurement_discord as md

    n, taus, lambda0, lambda1, thetas, phis, phi_points = args
    w = cf.ThermalWeights(lambda0, lambda1)
    space = TruncatedSpace.for_photons(n)
    h = build_interaction_hamiltonian(space)
    rho0 = thermal_fock_state(space, lambda0, lambda1, n)
    rep = ValidationReport()
    dev = rep.deviations

    def bump(q, v):
        dev[q] = max(dev[q], float(v))

    for tau, phi_row in zip(taus, phis):
        ang = cf.evolution_angles(n, tau)
        rho = evolve_numeric(rho0, h, tau)

        joint = cf.joint_state(w, ang)
        bump("joint_state", np.max(np.abs(_embed_joint(joint.data, n, space) - rho.data)))
        atom = partial_trace(rho, "atom")
        bump("atom_reduced", np.max(np.abs(cf.atom_reduced(w, ang).data - atom.data)))
        bump("spectrum_joint", _spectrum_gap(cf.joint_spectrum(w), hermitian_eigenvalues(rho)))
        bump("spectrum_atom", np.max(np.abs(np.sort(np.real(np.diag(cf.atom_reduced(w, ang).data)))
                                            - hermitian_eigenvalues(atom))))
        bump("inversion", abs(cf.inversion(w, ang) - sigma_z_expectation(rho)))

        for theta, phi in zip(thetas, phi_row):
            b = md.MeasurementBasis(theta, phi)
            p_closed = md.outcome_probabilities(w, ang, b)
            for outcome in (0, 1):
                p_num, state = condition_on_measurement(rho, b, outcome)
                bump("probabilities", abs(p_closed[outcome] - p_num))
                if state is None or p_num < 1e-8:
                    continue
                try:
                    cond = md.conditional_cavity_state(w, ang, b, outcome)
                except md.UndefinedConditionalState:
                    bump("probabilities", 1.0)
                    continue
                bump("conditional_state", np.max(np.abs(_embed_cavity(cond.state.data, n, space) - state.data)))
                num_spec = hermitian_eigenvalues(state)
                bump("spectrum_conditional", _spectrum_gap(cond.spectrum(), num_spec))
                y_num = 0.5 * (1.0 - float(np.sum(num_spec**2)))
                bump("y", abs(cond.y - y_num))
            bump("discord", abs(md.discord(w, ang, b).discord - discord_numeric(rho, b)))

        d_closed = md.minimize_discord(w, ang).delta
        d_num = minimize_discord_numeric(rho, phi_points=phi_points)[0]
        bump("delta", abs(d_closed - d_num))
        rep.samples += 1
    return rep


def cross_validate(n: int, tau_grid, w, theta_points: int = 19, seed: int = 0,
                   workers: int = 1, phi_points: int = 37) -> ValidationReport:
    """Compare every analytic quantity with its numerical counterpart.

    Parameters
    ----------
    n : int
        Initial photon number.
    tau_grid : array_like
        Interaction times.
    w : ThermalWeights
        Initial atomic populations.
    theta_points : int
        Measurement angles on ``[0, pi/2]`` tried at each time.
    seed : int
        Seeds the phases drawn for each (tau, theta) pair.
    workers : int
        Processes to spread the time grid over. Results do not depend on it.
    phi_points : int
        Phase grid of the numerical minimisation.
    """
    taus = np.asarray(tau_grid, dtype=float)
    thetas = np.linspace(0.0, math.pi / 2, theta_points)
    rng = np.random.default_rng(seed)
    phis = rng.uniform(0.0, 2 * math.pi, size=(taus.size, theta_points))
    jobs = [
        (n, taus[i:i + 8], w.lambda0, w.lambda1, thetas, phis[i:i + 8], phi_points)
        for i in range(0, taus.size, 8)
    ]
    report = ValidationReport()
    if workers <= 1:
        parts = map(_validate_chunk, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_validate_chunk, jobs))
    for part in parts:
        report.merge(part)
    return report
