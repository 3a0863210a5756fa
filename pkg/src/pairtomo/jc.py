"""Closed-form resonant atom-field evolution on a truncated Fock ladder.

Amplitudes are interaction-picture: the free phases are dropped and only the
exchange coupling acts. The pair (phi[0, n+1], phi[1, n]) rotates at the Rabi
frequency xi * sqrt(n + 1); the vacuum-ground amplitude phi[0, 0] is
stationary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import PureState
from .errors import TruncationWarning

TOP_POPULATION_GUARD = 1e-8


@dataclass(frozen=True)
class JCParams:
    """omega: mode/atom angular frequency, xi: coupling, n_max: Fock cutoff."""

    omega: float
    xi: float
    n_max: int

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError("coupling xi must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


@dataclass(frozen=True)
class AtomFieldState:
    """Amplitude table phi[k, n] with atom level k in {0,1} and Fock index n."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != 2:
            raise ValueError(f"amplitudes must have shape (2, n_max + 1), got {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} is not 1 within 1e-12")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[1] - 1

    @classmethod
    def basis(cls, k: int, n: int, n_max: int) -> "AtomFieldState":
        amps = np.zeros((2, n_max + 1), dtype=complex)
        amps[k, n] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class EffectiveQubit:
    """Mixing angle and the two normalized field states entangled with the atom."""

    theta: float
    psi0: PureState
    psi1: PureState
    product: bool = False


def rabi_frequency(n: int, params: JCParams) -> float:
    """omega_n = xi * sqrt(n + 1); the sentinel n = -1 gives 0 (stationary pair)."""
    if n < -1:
        raise ValueError("Fock index must be >= -1")
    return params.xi * np.sqrt(n + 1.0)


def evolve(initial: AtomFieldState, params: JCParams, t: float) -> AtomFieldState:
    """Propagate the amplitude table for a time t.

    phi[0, n](t) = phi[0, n] cos(w_{n-1} t) - i phi[1, n-1] sin(w_{n-1} t)
    phi[1, n](t) = -i phi[0, n+1] sin(w_n t) + phi[1, n] cos(w_n t)

    Amplitudes beyond the cutoff are treated as zero; if the top-ladder
    population |phi[1, n_max]|^2 exceeds 1e-8 the truncation is no longer
    norm-preserving and a TruncationWarning is attached.
    """
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    n_max = initial.n_max
    if n_max != params.n_max:
        raise ValueError("state and params disagree on n_max")
    top = abs(initial.amplitudes[1, n_max]) ** 2
    if top >= TOP_POPULATION_GUARD:
        warnings.warn(
            f"top-ladder population {top:.3e} exceeds the truncation guard",
            TruncationWarning,
            stacklevel=2,
        )
    phi0 = initial.amplitudes[0]
    phi1 = initial.amplitudes[1]
    n = np.arange(n_max + 1)
    w_below = params.xi * np.sqrt(n.astype(float))          # omega_{n-1}
    w_at = params.xi * np.sqrt(n + 1.0)                     # omega_n
    phi1_shift = np.concatenate([[0.0], phi1[:-1]])          # phi[1, n-1]
    phi0_shift = np.concatenate([phi0[1:], [0.0]])           # phi[0, n+1]
    out = np.empty_like(initial.amplitudes)
    out[0] = phi0 * np.cos(w_below * t) - 1j * phi1_shift * np.sin(w_below * t)
    out[1] = -1j * phi0_shift * np.sin(w_at * t) + phi1 * np.cos(w_at * t)
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-13:
        # truncation leakage below the guard; fold it back into the norm
        out /= norm
    return AtomFieldState(out)


def extract_effective_qubit(state: AtomFieldState) -> EffectiveQubit:
    """Split phi into cos(theta) |psi0>|0> + sin(theta) |psi1>|1>.

    A block with norm below 1e-10 marks a product state; its field vector is
    set to the first Fock state by convention.
    """
    c0 = np.linalg.norm(state.amplitudes[0])
    c1 = np.linalg.norm(state.amplitudes[1])
    product = min(c0, c1) < 1e-10
    fallback = np.zeros(state.n_max + 1, dtype=complex)
    fallback[0] = 1.0
    psi0 = PureState(state.amplitudes[0] / c0 if c0 >= 1e-10 else fallback)
    psi1 = PureState(state.amplitudes[1] / c1 if c1 >= 1e-10 else fallback)
    return EffectiveQubit(float(np.arctan2(c1, c0)), psi0, psi1, product=product)


def recombine(q: EffectiveQubit) -> AtomFieldState:
    """Inverse of extract_effective_qubit."""
    amps = np.stack(
        [np.cos(q.theta) * q.psi0.amplitudes, np.sin(q.theta) * q.psi1.amplitudes]
    )
    return AtomFieldState(amps)


def field_qubit_projector(psi0: PureState, psi_perp: PureState) -> np.ndarray:
    """Rank-2 projector onto the field subspace spanned by two orthonormal states."""
    if psi0.dim != psi_perp.dim:
        raise ValueError("states live on different Fock ladders")
    overlap = np.vdot(psi0.amplitudes, psi_perp.amplitudes)
    if abs(overlap) > 1e-10:
        raise ValueError(f"states are not orthogonal, overlap {abs(overlap):.3e}")
    return psi0.projector() + psi_perp.projector()


def interaction_generator(params: JCParams) -> np.ndarray:
    """Excitation-conserving coupling xi (sigma_+ a + sigma_- a^+) on the cutoff space.

    Basis ordering matches AtomFieldState flattened row-major (k major, then n).
    exp(-i G t) applied to the flattened table reproduces `evolve`.
    """
    dim = params.n_max + 1
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    raise_atom = np.array([[0, 0], [1, 0]], dtype=complex)   # |1><0|
    g = params.xi * (np.kron(raise_atom, a) + np.kron(raise_atom.T, a.conj().T))
    return g
