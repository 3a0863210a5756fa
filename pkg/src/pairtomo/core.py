"""Dense complex linear algebra and quantum-state primitives for dimensions 2 and 4.

Conventions fixed project-wide:

* qubit basis states are ``|0>``, ``|1>``; the third observable is
  ``sigma_3 = -|0><0| + |1><1|`` (note the sign), so outcome index 0 of a
  detector always belongs to the lowest eigenvalue,
* composite systems are ordered atom (x) field, index ``2*a + f``,
* eigenvectors are phase-fixed by making their largest-magnitude component
  real and positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, StructureError

HERMITICITY_TOL = 1e-12
EIG_TOL = 1e-10
DEGENERACY_GAP = 1e-8


def pauli(index: int) -> np.ndarray:
    """Return the 2x2 atom observable: identity, sigma_1, sigma_2 or sigma_3.

    sigma_1 = |1><0| + |0><1|, sigma_2 = -i|1><0| + i|0><1|,
    sigma_3 = -|0><0| + |1><1|.
    """
    if index == 0:
        return np.eye(2, dtype=complex)
    if index == 1:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if index == 2:
        return np.array([[0, 1j], [-1j, 0]], dtype=complex)
    if index == 3:
        return np.array([[-1, 0], [0, 1]], dtype=complex)
    raise ValueError(f"pauli index must be 0..3, got {index!r}")


def pauli_vector() -> np.ndarray:
    """The three traceless observables stacked as an array of shape (3, 2, 2)."""
    return np.stack([pauli(1), pauli(2), pauli(3)])


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} is not 1 within 1e-12")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density_matrix(self, tensor_dims=None) -> "DensityMatrix":
        return DensityMatrix(self.projector(), tensor_dims=tensor_dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive-semidefinite Hermitian matrix, optionally atom(x)field."""

    matrix: np.ndarray
    tensor_dims: tuple | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > HERMITICITY_TOL:
            raise ValueError(f"trace {np.trace(m)} is not 1 within 1e-12")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        if self.tensor_dims is not None:
            da, df = self.tensor_dims
            if da * df != m.shape[0]:
                raise StructureError(
                    f"tensor_dims {self.tensor_dims} do not match dimension {m.shape[0]}"
                )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def validate_distribution(values) -> np.ndarray:
    p = np.asarray(values, dtype=float)
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return np.clip(p, 0.0, 1.0)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the atom as first factor and the field second."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.kron(a, b)


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduced state of ``keep`` ('atom' or 'field') for a (2, 2) composite."""
    if rho.tensor_dims is None:
        raise StructureError("partial_trace needs a density matrix with tensor_dims")
    da, df = rho.tensor_dims
    blocks = rho.matrix.reshape(da, df, da, df)
    if keep == "atom":
        reduced = np.einsum("afbf->ab", blocks)
    elif keep == "field":
        reduced = np.einsum("afag->fg", blocks)
    else:
        raise ValueError(f"keep must be 'atom' or 'field', got {keep!r}")
    return DensityMatrix(reduced)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        i = int(np.argmax(np.abs(col)))
        phase = col[i] / abs(col[i])
        out[:, k] = col * phase.conj()
    return out


def hermitian_eig(m: np.ndarray):
    """Eigenvalues ascending and phase-fixed orthonormal eigenvector columns."""
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > EIG_TOL:
        raise ValueError("hermitian_eig requires a Hermitian matrix (tol 1e-10)")
    w, v = np.linalg.eigh(m)
    return w, _fix_phases(v)


def is_degenerate(eigenvalues, gap: float = DEGENERACY_GAP) -> bool:
    """True when two eigenvalues are closer than ``gap`` (basis labels unreliable)."""
    w = np.sort(np.asarray(eigenvalues, dtype=float))
    return bool(np.any(np.diff(w) < gap))


def eig_projectors(obs: np.ndarray) -> list[np.ndarray]:
    """Rank-1 projectors of a non-degenerate observable, ascending eigenvalue order."""
    w, v = hermitian_eig(obs)
    if is_degenerate(w):
        raise DegeneracyError("observable has (near-)degenerate eigenvalues")
    return [np.outer(v[:, k], v[:, k].conj()) for k in range(v.shape[1])]


def schmidt_decompose(psi: PureState):
    """Write a dim-4 pure state as c0 |a0>|f0> + c1 |a1>|f1|, c0 >= c1 >= 0.

    Returns (coefficients, [a0, a1], [f0, f1]) with phases absorbed into the
    local vectors so the coefficients are real non-negative.
    """
    if psi.dim != 4:
        raise StructureError("schmidt_decompose expects a dim-4 state")
    amp = psi.amplitudes.reshape(2, 2)
    u, s, vh = np.linalg.svd(amp)
    atom, fld = [], []
    for k in range(2):
        a = u[:, k]
        f = vh[k, :]
        i = int(np.argmax(np.abs(a)))
        phase = a[i] / abs(a[i])
        atom.append(a * phase.conj())
        fld.append(f * phase)
    atom_states = [PureState(a) for a in atom]
    field_states = [PureState(f) for f in fld]
    return s, atom_states, field_states


def born_probabilities(rho: DensityMatrix, projectors) -> np.ndarray:
    """p_k = Tr(P_k rho) for a complete orthogonal projector set."""
    projectors = [np.asarray(p, dtype=complex) for p in projectors]
    total = sum(projectors)
    if np.max(np.abs(total - np.eye(rho.dim))) > EIG_TOL:
        raise ValueError("projectors do not sum to the identity (tol 1e-10)")
    p = np.array([np.trace(pk @ rho.matrix).real for pk in projectors])
    p[np.abs(p) < 1e-14] = 0.0
    return validate_distribution(p)


def moments_from_distribution(eigenvalues, distribution) -> np.ndarray:
    """Moments <O^n> = sum_k O_k^n p_k for n = 1 .. N-1."""
    o = np.asarray(eigenvalues, dtype=float)
    p = validate_distribution(distribution)
    if o.size != p.size:
        raise ValueError("eigenvalues and distribution length mismatch")
    if is_degenerate(o, gap=1e-12):
        raise DegeneracyError("moments need distinct eigenvalues (Vandermonde singular)")
    n = np.arange(1, o.size)
    return (o[None, :] ** n[:, None]) @ p


def distribution_from_moments(eigenvalues, moments) -> np.ndarray:
    """Invert the moment map by solving the Vandermonde system (with sum p = 1)."""
    o = np.asarray(eigenvalues, dtype=float)
    m = np.asarray(moments, dtype=float)
    if m.size != o.size - 1:
        raise ValueError("need N-1 moments for N outcomes")
    if is_degenerate(o, gap=1e-12):
        raise DegeneracyError("moments need distinct eigenvalues (Vandermonde singular)")
    vander = o[None, :] ** np.arange(o.size)[:, None]
    rhs = np.concatenate([[1.0], m])
    return np.linalg.solve(vander, rhs)


def moments_equivalence_check(eigenvalues, distribution) -> np.ndarray:
    """Moment vector of a distribution; the inverse map round-trips exactly."""
    return moments_from_distribution(eigenvalues, distribution)


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray) -> float:
    """(1/2) ||rho - sigma||_1, the operational distinguishability metric."""
    a = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    b = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def bloch_density(bloch) -> np.ndarray:
    """rho = (I + r . sigma) / 2 as a raw matrix (may be unnormalized if |r| > 1)."""
    r = np.asarray(bloch, dtype=float)
    sig = pauli_vector()
    return 0.5 * (np.eye(2, dtype=complex) + np.tensordot(r, sig, axes=1))
