"""State reconstruction for qubits and qubit pairs from local-observable data.

The composite state model is the canonical form: four orthonormal
eigenvectors built from two Schmidt angles,

    |Cat:0> = cos(tc)|00> + sin(tc)|11>,   |Cat:1> = -sin(tc)|00> + cos(tc)|11>,
    |EPR:0> = cos(te)|01> + sin(te)|10>,   |EPR:1> = -sin(te)|01> + cos(te)|10>,

weighted by eigenvalues p1..p4.  In the canonical local frames both reduced
states are diagonal and the full correlation matrix is diagonal, which is what
makes five measured pairs of local observables sufficient: three aligned pairs
fix the diagonal data, two cross pairs fix the residual azimuthal freedom.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DensityMatrix,
    bloch_density,
    born_probabilities,
    eig_projectors,
    hermitian_eig,
    pauli,
    pauli_vector,
    tensor_product,
    trace_distance,
)
from .errors import IncompleteDesignError, InconsistencyError, ProjectionWarning
from .measurement import Detector, DetectorBank
from .rng import stream_rng

ANGLE_DEGENERACY_GAP = 1e-12
CONSISTENCY_TOL = 1e-9


# ---------------------------------------------------------------------------
# canonical model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalParams:
    """Eigenvalues plus Schmidt angles of the canonical composite state.

    Ordering is fixed to p1 >= p2 and p3 >= p4; angles lie in [0, pi/2]
    (the right boundary only appears for estimates projected from noisy data).
    """

    p: tuple
    theta_c: float
    theta_e: float

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if len(p) != 4:
            raise ValueError("need exactly four eigenvalues")
        if min(p) < -1e-10:
            raise ValueError(f"eigenvalues must be non-negative, got {p}")
        if abs(sum(p) - 1.0) > 1e-9:
            raise ValueError(f"eigenvalues sum to {sum(p)}, not 1")
        if p[0] < p[1] - 1e-12 or p[2] < p[3] - 1e-12:
            raise ValueError("ordering convention is p1 >= p2 and p3 >= p4")
        for name, th in (("theta_c", self.theta_c), ("theta_e", self.theta_e)):
            if not -1e-12 <= th <= math.pi / 2 + 1e-12:
                raise ValueError(f"{name} = {th} outside [0, pi/2]")
        object.__setattr__(self, "p", p)

    @property
    def cat_weight(self) -> float:
        return self.p[0] + self.p[1]

    @property
    def atom_mean3(self) -> float:
        """<sigma_3> of the atom reduced state in the canonical frame."""
        dc, de = self.p[0] - self.p[1], self.p[2] - self.p[3]
        return -(dc * math.cos(2 * self.theta_c) + de * math.cos(2 * self.theta_e))

    def atom_flip(self) -> "CanonicalParams":
        """Parameters in the frame with the atom basis states swapped."""
        p1, p2, p3, p4 = self.p
        return CanonicalParams(
            (p3, p4, p1, p2),
            math.pi / 2 - self.theta_e,
            math.pi / 2 - self.theta_c,
        )

    def both_flip(self) -> "CanonicalParams":
        """Parameters in the frame with both local bases swapped."""
        return CanonicalParams(
            self.p, math.pi / 2 - self.theta_c, math.pi / 2 - self.theta_e
        )

    def normalized(self) -> "CanonicalParams":
        """Gauge-fixed representative: Cat is the heavier sector and the atom
        ground population dominates (atom_mean3 <= 0)."""
        out = self
        if out.cat_weight < 0.5 - 1e-12:
            out = out.atom_flip()
        if out.atom_mean3 > 1e-12:
            out = out.both_flip()
        return out


def canonical_basis(theta_c: float, theta_e: float) -> np.ndarray:
    """The four canonical eigenvectors as columns, basis order |00>,|01>,|10>,|11>."""
    cc, sc = math.cos(theta_c), math.sin(theta_c)
    ce, se = math.cos(theta_e), math.sin(theta_e)
    return np.array(
        [
            [cc, -sc, 0, 0],
            [0, 0, ce, -se],
            [0, 0, se, ce],
            [sc, cc, 0, 0],
        ],
        dtype=complex,
    )


def canonical_state(params: CanonicalParams) -> DensityMatrix:
    """rho = sum_m p_m |m><m| over the canonical eigenvectors."""
    basis = canonical_basis(params.theta_c, params.theta_e)
    rho = (basis * np.asarray(params.p)) @ basis.conj().T
    return DensityMatrix(rho, tensor_dims=(2, 2))


@dataclass(frozen=True)
class JointDistribution:
    """2x2 joint outcome table for one pair of local observables."""

    pair_id: str
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.shape != (2, 2):
            raise ValueError("joint table must be 2x2")
        if np.any(t < -1e-12) or np.any(t > 1 + 1e-12):
            raise ValueError("joint probabilities must lie in [0, 1]")
        if abs(t.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint table sums to {t.sum()}, not 1")
        object.__setattr__(self, "table", np.clip(t, 0.0, 1.0))


def forward_joint_distributions(params: CanonicalParams):
    """Joint tables for the aligned pairs 33, 11 and 22 in the canonical frame."""
    p1, p2, p3, p4 = params.p
    dc, de = p1 - p2, p3 - p4
    c2c, s2c = math.cos(2 * params.theta_c), math.sin(2 * params.theta_c)
    c2e, s2e = math.cos(2 * params.theta_e), math.sin(2 * params.theta_e)

    t33 = np.array(
        [
            [(p1 + p2) / 2 + dc * c2c / 2, (p3 + p4) / 2 + de * c2e / 2],
            [(p3 + p4) / 2 - de * c2e / 2, (p1 + p2) / 2 - dc * c2c / 2],
        ]
    )
    same = 0.25 + dc * s2c / 4 + de * s2e / 4
    diff = 0.25 - dc * s2c / 4 - de * s2e / 4
    t11 = np.array([[same, diff], [diff, same]])
    same = 0.25 - dc * s2c / 4 + de * s2e / 4
    diff = 0.25 + dc * s2c / 4 - de * s2e / 4
    t22 = np.array([[same, diff], [diff, same]])
    return (
        JointDistribution("33", t33),
        JointDistribution("11", t11),
        JointDistribution("22", t22),
    )


@dataclass(frozen=True)
class CanonicalSolution:
    params: CanonicalParams
    theta_c_undetermined: bool = False
    theta_e_undetermined: bool = False
    projected: bool = False


def _sector(total, x, y, project):
    """Recover (p_hi, p_lo, theta) of one sector from its moment components."""
    projected = False
    if y < 0:
        if not project and y < -CONSISTENCY_TOL:
            raise InconsistencyError(f"negative sine component {y} in joint tables")
        projected = projected or y < -CONSISTENCY_TOL
        y = 0.0
    gap = math.hypot(x, y)
    if gap > total + CONSISTENCY_TOL:
        if not project:
            raise InconsistencyError(
                f"implied eigenvalue gap {gap} exceeds sector weight {total}"
            )
        scale = total / gap if gap > 0 else 0.0
        x, y, gap = x * scale, y * scale, total
        projected = True
    undetermined = gap <= ANGLE_DEGENERACY_GAP
    theta = 0.0 if undetermined else 0.5 * math.atan2(y, x)
    p_hi = (total + gap) / 2
    p_lo = max(0.0, (total - gap) / 2)
    return p_hi, p_lo, theta, undetermined, projected


def solve_canonical(
    d33: JointDistribution,
    d11: JointDistribution,
    d22: JointDistribution,
    project: bool = False,
) -> CanonicalSolution:
    """Invert the three aligned joint tables to the canonical parameters.

    With ``project=False`` tables implying parameters outside the physical
    region (beyond 1e-9) raise InconsistencyError; with ``project=True`` they
    are projected onto the boundary and flagged, which is what the sampled
    pipeline wants.
    """
    t33 = d33.table
    sum_c = t33[0, 0] + t33[1, 1]
    sum_e = t33[0, 1] + t33[1, 0]
    x_c = t33[0, 0] - t33[1, 1]
    x_e = t33[0, 1] - t33[1, 0]
    corr11 = 2 * (d11.table[0, 0] + d11.table[1, 1]) - 1  # dc sin2tc + de sin2te
    corr22 = 2 * (d22.table[0, 0] + d22.table[1, 1]) - 1  # -dc sin2tc + de sin2te
    y_c = (corr11 - corr22) / 2
    y_e = (corr11 + corr22) / 2

    p1, p2, tc, und_c, proj_c = _sector(sum_c, x_c, y_c, project)
    p3, p4, te, und_e, proj_e = _sector(sum_e, x_e, y_e, project)
    total = p1 + p2 + p3 + p4
    p = tuple(v / total for v in (p1, p2, p3, p4))
    return CanonicalSolution(
        CanonicalParams(p, tc, te),
        theta_c_undetermined=und_c,
        theta_e_undetermined=und_e,
        projected=proj_c or proj_e,
    )


# ---------------------------------------------------------------------------
# single qubit
# ---------------------------------------------------------------------------


def qubit_reconstruct(freqs) -> DensityMatrix:
    """rho = I/2 + (dp sigma_3 + d' sigma_1 + d'' sigma_2)/2 from signed averages.

    ``freqs`` is (dp, d', d'').  A Bloch vector outside the unit ball is
    projected radially back onto it (with a ProjectionWarning).
    """
    dp, d1, d2 = (float(v) for v in freqs)
    bloch = np.array([d1, d2, dp])
    norm = np.linalg.norm(bloch)
    if norm > 1.0:
        warnings.warn(
            f"Bloch norm {norm:.6f} > 1; projecting onto the unit ball",
            ProjectionWarning,
            stacklevel=2,
        )
        bloch = bloch / norm
    return DensityMatrix(bloch_density(bloch))


# ---------------------------------------------------------------------------
# frame rotations
# ---------------------------------------------------------------------------


def rot_axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def rot_z(angle: float) -> np.ndarray:
    return rot_axis_angle([0, 0, 1], angle)


def bloch_align(mean):
    """Minimal rotation taking the third ort onto the mean direction.

    Returns (rotation, degenerate).  A zero mean vector leaves the frame
    unchanged and sets the flag; an anti-parallel mean rotates by pi about
    the first ort.
    """
    m = np.asarray(mean, dtype=float)
    norm = np.linalg.norm(m)
    if norm < 1e-12:
        return np.eye(3), True
    direction = m / norm
    cos_angle = float(np.clip(direction[2], -1.0, 1.0))
    if cos_angle > 1.0 - 1e-15:
        return np.eye(3), False
    if cos_angle < -1.0 + 1e-15:
        return rot_axis_angle([1, 0, 0], math.pi), False
    axis = np.cross([0.0, 0.0, 1.0], direction)
    return rot_axis_angle(axis, math.acos(cos_angle)), False


def su2_from_rotation(r: np.ndarray) -> np.ndarray:
    """2x2 unitary U with U (v . sigma) U^dag = (R v) . sigma (up to global phase)."""
    r = np.asarray(r, dtype=float)
    cos_angle = float(np.clip((np.trace(r) - 1) / 2, -1.0, 1.0))
    angle = math.acos(cos_angle)
    sig = pauli_vector()
    if angle < 1e-12:
        return np.eye(2, dtype=complex)
    if angle > math.pi - 1e-9:
        sym = (r + np.eye(3)) / 2
        j = int(np.argmax(np.diag(sym)))
        axis = sym[:, j] / math.sqrt(sym[j, j])
    else:
        skew = (r - r.T) / 2
        axis = np.array([skew[2, 1], skew[0, 2], skew[1, 0]]) / math.sin(angle)
    axis = axis / np.linalg.norm(axis)
    n_dot_sigma = np.tensordot(axis, sig, axes=1)
    return math.cos(angle / 2) * np.eye(2, dtype=complex) - 1j * math.sin(angle / 2) * n_dot_sigma


def direction_observable(rotation: np.ndarray, ort: int) -> np.ndarray:
    """The +/-1 observable along the image of ort (0, 1 or 2) under the rotation."""
    direction = np.asarray(rotation, dtype=float)[:, ort]
    return np.tensordot(direction, pauli_vector(), axes=1)


# ---------------------------------------------------------------------------
# covariance machinery
# ---------------------------------------------------------------------------


def covariance_matrix(cross, atom_means, field_means) -> np.ndarray:
    """V_ab = <sig_a s_b> - <sig_a><s_b> for the transverse observables a, b in {1, 2}."""
    c = np.asarray(cross, dtype=float)
    ma = np.asarray(atom_means, dtype=float)
    mf = np.asarray(field_means, dtype=float)
    if c.shape != (2, 2) or ma.shape != (2,) or mf.shape != (2,):
        raise ValueError("need a 2x2 cross table and two 2-vectors of means")
    if np.any(np.abs(c) > 1 + 1e-9) or np.any(np.abs(ma) > 1 + 1e-9) or np.any(np.abs(mf) > 1 + 1e-9):
        raise ValueError("expectations of +/-1 observables must lie in [-1, 1]")
    return c - np.outer(ma, mf)


def _rot2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def azimuthal_diagonalize(v: np.ndarray):
    """Angles (alpha_a, alpha_f) with R(alpha_a) V R(alpha_f)^T diagonal.

    Solved through the SVD of V with determinant signs folded into the
    diagonal.  Returns (alpha_a, alpha_f, degenerate); a vanishing V leaves
    the angles at zero with the flag set.
    """
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) < 1e-9:
        return 0.0, 0.0, True
    u, _, vt = np.linalg.svd(v)
    if np.linalg.det(u) < 0:
        u = u @ np.diag([1.0, -1.0])
    if np.linalg.det(vt) < 0:
        vt = np.diag([1.0, -1.0]) @ vt
    alpha_a = -math.atan2(u[1, 0], u[0, 0])
    w = vt.T
    alpha_f = -math.atan2(w[1, 0], w[0, 0])
    return alpha_a, alpha_f, False


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def pair_projectors(atom_obs: np.ndarray, field_obs: np.ndarray) -> list[np.ndarray]:
    """The four product counters of a local pair, outcome order 2*ba + bf."""
    pa = eig_projectors(atom_obs)
    pf = eig_projectors(field_obs)
    return [tensor_product(a, f) for a in pa for f in pf]


class BornPairSampler:
    """Joint outcome source for local observable pairs on a fixed dim-4 state."""

    def __init__(self, rho: DensityMatrix, seed: int = 0):
        if rho.dim != 4:
            raise ValueError("pair sampler needs a dim-4 state")
        self.rho = rho
        self.seed = seed

    def probabilities(self, atom_obs, field_obs) -> np.ndarray:
        p = born_probabilities(self.rho, pair_projectors(atom_obs, field_obs))
        return p.reshape(2, 2)

    def sample_events(self, atom_obs, field_obs, n_events: int, series: int) -> np.ndarray:
        p = self.probabilities(atom_obs, field_obs).reshape(-1)
        u = stream_rng(self.seed, series).random(n_events)
        return np.sum(np.cumsum(p)[:-1][None, :] <= u[:, None], axis=1)


class RecordingSampler:
    """Wraps a sampler and keeps the per-series event log and detector definitions."""

    def __init__(self, inner):
        self.inner = inner
        self.log = []

    def probabilities(self, atom_obs, field_obs):
        return self.inner.probabilities(atom_obs, field_obs)

    def sample_events(self, atom_obs, field_obs, n_events, series):
        outcomes = self.inner.sample_events(atom_obs, field_obs, n_events, series)
        self.log.append(
            {
                "series": series,
                "atom_obs": np.asarray(atom_obs),
                "field_obs": np.asarray(field_obs),
                "outcomes": outcomes,
            }
        )
        return outcomes


class ReplaySampler:
    """Serves pre-recorded outcomes, keyed by series index."""

    def __init__(self, outcomes_by_series: dict):
        self.outcomes_by_series = {int(k): np.asarray(v, dtype=int) for k, v in outcomes_by_series.items()}
        self.requests = []

    def sample_events(self, atom_obs, field_obs, n_events, series):
        try:
            outcomes = self.outcomes_by_series[series]
        except KeyError:
            raise ValueError(f"no recorded events for series {series}") from None
        if outcomes.size != n_events:
            raise ValueError(
                f"series {series} has {outcomes.size} recorded events, expected {n_events}"
            )
        self.requests.append(
            {"series": series, "atom_obs": np.asarray(atom_obs), "field_obs": np.asarray(field_obs)}
        )
        return outcomes


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionResult:
    params: CanonicalParams
    rho: DensityMatrix
    atom_frame: np.ndarray
    field_frame: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _table_moments(table: np.ndarray):
    """(atom mean, field mean, correlation) of a 2x2 joint table."""
    sign = np.array([-1.0, 1.0])
    ma = float(sign @ table.sum(axis=1))
    mf = float(sign @ table.sum(axis=0))
    corr = float(sign @ table @ sign)
    return ma, mf, corr


def _table_from_moments(ma: float, mf: float, corr: float):
    """Inverse of _table_moments; clips and renormalizes noisy inputs."""
    sign = np.array([-1.0, 1.0])
    t = 0.25 * (1 + ma * sign[:, None] + mf * sign[None, :] + corr * np.outer(sign, sign))
    clipped = float(-t.min()) if t.min() < 0 else 0.0
    if clipped > 0:
        t = np.clip(t, 0.0, None)
        t = t / t.sum()
    return t, clipped


def _acquire_table(sampler, atom_obs, field_obs, series, events, exact):
    if exact:
        return sampler.probabilities(atom_obs, field_obs)
    outcomes = sampler.sample_events(atom_obs, field_obs, events, series)
    counts = np.bincount(outcomes, minlength=4).reshape(2, 2)
    return counts / counts.sum()


def _transverse_gauge(v_aligned, alpha_a, alpha_f):
    """Shift the azimuthal angles so both canonical sine components come out
    non-negative, keeping the rotated covariance diagonal."""
    candidates = [
        (0.0, 0.0),
        (math.pi / 2, math.pi / 2),
        (math.pi, 0.0),
        (3 * math.pi / 2, math.pi / 2),
    ]
    best = None
    for da, df in candidates:
        vd = _rot2(alpha_a + da) @ v_aligned @ _rot2(alpha_f + df).T
        y_c = (vd[0, 0] - vd[1, 1]) / 2
        y_e = (vd[0, 0] + vd[1, 1]) / 2
        score = min(y_c, y_e)
        if best is None or score > best[0]:
            best = (score, alpha_a + da, alpha_f + df, vd)
    _, aa, af, vd = best
    return aa, af, vd


ALL_PAIRS = [(x, y) for x in range(3) for y in range(3)]
DIAG_PAIRS = [(0, 0), (1, 1), (2, 2)]


def full_reconstruct(
    sampler,
    budget=None,
    mode: str = "minimal5",
    exact: bool = False,
) -> ReconstructionResult:
    """Adaptive reconstruction of a qubit-pair state from local pair measurements.

    minimal5 measures the three aligned pairs, rotates both local frames onto
    the Bloch means, measures the two cross pairs of over-classical
    observables, diagonalizes their covariance and solves the canonical
    system.  full9 measures all nine pairs and additionally inverts all 15
    parameters directly as a validation of the canonical model.  With
    ``exact=True`` Born-rule probabilities replace sampling and ``budget`` is
    ignored.
    """
    if mode not in ("minimal5", "full9"):
        raise ValueError(f"mode must be 'minimal5' or 'full9', got {mode!r}")
    if not exact:
        if budget is None:
            raise ValueError("sampled reconstruction needs a SeriesPlan budget")
        events = budget.events_per_series
        if events < 1:
            raise ValueError("budget allows no events per series")
    else:
        events = 0

    sig = pauli_vector()
    flags = []
    diagnostics: dict = {"mode": mode, "exact": exact}
    clip_total = 0.0

    if mode == "minimal5":
        lab_pairs = DIAG_PAIRS
    else:
        lab_pairs = ALL_PAIRS
    tables = {}
    for series, (x, y) in enumerate(lab_pairs):
        tables[(x, y)] = _acquire_table(sampler, sig[x], sig[y], series, events, exact)

    # local means and the measured block of the lab correlation matrix
    ma = np.zeros(3)
    mf = np.zeros(3)
    t_lab = np.full((3, 3), np.nan)
    ma_acc = [[] for _ in range(3)]
    mf_acc = [[] for _ in range(3)]
    for (x, y), table in tables.items():
        a, f, c = _table_moments(table)
        ma_acc[x].append(a)
        mf_acc[y].append(f)
        t_lab[x, y] = c
    for x in range(3):
        ma[x] = np.mean(ma_acc[x])
        mf[x] = np.mean(mf_acc[x])

    r_a, deg_a = bloch_align(ma)
    r_f, deg_f = bloch_align(mf)
    if deg_a:
        flags.append("alignment_degenerate_atom")
    if deg_f:
        flags.append("alignment_degenerate_field")

    if mode == "minimal5":
        # two cross pairs of over-classical observables in the aligned frames
        a_obs = [direction_observable(r_a, i) for i in range(2)]
        f_obs = [direction_observable(r_f, i) for i in range(2)]
        cross12 = _acquire_table(sampler, a_obs[0], f_obs[1], 3, events, exact)
        cross21 = _acquire_table(sampler, a_obs[1], f_obs[0], 4, events, exact)
        ma1, mf2, t12 = _table_moments(cross12)
        ma2, mf1, t21 = _table_moments(cross21)
        mat = np.array([ma1, ma2])
        mft = np.array([mf1, mf2])
        # lab diagonal correlations pin the unmeasured aligned diagonal:
        # T_xx = sum_jk Ra[x,j] Rf[x,k] T~_jk with the canonical zeros filled in
        m_sys = np.stack(
            [r_a[:, 0] * r_f[:, 0], r_a[:, 1] * r_f[:, 1], r_a[:, 2] * r_f[:, 2]],
            axis=1,
        )
        rhs = np.array(
            [
                t_lab[x, x] - r_a[x, 0] * r_f[x, 1] * t12 - r_a[x, 1] * r_f[x, 0] * t21
                for x in range(3)
            ]
        )
        cond = np.linalg.cond(m_sys)
        diagnostics["aligned_solve_condition"] = float(cond)
        if cond > 1e12:
            flags.append("aligned_solve_illconditioned")
            diag_vals = np.linalg.lstsq(m_sys, rhs, rcond=None)[0]
        else:
            diag_vals = np.linalg.solve(m_sys, rhs)
        t_aligned = np.array(
            [
                [diag_vals[0], t12, 0.0],
                [t21, diag_vals[1], 0.0],
                [0.0, 0.0, diag_vals[2]],
            ]
        )
        series_used = 5
    else:
        # all nine pairs were measured; rotate the full correlation matrix and
        # read the transverse block directly (aligned transverse means vanish
        # by construction of the alignment)
        t_aligned = r_a.T @ t_lab @ r_f
        mat = np.zeros(2)
        mft = np.zeros(2)
        series_used = 9

    # transverse covariance and the azimuthal correction
    v = covariance_matrix(np.clip(t_aligned[:2, :2], -1, 1), mat, mft)
    alpha_a, alpha_f, deg_v = azimuthal_diagonalize(v)
    if deg_v:
        flags.append("covariance_degenerate")
    alpha_a, alpha_f, v_diag = _transverse_gauge(v, alpha_a, alpha_f)
    diagnostics["azimuthal_residual"] = float(
        max(abs(v_diag[0, 1]), abs(v_diag[1, 0]))
    )
    diagnostics["covariance_diagonal"] = [float(v_diag[0, 0]), float(v_diag[1, 1])]

    r_a_tot = r_a @ rot_z(-alpha_a)
    r_f_tot = r_f @ rot_z(-alpha_f)

    # canonical-frame joint tables rebuilt from moments
    m3a = float(np.linalg.norm(ma))
    m3f = float(np.linalg.norm(mf))
    mat_c = _rot2(alpha_a) @ mat
    mft_c = _rot2(alpha_f) @ mft
    corr11 = v_diag[0, 0] + mat_c[0] * mft_c[0]
    corr22 = v_diag[1, 1] + mat_c[1] * mft_c[1]
    table33, c1 = _table_from_moments(m3a, m3f, t_aligned[2, 2])
    table11, c2 = _table_from_moments(mat_c[0], mft_c[0], corr11)
    table22, c3 = _table_from_moments(mat_c[1], mft_c[1], corr22)
    clip_total = c1 + c2 + c3
    if clip_total > 1e-9:
        flags.append("tables_clipped")
    diagnostics["table_clip"] = float(clip_total)

    solution = solve_canonical(
        JointDistribution("33", table33),
        JointDistribution("11", table11),
        JointDistribution("22", table22),
        project=not exact,
    )
    params = solution.params
    if solution.theta_c_undetermined:
        flags.append("theta_c_undetermined")
    if solution.theta_e_undetermined:
        flags.append("theta_e_undetermined")
    if solution.projected:
        flags.append("parameters_projected")

    # gauge-fix the reported parameters, folding the moves into the frames
    flip3 = np.diag([1.0, -1.0, -1.0])
    if params.cat_weight < 0.5 - 1e-12:
        params = params.atom_flip()
        r_a_tot = r_a_tot @ flip3
    if params.atom_mean3 > 1e-12:
        params = params.both_flip()
        r_a_tot = r_a_tot @ flip3
        r_f_tot = r_f_tot @ flip3

    u_a = su2_from_rotation(r_a_tot)
    u_f = su2_from_rotation(r_f_tot)
    frame = tensor_product(u_a, u_f)
    rho_model = DensityMatrix(
        frame @ canonical_state(params).matrix @ frame.conj().T, tensor_dims=(2, 2)
    )

    if mode == "full9":
        raw = 0.25 * (
            np.eye(4, dtype=complex)
            + sum(ma[x] * tensor_product(sig[x], np.eye(2)) for x in range(3))
            + sum(mf[y] * tensor_product(np.eye(2), sig[y]) for y in range(3))
            + sum(t_lab[x, y] * tensor_product(sig[x], sig[y]) for x, y in ALL_PAIRS)
        )
        rho_direct, clipped = project_to_density(raw)
        if clipped > 1e-9:
            flags.append("direct_inversion_projected")
        diagnostics["direct_projection"] = float(clipped)
        diagnostics["canonical_model_residual"] = trace_distance(rho_direct, rho_model)
        rho = rho_direct
    else:
        rho = rho_model

    diagnostics["flags"] = flags
    diagnostics["events_per_series"] = events
    diagnostics["series_used"] = series_used
    return ReconstructionResult(params, rho, u_a, u_f, diagnostics)


def project_to_density(matrix: np.ndarray, tensor_dims=None):
    """Nearest-density projection: hermitize, clip negative eigenvalues, renormalize.

    Returns (DensityMatrix, clipped_weight)."""
    m = np.asarray(matrix, dtype=complex)
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    clipped = float(-w[w < 0].sum()) if np.any(w < 0) else 0.0
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise InconsistencyError("projection collapsed to the zero matrix")
    rho = (v * (w / total)) @ v.conj().T
    return DensityMatrix(rho, tensor_dims=tensor_dims), clipped


# ---------------------------------------------------------------------------
# ququart detector family and linear inversion
# ---------------------------------------------------------------------------


def ladder_operators():
    """Spin-3/2 ladder pair (J_plus, J_minus) with J_minus = J_plus^dagger."""
    jp = np.zeros((4, 4), dtype=complex)
    jp[1, 0] = math.sqrt(3)
    jp[2, 1] = 2.0
    jp[3, 2] = math.sqrt(3)
    return jp, jp.conj().T


def j_observable(k: int) -> np.ndarray:
    """J_k = exp(-i pi (k-1)/4) J_+ + exp(+i pi (k-1)/4) J_-, k = 1..4.

    Quarter-turn phases spread the four transverse ladder directions over the
    half circle; half-turn steps would repeat the same eigenbases with flipped
    signs and leave the design rank-deficient.
    """
    if k == 0:
        return np.diag([-1.5, -0.5, 0.5, 1.5]).astype(complex)
    if not 1 <= k <= 4:
        raise ValueError("k must be 0..4")
    jp, jm = ladder_operators()
    phase = np.exp(-1j * math.pi * (k - 1) / 4)
    return phase * jp + phase.conj() * jm


def j_observables() -> DetectorBank:
    """Five-detector bank: the J_0 eigenbasis plus the four J_k eigenbases."""
    return DetectorBank(
        tuple(Detector(k, tuple(eig_projectors(j_observable(k)))) for k in range(5))
    )


def _hermitian_from_vector(h: np.ndarray) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[np.diag_indices(4)] = h[:4]
    idx = 4
    for i in range(4):
        for j in range(i + 1, 4):
            rho[i, j] = h[idx] + 1j * h[idx + 1]
            rho[j, i] = h[idx] - 1j * h[idx + 1]
            idx += 2
    return rho


def _design_row(projector: np.ndarray) -> np.ndarray:
    row = np.empty(16)
    row[:4] = np.diag(projector).real
    idx = 4
    for i in range(4):
        for j in range(i + 1, 4):
            row[idx] = 2 * projector[i, j].real
            row[idx + 1] = 2 * projector[i, j].imag
            idx += 2
    return row


@dataclass(frozen=True)
class InversionResult:
    rho: DensityMatrix
    condition_number: float
    residual: float


def ququart_linear_inversion(probabilities, bank: DetectorBank | None = None) -> InversionResult:
    """Least-squares inversion of five detector distributions to a dim-4 state.

    ``probabilities`` holds one 4-outcome distribution per detector, in bank
    order.  The recovered Hermitian matrix is projected to the nearest density
    matrix; a rank-deficient design raises IncompleteDesignError carrying the
    condition number.
    """
    if bank is None:
        bank = j_observables()
    probs = [np.asarray(p, dtype=float).reshape(-1) for p in probabilities]
    if len(probs) != len(bank.detectors):
        raise ValueError("need one distribution per detector")
    rows, rhs = [], []
    for det, p in zip(bank.detectors, probs):
        if p.size != det.n_outcomes:
            raise ValueError(f"detector {det.id} expects {det.n_outcomes} outcomes")
        for proj, val in zip(det.projectors, p):
            rows.append(_design_row(proj))
            rhs.append(val)
    a = np.asarray(rows)
    b = np.asarray(rhs)
    singular = np.linalg.svd(a, compute_uv=False)
    cond = float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf")
    if singular[-1] / singular[0] < 1e-10:
        raise IncompleteDesignError(
            "detector design is informationally incomplete", condition_number=cond
        )
    h = np.linalg.lstsq(a, b, rcond=None)[0]
    residual = float(np.max(np.abs(a @ h - b)))
    rho, _ = project_to_density(_hermitian_from_vector(h), tensor_dims=(2, 2))
    return InversionResult(rho, cond, residual)
