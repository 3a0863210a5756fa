"""Stochastic simulation of the measurement process.

A Preparator emits a labelled sequence of pure states; a Registrator routes
each event to a detector (a complete set of orthogonal counters) and samples
the outcome by the Born rule.  All randomness flows through seeded Philox
streams, so records are pure functions of (inputs, seed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    DensityMatrix,
    PureState,
    bloch_density,
    born_probabilities,
    eig_projectors,
    hermitian_eig,
    pauli,
    trace_distance,
    validate_distribution,
)
from .errors import BalanceWarning, StructureError
from .rng import stream_rng

# the indeterminability gate, in units of the frequency uncertainty 1/(2 sqrt(K))
SIGNIFICANCE_FACTOR = 5.0


@dataclass(frozen=True)
class StateEnsemble:
    """Pure states the source can emit, labelled 1..N."""

    states: tuple

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("ensemble needs at least one state")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise StructureError(f"ensemble states have mixed dimensions {dims}")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def labels(self) -> range:
        return range(1, len(self.states) + 1)


@dataclass(frozen=True)
class PreparationSequence:
    """Ordered source labels n_1..n_K plus the policy and seed that made them."""

    labels: np.ndarray
    policy: str
    seed: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.size < 1:
            raise ValueError("sequence must contain at least one event")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.size

    def counts(self, n_states: int) -> np.ndarray:
        return np.bincount(self.labels - 1, minlength=n_states)


@dataclass(frozen=True)
class Detector:
    """A non-degenerate observable presented as its complete counter set."""

    id: int
    projectors: tuple

    def __post_init__(self):
        projs = tuple(np.asarray(p, dtype=complex) for p in self.projectors)
        dim = projs[0].shape[0]
        total = sum(projs)
        if np.max(np.abs(total - np.eye(dim))) > 1e-10:
            raise ValueError(f"detector {self.id}: projectors do not sum to identity")
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.projectors)


def detector_from_observable(det_id: int, observable: np.ndarray) -> Detector:
    """Counters of a non-degenerate observable, outcome order by ascending eigenvalue."""
    return Detector(det_id, tuple(eig_projectors(observable)))


def pauli_bank() -> "DetectorBank":
    """The three qubit detectors sigma_1, sigma_2, sigma_3, in that order."""
    return DetectorBank(
        tuple(detector_from_observable(i, pauli(i)) for i in (1, 2, 3))
    )


@dataclass(frozen=True)
class DetectorBank:
    detectors: tuple

    def __post_init__(self):
        dets = tuple(self.detectors)
        if not dets:
            raise ValueError("bank needs at least one detector")
        dims = {d.dim for d in dets}
        if len(dims) != 1:
            raise StructureError(f"bank detectors have mixed dimensions {dims}")
        ids = [d.id for d in dets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate detector ids in bank")
        object.__setattr__(self, "detectors", dets)

    @property
    def dim(self) -> int:
        return self.detectors[0].dim

    def by_id(self, det_id: int) -> Detector:
        for d in self.detectors:
            if d.id == det_id:
                return d
        raise KeyError(f"no detector with id {det_id}")


@dataclass(frozen=True)
class RegistrationRecord:
    """Per-event (detector id, outcome) pairs with their RNG seed."""

    detector_ids: np.ndarray
    outcomes: np.ndarray
    seed: int

    def __post_init__(self):
        d = np.asarray(self.detector_ids, dtype=int)
        m = np.asarray(self.outcomes, dtype=int)
        if d.shape != m.shape or d.ndim != 1:
            raise ValueError("detector_ids and outcomes must be equal-length vectors")
        object.__setattr__(self, "detector_ids", d)
        object.__setattr__(self, "outcomes", m)

    def __len__(self) -> int:
        return self.outcomes.size

    @property
    def events(self) -> list:
        return list(zip(self.detector_ids.tolist(), self.outcomes.tolist()))


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Apportion ``total`` among weights; ties go to the lowest label."""
    quota = weights * total
    counts = np.floor(quota).astype(int)
    remainder = total - counts.sum()
    if remainder > 0:
        # stable sort keeps the lowest label first among equal remainders
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def prepare_sequence(
    ensemble: StateEnsemble, weights, k: int, policy: str, seed: int, stream: int = 0
) -> PreparationSequence:
    """Emit K labels, either independently (iid) or with exact counts (balanced).

    ``stream`` selects an independent substream of the seed, so coordinated
    per-series preparations stay reproducible in isolation.
    """
    w = validate_distribution(weights)
    if w.size != ensemble.size:
        raise ValueError("weights length must match ensemble size")
    if k < 1:
        raise ValueError("sequence length must be at least 1")
    rng = stream_rng(seed, stream)
    if policy == "iid":
        labels = rng.choice(ensemble.size, size=k, p=w) + 1
    elif policy == "balanced":
        counts = _largest_remainder(w, k)
        dropped = (w > 0) & (counts == 0)
        if np.any(dropped):
            warnings.warn(
                f"labels {np.flatnonzero(dropped) + 1} have nonzero weight but "
                "zero events; exact balancing is impossible at this K",
                BalanceWarning,
                stacklevel=2,
            )
        labels = np.repeat(np.arange(1, ensemble.size + 1), counts)
        rng.shuffle(labels)
    else:
        raise ValueError(f"policy must be 'iid' or 'balanced', got {policy!r}")
    return PreparationSequence(labels, policy, seed)


def _outcome_tables(ensemble: StateEnsemble, detector: Detector) -> np.ndarray:
    rows = [
        born_probabilities(s.density_matrix(), detector.projectors)
        for s in ensemble.states
    ]
    return np.asarray(rows)


def _sample_outcomes(prob_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(prob_rows, axis=1)
    return np.sum(cum[:, :-1] <= u[:, None], axis=1)


def register(
    seq: PreparationSequence,
    ensemble: StateEnsemble,
    bank: DetectorBank,
    detector_policy,
    seed: int,
) -> RegistrationRecord:
    """Route each event to a detector and sample its outcome by the Born rule.

    ``detector_policy`` is 'round_robin', a fixed detector id, or a list of
    detector ids applied to consecutive near-equal chunks of the sequence
    (one independent RNG stream per chunk).
    """
    if ensemble.dim != bank.dim:
        raise StructureError(
            f"ensemble dimension {ensemble.dim} != detector dimension {bank.dim}"
        )
    k = len(seq)
    bank_ids = [d.id for d in bank.detectors]
    if detector_policy == "round_robin":
        det_ids = np.resize(np.asarray(bank_ids, dtype=int), k)
        u = stream_rng(seed).random(k)
    elif isinstance(detector_policy, int):
        bank.by_id(detector_policy)
        det_ids = np.full(k, detector_policy, dtype=int)
        u = stream_rng(seed).random(k)
    else:
        series_ids = [int(d) for d in detector_policy]
        for det_id in series_ids:
            bank.by_id(det_id)
        chunks = np.array_split(np.arange(k), len(series_ids))
        det_ids = np.empty(k, dtype=int)
        u = np.empty(k)
        for i, (chunk, det_id) in enumerate(zip(chunks, series_ids)):
            det_ids[chunk] = det_id
            u[chunk] = stream_rng(seed, i).random(chunk.size)
    label_idx = seq.labels - 1
    outcomes = np.empty(k, dtype=int)
    for det in bank.detectors:
        mask = det_ids == det.id
        if not np.any(mask):
            continue
        table = _outcome_tables(ensemble, det)
        outcomes[mask] = _sample_outcomes(table[label_idx[mask]], u[mask])
    return RegistrationRecord(det_ids, outcomes, seed)


def subsequence(record: RegistrationRecord, det_id: int) -> RegistrationRecord:
    """Order-preserving restriction to the events of one detector."""
    mask = record.detector_ids == det_id
    return RegistrationRecord(
        record.detector_ids[mask], record.outcomes[mask], record.seed
    )


def source_density_matrix(
    seq: PreparationSequence, ensemble: StateEnsemble
) -> DensityMatrix:
    """rho_S = sum_n (K_n / K) |psi_n><psi_n|."""
    counts = seq.counts(ensemble.size)
    mix = sum(
        (c / len(seq)) * s.projector()
        for c, s in zip(counts, ensemble.states)
        if c > 0
    )
    return DensityMatrix(mix)


def per_detector_density(
    seq: PreparationSequence,
    record: RegistrationRecord,
    ensemble: StateEnsemble,
    det_id: int,
) -> DensityMatrix:
    """Mixture of the states whose events were routed to one detector."""
    mask = record.detector_ids == det_id
    if not np.any(mask):
        raise ValueError(f"no events were routed to detector {det_id}")
    labels = seq.labels[mask]
    counts = np.bincount(labels - 1, minlength=ensemble.size)
    mix = sum(
        (c / labels.size) * s.projector()
        for c, s in zip(counts, ensemble.states)
        if c > 0
    )
    return DensityMatrix(mix)


def sequence_multiplicity(counts) -> int:
    """Number of distinct sequences sharing these per-label counts, K!/prod K_n!."""
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts) or sum(counts) < 1:
        raise ValueError("counts must be non-negative with a positive total")
    m = math.factorial(sum(counts))
    for c in counts:
        m //= math.factorial(c)
    return m


@dataclass(frozen=True)
class BasisEstimate:
    """Outcome of the three-observable basis estimation."""

    determinable: bool
    bloch: np.ndarray
    threshold: float
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None


def basis_estimation(records, significance: float = SIGNIFICANCE_FACTOR) -> BasisEstimate:
    """Estimate the source eigenbasis from sigma_1, sigma_2, sigma_3 records.

    Each record's counter difference (K_1 - K_0) / K is an unbiased estimate of
    the matching state parameter (d', d'', delta p).  The verdict is
    indeterminable when every estimate stays strictly below ``significance``
    units of the frequency uncertainty 1 / (2 sqrt(K)); on the boundary the
    basis counts as determinable.
    """
    records = list(records)
    if len(records) != 3:
        raise ValueError("basis_estimation needs exactly three records")
    lengths = {len(r) for r in records}
    if len(lengths) != 1:
        raise ValueError(f"records have different lengths {sorted(lengths)}")
    k = lengths.pop()
    if k < 1:
        raise ValueError("records are empty")
    est = np.array([np.mean(2 * r.outcomes - 1) for r in records])
    threshold = significance * 0.5 / math.sqrt(k)
    if np.all(np.abs(est) < threshold):
        return BasisEstimate(False, est, threshold)
    w, v = hermitian_eig(bloch_density(est))
    return BasisEstimate(True, est, threshold, eigenvalues=w, eigenvectors=v)


@dataclass(frozen=True)
class EavesdropReport:
    """Diagnostics available to a registrator without source coordination."""

    trace_distances: tuple
    nondemolition_candidates: tuple
    nondemolition_candidate: bool
    basis_verdict: str
    basis: BasisEstimate | None
    source_counts: tuple

    def to_json_dict(self) -> dict:
        out = {
            "trace_distance": list(self.trace_distances),
            "nondemolition_candidate": self.nondemolition_candidate,
            "basis_verdict": self.basis_verdict,
        }
        if self.basis is not None:
            out["bloch"] = self.basis.bloch.tolist()
            out["threshold"] = self.basis.threshold
        out["source_counts"] = list(self.source_counts)
        return out


def _is_relabeling(labels: np.ndarray, outcomes: np.ndarray) -> bool:
    """True when outcomes reproduce the labels through some injective renaming."""
    forward: dict[int, int] = {}
    seen_outcomes: set[int] = set()
    for n, m in zip(labels.tolist(), outcomes.tolist()):
        if n in forward:
            if forward[n] != m:
                return False
        else:
            if m in seen_outcomes:
                return False
            forward[n] = m
            seen_outcomes.add(m)
    return True


def eavesdrop_report(
    seq: PreparationSequence,
    record: RegistrationRecord,
    ensemble: StateEnsemble,
    bank: DetectorBank,
) -> EavesdropReport:
    """Trace distances to the source mixture, relabeling test, and basis verdict."""
    rho_s = source_density_matrix(seq, ensemble)
    distances = []
    candidates = []
    subs = []
    for det in bank.detectors:
        mask = record.detector_ids == det.id
        sub = subsequence(record, det.id)
        subs.append(sub)
        if len(sub) == 0:
            distances.append(float("nan"))
            candidates.append(False)
            continue
        rho_d = per_detector_density(seq, record, ensemble, det.id)
        distances.append(trace_distance(rho_d, rho_s))
        candidates.append(_is_relabeling(seq.labels[mask], sub.outcomes))

    verdict = "not_applicable"
    basis = None
    if (
        bank.dim == 2
        and len(bank.detectors) == 3
        and all(d.n_outcomes == 2 for d in bank.detectors)
        and all(len(s) > 0 for s in subs)
    ):
        k_min = min(len(s) for s in subs)
        trimmed = [
            RegistrationRecord(s.detector_ids[:k_min], s.outcomes[:k_min], s.seed)
            for s in subs
        ]
        basis = basis_estimation(trimmed)
        verdict = "determinable" if basis.determinable else "indeterminable"

    return EavesdropReport(
        trace_distances=tuple(distances),
        nondemolition_candidates=tuple(candidates),
        nondemolition_candidate=any(candidates),
        basis_verdict=verdict,
        basis=basis,
        source_counts=tuple(seq.counts(ensemble.size).tolist()),
    )
