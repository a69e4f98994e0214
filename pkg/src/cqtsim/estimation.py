"""Statistical layer: count-ratio fidelities, single-qubit maximum-likelihood
tomography, the mixed-state background subtraction and Poisson-resampled
uncertainties.

The background correction implements the subtraction procedure used for the
higher-order emission terms: the receiver's raw density matrix is assumed to
contain a maximally mixed admixture of weight ``w``; removing it and
renormalizing acts on fidelities as F -> (F - w/2) / (1 - w).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import NAMED_KETS, fidelity


@dataclass
class ProjectionCounts:
    """Measured counts behind a set of polarization projectors."""

    settings: list                      # [(jones ket (2,), count >= 0), ...]
    labels: list | None = None

    def __post_init__(self):
        cleaned = []
        for ket, count in self.settings:
            ket = np.asarray(ket, dtype=complex).ravel()
            if ket.shape != (2,):
                raise ValueError("projector kets must be single-qubit")
            norm = np.linalg.norm(ket)
            if norm == 0:
                raise ValueError("zero projector ket")
            if count < 0:
                raise ValueError("counts must be non-negative")
            cleaned.append((ket / norm, float(count)))
        self.settings = cleaned
        if self.labels is None:
            self.labels = [f"s{i}" for i in range(len(cleaned))]

    def projectors(self) -> list:
        return [np.outer(k, k.conj()) for k, _ in self.settings]

    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self.settings])

    def is_informationally_complete(self) -> bool:
        # projectors must span the 4-dimensional operator space
        vecs = [p.ravel() for p in self.projectors()]
        return np.linalg.matrix_rank(np.array(vecs), tol=1e-10) >= 4


def axial_counts(counts_by_name: dict) -> ProjectionCounts:
    """Counts over the six axial settings, keyed h/v/plus/minus/r/l."""
    settings = [(NAMED_KETS[name], counts_by_name[name]) for name in counts_by_name]
    return ProjectionCounts(settings, labels=list(counts_by_name))


@dataclass
class FidelityEstimate:
    value: float
    uncertainty: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("fidelity outside [0, 1]")
        if self.uncertainty < 0.0:
            raise ValueError("negative uncertainty")


def fidelity_from_counts(f_parallel: float, f_perp: float) -> float:
    """Fidelity as the parallel share of parallel-plus-orthogonal rates."""
    if f_parallel < 0 or f_perp < 0:
        raise ValueError("rates must be non-negative")
    total = f_parallel + f_perp
    if total <= 0:
        raise ValueError("both rates vanish")
    return f_parallel / total


# --- maximum-likelihood reconstruction ----------------------------------------

@dataclass
class MLResult:
    rho: np.ndarray
    converged: bool
    iterations: int
    log_likelihoods: list = field(repr=False, default_factory=list)


def _log_likelihood(rho, projectors, counts) -> float:
    out = 0.0
    for p, n in zip(projectors, counts):
        if n == 0:
            continue
        prob = float(np.real(np.trace(p @ rho)))
        if prob <= 1e-300:
            return -math.inf
        out += n * math.log(prob)
    return out


def ml_reconstruct(counts: ProjectionCounts, tol: float = 1e-10,
                   max_iterations: int = 100_000) -> MLResult:
    """Iterative fixed-point maximum-likelihood estimate of a qubit state.

    Runs the R rho R update, falling back to diluted steps whenever a full
    step would lower the likelihood, so the likelihood trace is monotone by
    construction.  Stops when the relative log-likelihood change drops below
    ``tol``; non-convergence is flagged on the result, never raised.
    """
    if not counts.is_informationally_complete():
        raise ValueError("projector set is not informationally complete")
    projectors = counts.projectors()
    ns = counts.counts()
    if np.sum(ns) <= 0:
        raise ValueError("all counts are zero")
    rho = np.eye(2, dtype=complex) / 2.0
    loglik = _log_likelihood(rho, projectors, ns)
    trace = [loglik]
    total = float(np.sum(ns))
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        r = np.zeros((2, 2), dtype=complex)
        for p, n in zip(projectors, ns):
            if n == 0:
                continue
            prob = float(np.real(np.trace(p @ rho)))
            if prob <= 1e-300:
                continue
            r += (n / prob) * p
        r /= total
        alpha = 1.0
        new_rho = None
        new_loglik = -math.inf
        while alpha > 1e-6:
            step = (1 - alpha) * np.eye(2, dtype=complex) + alpha * r
            cand = step @ rho @ step.conj().T
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.real(np.trace(cand))
            cand_loglik = _log_likelihood(cand, projectors, ns)
            if cand_loglik >= loglik - 1e-15:
                new_rho, new_loglik = cand, cand_loglik
                break
            alpha /= 2.0
        if new_rho is None:
            break
        delta = abs(new_loglik - loglik)
        rho, loglik = new_rho, max(new_loglik, loglik)
        trace.append(loglik)
        if delta < tol * max(1.0, abs(loglik)):
            converged = True
            break
    return MLResult(rho=rho, converged=converged, iterations=iterations,
                    log_likelihoods=trace)


def ml_oracle_bloch_search(counts: ProjectionCounts) -> np.ndarray:
    """Direct likelihood maximization over the Bloch ball (reference method)."""
    from scipy import optimize

    projectors = counts.projectors()
    ns = counts.counts()
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
              np.array([[1, 0], [0, -1]])]

    def rho_of(r):
        out = np.eye(2, dtype=complex) / 2
        for ri, p in zip(r, paulis):
            out = out + 0.5 * ri * p.astype(complex)
        return out

    def negloglik(r):
        if np.dot(r, r) > 1.0:
            r = r / math.sqrt(np.dot(r, r))
        return -_log_likelihood(rho_of(r), projectors, ns)

    best = None
    starts = [np.zeros(3)] + [0.7 * np.eye(3)[i] * s for i in range(3) for s in (1, -1)]
    for x0 in starts:
        res = optimize.minimize(
            negloglik, x0, method="SLSQP",
            constraints=[{"type": "ineq", "fun": lambda r: 1.0 - np.dot(r, r)}],
            options={"maxiter": 2000, "ftol": 1e-14})
        if best is None or res.fun < best.fun:
            best = res
    r = best.x
    if np.dot(r, r) > 1.0:
        r = r / math.sqrt(np.dot(r, r))
    return rho_of(r)


# --- background subtraction ------------------------------------------------------

def corrected_fidelity(f_raw: float, w: float) -> float:
    """Fidelity after removing a maximally mixed admixture of weight ``w``."""
    if not 0.0 <= w < 1.0:
        raise ValueError("background weight must lie in [0, 1)")
    return (f_raw - w / 2.0) / (1.0 - w)


def correct_for_background(raw: np.ndarray, w: float) -> np.ndarray:
    """Subtract a maximally mixed admixture of weight ``w`` and renormalize.

    Noisy inputs can push the difference slightly outside the physical cone:
    small negative eigenvalues are clipped to zero (with a warning); a large
    violation is a hard error.
    """
    if not 0.0 <= w < 1.0:
        raise ValueError("background weight must lie in [0, 1)")
    raw = np.asarray(raw, dtype=complex)
    dim = raw.shape[0]
    out = (raw - w * np.eye(dim) / dim) / (1.0 - w)
    out = 0.5 * (out + out.conj().T)
    eigvals, eigvecs = np.linalg.eigh(out)
    if eigvals.min() < -1e-3:
        raise ValueError(f"background subtraction produced a severely "
                         f"non-physical state (min eigenvalue {eigvals.min():.2e})")
    if eigvals.min() < -1e-9:
        warnings.warn("background subtraction left slightly negative "
                      "eigenvalues; clipping to the physical cone")
    if eigvals.min() < 0:
        eigvals = np.clip(eigvals, 0.0, None)
        out = (eigvecs * eigvals) @ eigvecs.conj().T
        out /= np.real(np.trace(out))
    return out


# --- Poisson resampling --------------------------------------------------------------

def poisson_uncertainty(data, seed: int, n_resamples: int = 10_000,
                        background_w: float = 0.0,
                        target=None) -> FidelityEstimate:
    """Poisson-resampled fidelity estimate.

    ``data`` is either a pair of (parallel, orthogonal) counts, in which case
    the downstream quantity is the count-ratio fidelity (optionally corrected
    for the background weight), or a ProjectionCounts whose resamples are
    pushed through the maximum-likelihood reconstruction against ``target``.
    Deterministic for a fixed seed.
    """
    if n_resamples < 100:
        raise ValueError("use at least 100 resamples")
    if seed is None:
        raise ValueError("an explicit seed is required")
    rng = np.random.default_rng(seed)

    if isinstance(data, ProjectionCounts):
        if target is None:
            raise ValueError("tomography resampling needs a target ket")
        target = np.asarray(target, dtype=complex).ravel()
        means = data.counts()
        if means.sum() <= 0:
            raise ValueError("all counts are zero")
        values = []
        for _ in range(n_resamples):
            resampled = rng.poisson(means).astype(float)
            if resampled.sum() == 0:
                continue
            res = ml_reconstruct(ProjectionCounts(
                [(k, c) for (k, _), c in zip(data.settings, resampled)]))
            rho = res.rho
            if background_w:
                rho = correct_for_background(rho, background_w)
            values.append(min(max(fidelity(rho, target), 0.0), 1.0))
        values = np.array(values)
    else:
        f_par, f_perp = data
        if f_par + f_perp <= 0:
            raise ValueError("all counts are zero")
        draws = rng.poisson((f_par, f_perp), size=(n_resamples, 2)).astype(float)
        totals = draws.sum(axis=1)
        keep = totals > 0
        values = draws[keep, 0] / totals[keep]
        if background_w:
            values = (values - background_w / 2.0) / (1.0 - background_w)
        values = np.clip(values, 0.0, 1.0)

    if values.size == 0:
        raise ValueError("every resample was empty")
    return FidelityEstimate(value=float(np.mean(values)),
                            uncertainty=float(np.std(values)))


# --- CSV interfaces --------------------------------------------------------------------

_PROJECTOR_NAMES = {"h", "v", "d", "a", "r", "l", "plus", "minus"}


def parse_projector(spec: str) -> np.ndarray:
    """Projector column format: a named state or 'alpha;beta' complex pair."""
    spec = spec.strip()
    if spec.lower() in _PROJECTOR_NAMES:
        return NAMED_KETS[spec.lower()]
    parts = spec.split(";")
    if len(parts) != 2:
        raise ValueError(f"cannot parse projector spec {spec!r}")
    ket = np.array([complex(parts[0]), complex(parts[1])])
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ValueError("zero projector ket")
    return ket / norm


def read_counts_csv(path) -> ProjectionCounts:
    """Counts table: columns ``label, projector, count`` with a header row."""
    settings = []
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise ValueError("empty counts file")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise ValueError(f"malformed counts row: {row}")
            labels.append(row[0].strip())
            settings.append((parse_projector(row[1]), float(row[2])))
    if not settings:
        raise ValueError("no counts rows found")
    return ProjectionCounts(settings, labels=labels)
