"""Sparse Fock-state machinery for polarization-encoded photonic modes.

A mode is a ``(spatial, polarization)`` pair, a basis state is a sparse
occupation vector over modes, and a pure state is a complex superposition
of basis states.  Nothing in the teleportation pipeline ever exceeds a few
dozen terms, so plain dicts keyed by canonical occupation tuples beat any
dense representation and keep every operation exact.

Qubit encoding used throughout the package: |H> -> basis 0, |V> -> basis 1.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

H = "H"
V = "V"
POLARIZATIONS = (H, V)

DEFAULT_N_MAX = 4
PRUNE_THRESHOLD = 1e-15

# Single-qubit polarization kets (column vectors of length 2).
KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
KET_A = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
KET_R = np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0)
KET_L = np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2.0)

NAMED_KETS = {
    "h": KET_H,
    "v": KET_V,
    "d": KET_D,
    "a": KET_A,
    "plus": KET_D,
    "minus": KET_A,
    "r": KET_R,
    "l": KET_L,
}


class ModeOverlapError(ValueError):
    """Tensor factors share a (spatial, polarization) mode."""


class SectorError(ValueError):
    """State lies outside the photon-number sector an operation expects."""


def mode(spatial: int, pol: str) -> tuple:
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}")
    return (int(spatial), pol)


def occupation(counts) -> tuple:
    """Canonical occupation key: sorted ((spatial, pol), n) pairs, zeros dropped."""
    if isinstance(counts, Mapping):
        counts = counts.items()
    merged: dict = {}
    for m, n in counts:
        spatial, pol = m
        if pol not in POLARIZATIONS:
            raise ValueError(f"bad polarization label {pol!r}")
        n = int(n)
        if n < 0:
            raise ValueError("photon counts must be non-negative")
        if n:
            key = (int(spatial), pol)
            merged[key] = merged.get(key, 0) + n
    return tuple(sorted(merged.items()))


def total_photons(occ: tuple) -> int:
    return sum(n for _, n in occ)


def spatial_counts(occ: tuple) -> dict:
    out: dict = {}
    for (spatial, _), n in occ:
        out[spatial] = out.get(spatial, 0) + n
    return out


class PureState:
    """Sparse pure photonic state: canonical occupation tuple -> amplitude."""

    def __init__(self, terms: Mapping, n_max: int = DEFAULT_N_MAX,
                 prune: float = PRUNE_THRESHOLD):
        self.n_max = int(n_max)
        data: dict = {}
        for occ, amp in terms.items():
            key = occupation(occ)
            amp = complex(amp)
            if abs(amp) < prune:
                continue
            if total_photons(key) > self.n_max:
                raise SectorError(
                    f"term with {total_photons(key)} photons exceeds n_max={self.n_max}")
            data[key] = data.get(key, 0.0j) + amp
        self.terms = {k: a for k, a in data.items() if abs(a) >= prune}

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        bits = ", ".join(f"{occ}: {amp:.4g}" for occ, amp in sorted(self.terms.items()))
        return f"PureState({{{bits}}})"

    def items(self):
        return self.terms.items()

    def amplitude(self, occ) -> complex:
        return self.terms.get(occupation(occ), 0.0j)

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "PureState":
        n = math.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return PureState({k: a / n for k, a in self.terms.items()}, n_max=self.n_max)

    def scaled(self, factor: complex) -> "PureState":
        return PureState({k: a * factor for k, a in self.terms.items()}, n_max=self.n_max)

    def modes(self) -> set:
        out: set = set()
        for occ in self.terms:
            out.update(m for m, _ in occ)
        return out


def vacuum(n_max: int = DEFAULT_N_MAX) -> PureState:
    return PureState({(): 1.0}, n_max=n_max)


def basis_state(counts, n_max: int = DEFAULT_N_MAX) -> PureState:
    """Single Fock basis ket with unit amplitude, e.g. basis_state({(1, H): 1})."""
    return PureState({occupation(counts): 1.0}, n_max=n_max)


def single_photon(spatial: int, jones: np.ndarray, n_max: int = DEFAULT_N_MAX) -> PureState:
    """One photon in the given spatial mode with polarization ket ``jones``."""
    jones = np.asarray(jones, dtype=complex)
    return PureState({
        occupation({(spatial, H): 1}): jones[0],
        occupation({(spatial, V): 1}): jones[1],
    }, n_max=n_max)


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product <a|b>."""
    if len(b.terms) < len(a.terms):
        return complex(np.conj(overlap(b, a)))
    return sum(np.conj(amp) * b.terms.get(occ, 0.0j) for occ, amp in a.terms.items())


def tensor(a: PureState, b: PureState, n_max: int | None = None) -> PureState:
    """Compose states on disjoint mode sets; drops terms above the truncation."""
    if a.modes() & b.modes():
        raise ModeOverlapError(f"overlapping modes: {sorted(a.modes() & b.modes())}")
    if n_max is None:
        n_max = max(a.n_max, b.n_max)
    out: dict = {}
    for occ_a, amp_a in a.terms.items():
        for occ_b, amp_b in b.terms.items():
            if total_photons(occ_a) + total_photons(occ_b) > n_max:
                continue
            key = occupation(list(occ_a) + list(occ_b))
            out[key] = out.get(key, 0.0j) + amp_a * amp_b
    return PureState(out, n_max=n_max)


def project(state: PureState, predicate: Callable[[tuple], bool],
            empty_tol: float = 1e-14):
    """Project onto the terms selected by ``predicate``.

    Returns ``(renormalized_state, probability)`` where the probability is the
    pre-renormalization weight of the kept terms.  An (almost) empty projection
    returns ``(None, probability)``; whether that is an error is the caller's
    call.
    """
    kept = {occ: amp for occ, amp in state.terms.items() if predicate(occ)}
    prob = float(sum(abs(a) ** 2 for a in kept.values()))
    if prob < empty_tol:
        return None, prob
    scale = 1.0 / math.sqrt(prob)
    return PureState({k: a * scale for k, a in kept.items()}, n_max=state.n_max), prob


def clicks_at(spatials: Iterable[int]) -> Callable[[tuple], bool]:
    """Predicate: every listed spatial mode holds at least one photon (threshold click)."""
    spatials = tuple(spatials)

    def pred(occ: tuple) -> bool:
        counts = spatial_counts(occ)
        return all(counts.get(s, 0) >= 1 for s in spatials)

    return pred


def exactly_one_at(spatials: Iterable[int]) -> Callable[[tuple], bool]:
    spatials = tuple(spatials)

    def pred(occ: tuple) -> bool:
        counts = spatial_counts(occ)
        return all(counts.get(s, 0) == 1 for s in spatials)

    return pred


def to_qubit_density(state: PureState, spatials: Sequence[int]) -> np.ndarray:
    """Map the one-photon-per-listed-mode sector to an n-qubit density operator.

    Every listed spatial mode must carry exactly one photon in every term
    (post-select first).  Unlisted modes are traced out.  The result is
    trace-normalized.
    """
    spatials = list(spatials)
    n = len(spatials)
    dim = 2 ** n
    vectors: dict = {}
    for occ, amp in state.terms.items():
        counts = spatial_counts(occ)
        idx = 0
        env = []
        for (spatial, pol), cnt in occ:
            if spatial not in spatials:
                env.append(((spatial, pol), cnt))
        for s in spatials:
            if counts.get(s, 0) != 1:
                raise SectorError(
                    f"spatial mode {s} carries {counts.get(s, 0)} photons in a term; "
                    "post-select the one-photon sector first")
        for s in spatials:
            bit = 1 if ((s, V), 1) in occ else 0
            idx = (idx << 1) | bit
        key = tuple(env)
        if key not in vectors:
            vectors[key] = np.zeros(dim, dtype=complex)
        vectors[key][idx] += amp
    rho = np.zeros((dim, dim), dtype=complex)
    for vec in vectors.values():
        rho += np.outer(vec, vec.conj())
    tr = float(np.real(np.trace(rho)))
    if tr <= 0.0:
        raise ValueError("state has zero weight on the requested qubit sector")
    return rho / tr


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Overlap <psi|rho|psi> of a density operator with a pure target."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex).ravel()
    if rho.shape != (psi.size, psi.size):
        raise ValueError(f"dimension mismatch: rho {rho.shape}, psi {psi.shape}")
    val = complex(psi.conj() @ rho @ psi)
    if abs(val.imag) > 1e-12:
        raise ValueError(f"fidelity has non-negligible imaginary part {val.imag:g}")
    return float(val.real)


def validate_density(rho: np.ndarray, herm_tol: float = 1e-12,
                     trace_tol: float = 1e-12, eig_tol: float = 1e-10) -> None:
    """Raise unless ``rho`` is a Hermitian, unit-trace, PSD matrix (up to slack)."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density operator must be square")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density operator is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError("density operator trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -eig_tol:
        raise ValueError("density operator has a significantly negative eigenvalue")
