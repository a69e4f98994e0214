"""Qubit-register analysis of teleportation channels.

Everything here works on dense numpy density operators with the fixed
ordering (qubit 1, qubit 2, qubit 3): qubit 1 sits with the sender, qubit 2
with the receiver and qubit 3 with the controller.  |H> maps to basis 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import KET_A, KET_D, KET_H, KET_L, KET_R, KET_V

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

_SQ2 = math.sqrt(2.0)


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def ket_outer(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (indices into dims)."""
    dims = list(dims)
    keep = sorted(keep)
    n = len(dims)
    rho = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    for offset, i in enumerate(traced):
        axis = i - offset
        rho = np.trace(rho, axis1=axis, axis2=axis + rho.ndim // 2)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return rho.reshape(d, d)


def ghz_ket(variant: int = 1) -> np.ndarray:
    """variant 1: (|HHH>+|VVV>)/sqrt2; variant 2: (|HHV>+|VVH>)/sqrt2."""
    out = np.zeros(8, dtype=complex)
    if variant == 1:
        out[0b000] = out[0b111] = 1 / _SQ2
    elif variant == 2:
        out[0b001] = out[0b110] = 1 / _SQ2
    else:
        raise ValueError("variant must be 1 or 2")
    return out


def chi_ket(sign: int) -> np.ndarray:
    """(|HH> + sign|VV>)/sqrt2 on qubits 1,2 times (sign|H> + |V>)/sqrt2 on qubit 3."""
    pair = np.zeros(4, dtype=complex)
    pair[0b00] = 1 / _SQ2
    pair[0b11] = sign / _SQ2
    third = np.array([sign, 1.0], dtype=complex) / _SQ2
    return np.kron(pair, third)


@dataclass(frozen=True)
class ChannelSpec:
    kind: str              # "ghz_mixture" | "werner" | "explicit"
    p: float | None = None
    q: float | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "ghz_mixture":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError("ghz_mixture needs p in [0, 1]")
        elif self.kind == "werner":
            if self.q is None or not 0.0 <= self.q <= 1.0:
                raise ValueError("werner needs q in [0, 1]")
        elif self.kind == "explicit":
            if self.rho is None:
                raise ValueError("explicit channel needs a density matrix")
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")


def make_ghz_mixture(p: float) -> np.ndarray:
    return (1 - p) * ket_outer(ghz_ket(1)) + p * ket_outer(ghz_ket(2))


def make_werner(q: float) -> np.ndarray:
    return q * ket_outer(ghz_ket(1)) + (1 - q) * np.eye(8, dtype=complex) / 8.0


def make_channel(spec: ChannelSpec) -> np.ndarray:
    if spec.kind == "ghz_mixture":
        return make_ghz_mixture(spec.p)
    if spec.kind == "werner":
        return make_werner(spec.q)
    return np.asarray(spec.rho, dtype=complex)


@dataclass
class ConditionalChannel:
    outcome: str
    probability: float
    state: np.ndarray       # 4x4 on qubits 1, 2


_CONTROLLER_BASES = {
    "hv": ((KET_H, "H"), (KET_V, "V")),
    "pm": ((KET_D, "+"), (KET_A, "-")),
    "rl": ((KET_R, "R"), (KET_L, "L")),
}


def _basis_pairs(basis):
    if isinstance(basis, str):
        return _CONTROLLER_BASES[basis.lower()]
    return tuple((np.asarray(k, dtype=complex).ravel(), lbl) for k, lbl in basis)


def condition_on_controller(channel: np.ndarray, basis="pm", outcome=None):
    """Measure qubit 3 and return the renormalized two-qubit conditional(s).

    With ``outcome`` given, returns a single ConditionalChannel; otherwise one
    per basis outcome.
    """
    channel = np.asarray(channel, dtype=complex)
    results = []
    for ket, label in _basis_pairs(basis):
        proj = kron(PAULI_I, PAULI_I, ket_outer(ket))
        sub = partial_trace(proj @ channel @ proj.conj().T, [2, 2, 2], [0, 1])
        prob = float(np.real(np.trace(sub)))
        if outcome is not None and label != outcome:
            continue
        if prob < 1e-14:
            if outcome is not None:
                raise ValueError(f"controller outcome {label!r} has zero probability")
            results.append(ConditionalChannel(label, prob, np.zeros((4, 4), dtype=complex)))
            continue
        results.append(ConditionalChannel(label, prob, sub / prob))
    if outcome is not None:
        return results[0]
    return results


# --- teleportation over a two-qubit resource --------------------------------

def bell_kets() -> dict:
    phi_p = np.array([1, 0, 0, 1], dtype=complex) / _SQ2
    phi_m = np.array([1, 0, 0, -1], dtype=complex) / _SQ2
    psi_p = np.array([0, 1, 1, 0], dtype=complex) / _SQ2
    psi_m = np.array([0, 1, -1, 0], dtype=complex) / _SQ2
    return {"phi+": phi_p, "phi-": phi_m, "psi+": psi_p, "psi-": psi_m}


def fully_entangled_fraction(rho: np.ndarray) -> float:
    """Largest overlap with the four standard Bell states."""
    rho = np.asarray(rho, dtype=complex)
    return max(float(np.real(b.conj() @ rho @ b)) for b in bell_kets().values())


def _teleport_branches(channel: np.ndarray, psi: np.ndarray):
    """Yield (outcome label, branch probability, receiver conditional state).

    The sender measures (input, qubit 1) in the Bell basis; ordering of the
    joint system is (input, qubit1, qubit2).
    """
    channel = np.asarray(channel, dtype=complex)
    rho_tot = np.kron(ket_outer(psi), channel)
    for label, bket in bell_kets().items():
        proj = np.kron(ket_outer(bket), PAULI_I)
        sub = partial_trace(proj @ rho_tot @ proj, [2, 2, 2], [2])
        prob = float(np.real(np.trace(sub)))
        yield label, prob, (sub / prob if prob > 1e-14 else sub)


def standard_corrections() -> dict:
    """Pauli frame that inverts teleportation over the (|HH>+|VV>)/sqrt2 channel."""
    channel = ket_outer(bell_kets()["phi+"])
    probes = [KET_H, KET_D, KET_R]
    out = {}
    for label, _, _ in _teleport_branches(channel, KET_H):
        for name, pauli in PAULIS.items():
            ok = True
            for probe in probes:
                branches = dict((l, (p, s)) for l, p, s in _teleport_branches(channel, probe))
                prob, state = branches[label]
                fid = float(np.real(probe.conj() @ pauli @ state @ pauli.conj().T @ probe))
                if abs(fid - 1.0) > 1e-10:
                    ok = False
                    break
            if ok:
                out[label] = pauli
                break
        else:
            raise RuntimeError(f"no Pauli inverts outcome {label}")
    return out


_STANDARD_CORRECTIONS = None


def _corrections() -> dict:
    global _STANDARD_CORRECTIONS
    if _STANDARD_CORRECTIONS is None:
        _STANDARD_CORRECTIONS = standard_corrections()
    return _STANDARD_CORRECTIONS


def teleport_fidelity(channel: np.ndarray, psi: np.ndarray,
                      corrections: dict | None = None) -> float:
    """Fidelity of teleporting ``psi`` with a fixed Pauli correction frame."""
    corrections = corrections or _corrections()
    psi = np.asarray(psi, dtype=complex).ravel()
    total = 0.0
    for label, prob, state in _teleport_branches(channel, psi):
        if prob < 1e-14:
            continue
        c = corrections[label]
        total += prob * float(np.real(psi.conj() @ c @ state @ c.conj().T @ psi))
    return total


def avg_teleport_fidelity(channel, strategy: str = "with_feedforward") -> float:
    """Bloch-sphere average teleportation fidelity with Pauli-frame corrections.

    ``channel`` is either a two-qubit density operator or a list of
    ConditionalChannel objects (the controller's outcome branches).  With
    feed-forward the receiver optimizes his Pauli frame per controller
    outcome; without the controller's information he teleports over the
    outcome-averaged channel.  Uses the closed form (2 f + 1)/3 with f the
    channel's maximally-entangled-state overlap.
    """
    if isinstance(channel, np.ndarray):
        branches = [ConditionalChannel("", 1.0, channel)]
    else:
        branches = list(channel)
    if strategy == "with_feedforward":
        total_p = sum(b.probability for b in branches)
        return sum(
            b.probability * (2 * fully_entangled_fraction(b.state) + 1) / 3.0
            for b in branches) / total_p
    if strategy == "without_controller_info":
        total_p = sum(b.probability for b in branches)
        mixed = sum(b.probability * b.state for b in branches) / total_p
        return (2 * fully_entangled_fraction(mixed) + 1) / 3.0
    raise ValueError(f"unknown strategy {strategy!r}")


def random_qubit_ket(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def mc_avg_teleport_fidelity(channel, n_samples: int, seed: int,
                             strategy: str = "with_feedforward") -> float:
    """Monte-Carlo cross-check of avg_teleport_fidelity over Haar inputs.

    Picks, per Bell outcome, the Pauli that maximizes the sample-averaged
    fidelity, matching the closed-form protocol.
    """
    if isinstance(channel, np.ndarray):
        branches = [ConditionalChannel("", 1.0, channel)]
    else:
        branches = list(channel)
    rng = np.random.default_rng(seed)
    psis = [random_qubit_ket(rng) for _ in range(n_samples)]
    total_p = sum(b.probability for b in branches)
    if strategy == "without_controller_info":
        mixed = sum(b.probability * b.state for b in branches) / total_p
        branches = [ConditionalChannel("", 1.0, mixed)]
        total_p = 1.0

    grand = 0.0
    for b in branches:
        # fid[outcome][pauli] accumulated over samples; then best pauli per outcome
        acc = {}
        for psi in psis:
            for label, prob, state in _teleport_branches(b.state, psi):
                for name, pauli in PAULIS.items():
                    val = prob * float(np.real(
                        psi.conj() @ pauli @ state @ pauli.conj().T @ psi))
                    acc.setdefault(label, {}).setdefault(name, 0.0)
                    acc[label][name] += val
        best = sum(max(vals.values()) for vals in acc.values()) / n_samples
        grand += b.probability * best
    return grand / total_p


# --- scans and baselines -----------------------------------------------------

@dataclass
class WernerScanResult:
    rows: list                  # (q, F_allowed, F_denied)
    threshold_q: float | None   # where F_allowed crosses 2/3


def werner_point(q: float) -> tuple:
    """(F_allowed, F_denied) for the Werner channel of weight q.

    F_allowed: controller measures +/- and shares the outcome; Bloch average
    with feed-forward.  F_denied: controller measures H/V; fidelity of
    teleporting |+> over the H-conditioned channel with the standard frame.
    """
    rho = make_werner(q)
    allowed = avg_teleport_fidelity(condition_on_controller(rho, "pm"),
                                    "with_feedforward")
    denied_channel = condition_on_controller(rho, "hv", outcome="H").state
    denied = teleport_fidelity(denied_channel, KET_D)
    return allowed, denied


def werner_scan(q_grid: Sequence[float]) -> WernerScanResult:
    q_grid = list(q_grid)
    if not q_grid:
        raise ValueError("empty q grid")
    rows = []
    for q in q_grid:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"q={q} outside [0, 1]")
        fa, fd = werner_point(q)
        rows.append((float(q), fa, fd))
    threshold = None
    try:
        from scipy.optimize import brentq
        threshold = float(brentq(lambda q: werner_point(q)[0] - 2.0 / 3.0,
                                 1e-9, 1.0 - 1e-9, xtol=1e-12))
    except ValueError:
        pass
    return WernerScanResult(rows=rows, threshold_q=threshold)


def classical_control_baseline(knowledge: str, input_ket: np.ndarray | None = None) -> float:
    """Teleportation through an even phi+/phi- mixture with/without the which-state bit.

    With the bit shared the receiver compensates exactly (fidelity 1); with it
    withheld he teleports through the mixture in the phi+ frame.  ``input_ket``
    gives a single-state fidelity, otherwise the Bloch average is returned.
    """
    if knowledge == "shared":
        return 1.0
    if knowledge != "withheld":
        raise ValueError("knowledge must be 'shared' or 'withheld'")
    bells = bell_kets()
    mixed = 0.5 * ket_outer(bells["phi+"]) + 0.5 * ket_outer(bells["phi-"])
    if input_ket is None:
        return avg_teleport_fidelity(mixed, "with_feedforward")
    return teleport_fidelity(mixed, input_ket)


def conditional_teleport_output(channel: np.ndarray, input_ket: np.ndarray,
                                controller_basis, controller_outcome: str):
    """Receiver state after controller projection and the psi- sender projection.

    Qubit-level reference computation mirroring the photonic pipeline: qubit 3
    is measured first, then (qubit 1, input) are projected onto the singlet.
    Returns ``(rho_receiver, joint_probability)``.
    """
    cond = condition_on_controller(channel, controller_basis, outcome=controller_outcome)
    input_ket = np.asarray(input_ket, dtype=complex).ravel()
    rho_tot = np.kron(np.asarray(cond.state, dtype=complex), ket_outer(input_ket))
    # ordering (qubit1, qubit2, input); the singlet lives on (qubit1, input)
    s = bell_kets()["psi-"].reshape(2, 2)
    t = rho_tot.reshape(2, 2, 2, 2, 2, 2)
    rho2 = np.einsum("ac,abcdef,df->be", s.conj(), t, s)
    branch_prob = float(np.real(np.trace(rho2)))
    if branch_prob < 1e-14:
        raise ValueError("singlet projection never succeeds for this branch")
    return rho2 / branch_prob, cond.probability * branch_prob
