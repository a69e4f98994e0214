"""Four-photon down-conversion source with undesired double-pair terms.

The source is driven twice per pulse: a forward pass emits a polarization
entangled pair into spatial modes 1, 2 and the reflected pass emits a
separable H-polarized pair into modes 3, 4.  Expanding exp(k_f A+ + k_b B+)
on vacuum and truncating at a total pair order gives, at order 2, exactly
the six-term structure

    |0000> + k_b|0011> + k_f|1100> + k_f k_b|1111> + k_f^2|2200> + k_b^2|0022>

with the double-pair entries carrying the bosonic enhancement factors that
follow from applying the pair-creation operator twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import optimize

from .fock import H, V, PureState, occupation, spatial_counts, total_photons

FORWARD_MODES = (1, 2)
BACKWARD_MODES = (3, 4)

_SQ2 = math.sqrt(2.0)

# Polarization structure of one emitted pair, as creation-operator weights.
PAIR_KINDS = {
    # (|H H> - i |V V>)/sqrt(2): entangled pair from the crystal cascade
    "phi_plus": {(H, H): 1.0 / _SQ2, (V, V): -1.0j / _SQ2},
    # separable |H H| pair collected from a single crystal
    "hh": {(H, H): 1.0},
}


@dataclass
class SourceParams:
    """Interaction strengths and truncation of the two-pass pair source."""

    kappa_forward: complex = 0.1
    kappa_backward: complex = 0.1
    truncation_order: int = 2
    forward_pair: str = "phi_plus"
    backward_pair: str = "hh"

    def __post_init__(self):
        self.kappa_forward = complex(self.kappa_forward)
        self.kappa_backward = complex(self.kappa_backward)
        if abs(self.kappa_forward) >= 0.5 or abs(self.kappa_backward) >= 0.5:
            raise ValueError("interaction strengths must stay well below 1 "
                             "(|kappa| < 0.5)")
        if self.truncation_order < 1:
            raise ValueError("truncation_order must be >= 1")
        for kind in (self.forward_pair, self.backward_pair):
            if kind not in PAIR_KINDS:
                raise ValueError(f"unknown pair kind {kind!r}")

    def key(self) -> tuple:
        return (self.kappa_forward, self.kappa_backward, self.truncation_order,
                self.forward_pair, self.backward_pair)


def _apply_pair_creation(terms: dict, modes: tuple, pair: dict) -> dict:
    """Multiply a creation-operator polynomial (in ket form) by one pair operator."""
    out: dict = {}
    for occ, amp in terms.items():
        occd = dict(occ)
        for (p_s, p_i), u in pair.items():
            d = dict(occd)
            m_s, m_i = (modes[0], p_s), (modes[1], p_i)
            n_s = d.get(m_s, 0)
            n_i = d.get(m_i, 0)
            d[m_s] = n_s + 1
            d[m_i] = n_i + 1
            key = occupation(d)
            out[key] = out.get(key, 0.0j) + amp * u * math.sqrt(n_s + 1) * math.sqrt(n_i + 1)
    return out


def emission_orders(pair_kind: str, order: int, modes: tuple) -> list:
    """Per-pair-number terms (A+)^n / n! applied to vacuum, n = 0..order."""
    pair = PAIR_KINDS[pair_kind]
    levels = [{(): 1.0 + 0.0j}]
    for n in range(1, order + 1):
        nxt = _apply_pair_creation(levels[-1], modes, pair)
        levels.append({k: a / n for k, a in nxt.items()})
    return levels


def two_mode_spdc(kappa: complex, truncation_order: int = 2,
                  pair: str = "hh", modes: tuple = (1, 2)) -> PureState:
    """Normalized two-mode emission: vacuum + kappa|11> + kappa^2|22> + ..."""
    if truncation_order < 1:
        raise ValueError("truncation_order must be >= 1")
    kappa = complex(kappa)
    levels = emission_orders(pair, truncation_order, modes)
    terms: dict = {}
    for n, level in enumerate(levels):
        for occ, amp in level.items():
            terms[occ] = terms.get(occ, 0.0j) + (kappa ** n) * amp
    state = PureState(terms, n_max=2 * truncation_order)
    return state.normalized()


def four_mode_source(params: SourceParams) -> PureState:
    """Normalized joint state of the forward and backward passes.

    Keeps every term with total pair order j + k <= truncation_order, which
    at the default order 2 is exactly the vacuum, the two single pairs, the
    desired |1111> term and the two double-pair terms.
    """
    order = params.truncation_order
    fwd = emission_orders(params.forward_pair, order, FORWARD_MODES)
    bwd = emission_orders(params.backward_pair, order, BACKWARD_MODES)
    terms: dict = {}
    for j in range(order + 1):
        for k in range(order + 1 - j):
            weight = (params.kappa_forward ** j) * (params.kappa_backward ** k)
            for occ_f, amp_f in fwd[j].items():
                for occ_b, amp_b in bwd[k].items():
                    key = occupation(list(occ_f) + list(occ_b))
                    terms[key] = terms.get(key, 0.0j) + weight * amp_f * amp_b
    state = PureState(terms, n_max=2 * order)
    return state.normalized()


def signature_label(occ: tuple, spatials=(1, 2, 3, 4)) -> str:
    counts = spatial_counts(occ)
    return "".join(str(counts.get(s, 0)) for s in spatials)


def coincidence_sectors(state: PureState, min_photons: int = 4) -> dict:
    """Group terms by spatial photon signature; keep sectors that can four-fold.

    The returned states are unnormalized so that their squared amplitudes keep
    the emission weights; sectors with fewer than ``min_photons`` photons can
    never light four detectors and are dropped.
    """
    sectors: dict = {}
    for occ, amp in state.terms.items():
        if total_photons(occ) < min_photons:
            continue
        label = signature_label(occ)
        sectors.setdefault(label, {})[occ] = amp
    return {label: PureState(terms, n_max=state.n_max)
            for label, terms in sorted(sectors.items())}


def heralded_fraction(params: SourceParams, config) -> dict:
    """Share of four-fold coincidences caused by the double-pair terms.

    Each coincidence-capable emission term is propagated separately through
    the configured setup (the emission terms are mutually incoherent
    alternatives at the detection level) and its four-fold probability is
    summed over both of the receiver's analyzer settings.
    """
    from .protocol import per_term_fourfold

    per_term = per_term_fourfold(params, config)
    total = sum(per_term.values())
    if total < 1e-30:
        raise ValueError("no emission term produces a four-fold coincidence "
                         "in this configuration")
    undesired = sum(p for label, p in per_term.items() if label != "1111")
    return {
        "desired": (total - undesired) / total,
        "undesired": undesired / total,
        "per_term": {label: p / total for label, p in per_term.items()},
    }


@dataclass
class RatioFit:
    """Result of the one-parameter backward/forward strength fit."""

    ratio: float
    achieved: dict
    targets: dict
    residuals: dict
    sum_squared_residual: float
    converged: bool
    constrained: bool = True    # False when the targets leave the ratio free


def _undesired_vector(ratio: float, config_factory: Callable, labels) -> dict:
    params = SourceParams(kappa_forward=0.1, kappa_backward=0.1 * ratio)
    out = {}
    for label in labels:
        out[label] = heralded_fraction(params, config_factory(label))["undesired"]
    return out


def fit_source_ratio(targets: dict, config_factory: Callable,
                     bounds=(1e-3, 5.0)) -> RatioFit:
    """Least-squares fit of kappa_backward/kappa_forward to target undesired shares.

    ``targets`` maps configuration labels to target fractions (0..1);
    ``config_factory(label)`` builds the protocol configuration for each.
    The shares depend on the strengths only through the ratio, so the forward
    strength is pinned internally.
    """
    labels = list(targets)

    def cost(log_r: float) -> float:
        achieved = _undesired_vector(math.exp(log_r), config_factory, labels)
        return sum((achieved[k] - targets[k]) ** 2 for k in labels)

    # a degenerate target set (shares insensitive to the ratio) leaves the
    # minimizer free: detect a flat cost and flag the fit as unconstrained
    probes = [cost(math.log(r)) for r in (bounds[0], math.sqrt(bounds[0] * bounds[1]),
                                          bounds[1])]
    constrained = max(probes) - min(probes) > 1e-18

    res = optimize.minimize_scalar(cost, bounds=(math.log(bounds[0]), math.log(bounds[1])),
                                   method="bounded",
                                   options={"xatol": 1e-10})
    ratio = float(math.exp(res.x))
    achieved = _undesired_vector(ratio, config_factory, labels)
    residuals = {k: achieved[k] - targets[k] for k in labels}
    return RatioFit(
        ratio=ratio,
        achieved=achieved,
        targets=dict(targets),
        residuals=residuals,
        sum_squared_residual=float(sum(r ** 2 for r in residuals.values())),
        converged=bool(res.success),
        constrained=constrained,
    )
