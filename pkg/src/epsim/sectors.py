"""Local-particle-number sectors and the sector-averaged entanglement measure.

Local operations cannot create coherences between subspaces with different
particle counts at one site, so the operationally accessible entanglement of
a shared-particle state is the probability-weighted average of the per-sector
entropies of entanglement, not the entropy of the state itself.  Register
modes never count toward the local particle number: they model ordinary
distinguishable qubits, which the superselection rule does not constrain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    DensityOperator,
    LayoutError,
    ModeLayout,
    PureState,
    StateValidationError,
    entropy_of_entanglement,
)

SECTOR_DROP_TOL = 1e-14
PURITY_TOL = 1e-9


def local_particle_number(layout: ModeLayout, label: tuple[int, ...], site: str) -> int:
    """Particles in the field modes at ``site`` (register modes excluded)."""
    layout.check_label(label)
    return sum(label[i] for i in layout.indices(site=site, kind="field"))


@dataclass(frozen=True)
class Sector:
    n: int
    probability: float
    state: PureState


@dataclass(frozen=True)
class SectorDecomposition:
    sectors: tuple[Sector, ...]

    def probabilities(self) -> dict[int, float]:
        return {s.n: s.probability for s in self.sectors}


def sector_decompose(state: PureState, site: str = "A") -> SectorDecomposition:
    """Split a normalized state by particle count at ``site``.

    Sectors with weight below SECTOR_DROP_TOL are discarded.  Each sector
    state is renormalized and its global phase fixed by making the
    largest-magnitude amplitude real and positive, so decompositions are
    deterministic and safe to freeze in golden tests.
    """
    groups: dict[int, dict[tuple[int, ...], complex]] = {}
    for label, amp in state.amplitudes.items():
        n = local_particle_number(state.layout, label, site)
        groups.setdefault(n, {})[label] = amp
    sectors = []
    for n in sorted(groups):
        amps = groups[n]
        p = sum(abs(a) ** 2 for a in amps.values())
        if p < SECTOR_DROP_TOL:
            continue
        anchor = max(amps.values(), key=abs)
        phase = anchor / abs(anchor)
        fixed = {l: a / (phase * np.sqrt(p)) for l, a in amps.items()}
        sectors.append(Sector(n, p, PureState(state.layout, fixed, normalize=True)))
    return SectorDecomposition(tuple(sectors))


def particle_entanglement(state: PureState) -> float:
    """Sector-probability-weighted entanglement, sum_n P_n E(state_n), in bits."""
    if state.layout.sites() != {"A", "B"}:
        raise LayoutError("particle entanglement needs both sites in the layout")
    total = 0.0
    for sector in sector_decompose(state).sectors:
        total += sector.probability * entropy_of_entanglement(sector.state)
    return total


def register_sector_weights(rho: DensityOperator, site: str = "A") -> dict[int, float]:
    """Weight carried by each local register-occupation sector of ``rho``."""
    weights: dict[int, float] = {}
    idx = rho.layout.indices(site=site, kind="register")
    for i, label in enumerate(rho.basis):
        n = sum(label[j] for j in idx)
        weights[n] = weights.get(n, 0.0) + float(np.real(rho.matrix[i, i]))
    return {n: w for n, w in sorted(weights.items()) if w > SECTOR_DROP_TOL}


def _register_sector_blocks(rho: DensityOperator, site: str):
    """Yield (n, weight, pure sector state) for each register-number block.

    Each block must be pure up to PURITY_TOL; states produced by the
    transfer protocol (and its conditional measurements) have this form.
    """
    idx = rho.layout.indices(site=site, kind="register")
    if not idx:
        raise LayoutError(f"no register modes at site {site!r}")
    groups: dict[int, list[int]] = {}
    for i, label in enumerate(rho.basis):
        n = sum(label[j] for j in idx)
        groups.setdefault(n, []).append(i)
    for n, rows in sorted(groups.items()):
        block = rho.matrix[np.ix_(rows, rows)]
        weight = float(np.real(np.trace(block)))
        if weight < SECTOR_DROP_TOL:
            continue
        evals, evecs = np.linalg.eigh(block)
        if evals[-1] < weight * (1.0 - PURITY_TOL):
            raise StateValidationError(
                f"sector n={n} is not pure: top eigenvalue {evals[-1]} of weight {weight}"
            )
        vec = evecs[:, -1]
        amps = {rho.basis[rows[k]]: vec[k] for k in range(len(rows))}
        yield n, weight, PureState(rho.layout, amps, normalize=True)


def register_sector_entanglement(rho: DensityOperator, site: str = "A") -> float:
    """Entanglement of a register mixture whose blocks are sector-pure:
    the weight-averaged per-sector entropy of entanglement."""
    return sum(weight * entropy_of_entanglement(state)
               for _, weight, state in _register_sector_blocks(rho, site))


def register_sector_table(rho: DensityOperator, site: str = "A") -> list[dict]:
    """Per-sector weights and entanglements of a register mixture."""
    return [
        {"n": n, "weight": weight, "entanglement": entropy_of_entanglement(state)}
        for n, weight, state in _register_sector_blocks(rho, site)
    ]
