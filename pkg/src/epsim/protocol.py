"""Exact simulation of the entanglement-transfer protocol onto local registers.

Each site holds a two-mode ancilla ``sum_n c_n |M-n, n>`` whose first mode is
a sink prepared (in the continuous-phase picture) in a truncated phase state,
and whose second mode carries the reference amplitudes ``c_n``.  The protocol
copies every local field occupation into a fresh register via an occupation
CNOT and then hides the particles in the local sink via a register-controlled
shift.  Tracing out all field modes leaves the registers in a mixture of
sector-pure states whose weights are the local-number sector probabilities of
the input: the registers inherit exactly the sector-averaged entanglement,
never the full entropy of entanglement.

Two routes to the register state are provided.  ``run_transfer`` simulates
the finite Fock space exactly.  ``phase_grid_register_state`` reconstructs
the same object from a uniform grid over the two local phase angles, keeping
the sink's truncation-boundary component of each branch as a separate
statistical history (the continuous-phase analysis route); the overcounted
boundary weight makes its output deviate from the exact route by
O(1/(M+1)), which is the quantity the grid diagnostic exposes.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import (
    CapacityError,
    DensityOperator,
    LayoutError,
    ModeDescriptor,
    ModeLayout,
    PureState,
    StateValidationError,
    layout_of,
    partial_trace,
    tensor_many,
)
from .sectors import local_particle_number, register_sector_entanglement


class GridError(ValueError):
    """Phase grid too coarse for the requested truncation."""


class AncillaSpec:
    """Truncated ancilla amplitudes c_0..c_M with unit two-norm."""

    def __init__(self, M: int, coefficients):
        if M < 1:
            raise ValueError("ancilla truncation M must be >= 1")
        coeffs = np.asarray(coefficients, dtype=complex)
        if coeffs.shape != (M + 1,):
            raise ValueError(f"expected {M + 1} coefficients, got {coeffs.shape}")
        norm = float(np.linalg.norm(coeffs))
        if abs(norm - 1.0) > 1e-10:
            raise StateValidationError(f"ancilla coefficients have norm {norm}, not 1")
        self.M = M
        self.coefficients = coeffs

    @classmethod
    def uniform(cls, M: int) -> "AncillaSpec":
        return cls(M, np.full(M + 1, 1.0 / math.sqrt(M + 1)))

    @classmethod
    def number_state(cls, n: int, M: int) -> "AncillaSpec":
        coeffs = np.zeros(M + 1)
        coeffs[n] = 1.0
        return cls(M, coeffs)

    @property
    def mean(self) -> float:
        return float(np.sum(np.arange(self.M + 1) * np.abs(self.coefficients) ** 2))

    @property
    def variance(self) -> float:
        probs = np.abs(self.coefficients) ** 2
        ns = np.arange(self.M + 1)
        return float(np.sum(ns ** 2 * probs) - np.sum(ns * probs) ** 2)

    def first_moment(self) -> complex:
        """sum_n conj(c_n) c_{n+1}; the mean phasor of the ancilla's phase
        distribution."""
        c = self.coefficients
        return complex(np.sum(np.conj(c[:-1]) * c[1:]))

    def __repr__(self):
        return f"AncillaSpec(M={self.M}, mean={self.mean:.3f})"


def coherent_coefficients(nbar: float, M: int) -> AncillaSpec:
    """Truncated coherent-state amplitudes with mean occupation ``nbar``.

    c_n is proportional to the square root of the Poisson weight
    nbar^n e^{-nbar} / n!, renormalized after truncation at M.  Computed in
    log space so large nbar stays finite.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if M < nbar + 10.0 * math.sqrt(nbar):
        warnings.warn(
            f"truncation M={M} below nbar + 10*sqrt(nbar) = "
            f"{nbar + 10.0 * math.sqrt(nbar):.1f}; tail probability is clipped",
            stacklevel=2,
        )
    ns = np.arange(M + 1)
    if nbar == 0.0:
        log_w = np.where(ns == 0, 0.0, -np.inf)
    else:
        log_w = ns * math.log(nbar) - nbar - np.array([math.lgamma(n + 1) for n in ns])
    log_w -= log_w.max()
    amps = np.exp(0.5 * log_w)
    amps /= np.linalg.norm(amps)
    return AncillaSpec(M, amps)


def coherent_ancilla(nbar: float) -> AncillaSpec:
    """Coherent ancilla with the default safe truncation M = nbar + 10*sqrt(nbar)."""
    M = max(1, math.ceil(nbar + 10.0 * math.sqrt(nbar)))
    return coherent_coefficients(nbar, M)


def truncated_phase_state(M: int, theta: float,
                          mode: ModeDescriptor | None = None) -> PureState:
    """Uniform-amplitude phase state sum_n e^{-i(M-n)theta} |n> / sqrt(M+1)."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if mode is None:
        mode = ModeDescriptor("psi", "A", "field", M)
    if mode.capacity < M:
        raise CapacityError(f"mode capacity {mode.capacity} below truncation {M}")
    amps = {
        (n,): np.exp(-1j * (M - n) * theta) / math.sqrt(M + 1)
        for n in range(M + 1)
    }
    return PureState(layout_of(mode), amps)


def phase_rotated_ancilla(spec: AncillaSpec, theta: float,
                          mode: ModeDescriptor | None = None) -> PureState:
    """Single-mode state sum_n c_n e^{i n theta} |n>."""
    if mode is None:
        mode = ModeDescriptor("anc", "A", "field", spec.M)
    amps = {
        (n,): spec.coefficients[n] * np.exp(1j * n * theta)
        for n in range(spec.M + 1)
        if abs(spec.coefficients[n]) > 0.0
    }
    return PureState(layout_of(mode), amps)


def two_mode_ancilla_state(spec: AncillaSpec, sink: ModeDescriptor | None = None,
                           ref: ModeDescriptor | None = None,
                           site: str = "A") -> PureState:
    """Two-mode ancilla sum_n c_n |M-n, n> over (sink, reference) modes."""
    M = spec.M
    if sink is None:
        sink = ModeDescriptor(f"sink_{site}", site, "field", M)
    if ref is None:
        ref = ModeDescriptor(f"ref_{site}", site, "field", M)
    if sink.capacity < M:
        raise CapacityError(f"sink capacity {sink.capacity} below M={M}")
    amps = {
        (M - n, n): spec.coefficients[n]
        for n in range(M + 1)
        if abs(spec.coefficients[n]) > 0.0
    }
    return PureState(layout_of(sink, ref), amps)


def occupation_cnot(state: PureState, control: str, target: str) -> PureState:
    """Add the control field occupation onto a register, modulo capacity+1.

    Registers start at zero in the protocol, so the map copies occupations;
    modular addition is its unitary completion on the full basis.
    """
    ci = state.layout.index(control)
    ti = state.layout.index(target)
    cmode = state.layout.modes[ci]
    tmode = state.layout.modes[ti]
    if tmode.kind != "register":
        raise LayoutError(f"CNOT target {target!r} must be a register mode")
    if tmode.capacity < cmode.capacity:
        raise CapacityError(
            f"register capacity {tmode.capacity} below control capacity {cmode.capacity}"
        )
    modulus = tmode.capacity + 1

    def step(label):
        new = list(label)
        new[ti] = (label[ti] + label[ci]) % modulus
        return tuple(new)

    return state.map_labels(step)


def hiding_operation(state: PureState, control: str, source: str, sink: str) -> PureState:
    """Register-controlled absorption of a field mode into the local sink.

    Branches with control occupation zero are untouched; for control >= 1
    the full source occupation moves onto the sink, |x>_sink |y>_source ->
    |x+y>_sink |0>_source.  The map must be injective on the state support
    (it is whenever the register still witnesses the moved occupation).
    """
    ci = state.layout.index(control)
    si = state.layout.index(source)
    ki = state.layout.index(sink)
    if state.layout.modes[ci].kind != "register":
        raise LayoutError(f"hiding control {control!r} must be a register mode")
    sink_cap = state.layout.modes[ki].capacity

    def step(label):
        if label[ci] == 0:
            return label
        new = list(label)
        moved = label[ki] + label[si]
        if moved > sink_cap:
            raise CapacityError(
                f"sink {sink!r} overflow: {label[ki]}+{label[si]} > {sink_cap}"
            )
        new[ki] = moved
        new[si] = 0
        return tuple(new)

    return state.map_labels(step)


@dataclass(frozen=True)
class ProtocolConfig:
    """Inputs of one transfer run: shared-particle state and both ancillas.

    The sink at each site needs capacity M + N (truncation plus everything
    it may absorb); ``sink_headroom`` is the margin above M and defaults to
    the total particle number of the input.
    """

    input_state: PureState
    ancilla_a: AncillaSpec
    ancilla_b: AncillaSpec
    sink_headroom: int | None = None

    def __post_init__(self):
        layout = self.input_state.layout
        if layout.sites() != {"A", "B"}:
            raise LayoutError("transfer input must involve both sites")
        if any(m.kind != "field" for m in layout.modes):
            raise LayoutError("transfer input must use field modes only")
        if self.sink_headroom is not None and self.sink_headroom < self.total_particles:
            raise CapacityError(
                f"sink headroom {self.sink_headroom} below particle number "
                f"{self.total_particles}"
            )

    @property
    def total_particles(self) -> int:
        return max(sum(label) for label in self.input_state.amplitudes)

    @property
    def headroom(self) -> int:
        return self.total_particles if self.sink_headroom is None else self.sink_headroom

    def ancilla(self, site: str) -> AncillaSpec:
        return self.ancilla_a if site == "A" else self.ancilla_b

    def sink_id(self, site: str) -> str:
        return f"sink_{site}"

    def ref_id(self, site: str) -> str:
        return f"ref_{site}"

    def register_id(self, field_id: str) -> str:
        return f"reg_{field_id}"

    def field_modes(self, site: str) -> list[ModeDescriptor]:
        layout = self.input_state.layout
        return [layout.modes[i] for i in layout.indices(site=site, kind="field")]

    def register_modes(self) -> list[ModeDescriptor]:
        """Register modes in output order: all of site A, then all of site B."""
        out = []
        for site in ("A", "B"):
            for f in self.field_modes(site):
                out.append(ModeDescriptor(self.register_id(f.id), site, "register",
                                          f.capacity))
        return out


def transfer_final_state(config: ProtocolConfig) -> PureState:
    """Full pure state after both sites ran CNOT-then-hide on every field mode.

    Layout: [sink_A, ref_A, sink_B, ref_B, input field modes..., registers...].
    Field modes are all still present; trace them out to get the register
    state, or keep the reference modes to feed the phase-difference POVM.
    """
    pieces = []
    for site in ("A", "B"):
        spec = config.ancilla(site)
        sink = ModeDescriptor(config.sink_id(site), site, "field",
                              spec.M + config.headroom)
        ref = ModeDescriptor(config.ref_id(site), site, "field", spec.M)
        pieces.append(two_mode_ancilla_state(spec, sink=sink, ref=ref, site=site))
    pieces.append(config.input_state)
    regs = config.register_modes()
    reg_zero = PureState.basis_state(ModeLayout(tuple(regs)), (0,) * len(regs))
    pieces.append(reg_zero)
    state = tensor_many(*pieces)

    for site in ("A", "B"):
        for f in config.field_modes(site):
            reg = config.register_id(f.id)
            state = occupation_cnot(state, control=f.id, target=reg)
            state = hiding_operation(state, control=reg, source=f.id,
                                     sink=config.sink_id(site))
    return state


def run_transfer(config: ProtocolConfig) -> DensityOperator:
    """Exact register state: runs the protocol, traces out all field modes."""
    final = transfer_final_state(config)
    reg_ids = [m.id for m in config.register_modes()]
    return partial_trace(final, reg_ids)


def transfer_entanglement(rho: DensityOperator) -> float:
    """Sector-projected entanglement of a register output (bits)."""
    return register_sector_entanglement(rho)


def mode_overlap_integral(k: int, spec: AncillaSpec, theta: float) -> complex:
    """Closed form of the phase-averaged sink/reference overlap integral:
    sum_{m=k}^{M} |c_m|^2 / (M+1) * e^{i k theta}.

    For k beyond the truncation the integral vanishes identically; a warning
    flags the degenerate call.
    """
    if k < 0:
        raise ValueError("k must be a non-negative integer")
    if k > spec.M:
        warnings.warn(f"k={k} exceeds truncation M={spec.M}; integral is 0",
                      stacklevel=2)
        return 0.0 + 0.0j
    weight = float(np.sum(np.abs(spec.coefficients[k:]) ** 2))
    return weight / (spec.M + 1) * np.exp(1j * k * theta)


def _grid_sink_kernels(M: int, shifts: list[int], K: int) -> dict:
    """Grid-averaged sink overlaps per shift pair, kept-line and boundary
    histories counted separately.

    For shift n the exact post-hiding sink at angle theta is
    S_n(theta) = sum_{k=n}^{M+n} e^{-i(M+n-k)theta} |k> / sqrt(M+1); its
    kept line is the unshifted phase state carrying the accumulated phase,
    I_n(theta) = e^{-i n theta} psi(theta), and the boundary remainder is
    S_n - I_n.  Returns G[(n, n')] = (1/K) sum_j [<I_n'|I_n> + <B_n'|B_n>].
    """
    thetas = 2.0 * np.pi * np.arange(K) / K
    dim = M + max(shifts) + 1
    norm = math.sqrt(M + 1)
    ideal = {}
    boundary = {}
    for n in shifts:
        vec_i = np.zeros((K, dim), dtype=complex)
        ks = np.arange(0, M + 1)
        vec_i[:, 0:M + 1] = np.exp(-1j * np.outer(thetas, (M + n) - ks)) / norm
        vec_s = np.zeros((K, dim), dtype=complex)
        ks = np.arange(n, M + n + 1)
        vec_s[:, n:M + n + 1] = np.exp(-1j * np.outer(thetas, (M + n) - ks)) / norm
        ideal[n] = vec_i
        boundary[n] = vec_s - vec_i
    kernels = {}
    for n, n2 in itertools.product(shifts, repeat=2):
        g = np.einsum("jk,jk->", np.conj(ideal[n2]), ideal[n])
        g += np.einsum("jk,jk->", np.conj(boundary[n2]), boundary[n])
        kernels[(n, n2)] = complex(g) / K
    return kernels


def phase_grid_register_state(config: ProtocolConfig, K: int) -> DensityOperator:
    """Register state reconstructed from a uniform grid over both local phases.

    Each grid point (theta_j, phi_l) prepares the sinks in pure truncated
    phase states, runs the exact protocol, and contributes its register
    reduction; the kept-line and truncation-boundary components of each sink
    enter as distinct statistical branches rather than coherent parts of one
    vector.  Retaining the boundary branches this way overcounts their
    weight, so the result has trace 1 + O(N/(M+1)) and sits at trace
    distance <= 3/(M+1) from the exact ``run_transfer`` output (N <= 2),
    shrinking as the truncation grows.
    """
    M_a, M_b = config.ancilla_a.M, config.ancilla_b.M
    K_min = 2 * max(M_a, M_b) + 3
    if K < K_min:
        raise GridError(f"grid size {K} below the exactness bound {K_min}")

    layout = config.input_state.layout
    reg_modes = config.register_modes()
    reg_layout = ModeLayout(tuple(reg_modes))
    field_order = [f.id for site in ("A", "B") for f in config.field_modes(site)]
    positions = [layout.index(fid) for fid in field_order]

    entries = []
    for label, amp in config.input_state.amplitudes.items():
        reg_label = tuple(label[p] for p in positions)
        n_a = local_particle_number(layout, label, "A")
        n_b = local_particle_number(layout, label, "B")
        entries.append((reg_label, amp, n_a, n_b))
    entries.sort(key=lambda e: e[0])

    kernels_a = _grid_sink_kernels(M_a, sorted({e[2] for e in entries}), K)
    kernels_b = _grid_sink_kernels(M_b, sorted({e[3] for e in entries}), K)

    dim = len(entries)
    mat = np.zeros((dim, dim), dtype=complex)
    for i, (_, amp_i, na_i, nb_i) in enumerate(entries):
        for j, (_, amp_j, na_j, nb_j) in enumerate(entries):
            mat[i, j] = (amp_i * np.conj(amp_j)
                         * kernels_a[(na_i, na_j)] * kernels_b[(nb_i, nb_j)])
    basis = [e[0] for e in entries]
    return DensityOperator(reg_layout, basis, mat, check_trace=False)


@dataclass(frozen=True)
class MeasurementOutcome:
    outcome_a: str
    outcome_b: str
    probability: float
    state: DensityOperator
    entanglement: float


def equal_different_measurement(rho: DensityOperator) -> list[MeasurementOutcome]:
    """Local equal-vs-different projection on two binary registers per site.

    Both parties compare their two registers; the joint state is projected
    onto the four (equal/different, equal/different) outcomes.  Returns the
    outcomes with nonzero probability, each with its conditional state and
    sector-projected entanglement.
    """
    layout = rho.layout
    if any(m.kind != "register" or m.capacity != 1 for m in layout.modes):
        raise LayoutError("measurement needs binary register modes only")
    pair_idx = {}
    for site in ("A", "B"):
        idx = layout.indices(site=site, kind="register")
        if len(idx) != 2:
            raise LayoutError(f"site {site} must hold exactly two registers, got {len(idx)}")
        pair_idx[site] = idx

    def outcome_of(label, site):
        i, j = pair_idx[site]
        return "equal" if label[i] == label[j] else "different"

    outcomes = []
    for oa, ob in itertools.product(("equal", "different"), repeat=2):
        rows = [i for i, label in enumerate(rho.basis)
                if outcome_of(label, "A") == oa and outcome_of(label, "B") == ob]
        if not rows:
            continue
        block = rho.matrix[np.ix_(rows, rows)]
        prob = float(np.real(np.trace(block)))
        if prob < 1e-12:
            continue
        conditional = DensityOperator(layout, [rho.basis[i] for i in rows], block / prob)
        ent = register_sector_entanglement(conditional)
        outcomes.append(MeasurementOutcome(oa, ob, prob, conditional, ent))
    return outcomes


def reference_phase_shift(rho: DensityOperator, theta: float, phi: float) -> DensityOperator:
    """Conjugate a register operator by local phase rotations
    e^{i theta N_A} e^{i phi N_B} (N = register occupation at the site)."""
    layout = rho.layout
    if any(m.kind != "register" for m in layout.modes):
        raise LayoutError("reference phase shift acts on register-only operators")
    idx_a = layout.indices(site="A")
    idx_b = layout.indices(site="B")
    phases = np.array([
        np.exp(1j * (theta * sum(label[i] for i in idx_a)
                     + phi * sum(label[i] for i in idx_b)))
        for label in rho.basis
    ])
    mat = (phases[:, None] * rho.matrix) * np.conj(phases)[None, :]
    unit_trace = abs(float(np.real(np.trace(rho.matrix))) - 1.0) <= 1e-10
    return DensityOperator(layout, rho.basis, mat, check_trace=unit_trace)
