"""Drive-frame Hamiltonian of the transmon + cavity + nanoresonator system.

The lab-frame model is a multi-level transmon with generalized
Jaynes-Cummings couplings to two bosonic modes and a coherent drive on the
cavity. All three subsystems are rotated at the drive frequency and the
counter-rotating coupling terms are dropped, which leaves

    H = sum_m (omega_0m - m w_d)|m><m| + (w_c - w_d) a^dag a + (w_nr - w_d) b^dag b
        + sum_l g_{l,l+1} (|l><l+1| a^dag + h.c.) + sum_l lam_{l,l+1} (|l><l+1| b^dag + h.c.)
        + E_d (a + a^dag).

The RWA keeps exactly the part of the coupling that commutes with the total
excitation number, so it is applied by projecting onto excitation sectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NonHermitianError, PhysicsInputError
from .opalg import (
    HilbertLayout,
    QuantumOperator,
    annihilation,
    embed,
    hermitian_deviation,
)
from .tolerances import DEFAULT

__all__ = [
    "SystemParams",
    "DriveTerm",
    "coupling_table",
    "excitation_number",
    "bare_hamiltonian",
    "coupling_hamiltonians",
    "drive_hamiltonian",
    "rotating_wave",
    "frame_parts",
    "rotating_frame",
]

TRANSMON, CAVITY, RESONATOR = "transmon", "cavity", "nanoresonator"


@dataclass(frozen=True, eq=False)
class SystemParams:
    """Hamiltonian parameters, all in rad/s.

    ``g`` and ``lam`` are coupling tables indexed by transmon levels (l, m).
    """

    omega_cpw: float
    omega_nr: float
    g: np.ndarray
    lam: np.ndarray
    E_d: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self):
        if not (self.omega_cpw > 0 and self.omega_nr > 0):
            raise PhysicsInputError("mode frequencies must be positive")
        if self.E_d < 0:
            raise PhysicsInputError(f"drive amplitude must be >= 0, got {self.E_d}")
        for name in ("g", "lam"):
            t = np.array(getattr(self, name), dtype=complex)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise DimensionError(f"coupling table {name} must be square")
            t.setflags(write=False)
            object.__setattr__(self, name, t)


@dataclass(frozen=True)
class DriveTerm:
    """E_d (e^{i w t} a + e^{-i w t} a^dag); ``lowering`` is the embedded a."""

    amplitude: float
    frequency: float
    lowering: QuantumOperator

    @property
    def raising(self) -> QuantumOperator:
        return self.lowering.dag

    @property
    def is_null(self) -> bool:
        return self.amplitude == 0.0


def coupling_table(spectrum, g01: float, overrides=None, nearest_only=True) -> np.ndarray:
    """Couplings g_lm = g01 <l|n|m> / <0|n|1>, optionally overriding entries.

    ``overrides`` maps (l, m) with l < m to a value; the symmetric entry is
    set too. With ``nearest_only`` non-adjacent transitions are zeroed.
    """
    elems = np.asarray(spectrum.charge_elements, dtype=float)
    n = elems.shape[0]
    ref = elems[0, 1]
    if ref == 0:
        raise PhysicsInputError("<0|n|1> vanishes; cannot normalize couplings")
    table = g01 * elems / ref
    np.fill_diagonal(table, 0.0)
    if nearest_only:
        mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) == 1
        table = np.where(mask, table, 0.0)
    for (l, m), value in (overrides or {}).items():
        if max(l, m) >= n:
            continue
        table[l, m] = table[m, l] = value
    return table


def _level_op(layout, index, levels):
    d = layout.dims[index]
    return np.diag(np.asarray(levels[:d], dtype=complex))


def excitation_number(layout: HilbertLayout) -> QuantumOperator:
    """Total excitation number: transmon level index plus both boson numbers."""
    total = 0
    for i, d in enumerate(layout.dims):
        total = total + embed(np.diag(np.arange(d, dtype=complex)), i, layout)
    return total


def bare_hamiltonian(spectrum, params: SystemParams, layout: HilbertLayout) -> QuantumOperator:
    """sum_m omega_0m |m><m| + omega_cpw a^dag a + omega_nr b^dag b."""
    it, ic, ir = layout.index(TRANSMON), layout.index(CAVITY), layout.index(RESONATOR)
    if len(spectrum.levels) != layout.dims[it]:
        raise DimensionError(
            f"spectrum has {len(spectrum.levels)} levels but the transmon "
            f"subsystem has dimension {layout.dims[it]}"
        )
    a = annihilation(layout.dims[ic])
    b = annihilation(layout.dims[ir])
    return (
        embed(_level_op(layout, it, spectrum.levels), it, layout)
        + params.omega_cpw * embed(a.conj().T @ a, ic, layout)
        + params.omega_nr * embed(b.conj().T @ b, ir, layout)
    )


def _coupling(table, mode_index, layout, name):
    it = layout.index(TRANSMON)
    dt = layout.dims[it]
    t = np.asarray(table, dtype=complex)
    if t.shape[0] < dt:
        raise DimensionError(f"{name} table is {t.shape} but transmon has {dt} levels")
    t = t[:dt, :dt]
    dev = hermitian_deviation(t)
    if dev > DEFAULT.hermiticity:
        raise NonHermitianError(dev, DEFAULT.hermiticity, f"coupling table {name}")
    a = annihilation(layout.dims[mode_index])
    x = embed(a + a.conj().T, mode_index, layout)
    return embed(t, it, layout) @ x


def coupling_hamiltonians(spectrum, params: SystemParams, layout: HilbertLayout):
    """Full (non-RWA) sum g_lm |l><m|(a^dag + a) and sum lam_lm |l><m|(b^dag + b)."""
    h_cpw = _coupling(params.g, layout.index(CAVITY), layout, "g")
    h_nr = _coupling(params.lam, layout.index(RESONATOR), layout, "lam")
    return h_cpw, h_nr


def drive_hamiltonian(params: SystemParams, layout: HilbertLayout) -> DriveTerm:
    ic = layout.index(CAVITY)
    a = embed(annihilation(layout.dims[ic]), ic, layout)
    return DriveTerm(float(params.E_d), float(params.omega_d), a)


def rotating_wave(h: QuantumOperator) -> QuantumOperator:
    """Keep only the excitation-conserving part of ``h``."""
    n = np.rint(np.real(np.diag(excitation_number(h.layout).matrix))).astype(int)
    mask = n[:, None] == n[None, :]
    return QuantumOperator(np.where(mask, h.matrix, 0.0), h.layout)


def frame_parts(bare: QuantumOperator, couplings, drive: DriveTerm | None):
    """Split the drive-frame Hamiltonian as H(w_d) = H_static - w_d N + H_drive."""
    h_static = bare
    for h in couplings:
        h_static = h_static + rotating_wave(h)
    number = excitation_number(bare.layout)
    if drive is None or drive.is_null:
        h_drive = QuantumOperator(np.zeros_like(bare.matrix), bare.layout)
    else:
        h_drive = drive.amplitude * (drive.lowering + drive.raising)
    return h_static, number, h_drive


def rotating_frame(bare, couplings, drive: DriveTerm | None, omega_d: float) -> QuantumOperator:
    """Time-independent Hamiltonian in the frame rotating at ``omega_d``."""
    h_static, number, h_drive = frame_parts(bare, couplings, drive)
    return h_static - omega_d * number + h_drive
