"""Dissipative rates, Liouvillian assembly and steady states of the master equation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.constants import hbar, k as k_B

from .errors import PhysicsInputError, SingularSystemError, TruncationWarning
from .opalg import (
    HilbertLayout,
    QuantumOperator,
    Superoperator,
    annihilation,
    devectorize,
    dissipator,
    embed,
    expectation,
    hamiltonian_part,
    projector,
    transition,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "BathSpec",
    "RateSet",
    "Collapse",
    "SteadyState",
    "bose_occupation",
    "boltzmann_ratio",
    "rates_from_measured",
    "collapse_operators",
    "liouvillian",
    "check_trace_preserving",
    "steady_state",
    "DrivenSteadyStateSolver",
]


@dataclass(frozen=True)
class BathSpec:
    """Bath temperatures in kelvin."""

    T_Q: float = 0.030
    T_cpw: float = 0.045
    T_NR: float = 0.030

    def __post_init__(self):
        for name in ("T_Q", "T_cpw", "T_NR"):
            if getattr(self, name) < 0:
                raise PhysicsInputError(f"{name} must be >= 0")


def boltzmann_ratio(omega: float, T: float) -> float:
    """exp(-hbar omega / k_B T), zero at T = 0."""
    if T <= 0:
        return 0.0
    # divide by T last so a subnormal T overflows to inf instead of dividing by zero
    return math.exp(-(hbar * omega / k_B) / T)


def bose_occupation(omega: float, T: float) -> float:
    """Mean thermal occupation 1 / (exp(hbar omega / k_B T) - 1)."""
    if omega <= 0:
        raise PhysicsInputError(f"frequency must be positive, got {omega}")
    if T <= 0:
        return 0.0
    x = (hbar * omega / k_B) / T
    if x > 700.0:  # expm1 overflows; exp(-x) is exact to double precision here
        return math.exp(-x)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class RateSet:
    """All dissipative rates, rad/s."""

    kappa_cpw_down: float
    kappa_cpw_up: float
    kappa_nr_down: float
    kappa_nr_up: float
    gamma01_down: float
    gamma01_up: float
    gamma12_down: float
    gamma12_up: float
    dephasing1: float
    dephasing2: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value < 0 or not math.isfinite(value):
                raise PhysicsInputError(f"rate {name} must be finite and >= 0, got {value}")


def rates_from_measured(
    T1: float,
    T2star: float,
    kappa_cpw: float,
    kappa_nr: float,
    bath: BathSpec,
    spectrum,
    *,
    omega_cpw: float,
    omega_nr: float,
    gamma12_factor: float = 2.0,
    dephasing2_factor: float = 2.0,
) -> RateSet:
    """Turn measured T1, T2*, linewidths and temperatures into a :class:`RateSet`.

    The transmon 0-1 pair is split so that up + down = 1/T1 with
    up/down = exp(-hbar w01 / k T_Q). The bosonic modes decay at the measured
    linewidth and are re-excited at linewidth * exp(-hbar w / k T).
    """
    if min(T1, T2star, kappa_cpw, kappa_nr) <= 0:
        raise PhysicsInputError("T1, T2*, kappa_cpw and kappa_nr must be positive")
    if T2star > 2 * T1:
        raise PhysicsInputError(f"T2* = {T2star:.3g} s exceeds 2 T1 = {2 * T1:.3g} s")
    x01 = boltzmann_ratio(spectrum.transition(0, 1), bath.T_Q)
    g01_down = (1.0 / T1) / (1.0 + x01)
    rates = dict(
        kappa_cpw_down=kappa_cpw,
        kappa_cpw_up=kappa_cpw * boltzmann_ratio(omega_cpw, bath.T_cpw),
        kappa_nr_down=kappa_nr,
        kappa_nr_up=kappa_nr * boltzmann_ratio(omega_nr, bath.T_NR),
        gamma01_down=g01_down,
        gamma01_up=g01_down * x01,
        gamma12_down=0.0,
        gamma12_up=0.0,
    )
    if spectrum.n_levels > 2:
        g12_down = gamma12_factor * g01_down
        rates["gamma12_down"] = g12_down
        rates["gamma12_up"] = g12_down * boltzmann_ratio(spectrum.transition(1, 2), bath.T_Q)
    dephasing = 1.0 / T2star - 1.0 / (2.0 * T1)
    rates["dephasing1"] = max(dephasing, 0.0)
    rates["dephasing2"] = dephasing2_factor * rates["dephasing1"]
    return RateSet(**rates)


class Collapse(NamedTuple):
    rate: float
    operator: QuantumOperator
    name: str


def collapse_operators(rates: RateSet, layout: HilbertLayout) -> list[Collapse]:
    """The ten Lindblad channels with their rates.

    Dephasing projectors carry half the dephasing rate, following the form
    (gamma_phi / 2) D[|l><l|].
    """
    it, ic, ir = (layout.index(s) for s in ("transmon", "cavity", "nanoresonator"))
    dt = layout.dims[it]
    a = embed(annihilation(layout.dims[ic]), ic, layout)
    b = embed(annihilation(layout.dims[ir]), ir, layout)
    out = [
        Collapse(rates.kappa_cpw_down, a, "a"),
        Collapse(rates.kappa_cpw_up, a.dag, "a_dag"),
        Collapse(rates.kappa_nr_down, b, "b"),
        Collapse(rates.kappa_nr_up, b.dag, "b_dag"),
        Collapse(rates.gamma01_down, embed(transition(dt, 0, 1), it, layout), "sigma01_minus"),
        Collapse(rates.gamma01_up, embed(transition(dt, 1, 0), it, layout), "sigma01_plus"),
        Collapse(rates.dephasing1 / 2.0, embed(projector(dt, 1), it, layout), "sigma1_z"),
    ]
    if dt > 2:
        out[6:6] = [
            Collapse(rates.gamma12_down, embed(transition(dt, 1, 2), it, layout), "sigma12_minus"),
            Collapse(rates.gamma12_up, embed(transition(dt, 2, 1), it, layout), "sigma12_plus"),
        ]
        out.append(Collapse(rates.dephasing2 / 2.0, embed(projector(dt, 2), it, layout), "sigma2_z"))
    return out


def liouvillian(h, collapses, tol: Tolerances = DEFAULT) -> Superoperator:
    """-i[H, .] + sum_k rate_k D[A_k]."""
    L = hamiltonian_part(h, tol=tol.hermiticity)
    for c in collapses:
        rate, op = c[0], c[1]
        if rate:
            L = L + rate * dissipator(op)
    return L


def check_trace_preserving(L: Superoperator, tol: Tolerances = DEFAULT) -> float:
    """Return the relative trace defect, raising if it exceeds tolerance.

    The defect is max|vec(I)^dagger L| scaled by the largest matrix element.
    """
    scale = max(1.0, float(np.abs(L.matrix.data).max()) if L.matrix.nnz else 1.0)
    defect = L.trace_defect() / scale
    if defect > tol.trace_preservation:
        raise PhysicsInputError(
            f"Liouvillian is not trace preserving: relative defect {defect:.3e}"
        )
    return defect


@dataclass(frozen=True, eq=False)
class SteadyState:
    """A solved steady state with its diagnostics."""

    rho: QuantumOperator
    residual: float
    relative_residual: float
    min_eigenvalue: float
    method: str = "direct"
    iterations: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def layout(self) -> HilbertLayout:
        return self.rho.layout

    def expect(self, op) -> complex:
        return expectation(self.rho, op)

    def populations(self, subsystem) -> np.ndarray:
        """Diagonal of the reduced density matrix of one subsystem."""
        key = ("pop", subsystem)
        if key not in self._cache:
            layout = self.layout
            i = layout.index(subsystem)
            diag = np.real(np.diag(self.rho.matrix)).reshape(layout.dims)
            axes = tuple(j for j in range(len(layout.dims)) if j != i)
            self._cache[key] = diag.sum(axis=axes)
        return self._cache[key]

    @property
    def cavity_amplitude(self) -> complex:
        key = "a"
        if key not in self._cache:
            layout = self.layout
            ic = layout.index("cavity")
            a = embed(annihilation(layout.dims[ic]), ic, layout)
            self._cache[key] = self.expect(a)
        return self._cache[key]

    def truncation_report(self) -> dict:
        """Population of the top level of each subsystem."""
        return {label: float(self.populations(label)[-1]) for label in self.layout.labels}


def _finalize(x, apply_L, norm_L, layout, tol, method, iterations=0):
    rho = devectorize(x, None)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    v = rho.reshape(-1, order="F")
    residual = float(np.linalg.norm(apply_L(v)))
    rel = residual / (norm_L * float(np.linalg.norm(v))) if norm_L else residual
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    state = SteadyState(QuantumOperator(rho, layout), residual, rel, min_eig, method, iterations)
    for label, top in state.truncation_report().items():
        if top > tol.truncation_population:
            warnings.warn(
                f"top level of {label} holds population {top:.2e}; truncation may be too small",
                TruncationWarning,
                stacklevel=3,
            )
    return state


def _trace_row_system(Lm: sp.csr_matrix, D: int):
    """Replace the rho_00 equation with the trace constraint."""
    A = Lm.tolil(copy=True)
    A[0, :] = 0.0
    A[0, np.arange(D) * (D + 1)] = 1.0
    b = np.zeros(D * D, dtype=complex)
    b[0] = 1.0
    return A.tocsc(), b


def steady_state(L: Superoperator, tol: Tolerances = DEFAULT) -> SteadyState:
    """Solve L vec(rho) = 0 with tr(rho) = 1 by one sparse LU factorization."""
    check_trace_preserving(L, tol)
    D = L.layout.total
    A, b = _trace_row_system(L.matrix, D)
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(
            "steady-state system is singular: the steady manifold is degenerate; "
            "add a symmetry-breaking dissipator or perturbation"
        ) from exc
    x = lu.solve(b)
    norm_L = float(spla.norm(L.matrix))
    if np.linalg.norm(L.matrix @ x) > tol.steady_residual * norm_L * np.linalg.norm(x):
        x = x + lu.solve(b - A @ x)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("steady-state solve produced non-finite values")
    state = _finalize(x, L.matrix.__matmul__, norm_L, L.layout, tol, "direct")
    if state.relative_residual > tol.steady_residual:
        raise SingularSystemError(
            f"steady-state residual {state.relative_residual:.2e} above tolerance; "
            "the steady manifold may be degenerate, add symmetry breaking"
        )
    return state


def _factor(m: sp.csc_matrix):
    # preconditioner factors skip pivoting (GMRES corrects any loss of accuracy);
    # a zero pivot falls back to the pivoted factorization
    try:
        return spla.splu(m, permc_spec="MMD_AT_PLUS_A",
                         options={"SymmetricMode": True, "DiagPivotThresh": 0.0})
    except RuntimeError:
        return spla.splu(m, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})


def _with_diagonal(block):
    """CSC copy of ``block`` with explicit diagonal entries and their data positions."""
    n = block.shape[0]
    coo = block.tocoo()
    rows = np.concatenate([coo.row, np.arange(n)])
    cols = np.concatenate([coo.col, np.arange(n)])
    data = np.concatenate([coo.data, np.zeros(n, dtype=complex)])
    m = sp.csc_matrix((data, (rows, cols)), shape=block.shape)
    m.sort_indices()
    diag = np.empty(n, dtype=np.int64)
    for j in range(n):
        start, stop = m.indptr[j], m.indptr[j + 1]
        diag[j] = start + np.searchsorted(m.indices[start:stop], j)
    return m, diag


class DrivenSteadyStateSolver:
    """Steady states of L(w) = L_static + w K + L_drive for many drive frequencies.

    ``L_static`` is built from an excitation-conserving Hamiltonian and
    collapse operators that each change the excitation number by a fixed
    amount, so it is block diagonal in the coherence order
    k = N(row) - N(column). ``K`` (from the -w N term of the rotating frame)
    is diagonal and equal to i k on block k. Only the drive couples
    neighbouring blocks.

    Each solve factorizes the diagonal blocks (block 0 once, at construction;
    blocks -k and k share one factorization because they are complex
    conjugates of each other) and runs preconditioned GMRES on the full
    trace-constrained system. If GMRES fails, a direct sparse LU of the full
    system is used instead.
    """

    def __init__(self, h_static, number, h_drive, collapses, tol: Tolerances = DEFAULT):
        layout = h_static.layout
        self.layout = layout
        self.tol = tol
        D = layout.total
        self.D = D
        n = np.rint(np.real(np.diag(number.matrix))).astype(int)
        rows = np.tile(np.arange(D), D)
        cols = np.repeat(np.arange(D), D)
        korder = n[rows] - n[cols]

        L_static = liouvillian(h_static, collapses, tol).matrix
        check_trace_preserving(Superoperator(L_static, layout), tol)
        self._L_drive = hamiltonian_part(h_drive, tol=tol.hermiticity).matrix
        self._L_static = L_static
        self._kdiag = 1j * korder.astype(float)
        self._has_drive = self._L_drive.nnz > 0

        coo = L_static.tocoo()
        if np.any(korder[coo.row] != korder[coo.col]):
            raise PhysicsInputError(
                "static Liouvillian mixes coherence orders; use steady_state() instead"
            )

        # Block ordering: block k lists its (r, c) pairs; block -k lists the
        # mirrored pairs (c, r) in the same order.
        kmax = int(np.abs(korder).max())
        perm_blocks, self._bounds = [], {}
        start = 0
        block_k = {}
        for k in range(0, kmax + 1):
            idx = np.flatnonzero(korder == k)
            if k == 0:
                block_k[0] = idx
            else:
                block_k[k] = idx
                r, c = idx % D, idx // D
                block_k[-k] = c + r * D
        order = [0] + [s * k for k in range(1, kmax + 1) for s in (1, -1)]
        for k in order:
            idx = block_k[k]
            perm_blocks.append(idx)
            self._bounds[k] = (start, start + idx.size)
            start += idx.size
        self._perm = np.concatenate(perm_blocks)
        self._kmax = kmax
        self._trace_pos = int(np.flatnonzero(self._perm == 0)[0])

        P = sp.csr_matrix(
            (np.ones(D * D), (np.arange(D * D), self._perm)), shape=(D * D, D * D)
        )
        self._P = P
        Ls = (P @ L_static @ P.T).tocsr()
        Ld = (P @ self._L_drive @ P.T).tocsr()
        kd = self._kdiag[self._perm].copy()

        trace_cols = np.flatnonzero(np.isin(self._perm, np.arange(D) * (D + 1)))
        # the trace row is scaled to the size of the other rows so that the
        # GMRES tolerance is not below round-off of the dynamical rows
        scale = float(np.abs(Ls.data).max()) if Ls.nnz else 1.0
        base = (Ls + Ld).tolil()
        base[self._trace_pos, :] = 0.0
        base[self._trace_pos, trace_cols] = scale
        self._A_base = base.tocsr()
        kd[self._trace_pos] = 0.0
        self._kd = kd
        self._A_diag = _with_diagonal(self._A_base)
        L0 = (L_static + self._L_drive).tocsr()
        d0 = L0.diagonal()
        self._L0, self._L0_diag = L0, d0
        self._off_norm2 = max(float(np.vdot(L0.data, L0.data).real) - float(np.vdot(d0, d0).real), 0.0)
        self._rhs = np.zeros(D * D, dtype=complex)
        self._rhs[self._trace_pos] = scale

        lo, hi = self._bounds[0]
        B0 = self._A_base[lo:hi, lo:hi] - Ld[lo:hi, lo:hi]
        B0 = B0.tolil()
        B0[self._trace_pos - lo, :] = 0.0
        B0[self._trace_pos - lo, trace_cols - lo] = scale
        self._lu0 = _factor(B0.tocsc())
        self._static_blocks = {
            k: _with_diagonal(Ls[slice(*self._bounds[k]), slice(*self._bounds[k])])
            for k in range(1, kmax + 1)
        }
        self._Ls, self._Ld = Ls, Ld

    def _preconditioner(self, omega):
        lus = []
        for k, (block, diag) in self._static_blocks.items():
            data = block.data.copy()
            data[diag] += 1j * omega * k
            shifted = sp.csc_matrix((data, block.indices, block.indptr), shape=block.shape)
            lus.append((self._bounds[k], self._bounds[-k], _factor(shifted)))
        lo0, hi0 = self._bounds[0]
        lu0 = self._lu0

        def apply(v):
            v = np.asarray(v).ravel()
            out = np.empty(v.shape, dtype=complex)
            out[lo0:hi0] = lu0.solve(v[lo0:hi0])
            for (lo, hi), (mlo, mhi), lu in lus:
                # block -k is the conjugate of block k, so both go in one call
                sol = lu.solve(np.column_stack((v[lo:hi], np.conj(v[mlo:mhi]))))
                out[lo:hi] = sol[:, 0]
                out[mlo:mhi] = np.conj(sol[:, 1])
            return out

        n = self.D * self.D
        return spla.LinearOperator((n, n), matvec=apply, dtype=complex)

    def liouvillian_at(self, omega: float) -> Superoperator:
        """The full (unconstrained) Liouvillian at drive frequency ``omega``."""
        L = self._L_static + sp.diags(omega * self._kdiag) + self._L_drive
        return Superoperator(L.tocsr(), self.layout)

    def _residual_parts(self, omega):
        shift = omega * self._kdiag
        L0 = self._L0

        def apply_L(v):
            return L0 @ v + shift * v

        d = self._L0_diag + shift
        norm_L = math.sqrt(self._off_norm2 + float(np.vdot(d, d).real))
        return apply_L, norm_L

    def solve(self, omega: float) -> SteadyState:
        tol = self.tol
        apply_L, norm_L = self._residual_parts(omega)
        if not self._has_drive:
            lo, hi = self._bounds[0]
            y = np.zeros(self.D * self.D, dtype=complex)
            y[lo:hi] = self._lu0.solve(self._rhs[lo:hi])
            x = np.empty_like(y)
            x[self._perm] = y
            return _finalize(x, apply_L, norm_L, self.layout, tol, "block", 0)

        base, diag = self._A_diag
        data = base.data.copy()
        data[diag] += omega * self._kd
        A = sp.csc_matrix((data, base.indices, base.indptr), shape=base.shape)
        M = self._preconditioner(omega)
        count = [0]

        def callback(_):
            count[0] += 1

        y, info = spla.gmres(
            A,
            self._rhs,
            M=M,
            rtol=tol.gmres_rtol,
            atol=0.0,
            restart=60,
            maxiter=10,
            callback=callback,
            callback_type="pr_norm",
        )
        x = np.empty_like(y)
        x[self._perm] = y
        method = "block-gmres"
        if info != 0:
            lu = spla.splu(A, permc_spec="COLAMD")
            y = lu.solve(self._rhs)
            x[self._perm] = y
            method = "block-direct"
        state = _finalize(x, apply_L, norm_L, self.layout, tol, method, count[0])
        if state.relative_residual > tol.steady_residual:
            raise SingularSystemError(
                f"steady-state residual {state.relative_residual:.2e} above tolerance"
            )
        return state
