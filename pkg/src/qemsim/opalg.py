"""Operators on truncated tensor-product Hilbert spaces and their superoperators.

Conventions
-----------
* hbar = 1; energies and rates are angular frequencies (rad/s).
* Subsystem order is (transmon, cavity, nanoresonator).
* Density matrices are vectorized by column stacking, so that
  ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.

Operators are small (D <= a few hundred) and kept dense. Superoperators are
D^2 x D^2 and stored as scipy CSR matrices; ``.toarray()`` gives the dense
form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, NonHermitianError
from .tolerances import DEFAULT

__all__ = [
    "HilbertLayout",
    "QuantumOperator",
    "Superoperator",
    "annihilation",
    "identity",
    "projector",
    "transition",
    "embed",
    "dissipator",
    "hamiltonian_part",
    "expectation",
    "vectorize",
    "devectorize",
    "hermitian_deviation",
    "commutator_norm",
]

DEFAULT_LABELS = ("transmon", "cavity", "nanoresonator")


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered subsystem dimensions of a tensor-product space."""

    dims: tuple[int, ...] = (3, 4, 5)
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        labels = tuple(self.labels)
        if len(labels) != len(dims):
            if labels == DEFAULT_LABELS:
                labels = tuple(f"s{i}" for i in range(len(dims)))
            else:
                raise DimensionError(
                    f"{len(labels)} labels given for {len(dims)} subsystems"
                )
        object.__setattr__(self, "labels", labels)
        if not dims:
            raise DimensionError("layout needs at least one subsystem")
        for label, d in zip(labels, dims):
            if d < 2:
                raise DimensionError(f"subsystem {label!r} has dimension {d} < 2")

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def index(self, subsystem) -> int:
        if isinstance(subsystem, str):
            try:
                return self.labels.index(subsystem)
            except ValueError:
                raise DimensionError(f"no subsystem named {subsystem!r}") from None
        i = int(subsystem)
        if not 0 <= i < len(self.dims):
            raise DimensionError(f"subsystem index {i} out of range")
        return i

    def basis_labels(self) -> np.ndarray:
        """Array of shape (D, n_subsystems) with the local level of each basis state."""
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, QuantumOperator):
        return x.matrix
    if sp.issparse(x):
        return x
    return np.asarray(x)


@dataclass(frozen=True, eq=False)
class QuantumOperator:
    """Dense complex matrix attached to a :class:`HilbertLayout`."""

    matrix: np.ndarray
    layout: HilbertLayout = field(default_factory=HilbertLayout)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.layout.total:
            raise DimensionError(
                f"matrix side {m.shape[0]} does not match layout dimension "
                f"{self.layout.total}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "QuantumOperator":
        return QuantumOperator(self.matrix.conj().T, self.layout)

    def _check(self, other):
        if isinstance(other, QuantumOperator) and other.layout.dims != self.layout.dims:
            raise DimensionError(
                f"layouts differ: {self.layout.dims} vs {other.layout.dims}"
            )

    def __matmul__(self, other):
        self._check(other)
        return QuantumOperator(self.matrix @ _as_matrix(other), self.layout)

    def __add__(self, other):
        self._check(other)
        return QuantumOperator(self.matrix + _as_matrix(other), self.layout)

    __radd__ = __add__

    def __sub__(self, other):
        self._check(other)
        return QuantumOperator(self.matrix - _as_matrix(other), self.layout)

    def __neg__(self):
        return QuantumOperator(-self.matrix, self.layout)

    def __mul__(self, scalar):
        if isinstance(scalar, QuantumOperator):
            return NotImplemented
        return QuantumOperator(scalar * self.matrix, self.layout)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return QuantumOperator(self.matrix / scalar, self.layout)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol=DEFAULT.hermiticity) -> bool:
        return hermitian_deviation(self.matrix) <= tol

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Sparse D^2 x D^2 matrix acting on column-stacked density matrices."""

    matrix: sp.csr_matrix
    layout: HilbertLayout = field(default_factory=HilbertLayout)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        n = self.layout.total ** 2
        if m.shape != (n, n):
            raise DimensionError(f"superoperator shape {m.shape} != ({n}, {n})")
        object.__setattr__(self, "matrix", m)

    def __add__(self, other):
        if isinstance(other, Superoperator):
            if other.layout.dims != self.layout.dims:
                raise DimensionError("superoperator layouts differ")
            other = other.matrix
        return Superoperator(self.matrix + other, self.layout)

    __radd__ = __add__

    def __mul__(self, scalar):
        return Superoperator(scalar * self.matrix, self.layout)

    __rmul__ = __mul__

    def apply(self, rho):
        """Act on a density matrix, returning the resulting matrix."""
        v = self.matrix @ vectorize(rho)
        return devectorize(v, self.layout)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def trace_defect(self) -> float:
        """Max |vec(I)^dagger L|, zero for a trace-preserving generator."""
        D = self.layout.total
        diag = np.arange(D) * (D + 1)
        row = np.asarray(self.matrix[diag, :].sum(axis=0)).ravel()
        return float(np.max(np.abs(row))) if row.size else 0.0


def hermitian_deviation(m) -> float:
    """Relative Frobenius deviation ||M - M^dagger|| / ||M|| (0 for M = 0)."""
    m = _as_matrix(m)
    if sp.issparse(m):
        m = m.toarray()
    norm = np.linalg.norm(m)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(m - m.conj().T) / norm)


def annihilation(d: int) -> np.ndarray:
    """Truncated bosonic lowering operator with <n-1|a|n> = sqrt(n)."""
    d = int(d)
    if d < 2:
        raise DimensionError(f"bosonic truncation needs d >= 2, got {d}")
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def identity(d: int) -> np.ndarray:
    return np.eye(int(d), dtype=complex)


def transition(d: int, l: int, m: int) -> np.ndarray:
    """|l><m| on a d-level system."""
    out = np.zeros((d, d), dtype=complex)
    out[l, m] = 1.0
    return out


def projector(d: int, m: int) -> np.ndarray:
    return transition(d, m, m)


def embed(op, index, layout: HilbertLayout) -> QuantumOperator:
    """Lift a single-subsystem operator to the full space, I x ... x op x ... x I."""
    i = layout.index(index)
    m = np.asarray(op, dtype=complex)
    d = layout.dims[i]
    if m.shape != (d, d):
        raise DimensionError(
            f"operator of shape {m.shape} does not fit subsystem "
            f"{layout.labels[i]!r} of dimension {d}"
        )
    factors = [m if j == i else np.eye(dj, dtype=complex) for j, dj in enumerate(layout.dims)]
    return QuantumOperator(reduce(np.kron, factors), layout)


def _csr(m) -> sp.csr_matrix:
    return sp.csr_matrix(_as_matrix(m), dtype=complex)


def _layout_of(op, layout):
    if layout is not None:
        return layout
    if isinstance(op, QuantumOperator):
        return op.layout
    raise DimensionError("a layout is required for a bare matrix")


def spre(a) -> sp.csr_matrix:
    """rho -> A rho."""
    a = _csr(a)
    return sp.kron(sp.identity(a.shape[0], dtype=complex, format="csr"), a, format="csr")


def spost(b) -> sp.csr_matrix:
    """rho -> rho B."""
    b = _csr(b)
    return sp.kron(b.T, sp.identity(b.shape[0], dtype=complex, format="csr"), format="csr")


def dissipator(a, layout: HilbertLayout | None = None) -> Superoperator:
    """D[A] rho = A rho A^dagger - (A^dagger A rho + rho A^dagger A) / 2."""
    layout = _layout_of(a, layout)
    m = _csr(a)
    if m.shape != (layout.total, layout.total):
        raise DimensionError(f"collapse operator shape {m.shape} does not match layout")
    ada = (m.conj().T @ m).tocsr()
    jump = sp.kron(m.conj(), m, format="csr")
    return Superoperator(jump - 0.5 * spre(ada) - 0.5 * spost(ada), layout)


def hamiltonian_part(h, layout: HilbertLayout | None = None, tol=DEFAULT.hermiticity) -> Superoperator:
    """Superoperator for rho -> -i [H, rho]."""
    layout = _layout_of(h, layout)
    m = _as_matrix(h)
    if m.shape != (layout.total, layout.total):
        raise DimensionError(f"Hamiltonian shape {m.shape} does not match layout")
    dev = hermitian_deviation(m)
    if dev > tol:
        raise NonHermitianError(dev, tol, "Hamiltonian")
    return Superoperator(-1j * (spre(m) - spost(m)), layout)


def expectation(rho, a) -> complex:
    """tr(rho A)."""
    r, m = _as_matrix(rho), _as_matrix(a)
    if r.shape != m.shape:
        raise DimensionError(f"shape mismatch: {r.shape} vs {m.shape}")
    # tr(rho A) = sum_ij rho_ij A_ji
    return complex(np.sum(r * m.T))


def vectorize(rho) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(_as_matrix(rho), dtype=complex).reshape(-1, order="F")


def devectorize(v, layout: HilbertLayout | None = None):
    """Inverse of :func:`vectorize`; returns a QuantumOperator when a layout is given."""
    v = np.asarray(v)
    n = v.size
    d = int(round(np.sqrt(n)))
    if d * d != n:
        raise DimensionError(f"vector length {n} is not a perfect square")
    m = v.reshape(d, d, order="F")
    if layout is None:
        return m
    return QuantumOperator(m, layout)


def commutator_norm(a, b) -> float:
    a, b = _as_matrix(a), _as_matrix(b)
    return float(np.linalg.norm(a @ b - b @ a))
