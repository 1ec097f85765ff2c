"""Cooper-pair-box spectrum of a flux-tunable transmon in the charge basis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, PhysicsInputError

__all__ = [
    "TransmonParams",
    "TransmonSpectrum",
    "josephson_energy",
    "cpb_hamiltonian",
    "diagonalize",
    "tridiagonal_eigh",
    "spectrum_at_flux",
    "omega01",
    "flux_for_frequency",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TransmonParams:
    """Charging and maximal Josephson energies, both as E/h in Hz."""

    E_C: float = 0.227e9
    E_J0: float = 15.4e9
    n_charge_states: int = 51
    n_g: float = 0.0

    def __post_init__(self):
        if not self.E_C > 0:
            raise PhysicsInputError(f"E_C must be positive, got {self.E_C}")
        if not self.E_J0 > 0:
            raise PhysicsInputError(f"E_J0 must be positive, got {self.E_J0}")
        n = int(self.n_charge_states)
        if n != self.n_charge_states or n < 11 or n % 2 == 0:
            raise PhysicsInputError(
                f"n_charge_states must be an odd integer >= 11, got {self.n_charge_states}"
            )

    @property
    def charges(self) -> np.ndarray:
        half = (self.n_charge_states - 1) // 2
        return np.arange(-half, half + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class TransmonSpectrum:
    """Lowest transmon levels at one flux point.

    ``levels`` are angular frequencies omega_0m relative to the ground state;
    ``charge_elements[l, m]`` is <l|n|m> with eigenvector signs chosen so the
    nearest-neighbour elements are non-negative.
    """

    flux: float
    levels: np.ndarray
    charge_elements: np.ndarray
    E_J: float

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def omega01(self) -> float:
        return float(self.levels[1])

    def transition(self, l: int, m: int) -> float:
        """omega_lm = omega_0m - omega_0l."""
        return float(self.levels[m] - self.levels[l])

    @property
    def anharmonicity(self) -> float:
        return self.transition(1, 2) - self.transition(0, 1)


def josephson_energy(E_J0: float, flux: float) -> float:
    """E_J0 |cos(pi Phi/Phi0)| (flux in units of Phi0)."""
    return float(E_J0 * abs(math.cos(math.pi * flux)))


def cpb_hamiltonian(params: TransmonParams, E_J: float) -> np.ndarray:
    """Charge-basis Hamiltonian in the energy units of ``params`` (Hz)."""
    n = params.charges
    h = np.diag(4.0 * params.E_C * (n - params.n_g) ** 2)
    off = np.full(len(n) - 1, -0.5 * E_J)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def tridiagonal_eigh(diag, off, vectors=True, max_iter=None):
    """Eigen-decomposition of a real symmetric tridiagonal matrix.

    Implicitly shifted QL with Wilkinson-style shifts. Eigenvalues are
    returned ascending; eigenvectors (columns) are orthonormal.

    Raises
    ------
    ConvergenceError
        If an eigenvalue needs more than ``max_iter`` QL sweeps.
    """
    d = [float(x) for x in diag]
    n = len(d)
    if len(off) != max(n - 1, 0):
        raise DimensionError(f"off-diagonal length {len(off)} for size {n}")
    e = [float(x) for x in off] + [0.0]
    max_iter = 30 * n if max_iter is None else max_iter
    eps = np.finfo(float).eps
    # zt[j] holds the j-th eigenvector (transposed storage keeps rows contiguous)
    zt = np.eye(n) if vectors else None

    total = 0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            total += 1
            if it > max_iter:
                raise ConvergenceError(
                    f"QL iteration did not converge for eigenvalue {l}",
                    iterations=total,
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if vectors:
                    zi, zi1 = zt[i], zt[i + 1]
                    new_i1 = s * zi + c * zi1
                    zt[i] = c * zi - s * zi1
                    zt[i + 1] = new_i1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0

    w = np.array(d)
    order = np.argsort(w, kind="stable")
    if not vectors:
        return w[order]
    return w[order], zt[order].T.copy()


def diagonalize(h):
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric tridiagonal matrix."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got {h.shape}")
    if np.any(np.triu(h, 2)) or np.any(np.tril(h, -2)):
        raise DimensionError("matrix is not tridiagonal")
    upper, lower = np.diag(h, 1), np.diag(h, -1)
    if not np.allclose(upper, lower, rtol=0, atol=1e-14 * max(1.0, np.abs(h).max())):
        raise DimensionError("matrix is not symmetric")
    return tridiagonal_eigh(np.diag(h), upper)


def _sorted_levels(params, flux, n_levels, vectors):
    E_J = josephson_energy(params.E_J0, flux)
    h = cpb_hamiltonian(params, E_J)
    out = tridiagonal_eigh(np.diag(h), np.diag(h, 1), vectors=vectors)
    return E_J, out


def spectrum_at_flux(params: TransmonParams, flux: float, n_levels: int = 3) -> TransmonSpectrum:
    """Levels (rad/s, ground at zero) and charge matrix elements at ``flux`` (units of Phi0)."""
    if not 2 <= n_levels <= 5:
        raise DimensionError(f"n_levels must be in [2, 5], got {n_levels}")
    E_J, (w, v) = _sorted_levels(params, flux, n_levels, vectors=True)
    v = v[:, :n_levels]
    n_op = params.charges
    elems = v.T @ (n_op[:, None] * v)
    for m in range(n_levels - 1):
        if elems[m, m + 1] < 0:
            v[:, m + 1] *= -1.0
            elems[m + 1, :] *= -1.0
            elems[:, m + 1] *= -1.0
    elems = 0.5 * (elems + elems.T)
    levels = TWO_PI * (w[:n_levels] - w[0])
    return TransmonSpectrum(float(flux), levels, elems, E_J)


def omega01(params: TransmonParams, flux: float) -> float:
    """0-1 transition (rad/s) from eigenvalues only."""
    _, w = _sorted_levels(params, flux, 2, vectors=False)
    return TWO_PI * float(w[1] - w[0])


def flux_for_frequency(params: TransmonParams, target: float, rtol: float = 1e-6) -> float:
    """Flux in [0, 0.5] where omega_01 equals ``target`` (rad/s), by bisection."""
    lo_f, hi_f = 0.0, 0.5
    w_top, w_bottom = omega01(params, lo_f), omega01(params, hi_f)
    if not w_bottom <= target <= w_top:
        raise PhysicsInputError(
            f"target {target / TWO_PI:.6g} Hz outside reachable range "
            f"[{w_bottom / TWO_PI:.6g}, {w_top / TWO_PI:.6g}] Hz"
        )
    if abs(w_top - target) <= rtol * target:
        return lo_f
    if abs(w_bottom - target) <= rtol * target:
        return hi_f
    for _ in range(200):
        mid = 0.5 * (lo_f + hi_f)
        w = omega01(params, mid)
        if abs(w - target) <= 1e-3 * rtol * target or hi_f - lo_f < 1e-15:
            return mid
        # omega_01 decreases with flux on [0, 0.5]
        if w > target:
            lo_f = mid
        else:
            hi_f = mid
    return 0.5 * (lo_f + hi_f)
