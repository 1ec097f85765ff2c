"""Device parameter record and assembly of the full open-system model at one flux."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import PhysicsInputError
from .hamiltonian import (
    SystemParams,
    bare_hamiltonian,
    coupling_hamiltonians,
    coupling_table,
    drive_hamiltonian,
    frame_parts,
)
from .lindblad import BathSpec, collapse_operators, rates_from_measured
from .opalg import HilbertLayout
from .transmon import TransmonParams, spectrum_at_flux

__all__ = ["DeviceParams", "ModelAtFlux", "build_model"]

TWO_PI = 2.0 * math.pi


def _angular(table_hz):
    return {float(k): TWO_PI * float(v) for k, v in table_hz.items()}


@dataclass(frozen=True)
class DeviceParams:
    """Measured device parameters; frequencies and rates in rad/s, times in s."""

    transmon: TransmonParams = field(default_factory=TransmonParams)
    omega_cpw: float = TWO_PI * 4.94e9
    omega_nr: float = TWO_PI * 3.47e9
    g01: float = TWO_PI * 120e6
    g12: float | None = None
    lambda_per_volt: float = TWO_PI * 300e3
    T1: float = 15e-6
    T2star: float = 1.4e-6
    kappa_cpw: float = TWO_PI * 0.28e6
    kappa_cpw_by_voltage: dict = field(
        default_factory=lambda: _angular({4.5: 0.28e6, 5.5: 0.37e6, 6.5: 1.08e6})
    )
    kappa_nr: float = TWO_PI * 24e6
    T_Q: float = 0.030
    T_cpw: float = 0.045
    dims: tuple = (3, 4, 5)
    photon_number: float = 0.1
    gamma12_factor: float = 2.0
    dephasing2_factor: float = 2.0

    def __post_init__(self):
        for name in ("omega_cpw", "omega_nr", "g01", "T1", "T2star", "kappa_cpw", "kappa_nr"):
            if not getattr(self, name) > 0:
                raise PhysicsInputError(f"{name} must be positive")
        if self.photon_number < 0:
            raise PhysicsInputError("photon_number must be >= 0")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def layout(self) -> HilbertLayout:
        return HilbertLayout(self.dims)

    def kappa_cpw_at(self, V_NR: float) -> float:
        """Measured cavity linewidth for a coupling voltage (default if not tabulated)."""
        for v, kappa in self.kappa_cpw_by_voltage.items():
            if abs(abs(V_NR) - v) < 1e-9:
                return kappa
        return self.kappa_cpw

    def coupling_at(self, V_NR: float) -> float:
        return self.lambda_per_volt * abs(V_NR)

    def drive_amplitude(self, kappa_cpw: float | None = None) -> float:
        """E_d giving ``photon_number`` photons in the bare cavity on resonance."""
        kappa = self.kappa_cpw if kappa_cpw is None else kappa_cpw
        return math.sqrt(self.photon_number) * kappa / 2.0

    def with_(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ModelAtFlux:
    """Everything needed to form L(w_d) = L_static + w_d K + L_drive at one flux."""

    spectrum: object
    system: SystemParams
    rates: object
    h_static: object
    number: object
    h_drive: object
    collapses: list
    layout: HilbertLayout


def build_model(
    device: DeviceParams,
    flux: float,
    lam: float,
    T_NR: float,
    *,
    kappa_cpw: float | None = None,
    E_d: float | None = None,
) -> ModelAtFlux:
    """Assemble the spectrum, Hamiltonian pieces and collapse operators at ``flux``."""
    layout = device.layout
    kappa = device.kappa_cpw if kappa_cpw is None else kappa_cpw
    E_d = device.drive_amplitude(kappa) if E_d is None else E_d
    spectrum = spectrum_at_flux(device.transmon, flux, layout.dims[layout.index("transmon")])
    overrides = {(1, 2): device.g12} if device.g12 is not None else None
    g = coupling_table(spectrum, device.g01, overrides)
    lam_table = coupling_table(spectrum, lam)
    system = SystemParams(device.omega_cpw, device.omega_nr, g, lam_table, E_d=E_d)
    bare = bare_hamiltonian(spectrum, system, layout)
    drive = drive_hamiltonian(system, layout)
    h_static, number, h_drive = frame_parts(bare, coupling_hamiltonians(spectrum, system, layout), drive)
    rates = rates_from_measured(
        device.T1,
        device.T2star,
        kappa,
        device.kappa_nr,
        BathSpec(device.T_Q, device.T_cpw, T_NR),
        spectrum,
        omega_cpw=device.omega_cpw,
        omega_nr=device.omega_nr,
        gamma12_factor=device.gamma12_factor,
        dephasing2_factor=device.dephasing2_factor,
    )
    collapses = collapse_operators(rates, layout)
    return ModelAtFlux(spectrum, system, rates, h_static, number, h_drive, collapses, layout)
