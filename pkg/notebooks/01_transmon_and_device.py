# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # Transmon spectrum and device estimates
#
# Flux-tunable transmon levels from the charge-basis Hamiltonian, the flux at
# which the qubit meets the mechanical mode, and the closed-form device
# estimates: beam frequencies, coupling per volt and the thermal photon chain.

# %%
import math

import matplotlib.pyplot as plt
import numpy as np

from qemsim import device as dev
from qemsim.params import DeviceParams
from qemsim.spectroscopy import dressed_cavity_frequency, resonance_flux
from qemsim.transmon import spectrum_at_flux

TWO_PI = 2 * math.pi
d = DeviceParams()

# %% [markdown]
# ## Level ladder against flux

# %%
flux = np.linspace(0.0, 0.45, 91)
levels = np.array([spectrum_at_flux(d.transmon, f, 3).levels for f in flux])
f0 = resonance_flux(d)

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(flux, levels[:, 1] / TWO_PI / 1e9, label="0-1")
ax.plot(flux, (levels[:, 2] - levels[:, 1]) / TWO_PI / 1e9, label="1-2")
ax.axhline(d.omega_nr / TWO_PI / 1e9, color="k", ls=":", label="NR mode")
ax.axvline(f0, color="grey", lw=0.8)
ax.set_xlabel("flux (Phi0)")
ax.set_ylabel("frequency (GHz)")
ax.legend()

s = spectrum_at_flux(d.transmon, f0, 3)
print(f"resonance flux {f0:.4f} Phi0")
print(f"anharmonicity there {s.anharmonicity / TWO_PI / 1e6:.1f} MHz")
print(f"dressed cavity {dressed_cavity_frequency(d, f0) / TWO_PI / 1e9:.5f} GHz")

# %% [markdown]
# ## Beam mechanics and coupling

# %%
beam = dev.BeamSpec()
f3 = dev.beam_frequency(beam, 3)
m = dev.effective_mass(beam, 3)
x_zp = dev.zero_point(m, TWO_PI * f3)
per_volt = abs(dev.coupling_strength(d.transmon.E_C, 1.4e-9, 1.0, x_zp)) / TWO_PI
print(f"f1 = {dev.beam_frequency(beam, 1) / 1e6:.1f} MHz, f3 = {f3 / 1e9:.3f} GHz")
print(f"m_eff = {m * 1e18:.2f} fg, x_zp = {x_zp * 1e15:.1f} fm")
print(f"coupling {per_volt / 1e3:.1f} kHz/V")

# %% [markdown]
# ## Thermal photons in the cavity

# %%
n_in = dev.attenuated_population(dev.INPUT_CHAIN, d.omega_cpw)
n_out = dev.output_population(4.0, 35.0, 0.03, d.omega_cpw)
n, T = dev.cavity_mode_temperature(n_in, n_out, d.omega_cpw)
print(f"n_in = {n_in:.4f}, n_out = {n_out:.4f}, n_cpw = {n:.4f}, T_cpw = {T * 1e3:.1f} mK")
print(f"qubit temperature bound {dev.qubit_temperature_bound(110.0, 1.85, s.transition(0, 1)) * 1e3:.1f} mK")
