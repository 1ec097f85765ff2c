# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # Cavity transmission and transmon populations
#
# Steady-state cavity response of the transmon-cavity-nanoresonator system
# against flux and probe frequency. A cold nanoresonator leaves a smooth
# dispersive pull. A hot one heats the transmon near resonance and the
# transmission drops there. The grids here are coarse so the notebook runs
# in a few minutes; the acceptance suite uses 80 x 60.

# %%
import math
import warnings

import matplotlib.pyplot as plt
import numpy as np

from qemsim.params import DeviceParams
from qemsim.spectroscopy import (
    default_grid,
    population_trace,
    resonance_flux,
    sweep,
    transmission_suppression,
)

TWO_PI = 2 * math.pi
d = DeviceParams()
f0 = resonance_flux(d)
cases = [(4.5, 0.03), (6.5, 0.18)]

# %%
maps = {}
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for V, T in cases:
        maps[T] = sweep(default_grid(d, V, T, n_flux=25, n_probe=30))

fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
for ax, (T, smap) in zip(axes, maps.items()):
    g = smap.grid
    extent = [g.flux_axis[0], g.flux_axis[-1], g.probe_axis[0] / TWO_PI / 1e9, g.probe_axis[-1] / TWO_PI / 1e9]
    ax.imshow(smap.normalized_amplitude.T, origin="lower", aspect="auto", extent=extent)
    ax.set_title(f"T_NR = {T * 1e3:.0f} mK")
    ax.set_xlabel("flux (Phi0)")
axes[0].set_ylabel("probe (GHz)")

# %% [markdown]
# ## Peak suppression near resonance

# %%
for T, smap in maps.items():
    sup, ref = transmission_suppression(smap, f0)
    i = int(np.nanargmax(sup))
    print(f"{T * 1e3:.0f} mK: max suppression {sup[i]:.1%} at flux offset {smap.grid.flux_axis[i] - f0:+.4f}")

# %% [markdown]
# ## Transmon populations

# %%
flux = f0 + np.linspace(-0.03, 0.03, 13)
fig, ax = plt.subplots(figsize=(6, 4))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for V, T in [(4.5, 0.03), (5.5, 0.10), (6.5, 0.18)]:
        tr = population_trace(d, flux, d.coupling_at(V), T)
        ax.plot(flux - f0, tr.p1, "o-", label=f"{T * 1e3:.0f} mK")
ax.set_xlabel("flux - resonance (Phi0)")
ax.set_ylabel("p1")
ax.legend()
