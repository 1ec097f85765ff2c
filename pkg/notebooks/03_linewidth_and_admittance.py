# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # Qubit linewidth from mechanical noise and from the circuit
#
# Two routes to the extra qubit broadening near the mechanical mode. The
# noise route treats the resonator position as a bath with a Lorentzian
# spectrum. The circuit route models the resonator as a series RLC branch on
# the qubit node and reads T1 from the real part of the admittance.

# %%
import math

import matplotlib.pyplot as plt
import numpy as np

from qemsim import device as dev
from qemsim.spectroscopy import (
    LinewidthModel,
    coupling_from_peak,
    fit_linewidth,
    noise_linewidth,
    synthetic_linewidth,
)

TWO_PI = 2 * math.pi

# %% [markdown]
# ## Noise route and fit

# %%
truth = LinewidthModel(TWO_PI * 1.3e6, TWO_PI * 3.47e9, TWO_PI * 24e6, 0.0, 2.0 / 1.4e-6)
w = TWO_PI * np.linspace(3.35e9, 3.59e9, 121)
data = synthetic_linewidth(truth, w, 0.05, np.random.default_rng(1))
fit = fit_linewidth(w, data)

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(w / TWO_PI / 1e9, data / TWO_PI / 1e3, ".", label="synthetic")
ax.plot(w / TWO_PI / 1e9, noise_linewidth(fit.model, w) / TWO_PI / 1e3, label="fit")
ax.set_xlabel("qubit frequency (GHz)")
ax.set_ylabel("linewidth (kHz)")
ax.legend()
print(f"fitted lambda/2pi = {fit.model.lam / TWO_PI / 1e6:.3f} MHz")
print(f"from a 280 kHz peak: {coupling_from_peak(TWO_PI * 280e3, 0.0, TWO_PI * 24e6) / TWO_PI / 1e6:.3f} MHz")

# %% [markdown]
# ## Circuit route

# %%
bare = dev.CircuitNetwork()
net = dev.CircuitNetwork(nr_branch=dev.calibrated_nr_branch(TWO_PI * 3.47e9, TWO_PI * 24e6,
                                                            TWO_PI * 1.5e6, bare.C_B))
wq = TWO_PI * np.linspace(3.3e9, 3.65e9, 701)
t1_bare, t1_nr = dev.radiative_t1(bare, wq), dev.radiative_t1(net, wq)

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(wq / TWO_PI / 1e9, t1_bare * 1e6, label="no resonator")
ax.semilogy(wq / TWO_PI / 1e9, t1_nr * 1e6, label="with resonator branch")
ax.set_xlabel("qubit frequency (GHz)")
ax.set_ylabel("radiative T1 (us)")
ax.legend()

j = int(np.argmin(t1_nr))
extra = dev.linewidth_from_t1(t1_nr[j]) - dev.linewidth_from_t1(t1_bare[j])
print(f"T1 dip at {wq[j] / TWO_PI / 1e9:.4f} GHz, extra linewidth {extra / 1e3:.0f} kHz")
