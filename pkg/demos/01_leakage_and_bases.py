"""
Leakage and sparsifying dictionaries
====================================

An off-grid Doppler shift smears one scatterer over many Doppler bins.
Here we measure that smear and compare how well three dictionaries
collect the energy back into a few coefficients.
"""
import numpy as np

from ccest import bases as bz
from ccest.channel import FilterModel, ScattererPath, spreading, synth_specular
from ccest.mcframe import make_cp_ofdm

cfg = make_cp_ofdm(64, 80, 8)
print("frame: K=%d N=%d L=%d, N_r=%d samples" % (cfg.K, cfg.N, cfg.L, cfg.N_r))

# one path on the Doppler grid, one halfway between two grid points
model = FilterModel.rrc(0.25)
for label, d in (("on grid", 2.0), ("off grid", 2.5)):
    h = synth_specular([ScattererPath(3.0, d / cfg.N_r, 1.0)], model, cfg, 16)
    prof = np.sum(np.abs(spreading(h)) ** 2, axis=0)
    prof /= prof.sum()
    top = np.sort(prof)[::-1]
    print("%-9s Doppler bins holding 99%% of energy: %d" % (label, np.searchsorted(np.cumsum(top), 0.99) + 1))

# DFT basis versus the optimized basis on the same delay-Doppler profiles
D, J, nu_max = 16, 8, 0.03 / cfg.K
grid = bz.DopplerGrid(cfg.N_r, nu_max)
C = [bz.c_vectors(cfg, grid, m, J) for m in range(D)]
opt = bz.deterministic_basis(cfg, D, J, nu_max)
B0 = bz.dft_matrix(J)
cost_dft = sum(bz.l1_cost(B0, c) for c in C)
cost_opt = sum(bz.l1_cost(B, c) for B, c in zip(opt.matrices, C))
print("l1 cost: DFT %.1f, optimized %.1f (%d iterations)" % (cost_dft, cost_opt, len(opt.cost_trace) - 1))

# largest coefficient share per Doppler value
for name, mats in (("DFT", [B0] * D), ("optimized", opt.matrices)):
    share = np.mean([np.max(np.abs(c @ B.T) ** 2, axis=1).sum() / (np.abs(c @ B.T) ** 2).sum()
                     for B, c in zip(mats, C)])
    print("%-9s mean energy in the largest coefficient: %.3f" % (name, share))

# the DFT+DPSS combination: energy a Doppler tone leaves outside J functions
cb = bz.combined_basis(4096, 0.2 / 256, 4)
worst = max(bz.energy_outside(cb, nu) for nu in np.linspace(-0.2 / 256, 0.2 / 256, 41)) / 4096
print("combined basis J=%d: worst energy outside %.4f%%" % (cb.J, 100 * worst))
