"""Named experiment configurations.

Desk presets shrink K, L and trial counts; algorithm parameters are left
as in the full-scale presets. The full presets take hours to days.
"""
from .config import ExperimentConfig

_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
_ALL_SOLVERS = ("lasso", "omp", "cosamp")

PRESETS = {
    "fig3-desk": {
        "system.K": 256, "system.L": 8, "system.delta_K": 4, "system.delta_L": 1,
        "channel.nu_max_k": 0.03, "pilots.count": 256,
        "estimator.bases": ("dft", "opt", "combined"), "estimator.solvers": _ALL_SOLVERS,
        "sweep.axis": "snr_db", "sweep.values": _SNR_GRID, "sweep.trials": 50,
    },
    "fig4-desk": {
        "system.K": 256, "system.L": 8, "system.delta_K": 4, "system.delta_L": 1,
        "channel.nu_max_k": 0.03,
        "estimator.bases": ("dft", "opt", "combined"), "estimator.solvers": _ALL_SOLVERS,
        "sweep.axis": "num_pilots", "sweep.values": (64, 128, 256, 512),
        "sweep.snr_db": 17.0, "sweep.trials": 50,
    },
    "fig5-desk": {
        "system.K": 256, "system.L": 4, "system.delta_K": 1, "system.delta_L": 1,
        "pilots.count": 32, "pilots.placement": "full",
        "estimator.kind": "dd", "estimator.bases": ("combined",), "estimator.solvers": ("omp",),
        "sweep.axis": "nu_max_k", "sweep.values": (0.03, 0.1, 0.2),
        "sweep.snr_db": 17.0, "sweep.trials": 50,
    },
    "fig3-full": {
        "system.K": 2048, "system.L": 16, "system.delta_K": 4, "system.delta_L": 1,
        "channel.nu_max_k": 0.03, "pilots.count": 2048, "solver.sparsity": 262,
        "estimator.bases": ("dft", "opt", "combined"), "estimator.solvers": _ALL_SOLVERS,
        "sweep.axis": "snr_db", "sweep.values": _SNR_GRID, "sweep.trials": 200,
    },
    "fig4-full": {
        "system.K": 2048, "system.L": 16, "system.delta_K": 4, "system.delta_L": 1,
        "channel.nu_max_k": 0.03, "solver.sparsity": 262,
        "estimator.bases": ("dft", "opt", "combined"), "estimator.solvers": _ALL_SOLVERS,
        "sweep.axis": "num_pilots", "sweep.values": (512, 1024, 2048, 4096, 8192),
        "sweep.snr_db": 17.0, "sweep.trials": 200,
    },
    "fig5-full": {
        "system.K": 1024, "system.L": 4, "system.delta_K": 1, "system.delta_L": 1,
        "pilots.count": 128, "pilots.placement": "full",
        "estimator.kind": "dd", "estimator.bases": ("combined",), "estimator.solvers": ("omp",),
        "sweep.axis": "nu_max_k", "sweep.values": (0.03, 0.05, 0.1, 0.15, 0.2, 0.25),
        "sweep.snr_db": 17.0, "sweep.trials": 200,
    },
}


def get(name):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    vals = dict(PRESETS[name])
    vals["preset.name"] = name
    vals.setdefault("output.path", f"{name}.csv")
    return ExperimentConfig(vals)
