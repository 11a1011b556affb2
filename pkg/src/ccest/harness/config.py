"""Flat ``section.key = value`` experiment configuration.

Values are Python literals (numbers, strings, tuples, lists, ``None``,
booleans). ``#`` starts a comment. Unknown keys are rejected.
"""
import ast
import math

DEFAULTS = {
    "preset.name": "custom",
    "system.K": 256,
    "system.N": None,  # None: K + K/4
    "system.L": 8,
    "system.delta_K": 4,
    "system.delta_L": 1,
    "channel.path_counts": (3, 7, 10),
    "channel.path_powers_db": (0.0, -10.0, -20.0),
    "channel.nu_max_k": 0.03,  # maximum Doppler in subcarrier spacings
    "channel.doppler_bands_k": None,  # path Doppler drawn from these bands if set
    "channel.delay_span": None,  # None: K/4
    "channel.rolloff": 0.25,  # None: ideal lowpass
    "channel.diffuse_db": 20.0,
    "pilots.count": 256,
    "pilots.placement": "grid",  # grid | full
    "estimator.kind": "diagonal",  # diagonal | dd
    "estimator.bases": ("dft", "opt", "combined"),
    "estimator.solvers": ("omp",),
    "solver.sparsity": None,
    "solver.cosamp_iters": 15,
    "solver.lsqr_iters": 30,
    "solver.lasso_lambda": 0.01,
    "solver.lasso_iters": 300,
    "basis.rho0": 0.05,
    "basis.rho_min": 1e-4,
    "basis.max_iter": 100,
    "basis.inner_iters": 200,
    "basis.J1": 4,
    "basis.stat_bands_k": None,
    "basis.cache_dir": None,
    "dd.l_max": 0,
    "dd.k_max": 3,
    "dd.epsilon": 0.2,
    "dd.max_rounds": 9,
    "dd.equalizer_iters": 15,
    "dd.omp_iters": 90,
    "dd.tol": 1e-3,
    "dd.report_rounds": (0, 1, 2, 3, 5, 9),
    "codec.soft": False,
    "sweep.axis": "snr_db",  # snr_db | num_pilots | nu_max_k
    "sweep.values": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0),
    "sweep.snr_db": 20.0,
    "sweep.trials": 50,
    "sweep.seed": 1,
    "sweep.workers": 1,
    "output.path": "results.csv",
    "output.timing": False,
}

AXES = ("snr_db", "num_pilots", "nu_max_k")
BASES = ("dft", "opt", "stat", "combined")
SOLVERS = ("omp", "cosamp", "lasso")


class ConfigError(ValueError):
    pass


class ExperimentConfig:
    """Validated flat mapping; read entries as ``cfg["system.K"]``."""

    def __init__(self, values=None):
        merged = dict(DEFAULTS)
        for k, v in (values or {}).items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown key {k!r}")
            merged[k] = v
        self._v = merged
        self._validate()

    def __getitem__(self, key):
        return self._v[key]

    def replace(self, **updates):
        vals = dict(self._v)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return ExperimentConfig(vals)

    def with_values(self, mapping):
        vals = dict(self._v)
        vals.update(mapping)
        return ExperimentConfig(vals)

    def items(self):
        return sorted(self._v.items())

    @property
    def K(self):
        return self["system.K"]

    @property
    def N(self):
        return self["system.N"] if self["system.N"] is not None else self.K + self.K // 4

    @property
    def delay_span(self):
        d = self["channel.delay_span"]
        return self.K // 4 if d is None else d

    def to_text(self):
        return "".join(f"{k} = {v!r}\n" for k, v in self.items())

    def _validate(self):
        v = self._v
        for key in ("system.K", "system.L", "system.delta_K", "system.delta_L", "sweep.trials",
                    "sweep.workers", "pilots.count", "basis.J1", "dd.max_rounds"):
            if not isinstance(v[key], int) or isinstance(v[key], bool) or v[key] < (0 if key.startswith("dd") else 1):
                raise ConfigError(f"{key} must be a positive integer, got {v[key]!r}")
        if v["system.L"] % 2:
            raise ConfigError("system.L must be even")
        if v["system.K"] % v["system.delta_K"] or v["system.L"] % v["system.delta_L"]:
            raise ConfigError("subsampling factors must divide K and L")
        if self.N < self.K:
            raise ConfigError("system.N must be >= system.K")
        if not 1 <= self.delay_span <= self.K:
            raise ConfigError("channel.delay_span must lie in [1, K]")
        if v["sweep.axis"] not in AXES:
            raise ConfigError(f"sweep.axis must be one of {AXES}")
        vals = v["sweep.values"]
        if not isinstance(vals, (tuple, list)) or not vals:
            raise ConfigError("sweep.values must be a non-empty sequence")
        if any(not isinstance(x, (int, float)) or not math.isfinite(x) for x in vals):
            raise ConfigError("sweep.values must be finite numbers")
        if list(vals) != sorted(vals):
            raise ConfigError("sweep.values must be sorted")
        if v["estimator.kind"] not in ("diagonal", "dd"):
            raise ConfigError("estimator.kind must be 'diagonal' or 'dd'")
        for b in v["estimator.bases"]:
            if b not in BASES:
                raise ConfigError(f"unknown basis {b!r}")
        for s in v["estimator.solvers"]:
            if s not in SOLVERS:
                raise ConfigError(f"unknown solver {s!r}")
        if v["pilots.placement"] not in ("grid", "full"):
            raise ConfigError("pilots.placement must be 'grid' or 'full'")
        if len(v["channel.path_counts"]) != len(v["channel.path_powers_db"]):
            raise ConfigError("path_counts and path_powers_db differ in length")
        if v["channel.rolloff"] is not None and not 0 < v["channel.rolloff"] <= 1:
            raise ConfigError("channel.rolloff must lie in (0, 1]")
        if not self.delay_span <= self.K // v["system.delta_K"]:
            raise ConfigError("delay span exceeds D = K / delta_K")


def parse(text):
    """Parse config text into an :class:`ExperimentConfig`."""
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not _quoted_hash(raw) else raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in vals:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            vals[key] = ast.literal_eval(val.strip())
        except (ValueError, SyntaxError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(vals)


def _quoted_hash(line):
    # a '#' inside a quoted string value is not a comment
    i = line.find("#")
    return i >= 0 and (line[:i].count('"') % 2 == 1 or line[:i].count("'") % 2 == 1)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
