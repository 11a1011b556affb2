"""Monte Carlo sweeps: channel draw, coded transmission, estimation,
equalization and decoding per trial."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import csv
import hashlib
import io
import logging
import math
import os
import time

import numpy as np

from .. import bases as bz
from ..channel import (DiffuseSpec, FilterModel, ScattererPath,
                       apply_channel_awgn, synth_diffuse, synth_specular, system_band)
from ..coding import CodecConfig, ber, decode_chain, encode_chain
from ..estimators import QPSK, SolverSpec, SubsampledGrid, draw_pilots, estimate_diagonal, solve
from ..iterative import DDConfig, decision_directed_estimate, one_tap
from ..mcframe import demodulate, make_cp_ofdm, modulate

log = logging.getLogger(__name__)

CSV_HEADER = ("preset", "axis", "axis_value", "trial", "estimator", "basis", "solver",
              "num_pilots", "mse_db", "ber", "ref_ber", "seconds", "seed")


class SweepError(RuntimeError):
    pass


@dataclass
class Row:
    preset: str
    axis: str
    axis_value: float
    trial: int
    estimator: str
    basis: str
    solver: str
    num_pilots: int
    mse_db: float
    ber: float
    ref_ber: float
    seconds: float
    seed: int
    err_energy: float = 0.0
    ref_energy: float = 0.0
    axis_index: int = 0
    order: int = 0


@dataclass
class ResultTable:
    rows: list
    aborted: int = 0
    total: int = 0

    def curves(self):
        """Aggregates per (estimator, basis, solver) and axis value.

        The MSE aggregate is the ensemble ratio of summed error energy to
        summed channel energy; BER is the mean over trials.
        """
        groups = {}
        for r in self.rows:
            groups.setdefault((r.estimator, r.basis, r.solver), {}).setdefault(r.axis_value, []).append(r)
        out = {}
        for key, per_val in groups.items():
            pts = []
            for v in sorted(per_val):
                rs = per_val[v]
                err = sum(r.err_energy for r in rs)
                den = sum(r.ref_energy for r in rs)
                mse = 10 * math.log10(err / den) if err > 0 and den > 0 else -100.0
                bers = np.array([r.ber for r in rs])
                se = float(bers.std(ddof=1) / math.sqrt(len(rs))) if len(rs) > 1 else 0.0
                pts.append({"axis_value": v, "mse_db": mse, "ber": float(bers.mean()), "ber_se": se,
                            "ref_ber": float(np.mean([r.ref_ber for r in rs])), "trials": len(rs)})
            out[key] = pts
        return out


# --- per-trial pipeline ----------------------------------------------------

def _axis_params(cfg, value):
    p = {"snr_db": cfg["sweep.snr_db"], "num_pilots": cfg["pilots.count"],
         "nu_max_k": cfg["channel.nu_max_k"]}
    p[cfg["sweep.axis"]] = value
    p["num_pilots"] = int(p["num_pilots"])
    return p


def _filter(cfg):
    r = cfg["channel.rolloff"]
    return FilterModel.ideal() if r is None else FilterModel.rrc(r)


def draw_channel(cfg, frame, nu_max, rng):
    """Specular paths plus diffuse lattice; delays continuous in
    ``[0, span-1]``, Doppler uniform in ``[-nu_max, nu_max]`` or the
    configured bands."""
    span = cfg.delay_span
    K = cfg.K
    paths = []
    bands = cfg["channel.doppler_bands_k"]
    for count, pdb in zip(cfg["channel.path_counts"], cfg["channel.path_powers_db"]):
        var = 10 ** (pdb / 10)
        for _ in range(count):
            tau = rng.uniform(0, span - 1)
            if bands:
                lo, hi = bands[rng.integers(len(bands))]
                nu = rng.uniform(lo, hi) / K
            else:
                nu = rng.uniform(-nu_max, nu_max)
            g = math.sqrt(var / 2) * (rng.standard_normal() + 1j * rng.standard_normal())
            paths.append(ScattererPath(tau, nu, g))
    h = synth_specular(paths, _filter(cfg), frame, span)
    ref = sum(c * 10 ** (p / 10) for c, p in zip(cfg["channel.path_counts"], cfg["channel.path_powers_db"]))
    spec = DiffuseSpec(span, nu_max, cfg["channel.diffuse_db"], ref)
    return h + synth_diffuse(spec, rng, frame)


def _layout(frame, pilot_mask, codec, rng):
    """Place coded data in the first whole interleaver blocks of the
    non-pilot slots (row-major); remaining slots get random filler."""
    slots = np.flatnonzero(~pilot_mask.ravel())
    per_block = codec.block_bits // 2
    n_blocks = slots.size // per_block
    bits = rng.integers(0, 2, n_blocks * codec.info_bits).astype(np.uint8)
    grid = np.zeros(frame.L * frame.K, dtype=complex)
    used = slots[:n_blocks * per_block]
    if n_blocks:
        grid[used] = encode_chain(bits, codec)
    filler = slots[n_blocks * per_block:]
    grid[filler] = QPSK[rng.integers(0, 4, filler.size)]
    return grid, bits, used


def _decode(soft, used, bits, codec):
    if used.size == 0:
        return 0.0
    return ber(bits, decode_chain(soft.ravel()[used], codec))


class _Context:
    """Per-sweep state shipped once to each worker."""

    def __init__(self, cfg, basis_sets):
        self.cfg = cfg
        self.basis_sets = basis_sets


_CTX = None


def _init_worker(ctx):
    global _CTX
    _CTX = ctx


def _solver_spec(cfg, name):
    return SolverSpec(name, cfg["solver.sparsity"], cfg["solver.cosamp_iters"], cfg["solver.lsqr_iters"],
                      cfg["solver.lasso_lambda"], cfg["solver.lasso_iters"])


def _dd_config(cfg, diag_only=False):
    if diag_only:
        return DDConfig(0, 0, cfg["dd.epsilon"], 0, cfg["dd.equalizer_iters"], cfg["dd.omp_iters"], cfg["dd.tol"])
    return DDConfig(cfg["dd.l_max"], cfg["dd.k_max"], cfg["dd.epsilon"], cfg["dd.max_rounds"],
                    cfg["dd.equalizer_iters"], cfg["dd.omp_iters"], cfg["dd.tol"])


def run_trial(ctx, axis_index, value, trial):
    cfg = ctx.cfg
    seed = cfg["sweep.seed"]
    rng = np.random.default_rng([seed, axis_index, trial])
    p = _axis_params(cfg, value)
    frame = make_cp_ofdm(cfg.K, cfg.N, cfg["system.L"])
    nu_max = p["nu_max_k"] / cfg.K
    codec = CodecConfig(soft=cfg["codec.soft"])
    timing = cfg["output.timing"]

    h = draw_channel(cfg, frame, nu_max, rng)
    if cfg["pilots.placement"] == "grid":
        grid = SubsampledGrid(cfg.K, cfg["system.L"], cfg["system.delta_K"], cfg["system.delta_L"])
    else:
        grid = SubsampledGrid(cfg.K, cfg["system.L"], 1, 1)
    pilots = draw_pilots(grid, p["num_pilots"], rng, seed=(seed, axis_index, trial))
    pmask = pilots.mask(frame.L, frame.K)
    pgrid = pilots.as_grid(frame.L, frame.K)
    data, bits, used = _layout(frame, pmask, codec, rng)
    a = np.where(pmask, pgrid, data.reshape(frame.L, frame.K))
    r = demodulate(apply_channel_awgn(modulate(a, frame), h, p["snr_db"], rng), frame)

    dd_kind = cfg["estimator.kind"] == "dd"
    l_max, k_max = (cfg["dd.l_max"], cfg["dd.k_max"]) if dd_kind else (0, 0)
    H_true = system_band(h, frame, l_max, k_max)
    valid = np.ones(H_true.shape, dtype=bool)
    for a_i, dl in enumerate(range(-l_max, l_max + 1)):
        for l in range(frame.L):
            if not 0 <= l + dl < frame.L:
                valid[l, :, a_i, :] = False
    diag_true = H_true[:, :, l_max, k_max]
    ref_ber = _decode(one_tap(diag_true, r), used, bits, codec)

    base = dict(preset=cfg["preset.name"], axis=cfg["sweep.axis"], axis_value=value, trial=trial,
                num_pilots=p["num_pilots"], ref_ber=ref_ber, seed=seed, axis_index=axis_index)
    rows = []
    order = 0
    bsets = ctx.basis_sets[axis_index]
    if not dd_kind:
        energy = float(np.sum(np.abs(diag_true) ** 2))
        JD = grid.J * grid.D
        for bname in cfg["estimator.bases"]:
            for sname in cfg["estimator.solvers"]:
                spec = _solver_spec(cfg, sname)
                t0 = time.perf_counter()
                if bname == "combined":
                    est = decision_directed_estimate(
                        r, pgrid, pmask, bsets["combined"], frame, _dd_config(cfg, True),
                        D=cfg.delay_span, rounds=0,
                        solver=lambda op, y, spec=spec: solve(op, y, spec, JD))
                    H_hat = est.H_band[:, :, 0, 0]
                else:
                    H_hat = estimate_diagonal(r, pilots, bsets[bname], frame, spec, JD).H_hat
                secs = time.perf_counter() - t0
                err = float(np.sum(np.abs(H_hat - diag_true) ** 2))
                rows.append(Row(estimator="diagonal", basis=bname, solver=sname,
                                mse_db=_db(err, energy), ber=_decode(one_tap(H_hat, r), used, bits, codec),
                                seconds=secs if timing else float("nan"),
                                err_energy=err, ref_energy=energy, order=order, **base))
                order += 1
    else:
        energy = float(np.sum(np.abs(H_true[valid]) ** 2))
        dd = _dd_config(cfg)
        report = cfg["dd.report_rounds"]
        t0 = time.perf_counter()
        est = decision_directed_estimate(r, pgrid, pmask, bsets["combined"], frame, dd,
                                         D=cfg.delay_span, rounds=max(max(report), 0))
        secs = time.perf_counter() - t0
        for R in report:
            idx = min(R, est.rounds_run)
            band = est.band_per_round[idx].copy()
            if idx == 0:
                keep = np.zeros(band.shape, dtype=bool)
                keep[:, :, l_max, k_max] = True
                band = np.where(keep, band, 0)
            err = float(np.sum(np.abs(band[valid] - H_true[valid]) ** 2))
            b = _decode(est.soft_per_round[idx], used, bits, codec)
            rows.append(Row(estimator=f"dd_R{R}", basis="combined", solver="omp", mse_db=_db(err, energy),
                            ber=b, seconds=secs if timing else float("nan"),
                            err_energy=err, ref_energy=energy, order=order, **base))
            order += 1
    return rows


def _db(err, den):
    if err <= 0 or den <= 0:
        return -100.0
    return max(10 * math.log10(err / den), -100.0)


def _run_task(task):
    axis_index, value, trial = task
    try:
        return task, run_trial(_CTX, axis_index, value, trial), None
    except Exception as exc:  # a failed trial is logged and counted, not fatal
        return task, [], f"{type(exc).__name__}: {exc}"


# --- bases -----------------------------------------------------------------

def _cache_path(cfg, tag, params):
    d = cfg["basis.cache_dir"]
    if not d:
        return None
    key = hashlib.sha256(repr((tag, params)).encode()).hexdigest()[:20]
    return os.path.join(d, f"{tag}-{key}.json")


def build_bases(cfg, nu_max_k):
    """All dictionaries the config asks for at one maximum Doppler."""
    frame = make_cp_ofdm(cfg.K, cfg.N, cfg["system.L"])
    nu_max = nu_max_k / cfg.K
    J = cfg["system.L"] // cfg["system.delta_L"]
    D = cfg.K // cfg["system.delta_K"]
    out = {}
    names = set(cfg["estimator.bases"])
    if cfg["estimator.kind"] == "dd":
        names = {"combined"}
    opt_kw = dict(rho0=cfg["basis.rho0"], rho_min=cfg["basis.rho_min"], max_iter=cfg["basis.max_iter"],
                  inner_iters=cfg["basis.inner_iters"])
    for name in sorted(names):
        if name == "dft":
            out[name] = bz.dft_basis(J, D)
        elif name == "combined":
            out[name] = bz.combined_basis(frame.N_r, nu_max, cfg["basis.J1"])
        elif name in ("opt", "stat"):
            params = (cfg.K, cfg.N, cfg["system.L"], J, D, nu_max, cfg["basis.stat_bands_k"],
                      cfg["channel.rolloff"], sorted(opt_kw.items()))
            path = _cache_path(cfg, name, params)
            if path and os.path.exists(path):
                out[name] = bz.load(path)
                continue
            if name == "opt":
                fam = bz.deterministic_basis(frame, D, J, nu_max, **opt_kw)
            else:
                bands = cfg["basis.stat_bands_k"] or ((-nu_max_k, nu_max_k),)
                prior = bz.StatPrior.uniform_bands(cfg.delay_span - 1,
                                                   [(lo / cfg.K, hi / cfg.K) for lo, hi in bands])
                fam = bz.statistical_basis(frame, D, J, nu_max, prior, _filter(cfg), **opt_kw)
            if path:
                os.makedirs(os.path.dirname(path), exist_ok=True)
                bz.save(fam, path, frame.N_r)
            out[name] = fam
    return out


# --- driver ----------------------------------------------------------------

def run_sweep(cfg, workers=None, max_abort_fraction=0.01):
    """Run every (axis value, trial) and return a :class:`ResultTable`.

    Rows come back ordered by axis value, trial and estimator regardless
    of the worker count.
    """
    workers = cfg["sweep.workers"] if workers is None else workers
    values = list(cfg["sweep.values"])
    basis_sets = []
    for v in values:
        nu_k = v if cfg["sweep.axis"] == "nu_max_k" else cfg["channel.nu_max_k"]
        basis_sets.append(build_bases(cfg, nu_k))
    ctx = _Context(cfg, basis_sets)
    tasks = [(i, v, t) for i, v in enumerate(values) for t in range(cfg["sweep.trials"])]
    results = []
    if workers <= 1:
        _init_worker(ctx)
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as ex:
            results = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    rows, aborted = [], 0
    for task, rs, err in results:
        if err is not None:
            aborted += 1
            log.error("trial %s aborted: %s", task, err)
        rows.extend(rs)
    rows.sort(key=lambda r: (r.axis_index, r.trial, r.order))
    table = ResultTable(rows, aborted, len(tasks))
    if aborted > max_abort_fraction * len(tasks):
        raise SweepError(f"{aborted} of {len(tasks)} trials aborted")
    return table


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.10g}"
    return str(x)


def csv_text(table):
    if not table.rows:
        raise ValueError("result table is empty")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in table.rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def emit_csv(table, path):
    text = csv_text(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header")
        return list(rd)
