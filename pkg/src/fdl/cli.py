"""Command-line surface binding the library into reproducible runs.

Every subcommand reads an optional plain-text config file (``key = value``
lines, ``#`` comments), applies flag overrides on top, and writes a JSON
manifest next to its artifacts recording the resolved config, the seed, and
a sha256 checksum per artifact. Manifests carry no timestamps, so a rerun
with identical inputs is byte-identical end to end.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

Output convention: commands that emit one table accept ``--out`` as either a
file path (recognized by a .csv/.ften/.pgm suffix) or a directory; commands
that emit several artifacts always treat ``--out`` as a directory. The
default is the directory ``out/``.
"""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import data as data_mod
from . import detect as detect_mod
from . import gaussianity as gauss_mod
from ._csvio import write_csv
from .denoise import (
    LinearGaussianDenoiser,
    MlpDenoiser,
    TrainConfig,
    export_loss_csv,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .errors import ConfigError, FdlError
from .process import ForwardProcess, export_snr_heatmap_csv
from .sample import SamplerConfig, ddim_sample_batch, export_trajectory_csv
from .schedule import (
    calibrate_ddpm_to_equal,
    calibrate_to_ddpm,
    export_schedule_csv,
    make_schedule,
)
from .spectral import band_mask, frequency_order

SCHEDULE_KINDS = ("linear", "cosine")
PROCESS_KINDS = ("ddpm", "equalsnr", "flippedsnr")
CALIBRATE_MODES = ("none", "to-ddpm", "to-equalsnr")

# value validators for the config file; a tuple means an enumerated choice
CONFIG_SPEC = {
    "seed": int,
    "T": int,
    "workers": int,
    "schedule": SCHEDULE_KINDS,
    "process": PROCESS_KINDS,
    "calibrate": CALIBRATE_MODES,
    "out": str,
    "data": str,
}

_FILE_SUFFIXES = (".csv", ".ften", ".pgm")


@dataclass
class RunConfig:
    """Resolved run settings: defaults, then config file, then flags."""

    seed: int = 0
    T: int = 1000
    schedule: str = "cosine"
    process: str = "ddpm"
    calibrate: str = "none"
    workers: int = 1
    out: str = "out"
    data: Optional[str] = None


def parse_config(path):
    """Read a ``key = value`` file into a dict of validated values.

    Unknown keys, malformed lines, and out-of-range values are rejected with
    the file name and one-based line number.
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path!r}: {e}")
    values = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_SPEC:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        spec = CONFIG_SPEC[key]
        if spec is int:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(f"{path}:{num}: {key} needs an integer, got {val!r}")
        elif isinstance(spec, tuple):
            if val not in spec:
                raise ConfigError(
                    f"{path}:{num}: {key} must be one of {', '.join(spec)}, got {val!r}"
                )
            values[key] = val
        else:
            values[key] = val
    return values


def resolve_config(args):
    """Merge defaults, config file, FDL_SEED, and flags into a RunConfig.

    Precedence per key: flag > config file > (seed only) FDL_SEED > default.
    """
    cfg = RunConfig()
    file_vals = {}
    if getattr(args, "config", None):
        file_vals = parse_config(args.config)
        for key, val in file_vals.items():
            setattr(cfg, key, val)
    if "seed" not in file_vals and getattr(args, "seed", None) is None:
        env = os.environ.get("FDL_SEED")
        if env is not None:
            try:
                cfg.seed = int(env)
            except ValueError:
                raise ConfigError(f"FDL_SEED must be an integer, got {env!r}")
    for key in CONFIG_SPEC:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if cfg.T < 1:
        raise ConfigError(f"T must be >= 1, got {cfg.T}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    return cfg


# ---------------------------------------------------------------------------
# output paths and manifests
# ---------------------------------------------------------------------------


def _is_file_target(out):
    return os.path.splitext(out)[1].lower() in _FILE_SUFFIXES


def _single_out(out, default_name):
    """File path for a one-table command; creates the parent directory."""
    if _is_file_target(out):
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return out
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, default_name)


def _out_dir(out):
    if _is_file_target(out):
        raise ConfigError(
            f"this subcommand writes several artifacts; --out must be a directory, got {out!r}"
        )
    os.makedirs(out, exist_ok=True)
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(command, cfg, artifacts):
    """JSON manifest beside the artifacts; deterministic byte-for-byte."""
    manifest = {
        "command": command,
        "config": {key: getattr(cfg, key) for key in CONFIG_SPEC},
        "seed": cfg.seed,
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts},
    }
    if _is_file_target(cfg.out):
        path = cfg.out + ".manifest.json"
    else:
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# shared loading helpers
# ---------------------------------------------------------------------------


def _load_profile(args):
    """Variance profile from --c (FTEN file) or estimated from --data."""
    c_path = getattr(args, "c", None)
    if c_path:
        return data_mod.load_tensor(c_path)
    if getattr(args, "data", None):
        return data_mod.estimate_variance_profile(data_mod.load_dataset(args.data))
    return None


def _require_profile(args):
    c = _load_profile(args)
    if c is None:
        raise ConfigError("a variance profile is required: pass --c FILE or --data DATASET")
    return c


def _resolved_schedule(cfg, c, c0):
    """Schedule for this process after applying the calibration mode.

    The calibrate value names whose mean-SNR path the bare --schedule/--T
    pair traces; if that is the other process, derive this one's schedule by
    mean-SNR calibration. The map is defined between ddpm and equalsnr.
    """
    sched = make_schedule(cfg.schedule, cfg.T)
    if cfg.calibrate == "none":
        return sched
    if cfg.process == "flippedsnr":
        raise ConfigError("--calibrate is defined between ddpm and equalsnr")
    if cfg.calibrate == "to-ddpm":
        return sched if cfg.process == "ddpm" else calibrate_to_ddpm(sched, c, c0=c0)
    return calibrate_ddpm_to_equal(sched, c, c0=c0) if cfg.process == "ddpm" else sched


def _build_process(cfg, args, c):
    return ForwardProcess(cfg.process, c, _resolved_schedule(cfg, c, args.c0), c0=args.c0)


def _parse_floats(text, flag):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}")
    if not vals:
        raise ConfigError(f"{flag} expects at least one number")
    return vals


def _parse_ints(text, flag):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated integers, got {text!r}")
    if not vals:
        raise ConfigError(f"{flag} expects at least one integer")
    return vals


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def cmd_gen_data(args):
    cfg = resolve_config(args)
    out = _out_dir(cfg.out)
    artifacts = []
    if args.generator == "dots":
        ds = data_mod.gen_dots(
            args.n,
            h=args.height,
            w=args.width,
            min_count=args.min_count,
            max_count=args.max_count,
            seed=cfg.seed,
        )
    elif args.generator == "power-law":
        ds, true_c = data_mod.gen_power_law_gaussian(
            args.n,
            (args.height, args.width),
            amplitude=args.amplitude,
            exponent=args.exponent,
            seed=cfg.seed,
        )
        c_path = os.path.join(out, "true-c.ften")
        data_mod.save_tensor(c_path, true_c)
        artifacts.append(c_path)
    else:
        ds = data_mod.gen_mixture1d(args.n, args.delta, seed=cfg.seed)
    ds_path = os.path.join(out, "dataset.ften")
    data_mod.save_dataset(ds_path, ds)
    artifacts = [ds_path, ds_path + ".json"] + artifacts
    write_manifest("gen-data", cfg, artifacts)
    return 0


def cmd_estimate_c(args):
    cfg = resolve_config(args)
    ds = data_mod.load_dataset(args.data)
    c = data_mod.estimate_variance_profile(ds)
    path = _single_out(cfg.out, "c.ften")
    data_mod.save_tensor(path, c)
    write_manifest("estimate-c", cfg, [path])
    return 0


def cmd_schedule(args):
    cfg = resolve_config(args)
    if args.kind is not None:
        cfg.schedule = args.kind
    c = _load_profile(args)
    sched = make_schedule(cfg.schedule, cfg.T)
    if cfg.calibrate == "none":
        out_sched, process_kind = sched, cfg.process
    else:
        if c is None:
            raise ConfigError(f"--calibrate {cfg.calibrate} needs --c FILE or --data DATASET")
        if cfg.calibrate == "to-ddpm":
            # input schedule drives DDPM; emit the equal-SNR schedule that
            # matches its mean-SNR trajectory
            out_sched, process_kind = calibrate_to_ddpm(sched, c, c0=args.c0), "equalsnr"
        else:
            out_sched, process_kind = calibrate_ddpm_to_equal(sched, c, c0=args.c0), "ddpm"
    path = _single_out(cfg.out, "schedule.csv")
    export_schedule_csv(path, out_sched, c=c, process_kind=process_kind, c0=args.c0)
    write_manifest("schedule", cfg, [path])
    return 0


def cmd_forward_sim(args):
    cfg = resolve_config(args)
    c = _require_profile(args)
    sched = _resolved_schedule(cfg, c, args.c0)
    ts = _parse_ints(args.ts, "--ts") if args.ts else None
    path = _single_out(cfg.out, "snr-heatmap.csv")
    export_snr_heatmap_csv(path, cfg.process, sched, c, ts=ts, c0=args.c0)
    write_manifest("forward-sim", cfg, [path])
    return 0


def cmd_train(args):
    cfg = resolve_config(args)
    if not cfg.data:
        raise ConfigError("train needs --data DATASET")
    out = _out_dir(cfg.out)
    ds = data_mod.load_dataset(cfg.data)
    c = data_mod.estimate_variance_profile(ds)
    p = _build_process(cfg, args, c)
    hidden = tuple(_parse_ints(args.hidden, "--hidden"))
    model = MlpDenoiser(
        ds.field_shape, hidden=hidden, t_max=cfg.T, embed_dim=args.embed_dim, seed=cfg.seed
    )
    # offset so the training batch stream never aliases the init stream
    tc = TrainConfig(
        steps=args.steps, lr=args.lr, batch=args.batch, seed=cfg.seed + 1, momentum=args.momentum
    )
    trace = train(model, ds, p, tc)
    model_path = os.path.join(out, "model.fdlm")
    loss_path = os.path.join(out, "loss.csv")
    c_path = os.path.join(out, "c.ften")
    save_checkpoint(model_path, model)
    export_loss_csv(loss_path, trace)
    data_mod.save_tensor(c_path, c)
    write_manifest("train", cfg, [model_path, loss_path, c_path])
    return 0


def cmd_sample(args):
    cfg = resolve_config(args)
    out = _out_dir(cfg.out)
    c = _require_profile(args)
    p = _build_process(cfg, args, c)
    if args.analytic:
        denoiser = LinearGaussianDenoiser(c, p)
    elif args.model:
        denoiser = load_checkpoint(args.model)
        if denoiser.shape != tuple(np.shape(c)):
            raise ConfigError(
                f"checkpoint field shape {denoiser.shape} does not match "
                f"profile shape {np.shape(c)}"
            )
    else:
        raise ConfigError("sample needs --model CHECKPOINT or --analytic")
    steps = args.steps if args.steps is not None else cfg.T
    sc = SamplerConfig(steps=steps, seed=cfg.seed, record_trajectory=args.trajectory)
    fields, traj = ddim_sample_batch(denoiser, p, sc, n=args.n)
    samples_path = os.path.join(out, "samples.ften")
    data_mod.save_tensor(samples_path, fields)
    artifacts = [samples_path]
    if fields.ndim == 3:
        n_pgm = min(args.n, args.pgm if args.pgm is not None else 4)
        for i in range(n_pgm):
            pgm_path = os.path.join(out, f"sample-{i:03d}.pgm")
            data_mod.save_pgm(pgm_path, fields[i])
            artifacts.append(pgm_path)
    if args.trajectory:
        traj_path = os.path.join(out, "trajectory.csv")
        export_trajectory_csv(traj_path, fields.shape[1:], traj)
        artifacts.append(traj_path)
    write_manifest("sample", cfg, artifacts)
    return 0


def cmd_diagnose_violation(args):
    cfg = resolve_config(args)
    if not cfg.data:
        raise ConfigError("diagnose gaussian-violation needs --data DATASET")
    out = _out_dir(cfg.out)
    ds = data_mod.load_dataset(cfg.data)
    c = data_mod.estimate_variance_profile(ds)
    p = _build_process(cfg, args, c)
    rows = gauss_mod.gaussian_violation_report(
        ds,
        p,
        args.t,
        ranks=(args.low_rank, args.high_rank),
        rng=np.random.default_rng(cfg.seed),
        quantile=args.quantile,
    )
    vio_path = os.path.join(out, "violation.csv")
    gauss_mod.export_violation_csv(vio_path, cfg.process, args.t, rows)
    low_path = os.path.join(out, "posterior-low.csv")
    high_path = os.path.join(out, "posterior-high.csv")
    gauss_mod.export_density_csv(low_path, rows[0].posterior)
    gauss_mod.export_density_csv(high_path, rows[-1].posterior)
    write_manifest("diagnose", cfg, [vio_path, low_path, high_path])
    return 0


def cmd_diagnose_counterexample(args):
    cfg = resolve_config(args)
    out = _out_dir(cfg.out)
    deltas = args.delta if args.delta else [0.1, 0.05, 0.01]
    rows = []
    artifacts = []
    for delta in deltas:
        mix = gauss_mod.MixtureConfig(delta=delta, noise_variance=args.noise_variance)
        prior = gauss_mod.mixture_density(mix)
        posterior = gauss_mod.bayes_posterior_1d(prior, args.noise_variance, args.y)
        tv, mu, sigma = gauss_mod.tv_to_best_gaussian(posterior)
        rows.append((delta, tv, mu, sigma))
        dens_path = os.path.join(out, f"posterior-delta-{delta:g}.csv")
        gauss_mod.export_density_csv(dens_path, posterior)
        artifacts.append(dens_path)
    sweep_path = os.path.join(out, "counterexample.csv")
    write_csv(sweep_path, ("delta", "tv", "best_mean", "best_sigma"), rows)
    write_manifest("diagnose", cfg, [sweep_path] + artifacts)
    return 0


def cmd_detect(args):
    cfg = resolve_config(args)
    out = _out_dir(cfg.out)
    real = data_mod.load_dataset(args.real)
    generated = data_mod.load_dataset(args.generated)
    bands = tuple(_parse_floats(args.bands, "--bands"))
    reports = detect_mod.run_detection(
        real.items,
        generated.items,
        band_fractions=bands,
        splits=args.splits,
        b=args.permutations,
        seed=cfg.seed,
    )
    det_path = os.path.join(out, "detection.csv")
    sum_path = os.path.join(out, "summary.csv")
    detect_mod.export_detection_csv(det_path, reports)
    detect_mod.export_detection_summary_csv(sum_path, reports)
    write_manifest("detect", cfg, [det_path, sum_path])
    return 0


def cmd_report_spectral(args):
    cfg = resolve_config(args)
    if not cfg.data:
        raise ConfigError("report spectral needs --data DATASET")
    ds = data_mod.load_dataset(cfg.data)
    band = None
    if args.band_fraction is not None:
        ordering = frequency_order(ds.field_shape)
        band = band_mask(ordering, args.band_kind, args.band_fraction)
    prof = data_mod.spectral_magnitude_profile(ds, band=band)
    path = _single_out(cfg.out, "spectral.csv")
    write_csv(
        path,
        ("rank", "mean_db", "std_db"),
        [
            (int(r), float(m), float(s))
            for r, m, s in zip(prof.ranks, prof.mean_db, prof.std_db)
        ],
    )
    write_manifest("report", cfg, [path])
    return 0


def cmd_report_intensity(args):
    cfg = resolve_config(args)
    if not cfg.data:
        raise ConfigError("report intensity needs --data DATASET")
    ds = data_mod.load_dataset(cfg.data)
    prof = data_mod.intensity_profile(ds)
    path = _single_out(cfg.out, "intensity.csv")
    write_csv(
        path,
        ("position", "mean", "ci_low", "ci_high"),
        [
            (i, float(m), float(lo), float(hi))
            for i, (m, lo, hi) in enumerate(zip(prof.mean, prof.ci_low, prof.ci_high))
        ],
    )
    write_manifest("report", cfg, [path])
    return 0


def cmd_report_variance(args):
    cfg = resolve_config(args)
    c = _require_profile(args)
    p = _build_process(cfg, args, c)
    denoiser = LinearGaussianDenoiser(c, p)
    steps = args.steps if args.steps is not None else cfg.T
    sc = SamplerConfig(steps=steps, seed=cfg.seed, record_trajectory=True)
    fields, traj = ddim_sample_batch(denoiser, p, sc, n=args.n)
    path = _single_out(cfg.out, "variance.csv")
    export_trajectory_csv(path, fields.shape[1:], traj)
    write_manifest("report", cfg, [path])
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="FILE", help="key = value config file")
    p.add_argument("--seed", type=int, help="RNG seed (default: FDL_SEED env var, else 0)")
    p.add_argument(
        "--workers", type=int, help="worker count; accepted for config parity, runs sequential"
    )
    p.add_argument("--out", help="output file or directory (default: out/)")
    return p


def _process_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--T", type=int, dest="T", help="diffusion step count (default 1000)")
    p.add_argument("--schedule", choices=SCHEDULE_KINDS, help="mixing schedule kind")
    p.add_argument("--process", choices=PROCESS_KINDS, help="forward process kind")
    p.add_argument(
        "--c0", type=float, default=1.0, help="noise scale for equalsnr/flippedsnr (default 1)"
    )
    p.add_argument(
        "--calibrate",
        choices=CALIBRATE_MODES,
        help="whose mean-SNR path --schedule/--T traces; the other process's "
        "schedule is derived by mean-SNR calibration (default none)",
    )
    return p


def _data_source(p, required=False):
    p.add_argument("--data", metavar="FTEN", required=required, help="dataset file")
    p.add_argument("--c", metavar="FTEN", help="variance profile file (overrides --data)")


def build_parser():
    common = _common_parent()
    proc = _process_parent()
    parser = argparse.ArgumentParser(
        prog="fdl",
        description="Frequency-domain diffusion toolkit: generate data, calibrate "
        "schedules, train and sample denoisers, and run spectral diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_gen = sub.add_parser("gen-data", help="generate a synthetic dataset")
    gsub = p_gen.add_subparsers(dest="generator", required=True, metavar="GENERATOR")
    g_dots = gsub.add_parser("dots", parents=[common], help="sparse bright dots on black")
    g_dots.add_argument("--n", type=int, default=100, help="number of items (default 100)")
    g_dots.add_argument("--height", type=int, default=32)
    g_dots.add_argument("--width", type=int, default=32)
    g_dots.add_argument("--min-count", type=int, default=46, help="min dots per item")
    g_dots.add_argument("--max-count", type=int, default=50, help="max dots per item")
    g_dots.set_defaults(func=cmd_gen_data)
    g_pow = gsub.add_parser(
        "power-law", parents=[common], help="Gaussian fields with power-law spectrum"
    )
    g_pow.add_argument("--n", type=int, default=100, help="number of items (default 100)")
    g_pow.add_argument("--height", type=int, default=16)
    g_pow.add_argument("--width", type=int, default=16)
    g_pow.add_argument("--amplitude", type=float, default=1.0, help="profile amplitude")
    g_pow.add_argument("--exponent", type=float, default=2.0, help="spectral decay exponent")
    g_pow.set_defaults(func=cmd_gen_data)
    g_mix = gsub.add_parser(
        "mixture1d", parents=[common], help="scalar two-mode Gaussian mixture"
    )
    g_mix.add_argument("--n", type=int, default=1000, help="number of draws (default 1000)")
    g_mix.add_argument("--delta", type=float, required=True, help="mode width")
    g_mix.set_defaults(func=cmd_gen_data)

    p_est = sub.add_parser(
        "estimate-c", parents=[common], help="estimate the per-bin variance profile"
    )
    _data_source(p_est, required=True)
    p_est.set_defaults(func=cmd_estimate_c)

    p_sched = sub.add_parser(
        "schedule", parents=[common, proc], help="emit or calibrate a mixing schedule CSV"
    )
    p_sched.add_argument("--kind", choices=SCHEDULE_KINDS, help="alias for --schedule")
    _data_source(p_sched)
    p_sched.set_defaults(func=cmd_schedule)

    p_fwd = sub.add_parser(
        "forward-sim", parents=[common, proc], help="per-bin forward SNR heatmap CSV"
    )
    _data_source(p_fwd)
    p_fwd.add_argument("--ts", metavar="T1,T2,...", help="subset of steps (default: all)")
    p_fwd.set_defaults(func=cmd_forward_sim)

    p_train = sub.add_parser(
        "train", parents=[common, proc], help="train an MLP denoiser on a dataset"
    )
    p_train.add_argument("--data", metavar="FTEN", help="training dataset file")
    p_train.add_argument("--steps", type=int, default=2000, help="SGD steps (default 2000)")
    # the variance-weighted loss tolerates much less step size than an
    # unweighted one; 1e-3 diverges on plausible datasets
    p_train.add_argument("--lr", type=float, default=1e-4, help="learning rate (default 1e-4)")
    p_train.add_argument("--batch", type=int, default=32, help="batch size")
    p_train.add_argument("--momentum", type=float, default=0.9, help="SGD momentum (default 0.9)")
    p_train.add_argument(
        "--hidden", default="128,128", metavar="W1,W2,...", help="hidden layer widths"
    )
    p_train.add_argument("--embed-dim", type=int, default=16, help="time embedding size")
    p_train.set_defaults(func=cmd_train)

    p_samp = sub.add_parser(
        "sample", parents=[common, proc], help="draw samples via the deterministic reverse pass"
    )
    p_samp.add_argument("--model", metavar="FDLM", help="trained checkpoint")
    p_samp.add_argument(
        "--analytic", action="store_true", help="use the exact linear denoiser instead"
    )
    _data_source(p_samp)
    p_samp.add_argument("--n", type=int, default=8, help="number of samples (default 8)")
    p_samp.add_argument("--steps", type=int, help="inference steps (default: T)")
    p_samp.add_argument("--pgm", type=int, help="how many samples to export as PGM (default 4)")
    p_samp.add_argument(
        "--trajectory", action="store_true", help="also write the variance trajectory CSV"
    )
    p_samp.set_defaults(func=cmd_sample)

    p_diag = sub.add_parser("diagnose", help="posterior Gaussianity diagnostics")
    dsub = p_diag.add_subparsers(dest="diagnostic", required=True, metavar="DIAGNOSTIC")
    d_vio = dsub.add_parser(
        "gaussian-violation",
        parents=[common, proc],
        help="per-band KL of denoising posteriors to their Gaussian fit",
    )
    d_vio.add_argument("--data", metavar="FTEN", help="dataset file")
    d_vio.add_argument("--t", type=int, default=1, help="diffusion step (default 1)")
    d_vio.add_argument("--low-rank", type=int, help="low-frequency rank (default: lowest)")
    d_vio.add_argument("--high-rank", type=int, help="high-frequency rank (default: highest)")
    d_vio.add_argument(
        "--quantile", type=float, default=0.7, help="observation quantile (default 0.7)"
    )
    d_vio.set_defaults(func=cmd_diagnose_violation)
    d_ce = dsub.add_parser(
        "counterexample",
        parents=[common],
        help="TV distance of a bimodal denoising posterior to its best Gaussian fit",
    )
    d_ce.add_argument(
        "--delta",
        type=float,
        action="append",
        metavar="DELTA",
        help="mixture mode width; repeatable (default 0.1 0.05 0.01)",
    )
    d_ce.add_argument(
        "--noise-variance", type=float, default=4.0, help="observation noise variance"
    )
    d_ce.add_argument("--y", type=float, default=0.0, help="observed value (default 0)")
    d_ce.set_defaults(func=cmd_diagnose_counterexample)

    p_det = sub.add_parser(
        "detect", parents=[common], help="spectral real-vs-generated detection study"
    )
    p_det.add_argument("--real", required=True, metavar="FTEN", help="real dataset")
    p_det.add_argument("--generated", required=True, metavar="FTEN", help="generated dataset")
    p_det.add_argument(
        "--bands", default="0.05,0.15,0.25", metavar="F1,F2,...", help="high-band fractions"
    )
    p_det.add_argument("--splits", type=int, default=100, help="random splits per band")
    p_det.add_argument(
        "--permutations", type=int, default=200, help="label permutations per split"
    )
    p_det.set_defaults(func=cmd_detect)

    p_rep = sub.add_parser("report", help="plot-ready summary tables")
    rsub = p_rep.add_subparsers(dest="subject", required=True, metavar="SUBJECT")
    r_spec = rsub.add_parser(
        "spectral", parents=[common], help="per-rank magnitude profile of a dataset"
    )
    r_spec.add_argument("--data", metavar="FTEN", help="dataset file")
    r_spec.add_argument("--band-kind", choices=("low", "high"), default="high")
    r_spec.add_argument(
        "--band-fraction", type=float, help="restrict to a frequency band fraction"
    )
    r_spec.set_defaults(func=cmd_report_spectral)
    r_int = rsub.add_parser(
        "intensity", parents=[common], help="sorted pixel intensity profile of a dataset"
    )
    r_int.add_argument("--data", metavar="FTEN", help="dataset file")
    r_int.set_defaults(func=cmd_report_intensity)
    r_var = rsub.add_parser(
        "variance",
        parents=[common, proc],
        help="per-rank variance trajectory of the analytic reverse pass",
    )
    _data_source(r_var)
    r_var.add_argument("--steps", type=int, help="inference steps (default: T)")
    r_var.add_argument("--n", type=int, default=256, help="batch size (default 256)")
    r_var.set_defaults(func=cmd_report_variance)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"fdl: config error: {e}", file=sys.stderr)
        return 2
    except (FdlError, OSError, ValueError) as e:
        print(f"fdl: error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
