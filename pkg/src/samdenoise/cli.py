"""Command-line interface: ``samdenoise <command> [flags]``.

Commands: synth, noise, denoise, cscan, profile, metrics, compare.
Exit codes: 0 success, 2 usage/parameter error, 3 I/O error, 4 shape or
data error. Stages exchange ASV files only.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from pathlib import Path

from .errors import AsvError, GateError, ParamError, ShapeError, SpecError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4

FILTERS = ("bm4d", "hard", "wiener", "gaussian", "median", "tv")
COMPARE_FILTERS = ("none", "gaussian", "median", "wiener", "tv", "bm4d")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (ShapeError, AsvError)):
        return EXIT_DATA
    if isinstance(exc, (ParamError, GateError, SpecError, IndexError, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


# --- argument parsing helpers -------------------------------------------------

def _triple(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected AxBxC, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from None


def _gate(text: str) -> tuple[int, int]:
    try:
        t0, t1 = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"gate must look like t0:t1, got {text!r}") from None
    return t0, t1


def _auto_or_float(text: str):
    if text.lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ix,iy, got {text!r}") from None
    return a, b


def _add_bm_flags(p):
    g = p.add_argument_group("block matching")
    g.add_argument("--sigma", type=_auto_or_float, default=None, metavar="auto|VOLTS",
                   help="noise std; 'auto' estimates it from the data (default)")
    g.add_argument("--block", type=_triple, default=(4, 4, 8))
    g.add_argument("--step", type=_triple, default=(2, 2, 4))
    g.add_argument("--search", type=_triple, default=(5, 5, 8))
    g.add_argument("--max-group", type=int, default=16)
    g.add_argument("--tau", type=float, default=2.5, help="match threshold in units of sigma^2")
    g.add_argument("--lambda", dest="lambda_hard", type=float, default=2.7)


def _add_baseline_flags(p, shared_window: bool):
    g = p.add_argument_group("baseline filters")
    g.add_argument("--gauss-sigma", type=float, default=2.0, help="Gaussian std in samples")
    if shared_window:
        g.add_argument("--window", type=int, default=None,
                       help="median/wiener window (odd); default 5 for median, 7 for wiener")
    else:
        g.add_argument("--median-window", type=int, default=5)
        g.add_argument("--wiener-window", type=int, default=7)
    g.add_argument("--noise-var", type=_auto_or_float, default=None, metavar="auto|V2")
    g.add_argument("--tv-lambda", type=float, default=None, help="default 0.1 * input max-abs")
    g.add_argument("--tv-max-iter", type=int, default=500)
    g.add_argument("--tv-tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samdenoise", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for the compiled kernels (1 = sequential)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a clean phantom volume")
    p.add_argument("--preset", choices=["coin64"], default=None)
    p.add_argument("--spec", type=Path, default=None, help="phantom description as JSON")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--fs", type=float, help="sample rate in Hz")
    p.add_argument("--f0", type=float, help="pulse centre frequency in Hz")
    p.add_argument("--envelope-sigma", type=float, help="pulse envelope std in s")
    p.add_argument("--phase", type=float, help="pulse phase in rad")
    p.add_argument("--delay", type=float, help="echo delay in s (coin geometry)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("noise", help="add seeded white Gaussian noise")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--relative", action="store_true", help="sigma is a fraction of max|input|")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("denoise", help="apply one filter")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--filter", required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_bm_flags(p)
    _add_baseline_flags(p, shared_window=True)

    for name, hlp in (("cscan", "gated max-abs image"), ("profile", "centre line profile")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--in", dest="inp", type=Path, required=True)
        p.add_argument("--gate", type=_gate, default=None, help="t0:t1 (default: whole record)")
        p.add_argument("--row", type=int, default=None, help="profile row (default ny // 2)")
        p.add_argument("--pgm", type=Path, default=None)
        p.add_argument("--csv", type=Path, default=None)

    p = sub.add_parser("metrics", help="quality metrics of a test volume against a reference")
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--gate", type=_gate, default=None)
    p.add_argument("--peak", type=float, default=None, help="PSNR peak (default max|ref|)")

    p = sub.add_parser("compare", help="run every filter and export images, profiles and metrics")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--noisy", type=Path, required=True)
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--filters", default=",".join(COMPARE_FILTERS))
    p.add_argument("--gate", type=_gate, default=None)
    p.add_argument("--row", type=int, default=None)
    p.add_argument("--ascan", type=_pair, default=None, help="ix,iy of the exported A-scan (default centre)")
    _add_bm_flags(p)
    _add_baseline_flags(p, shared_window=False)
    return parser


# --- runtime setup --------------------------------------------------------------

def _configure_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise CliError("--threads must be >= 1", EXIT_USAGE)
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(n)
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _load(path: Path):
    from .volume import load_asv

    if not path.is_file():
        raise CliError(f"cannot read {path}: no such file", EXIT_IO)
    return load_asv(path)


def _save(vol, path: Path) -> None:
    from .volume import save_asv

    path.parent.mkdir(parents=True, exist_ok=True)
    save_asv(vol, path)


# --- filters ------------------------------------------------------------------

def _bm_params(args, sigma: float):
    from .collaborative import BMParams

    return BMParams(block=args.block, step=args.step, search_radius=args.search,
                    max_group=args.max_group, match_tau=args.tau,
                    lambda_hard=args.lambda_hard, sigma=sigma)


def _resolve_sigma(args, vol) -> float:
    from .collaborative import estimate_sigma_mad

    return estimate_sigma_mad(vol) if args.sigma is None else float(args.sigma)


def run_filter(name: str, vol, args, median_window: int, wiener_window: int):
    """Apply filter ``name``; returns (volume, sigma used or None)."""
    from . import collaborative, filters

    if name == "none":
        return vol, None
    if name in ("bm4d", "hard"):
        sigma = _resolve_sigma(args, vol)
        params = _bm_params(args, sigma)
        fn = collaborative.denoise_bm4d if name == "bm4d" else collaborative.denoise_hard
        return fn(vol, params), sigma
    if name == "gaussian":
        return filters.gaussian_1d(vol, args.gauss_sigma), None
    if name == "median":
        return filters.median_1d(vol, median_window), None
    if name == "wiener":
        return filters.wiener_adaptive_1d(vol, wiener_window, args.noise_var), None
    if name == "tv":
        return filters.tv_denoise_1d(vol, args.tv_lambda, args.tv_max_iter, args.tv_tol), None
    raise CliError(f"unknown filter {name!r}; valid filters: {', '.join(FILTERS)}", EXIT_USAGE)


# --- commands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    from .phantom import PhantomSpec, PulseSpec, coin_phantom, render_phantom

    if args.spec is not None and args.preset is not None:
        raise CliError("--spec and --preset are mutually exclusive", EXIT_USAGE)
    if args.spec is not None:
        if not args.spec.is_file():
            raise CliError(f"cannot read {args.spec}: no such file", EXIT_IO)
        spec = PhantomSpec.from_json(args.spec.read_text())
    else:
        pulse = PulseSpec(
            center_freq_hz=50e6 if args.f0 is None else args.f0,
            envelope_sigma_s=30e-9 if args.envelope_sigma is None else args.envelope_sigma,
            phase_rad=0.0 if args.phase is None else args.phase,
        )
        for name in ("nx", "ny", "nt"):
            value = getattr(args, name)
            if value is not None and value < 1:
                raise CliError(f"--{name} must be a positive integer", EXIT_USAGE)
        spec = coin_phantom(
            nx=64 if args.nx is None else args.nx,
            ny=64 if args.ny is None else args.ny,
            nt=256 if args.nt is None else args.nt,
            sample_rate_hz=250e6 if args.fs is None else args.fs,
            pulse=pulse,
            delay_s=400e-9 if args.delay is None else args.delay,
        )
    vol = render_phantom(spec)
    _save(vol, args.out)
    print(f"{args.out} {vol.nx}x{vol.ny}x{vol.nt}")
    return EXIT_OK


def cmd_noise(args) -> int:
    import numpy as np

    from .phantom import add_awgn

    if not args.sigma >= 0:
        raise CliError(f"--sigma must be nonnegative, got {args.sigma}", EXIT_USAGE)
    vol = _load(args.inp)
    sigma = args.sigma * float(np.abs(vol.samples).max()) if args.relative else args.sigma
    out = add_awgn(vol, sigma, args.seed)
    _save(out, args.out)
    print(f"{args.out} sigma_v={sigma!r} seed={args.seed}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    if args.filter not in FILTERS:
        raise CliError(f"unknown filter {args.filter!r}; valid filters: {', '.join(FILTERS)}", EXIT_USAGE)
    vol = _load(args.inp)
    window = args.window
    start = time.perf_counter()
    out, sigma = run_filter(args.filter, vol, args,
                            median_window=5 if window is None else window,
                            wiener_window=7 if window is None else window)
    runtime_ms = 1000.0 * (time.perf_counter() - start)
    _save(out, args.out)
    print(f"filter={args.filter}")
    if sigma is not None:
        print(f"sigma_v={sigma!r}")
    print(f"runtime_ms={runtime_ms:.1f}")
    return EXIT_OK


def _write_cscan_outputs(vol, gate, row, pgm: Path | None, csv: Path | None):
    from .volume import extract_cscan, extract_line_profile, write_pgm, write_profile_csv

    img = extract_cscan(vol, gate)
    profile = extract_line_profile(img, row)
    if pgm is not None:
        pgm.parent.mkdir(parents=True, exist_ok=True)
        pgm.write_bytes(write_pgm(img))
    if csv is not None:
        csv.parent.mkdir(parents=True, exist_ok=True)
        with open(csv, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(write_profile_csv(profile))
    return img, profile


def cmd_cscan(args) -> int:
    vol = _load(args.inp)
    img, profile = _write_cscan_outputs(vol, args.gate, args.row, args.pgm, args.csv)
    print(f"cscan {img.nx}x{img.ny} gate=[{img.gate[0]},{img.gate[1]}) row={profile.row}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .metrics import evaluate

    ref = _load(args.ref)
    test = _load(args.test)
    if ref.shape != test.shape:
        raise CliError(f"shape mismatch: {ref.shape} vs {test.shape}", EXIT_DATA)
    report = evaluate(ref, test, args.gate, args.peak)
    print("psnr_db,mse,ssim,sigma_est_v")
    print(",".join(report.csv_fields()))
    return EXIT_OK


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def cmd_compare(args) -> int:
    import numpy as np

    from .metrics import METRICS_HEADER, evaluate, format_number

    names = [n.strip() for n in args.filters.split(",") if n.strip()]
    unknown = [n for n in names if n not in COMPARE_FILTERS + ("hard",)]
    if unknown or not names:
        raise CliError(f"unknown filters {unknown}; valid: {', '.join(COMPARE_FILTERS + ('hard',))}", EXIT_USAGE)
    clean = _load(args.clean)
    noisy = _load(args.noisy)
    if clean.shape != noisy.shape:
        raise CliError(f"shape mismatch: {clean.shape} vs {noisy.shape}", EXIT_DATA)
    outdir = args.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    ix, iy = args.ascan if args.ascan is not None else (noisy.nx // 2, noisy.ny // 2)
    if not (0 <= ix < noisy.nx and 0 <= iy < noisy.ny):
        raise CliError(f"A-scan ({ix}, {iy}) outside the {noisy.nx}x{noisy.ny} grid", EXIT_USAGE)
    peak = float(np.abs(clean.samples).max()) or None

    try:
        rows = [METRICS_HEADER]
        ascans = {}
        for name in names:
            start = time.perf_counter()
            out, _ = run_filter(name, noisy, args, args.median_window, args.wiener_window)
            runtime_ms = 1000.0 * (time.perf_counter() - start)
            _save(out, outdir / f"{name}.asv")
            _write_cscan_outputs(out, args.gate, args.row, outdir / f"{name}.pgm", outdir / f"{name}_profile.csv")
            report = evaluate(clean, out, args.gate, peak)
            rows.append(",".join([name, *report.csv_fields(), f"{runtime_ms:.1f}"]))
            ascans[name] = out.samples[ix, iy, :]
            print(f"{name}: psnr_db={format_number(report.psnr_db)} runtime_ms={runtime_ms:.1f}")
        _write_text(outdir / "metrics.csv", "\n".join(rows) + "\n")
        fs = noisy.meta.sample_rate_hz
        lines = ["it,time_s," + ",".join(ascans)]
        for it in range(noisy.nt):
            vals = ",".join(repr(float(ascans[n][it])) for n in ascans)
            lines.append(f"{it},{it / fs!r},{vals}")
        _write_text(outdir / f"ascan_{ix}_{iy}.csv", "\n".join(lines) + "\n")
    except Exception as exc:
        code = _exit_code(exc)
        _write_text(outdir / "FAILED", f"{type(exc).__name__}: {exc}\n")
        raise CliError(str(exc), code) from exc
    print(f"wrote {outdir}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "noise": cmd_noise,
    "denoise": cmd_denoise,
    "cscan": cmd_cscan,
    "profile": cmd_cscan,
    "metrics": cmd_metrics,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors (2) and --help (0) from argparse
        return int(exc.code or 0)
    warnings.filterwarnings("ignore", message=".*TBB.*")
    try:
        _configure_threads(args.threads)
        return COMMANDS[args.command](args)
    except Exception as exc:
        code = _exit_code(exc)
        print(f"samdenoise {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    raise SystemExit(main())
