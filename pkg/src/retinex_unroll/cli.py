"""Command-line front end: ``degrade``, ``solve`` and ``eval`` subcommands.

Exit codes: 0 success, 2 bad config or unreadable/unwritable files,
3 unusable kernel file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, KernelFileError, RunConfig, load_config, read_kernel, write_kernel
from .degradation import degrade, make_kernel
from .imaging import as_image, read_png, write_png
from .metrics import NORMALIZATION_NOTE, score
from .pipeline import restore
from .solver import ENERGY_NOTE

log = logging.getLogger("retinex_unroll")

KERNEL_DIR = "kernels"
ILLUM_DIR = "illuminance"
DIAG_DIR = "diagnostics"
MANIFEST = "manifest.json"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _threads() -> int:
    value = os.environ.get("UNROLL_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            log.warning("ignoring non-integer UNROLL_THREADS=%r", value)
    return os.cpu_count() or 1


def _map(fn, items):
    """Ordered parallel map capped by UNROLL_THREADS."""
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _list_pngs(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    return sorted(p for p in path.iterdir() if p.suffix.lower() == ".png" and p.is_file())


def _read_image(path: Path) -> np.ndarray:
    try:
        return as_image(read_png(path))
    except (OSError, ValueError) as exc:
        raise CliError(2, f"cannot read image {path}: {exc}") from exc


def _prepare_output(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(2, f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise CliError(2, f"output directory is not writable: {path}")


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    try:
        (out_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise CliError(2, f"cannot write manifest: {exc}") from exc


def cmd_degrade(cfg: RunConfig) -> dict:
    """Write degraded PNGs, kernel files, true illuminance maps and a manifest."""
    src = Path(cfg.input)
    if not src.exists():
        raise CliError(2, f"input path does not exist: {src}")
    files = _list_pngs(src)
    out_dir = Path(cfg.output)
    _prepare_output(out_dir)
    (out_dir / KERNEL_DIR).mkdir(exist_ok=True)
    (out_dir / ILLUM_DIR).mkdir(exist_ok=True)

    def one(item):
        index, path = item
        spec = cfg.degrade_spec(index)
        gt = _read_image(path)
        x, k, illum = degrade(gt, spec)
        try:
            write_png(out_dir / f"{path.stem}.png", x)
            write_kernel(out_dir / KERNEL_DIR / f"{path.stem}.txt", k)
            write_png(out_dir / ILLUM_DIR / f"{path.stem}.png", illum)
        except OSError as exc:
            raise CliError(2, f"cannot write outputs for {path.name}: {exc}") from exc
        return {"input": path.name, "seed": spec.seed}

    records = _map(one, enumerate(files))
    manifest = {
        "command": "degrade",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "files": records,
    }
    _write_manifest(out_dir, manifest)
    return manifest


def _kernel_for(cfg: RunConfig, path: Path) -> np.ndarray:
    if cfg.kernel_source == "parametric":
        return make_kernel(cfg.degrade)
    kpath = Path(cfg.kernel_path) if cfg.kernel_source == "file" else path.parent / KERNEL_DIR / f"{path.stem}.txt"
    try:
        return read_kernel(kpath)
    except KernelFileError as exc:
        raise CliError(3, str(exc)) from exc


def _dump_block(diag_dir: Path, index: int, state) -> None:
    for name in ("I", "R", "L", "Z"):
        write_png(diag_dir / f"block_{index:02d}_{name}.png", getattr(state, name))


def cmd_solve(cfg: RunConfig) -> dict:
    """Restore every degraded PNG under ``cfg.input``."""
    src = Path(cfg.input)
    if not src.exists():
        raise CliError(2, f"input path does not exist: {src}")
    files = _list_pngs(src)
    out_dir = Path(cfg.output)
    _prepare_output(out_dir)

    def one(path: Path):
        x = _read_image(path)
        k = _kernel_for(cfg, path)
        on_block = None
        if cfg.dump_diagnostics:
            diag_dir = out_dir / DIAG_DIR / path.stem
            diag_dir.mkdir(parents=True, exist_ok=True)

            def on_block(index, state):
                _dump_block(diag_dir, index, state)

        try:
            result = restore(x, k, cfg.hyper, cfg.operators, cfg.enhance, on_block=on_block)
        except (ValueError, FloatingPointError) as exc:
            raise CliError(2, f"{path.name}: {exc}") from exc
        trace = [t.to_dict() for t in result.state.trace]
        try:
            write_png(out_dir / f"{path.stem}.png", result.image)
            if cfg.dump_diagnostics:
                with open(out_dir / DIAG_DIR / path.stem / "trace.csv", "w", newline="") as fh:
                    writer = csv.DictWriter(fh, fieldnames=list(trace[0]))
                    writer.writeheader()
                    writer.writerows(trace)
        except OSError as exc:
            raise CliError(2, f"cannot write outputs for {path.name}: {exc}") from exc
        return {"input": path.name, "trace": trace}

    records = _map(one, files)
    manifest = {
        "command": "solve",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "energy": ENERGY_NOTE,
        "files": records,
    }
    _write_manifest(out_dir, manifest)
    return manifest


def cmd_eval(pred_dir: Path, gt_dir: Path, out_file: Path) -> list[dict]:
    """Score restored images against ground truth paired by file name.

    Writes one JSON line per pair followed by an aggregate line. Unpaired
    files are reported and skipped.
    """
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise CliError(2, f"not a directory: {d}")
    preds = {p.name: p for p in _list_pngs(pred_dir)}
    gts = {p.name: p for p in _list_pngs(gt_dir)}
    names = sorted(preds.keys() & gts.keys())
    unpaired = sorted(preds.keys() ^ gts.keys())
    if unpaired:
        log.warning("skipping unpaired files: %s", ", ".join(unpaired))

    def one(name):
        pred, gt = _read_image(preds[name]), _read_image(gts[name])
        if pred.shape != gt.shape:
            log.warning("skipping %s: shape %s vs %s", name, pred.shape, gt.shape)
            return None
        return {"name": name, **score(pred, gt).to_dict()}

    records = [r for r in _map(one, names) if r is not None]
    lines = [json.dumps(r) for r in records]
    if records:
        keys = ("psnr", "ssim", "mae", "fft_loss", "combined")
        means = {key: float(np.mean([r[key] for r in records])) for key in keys}
        lines.append(json.dumps({"aggregate": means, "count": len(records), "note": NORMALIZATION_NOTE}))
    else:
        log.warning("no image pairs to evaluate")
    try:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        out_file.write_text("".join(line + "\n" for line in lines))
    except OSError as exc:
        raise CliError(2, f"cannot write report {out_file}: {exc}") from exc
    return records


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retinex-unroll", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="synthesize low-light blurry images")
    p.add_argument("--config", required=True)

    p = sub.add_parser("solve", help="restore low-light blurry images")
    p.add_argument("--config", required=True)
    p.add_argument("--paper-literal", action="store_true", help="use the printed update formulas verbatim")
    p.add_argument("--blocks", type=int, help="number of unrolled blocks (default 5)")
    p.add_argument("--dump", action="store_true", help="write per-block snapshots and a residual trace")

    p = sub.add_parser("eval", help="score restored images against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "eval":
            cmd_eval(Path(args.pred), Path(args.gt), Path(args.out))
            return 0
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            raise CliError(2, str(exc)) from exc
        if args.command == "degrade":
            cmd_degrade(cfg)
            return 0
        hyper = cfg.hyper
        try:
            if args.paper_literal:
                hyper = replace(hyper, paper_literal=True)
            if args.blocks is not None:
                hyper = replace(hyper, blocks=args.blocks)
        except ValueError as exc:
            raise CliError(2, str(exc)) from exc
        cfg = replace(cfg, hyper=hyper, dump_diagnostics=cfg.dump_diagnostics or args.dump)
        cmd_solve(cfg)
        return 0
    except CliError as exc:
        log.error("%s", exc)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
