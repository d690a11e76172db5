"""Command-line interface: ``tsrcv generate | rcv | sweep``.

Every default reproduces the published experiment (1000 training points at
spacing 0.1, 250 out-of-sample points, mean 5.0, length scale 2.0, unit
ridge, 10 folds). A JSON config with sections ``ou``, ``kernel``, ``rcv``
and ``sweep`` (plus a top-level ``seed``) may replace the defaults, and any
flag overrides the config. A ``manifest.json`` written by a previous run is
itself accepted as ``--config``.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .curves import CURVE_NOTE, METRICS, SweepConfig, emit_curve, sweep
from .engine import GP_FORMS, RcvConfig, run_rcv
from .errors import InvalidConfig, NumericalError, ValidationError
from .linalg import KernelConfig
from .ou import OuConfig, check_seed, sample_ou
from .series import read_series_csv, write_series_csv

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

DEFAULTS = {
    "ou": {"n_train": 1000, "n_oos": 250, "dt": 0.1, "t0": 0.0, "mu": 5.0},
    "kernel": {"length_scale": 2.0, "ridge": 1.0, "jitter": 1e-10, "center_mean": False},
    "rcv": {"k": 10, "mape_epsilon": 1e-8, "gp_form": "mape"},
    "sweep": {"k_values": list(range(2, 21)), "replicates": 5, "metrics": list(METRICS)},
}

# flag dest -> (section, key)
FLAG_FIELDS = {
    "n_train": ("ou", "n_train"),
    "n_oos": ("ou", "n_oos"),
    "dt": ("ou", "dt"),
    "mu": ("ou", "mu"),
    "length_scale": ("kernel", "length_scale"),
    "ridge": ("kernel", "ridge"),
    "jitter": ("kernel", "jitter"),
    "center_mean": ("kernel", "center_mean"),
    "gp_form": ("rcv", "gp_form"),
    "replicates": ("sweep", "replicates"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def parse_k_range(text: str) -> list[int]:
    """``"2:20"`` (inclusive) or a comma list such as ``"2,5,10"``."""
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid k range {text!r}; use 'lo:hi' or 'a,b,c'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run settings")
    g.add_argument("--config", type=Path, help="JSON config (or a previous manifest.json)")
    g.add_argument("--seed", type=int, help="64-bit seed; falls back to $RCV_SEED")
    g.add_argument("--out-dir", type=Path, default=Path("."))
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--n-train", type=int)
    g.add_argument("--n-oos", type=int)
    g.add_argument("--dt", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--length-scale", type=float)
    g.add_argument("--ridge", type=float)
    g.add_argument("--jitter", type=float)
    g.add_argument("--center-mean", action="store_true", default=None,
                   help="subtract the training mean before regression (extension)")
    g.add_argument("--k", type=int, help="fold count (sweep: a single k)")
    g.add_argument("--k-range", type=parse_k_range, help="sweep fold counts, 'lo:hi' or 'a,b,c'")
    g.add_argument("--replicates", type=int)
    g.add_argument("--gp-form", choices=GP_FORMS)

    parser = _Parser(prog="tsrcv", description="Reconstructive cross-validation for time series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="sample an OU train/oos pair")
    for name, text in (("rcv", "run rCV once"), ("sweep", "learning curve over k")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("train", type=Path, help="training series CSV (t,y)")
        p.add_argument("oos", type=Path, help="out-of-sample series CSV (t,y)")
        if name == "rcv":
            p.add_argument("--residuals", action="store_true", help="also write residuals.csv")
    return parser


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if isinstance(doc, dict) and "config" in doc and "tool" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise InvalidConfig(f"{path}: top level must be a JSON object")
    return doc


def resolve_config(args) -> dict:
    """Merge defaults, config file and flags into one fully expanded config."""
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    cfg["seed"] = None
    if args.config is not None:
        doc = load_config(args.config)
        for sec, vals in doc.items():
            if sec == "seed":
                cfg["seed"] = vals
                continue
            if sec not in DEFAULTS or not isinstance(vals, dict):
                raise InvalidConfig(f"unknown config section {sec!r}")
            for key, val in vals.items():
                if key not in DEFAULTS[sec]:
                    raise InvalidConfig(f"unknown config field {sec}.{key}")
                cfg[sec][key] = val
    for dest, (sec, key) in FLAG_FIELDS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg[sec][key] = val
    if args.k is not None:
        cfg["rcv"]["k"] = args.k
        if args.command == "sweep":
            cfg["sweep"]["k_values"] = [args.k]
    if args.k_range is not None:
        cfg["sweep"]["k_values"] = args.k_range

    if args.seed is not None:
        cfg["seed"] = args.seed
    elif cfg["seed"] is None and os.environ.get("RCV_SEED", "").strip():
        try:
            cfg["seed"] = int(os.environ["RCV_SEED"])
        except ValueError:
            raise InvalidConfig(f"RCV_SEED must be an integer, got {os.environ['RCV_SEED']!r}")
    if cfg["seed"] is None:
        raise InvalidConfig("no seed given: pass --seed or set RCV_SEED")
    check_seed(cfg["seed"])
    return cfg


def _build(cls, section, values):
    try:
        return cls(**values)
    except TypeError as exc:
        raise InvalidConfig(f"[{section}] {exc}")
    except ValidationError as exc:
        raise type(exc)(f"[{section}] {exc}")


def kernel_config(cfg) -> KernelConfig:
    return _build(KernelConfig, "kernel", cfg["kernel"])


def ou_config(cfg) -> OuConfig:
    return _build(OuConfig, "ou", dict(cfg["ou"], kernel=kernel_config(cfg), seed=cfg["seed"]))


def rcv_config(cfg) -> RcvConfig:
    return _build(RcvConfig, "rcv", dict(cfg["rcv"], kernel=kernel_config(cfg), seed=cfg["seed"]))


def sweep_config(cfg) -> SweepConfig:
    s = cfg["sweep"]
    return _build(SweepConfig, "sweep", {
        "k_values": tuple(s["k_values"]), "replicates": s["replicates"],
        "metrics": tuple(s["metrics"]), "base": rcv_config(cfg),
    })


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write(path: Path, text: str) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_manifest(out_dir, command, cfg, inputs, outputs, started, notes=None) -> Path:
    manifest = {
        "tool": "tsrcv",
        "version": __version__,
        "command": command,
        "seed": cfg["seed"],
        "config": cfg,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
        "duration_seconds": time.perf_counter() - started,
    }
    if notes:
        manifest["notes"] = notes
    return _write(Path(out_dir) / "manifest.json", json.dumps(manifest, indent=2) + "\n")


def cmd_generate(args, cfg, started):
    train, oos = sample_ou(ou_config(cfg))
    outputs = [write_series_csv(train, args.out_dir / "train.csv"),
               write_series_csv(oos, args.out_dir / "oos.csv")]
    write_manifest(args.out_dir, "generate", cfg, [], outputs, started)
    print(f"wrote {len(train)} training and {len(oos)} out-of-sample points to {args.out_dir}")


def _read_pair(args):
    return read_series_csv(args.train), read_series_csv(args.oos)


def cmd_rcv(args, cfg, started):
    train, oos = _read_pair(args)
    report = run_rcv(train, oos, rcv_config(cfg), threads=args.threads)
    outputs = [_write(args.out_dir / "report.json", report.to_json())]
    if args.residuals:
        outputs.append(_write(args.out_dir / "residuals.csv", report.residuals_csv(train)))
    write_manifest(args.out_dir, "rcv", cfg, [args.train, args.oos], outputs, started)
    print(report.summary_line())


def cmd_sweep(args, cfg, started):
    train, oos = _read_pair(args)
    curve = sweep(train, oos, sweep_config(cfg), threads=args.threads)
    outputs = [emit_curve(curve, args.out_dir / "curve.csv")]
    seeds = {str(p.k): list(p.seeds) for p in curve.points}
    write_manifest(args.out_dir, "sweep", cfg, [args.train, args.oos], outputs, started,
                   notes={"curve": CURVE_NOTE, "derived_seeds": seeds})
    print(f"wrote {len(curve.points)} curve points to {args.out_dir / 'curve.csv'}")


COMMANDS = {"generate": cmd_generate, "rcv": cmd_rcv, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        if args.threads < 1:
            raise InvalidConfig(f"--threads must be >= 1, got {args.threads}")
        args.out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg, started)
    except ValidationError as exc:
        print(f"tsrcv: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"tsrcv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"tsrcv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
