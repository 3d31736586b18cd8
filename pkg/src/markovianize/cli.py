"""Command-line front end.

Every output starts with ``#`` comment lines carrying the package version and
the run configuration as JSON, so a file can be traced back to the command
that produced it.  Thread count and output path are left out of the header:
they do not affect the data, and keeping them out makes outputs
byte-identical across parallelism.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TextIO

from . import __version__, bounds, designs, montecarlo as mc, validation
from .errors import MarkovianizeError, ResourceCapError
from .numerics import RngStream
from .process import ProcessDims, dump_choi

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RESOURCE = 4

ENV_SEED = "MARKOVIANIZE_SEED"
ENV_THREADS = "MARKOVIANIZE_THREADS"


class UsageError(ValueError):
    pass


# -- ranges ------------------------------------------------------------------

def parse_range(text: str, kind: Callable = int) -> list:
    """Inclusive range: ``a``, ``a:b``, ``a:b:step`` or a list ``a,b,c``."""
    text = str(text).strip()
    try:
        if "," in text:
            vals = [kind(v) for v in text.split(",") if v.strip()]
        elif ":" in text:
            parts = text.split(":")
            if len(parts) not in (2, 3):
                raise ValueError
            a, b = kind(parts[0]), kind(parts[1])
            step = kind(parts[2]) if len(parts) == 3 else kind(1)
            if step <= 0 or b < a:
                raise ValueError
            if kind is int:
                vals = list(range(a, b + 1, step))
            else:
                count = int(math.floor((b - a) / step + 1e-9)) + 1
                vals = [a + i * step for i in range(count)]
        else:
            vals = [kind(text)]
    except ValueError:
        raise UsageError(f"invalid range {text!r}") from None
    if not vals:
        raise UsageError(f"empty range {text!r}")
    return vals


# -- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    fmt: str = "csv"
    threads: Optional[int] = None
    output: Optional[str] = None

    def header_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed, "format": self.fmt}

    def header_lines(self) -> list[str]:
        return [f"# markovianize {__version__}",
                "# config " + json.dumps(self.header_dict(), sort_keys=True)]

    @classmethod
    def from_header(cls, lines: Iterable[str]) -> "RunConfig":
        for line in lines:
            if line.startswith("# config "):
                d = json.loads(line[len("# config "):])
                return cls(d["command"], d["params"], d["seed"], d["format"])
        raise ValueError("no config header line")


def read_config(path: str) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_header(line for line in fh if line.startswith("#"))


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def _emit(cfg: RunConfig, columns: Sequence[str], rows: Sequence[Sequence], fh: TextIO) -> None:
    if cfg.fmt == "json":
        doc = {"version": __version__, "config": cfg.header_dict(),
               "columns": list(columns), "rows": [list(r) for r in rows]}
        fh.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        return
    for line in cfg.header_lines():
        fh.write(line + "\n")
    fh.write(",".join(columns) + "\n")
    for r in rows:
        fh.write(",".join(_fmt(x) for x in r) + "\n")


def _write(cfg: RunConfig, columns, rows) -> None:
    if cfg.output in (None, "-"):
        _emit(cfg, columns, rows, sys.stdout)
    else:
        with open(cfg.output, "w", newline="\n") as fh:
            _emit(cfg, columns, rows, fh)


def _pmap(func, items: list, threads: int) -> list:
    if threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


# -- commands ----------------------------------------------------------------

BOUND_COLUMNS = ("log2_dE", "k", "t", "delta", "epsilon", "m_star", "log2_Bnu", "Bnu_clamped")


def bound_rows(ds: int, log2_des, ks, ts, deltas, epsilons, threads: int = 1) -> list[tuple]:
    tuples = sorted((lde, k, t, dl, ep) for lde in log2_des for k in ks for t in ts
                    for dl in deltas for ep in epsilons)

    def row(tup):
        lde, k, t, dl, ep = tup
        m, br = bounds.optimize_m(bounds.BoundParams(ds, lde, k, t, ep, dl))
        return (lde, k, t, float(dl), float(ep), m, br.log2_total, br.total_clamped)

    return _pmap(row, tuples, threads)


def cmd_bound_sweep(args, cfg: RunConfig) -> int:
    p = cfg.params
    rows = bound_rows(p["ds"], parse_range(p["log2_de"]), parse_range(p["k"]), parse_range(p["t"]),
                      parse_range(p["delta"], float), parse_range(p["eps"], float), cfg.threads)
    _write(cfg, BOUND_COLUMNS, rows)
    return EXIT_OK


DEPTH_COLUMNS = ("n", "t", "epsilon", "ell", "D", "two_qubit_gates", "Bnu_at_premise")


def depth_rows(ns, ts, epsilons, ds: int = 2, k: int = 2, delta: float = 0.1,
               threads: int = 1) -> list[tuple]:
    """Depth/gate-count rows; ``Bnu_at_premise`` evaluates the bound with ``log2_dE = n``."""
    tuples = sorted((n, t, ep) for n in ns for t in ts for ep in epsilons)

    def row(tup):
        n, t, ep = tup
        spec = designs.CircuitSpec.for_target(n, t, ep)
        _, br = bounds.optimize_m(bounds.BoundParams(ds, n, k, t, ep, delta))
        return (n, t, float(ep), spec.ell, designs.gate_depth(t, ep, n),
                designs.gate_count(spec)[0], br.total_clamped)

    return _pmap(row, tuples, threads)


def cmd_depth_sweep(args, cfg: RunConfig) -> int:
    p = cfg.params
    rows = depth_rows(parse_range(p["n"]), parse_range(p["t"]), parse_range(p["eps"], float),
                      p["ds"], p["k"], p["delta"], cfg.threads)
    _write(cfg, DEPTH_COLUMNS, rows)
    return EXIT_OK


def ensemble_from_params(p: dict, force: bool = False) -> mc.EnsembleSpec:
    ds, k = p["ds"], p["k"]
    if p["ensemble"] == "haar":
        if p.get("log2_de") is None:
            raise UsageError("--log2-de is required for the haar ensemble")
        dims = ProcessDims(1 << p["log2_de"], ds, k)
        return mc.EnsembleSpec("haar", dims, p["samples"], p["seed"],
                               initial_state=p["initial_state"], force=force)
    if ds & (ds - 1):
        raise UsageError("design ensembles need a power-of-two --ds")
    lds = ds.bit_length() - 1
    n = p.get("n")
    if n is None:
        if p.get("log2_de") is None:
            raise UsageError("design ensembles need --n or --log2-de")
        n = p["log2_de"] + lds
    if p.get("log2_de") is not None and p["log2_de"] + lds != n:
        raise UsageError(f"--n {n} does not match --log2-de {p['log2_de']} with --ds {ds}")
    if n - lds < 0:
        raise UsageError(f"--n {n} leaves no room for a {ds}-dimensional system")
    ell = p.get("ell")
    if ell is None:
        ell = designs.min_repetitions(p["t"], p["eps"], n)
    circuit = designs.CircuitSpec(n, p["t"], p["eps"], ell)
    dims = ProcessDims(1 << (n - lds), ds, k)
    return mc.EnsembleSpec("design", dims, p["samples"], p["seed"], circuit=circuit,
                           initial_state=p["initial_state"], force=force)


SAMPLE_COLUMNS = ("index", "purity", "n2id", "n1marg", "seed")


def sample_summary(spec: mc.EnsembleSpec, records, deltas) -> dict:
    out = {"version": __version__, "ensemble": spec.describe(), "measures": {}}
    for name in mc.MEASURES:
        vals = [r.value(name) for r in records]
        entry = {"mean": float(sum(vals) / len(vals))}
        if len(vals) >= 2:
            entry["mean"], entry["stderr"] = mc.mean_stderr(vals)
        entry["tails"] = [vars(mc.tail_from_values(vals, d)) for d in deltas]
        out["measures"][name] = entry
    return out


def cmd_sample(args, cfg: RunConfig) -> int:
    p = cfg.params
    spec = ensemble_from_params(p, force=args.force)
    records = mc.run_ensemble(spec, cfg.threads)
    rows = [(r.index, r.purity, r.n2id, r.n1marg, spec.base_seed) for r in records]
    _write(cfg, SAMPLE_COLUMNS, rows)
    summary = sample_summary(spec, records, parse_range(p["delta"], float))
    text = json.dumps(summary, sort_keys=True, indent=1) + "\n"
    target = args.summary
    if target is None and cfg.output not in (None, "-"):
        target = str(cfg.output) + ".summary.json"
    if target is None:
        sys.stderr.write(text)
    else:
        Path(target).write_text(text)
    return EXIT_OK


def cmd_process_dump(args, cfg: RunConfig) -> int:
    p = cfg.params
    spec = ensemble_from_params({**p, "samples": p["index"] + 1}, force=args.force)
    ups = mc.sample_process(spec, p["index"])
    if cfg.output in (None, "-"):
        dump_choi(ups, sys.stdout)
    else:
        with open(cfg.output, "w") as fh:
            dump_choi(ups, fh)
    if args.circuit_dump:
        if spec.kind != "design":
            raise UsageError("--circuit-dump needs --ensemble design")
        # replays the draws of sample_unitaries: one stream, layers step by step
        rng = RngStream(spec.base_seed, p["index"])
        for step in range(spec.dims.k + 1):
            layers = designs.sample_w_layers(spec.circuit, rng)
            with open(f"{args.circuit_dump}.step{step}.txt", "w") as fh:
                designs.dump_circuit(spec.circuit.n, spec.circuit.t, layers, fh)
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    if args.list:
        for name in validation.CHECK_NAMES:
            print(name)
        return EXIT_OK
    names = validation.CHECK_NAMES
    if args.only:
        names = [n.strip() for chunk in args.only for n in chunk.split(",") if n.strip()]
        unknown = sorted(set(names) - set(validation.CHECK_NAMES))
        if unknown:
            raise UsageError(f"unknown criteria: {', '.join(unknown)}")
    opts = validation.Options(corrupt_phases=args.corrupt_phases)
    failed = []
    for name in names:
        res = validation.run_check(name, opts)
        print(res.line(), flush=True)
        if not res.passed:
            failed.append(name)
    if failed:
        print("failed criteria: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(names)} criteria passed")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    seed = _env_int(ENV_SEED, 0)
    threads = _env_int(ENV_THREADS, 1)
    ap = _Parser(prog="markovianize",
                 description="Non-Markovianity bounds and process ensembles.")
    ap.add_argument("--version", action="version", version=f"markovianize {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seeded=False):
        p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=threads)
        if seeded:
            p.add_argument("--seed", type=int, default=seed)

    p = sub.add_parser("bound-sweep", help="design tail bound over a parameter grid")
    p.add_argument("--ds", type=int, default=2)
    p.add_argument("--log2-de", default="10:60")
    p.add_argument("--k", default="0:4")
    p.add_argument("--t", default="2:10")
    p.add_argument("--delta", default="0.1")
    p.add_argument("--eps", default="1e-12")
    common(p)

    p = sub.add_parser("depth-sweep", help="repetitions, depth and gate counts")
    p.add_argument("--n", default="35:60")
    p.add_argument("--t", default="10")
    p.add_argument("--eps", default="1e-12")
    p.add_argument("--ds", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.1)
    common(p)

    def ensemble_args(p):
        p.add_argument("--ensemble", choices=("haar", "design"), required=True)
        p.add_argument("--log2-de", type=int, default=None)
        p.add_argument("--ds", type=int, default=2)
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--n", type=int, default=None, help="design circuit qubits")
        p.add_argument("--t", type=int, default=2)
        p.add_argument("--eps", type=float, default=1e-3)
        p.add_argument("--ell", type=int, default=None)
        p.add_argument("--initial-state", choices=("all-zero", "mixed-env"), default="all-zero")
        p.add_argument("--force", action="store_true", help="lift the dense-size caps")

    p = sub.add_parser("sample", help="sample an ensemble and record its measures")
    ensemble_args(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--delta", default="0.1", help="tail thresholds for the summary")
    p.add_argument("--summary", default=None, help="summary JSON path")
    common(p, seeded=True)

    p = sub.add_parser("process-dump", help="write the Choi matrix of one sampled process")
    ensemble_args(p)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--circuit-dump", default=None, help="path prefix for design circuit dumps")
    common(p, seeded=True)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--only", action="append", default=None)
    p.add_argument("--list", action="store_true")
    p.add_argument("--corrupt-phases", action="store_true", help=argparse.SUPPRESS)
    return ap


_COMMANDS = {
    "bound-sweep": cmd_bound_sweep,
    "depth-sweep": cmd_depth_sweep,
    "sample": cmd_sample,
    "process-dump": cmd_process_dump,
    "validate": cmd_validate,
}

_NOT_PARAMS = {"command", "output", "fmt", "threads", "seed", "force", "summary",
               "circuit_dump", "only", "list", "corrupt_phases"}


def config_from_args(args) -> RunConfig:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMS}
    seed = getattr(args, "seed", None)
    if seed is not None:
        params["seed"] = seed
    return RunConfig(args.command, params, seed, getattr(args, "fmt", "csv"),
                     max(1, getattr(args, "threads", 1) or 1), getattr(args, "output", None))


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        return _COMMANDS[args.command](args, cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"markovianize: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"markovianize: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MarkovianizeError, ValueError) as exc:
        print(f"markovianize: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
