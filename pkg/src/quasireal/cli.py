"""Command-line front end.

Every subcommand reads its parameters from defaults, then an optional JSON
``--config`` file, then command-line flags (later wins), prints a one-line
summary and optionally writes a versioned JSON report with ``--json``.

Exit codes: 0 pass, 1 check failed, 2 invalid input or construction error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import frdn, hankel, separations, witnesses
from .core import QuasiRealization, validate, word_table, words_upto
from .errors import (
    ConstructionError,
    InvalidWordError,
    NumericalError,
    ParameterError,
    QuasiRealError,
    TruncationError,
    ValidityError,
)
from .realizations import (
    HiddenQuantumModel,
    cp_certificate,
    hqmm_to_quasi,
    sample_sequence,
    write_sequence,
)

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "frdn-check": {"lam": 0.4, "alpha": 1.0, "max_len": 8, "tol": 1e-9},
    "separation": {
        "cone": "exp",
        "alpha": separations.POWER_ALPHA,
        "a": math.e,
        "b": 0.5,
        "max_len": None,
        "window": [-15.0, 15.0],
        "orbit_budget": 200,
        "samples": 10000,
        "density_csv": None,
    },
    "witness": {"lam": 0.4, "alpha": math.pi / 7, "n_max": 64, "eta": 1e-9, "q": None, "s": 0.5},
    "hankel": {"process": "frdn", "lam": 0.4, "alpha": 1.0, "basis_len": 4, "rel_threshold": 1e-8, "csv": None},
    "sample": {"model": "frdn", "lam": 0.4, "alpha": 1.0, "length": 100000, "format": "text", "output": "sequence.txt"},
    "validate-model": {"path": None, "max_len": 6, "tol_prob": 1e-9},
}

_ALIASES = {"lambda": "lam"}
_FLOAT_KEYS = {"lam", "alpha", "tol", "a", "b", "eta", "q", "s", "rel_threshold", "tol_prob"}
_INT_KEYS = {"max_len", "orbit_budget", "samples", "n_max", "basis_len", "length"}


# ------------------------------------------------------------------ output


def _encode(obj) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(report: dict) -> str:
    return _encode({"schema": SCHEMA, **report})


def _emit(args, report: dict, summary: str) -> None:
    # keep stdout pure JSON when the report goes there
    print(summary, file=sys.stderr if args.json == "-" else sys.stdout)
    if args.json:
        text = dumps(report)
        if args.json == "-":
            print(text)
        else:
            with open(args.json, "w") as fh:
                fh.write(text + "\n")


# ------------------------------------------------------------------ config


def effective_config(command: str, config_path: str | None, overrides: dict) -> dict:
    """Defaults < config file < flags; unknown keys are rejected."""
    cfg = dict(DEFAULTS[command])
    if config_path:
        with open(config_path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ParameterError("config file must hold a JSON object")
        block = {_ALIASES.get(k, k): v for k, v in data.get(command, data).items()}
        unknown = set(block) - set(cfg)
        if unknown:
            raise ParameterError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(block)
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    try:
        for keys, kind in ((_FLOAT_KEYS, float), (_INT_KEYS, int)):
            for k in keys & cfg.keys():
                if isinstance(cfg[k], list):
                    cfg[k] = [kind(x) for x in cfg[k]]
                elif cfg[k] is not None:
                    cfg[k] = kind(cfg[k])
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"bad parameter value: {exc}") from exc
    return cfg


# ------------------------------------------------------------------ commands


def cmd_frdn_check(cfg: dict, args) -> int:
    lams = cfg["lam"] if isinstance(cfg["lam"], list) else [cfg["lam"]]
    alphas = cfg["alpha"] if isinstance(cfg["alpha"], list) else [cfg["alpha"]]
    grid = [(float(l), float(a)) for l in lams for a in alphas]
    params = [frdn.FrdnParams(l, a) for l, a in grid]  # validate before any work

    def run(p):
        return frdn.three_way_equivalence(p, cfg["max_len"])

    workers = max(1, args.parallel)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(run, params))
    else:
        reports = [run(p) for p in params]
    worst = max(r.max_discrepancy for r in reports)
    ok = worst < cfg["tol"]
    _emit(args, {"command": "frdn-check", "config": cfg, "passed": ok, "max_discrepancy": worst,
                 "runs": [r.to_json() for r in reports]},
          f"frdn-check: max discrepancy {worst:.3e} over {len(reports)} parameter set(s) -> {'PASS' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_FAIL


def _separation_process(cfg):
    if cfg["cone"] == "exp":
        return separations.build_exp_process(separations.ExpConeProcessParams(a=cfg["a"], b=cfg["b"]))
    if cfg["cone"] == "power":
        return separations.build_power_process(
            separations.PowerConeProcessParams(alpha=cfg["alpha"], a=cfg["a"], b=cfg["b"], mu03=1 - cfg["alpha"]))
    raise ParameterError(f"cone must be 'exp' or 'power', got {cfg['cone']!r}")


def cmd_separation(cfg: dict, args) -> int:
    proc = _separation_process(cfg)
    max_len = cfg["max_len"] or (12 if cfg["cone"] == "exp" else 10)
    sand = separations.verify_cone_sandwich(proc, max_len=max_len, density_window=tuple(cfg["window"]),
                                            orbit_budget=cfg["orbit_budget"])
    stab = separations.stability_report(proc, cfg["samples"], args.seed)
    tau, pi = separations.third_coord_scaled(proc.qr.tau, proc.qr.pi)
    if cfg["density_csv"]:
        orb = separations.orbit(proc.qr, proc.m0, cfg["orbit_budget"], proc.generators)
        xs = (separations.exp_orbit_parameter(orb.rays) if cfg["cone"] == "exp"
              else separations.power_orbit_parameter(orb.rays, proc.m0))
        order = np.argsort(xs, kind="stable")
        with open(cfg["density_csv"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "s", "t"])
            for i in order:
                w.writerow([format(float(xs[i]), ".17g"), int(orb.labels[i, 0]), int(orb.labels[i, 1])])
    ok = sand.cmin_pass and sand.cmax_pass and stab.passed and sand.consistent
    report = {"command": "separation", "config": cfg, "passed": ok, "nu": proc.nu,
              "tau_scaled": tau, "pi_scaled": pi, "sandwich": sand.to_json(), "stability": stab.to_json()}
    flag = " (commensurate parameters: density not guaranteed)" if sand.commensurate else ""
    _emit(args, report, f"separation[{cfg['cone']}]: C_min {sand.cmin_pass}, C_max {sand.cmax_pass}, "
                        f"stability {stab.passed}, density gap {sand.density_gap:.3g}{flag} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_witness(cfg: dict, args) -> int:
    params = frdn.FrdnParams(cfg["lam"], cfg["alpha"])
    qr = frdn.build_quasi(params)
    poles = witnesses.pole_report(qr, frdn.B, frdn.A)
    w = witnesses.classical_dim_witness(qr.D[frdn.B], cfg["eta"], cfg["n_max"], [z for z, _ in poles.poles],
                                        table_n=cfg["n_max"])
    report = {"command": "witness", "config": cfg, "poles": poles.to_json(), "witness": w.to_json()}
    if cfg["q"] is not None:
        n = max(2, round(math.pi / cfg["alpha"])) if cfg["alpha"] > 0 else 2
        report["noise_bound"] = witnesses.noise_dimension_bound(
            frdn.NoiseParams(cfg["q"], cfg["s"], cfg["lam"], cfg["alpha"]), n).to_json()
    bound = w.bound if w.bound is not None else f"> {cfg['n_max']}"
    _emit(args, report, f"witness: {len(poles.poles)} pole(s); classical dimension >= {bound}")
    return EXIT_PASS


def _named_process(cfg) -> tuple[QuasiRealization, int]:
    name = cfg["process"]
    if name == "frdn":
        return frdn.build_quasi(frdn.FrdnParams(cfg["lam"], cfg["alpha"])), 4
    if name == "exp":
        return separations.build_exp_process().qr, 3
    if name == "power":
        return separations.build_power_process().qr, 3
    return _load_model(name)[0], None


def cmd_hankel(cfg: dict, args) -> int:
    qr, expected = _named_process(cfg)
    basis = words_upto(qr.m, cfg["basis_len"])
    block = hankel.build_hankel(qr, basis, basis)
    r, gap = hankel.numerical_rank(block, cfg["rel_threshold"])
    if cfg["csv"]:
        block.to_csv(cfg["csv"])
    learned = hankel.learn_regular(block, r) if r else None
    err = None
    if learned is not None:
        err = max(float(np.abs(word_table(learned, n) - word_table(qr, n)).max()) for n in range(7))
    ok = expected is None or r == expected
    _emit(args, {"command": "hankel", "config": cfg, "rank": r, "gap_ratio": gap, "expected_rank": expected,
                 "roundtrip_error": err, "passed": ok},
          f"hankel: rank {r} (gap ratio {gap:.3g}), round-trip error {err if err is None else f'{err:.3e}'}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_sample(cfg: dict, args) -> int:
    if cfg["model"] == "frdn":
        model = frdn.build_hqmm(frdn.FrdnParams(cfg["lam"], cfg["alpha"]))
    else:
        model = _load_model(cfg["model"])[1]
        if model is None:
            raise ParameterError("sampling needs an HQMM model file")
    seed = 0 if args.seed is None else args.seed
    seq = sample_sequence(model, cfg["length"], seed)
    write_sequence(cfg["output"], seq, model.alphabet, cfg["format"])
    counts = np.bincount(np.asarray(seq, dtype=np.int64), minlength=model.m)
    _emit(args, {"command": "sample", "config": cfg, "seed": seed, "length": len(seq), "counts": counts.tolist()},
          f"sample: wrote {len(seq)} symbols to {cfg['output']} ({cfg['format']})")
    return EXIT_PASS


def _load_model(path):
    with open(path) as fh:
        obj = json.load(fh, parse_constant=lambda c: (_ for _ in ()).throw(ParameterError(f"non-finite {c}")))
    if "kraus" in obj:
        h = HiddenQuantumModel.from_json(obj)
        return hqmm_to_quasi(h, check=False), h
    return QuasiRealization.from_json(obj), None


def cmd_validate_model(cfg: dict, args) -> int:
    if not cfg["path"]:
        raise ParameterError("validate-model needs --path")
    qr, h = _load_model(cfg["path"])
    rep = validate(qr, cfg["max_len"], cfg["tol_prob"])
    report = {"command": "validate-model", "config": cfg, "passed": rep.passed, "failures": rep.failures,
              "min_probability": rep.min_probability, "max_sum_error": rep.max_sum_error}
    ok = rep.passed
    if h is not None:
        cert = cp_certificate(h)
        report["cp_certificate"] = {"passed": cert.passed, "failures": cert.failures}
        ok = ok and cert.passed
    _emit(args, report, f"validate-model: {'PASS' if ok else 'FAIL'}" + ("" if ok else f" ({'; '.join(rep.failures)})"))
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "frdn-check": cmd_frdn_check,
    "separation": cmd_separation,
    "witness": cmd_witness,
    "hankel": cmd_hankel,
    "sample": cmd_sample,
    "validate-model": cmd_validate_model,
}


# ------------------------------------------------------------------ parser


def _floats(text: str):
    parts = [float(x) for x in text.split(",")]
    return parts if len(parts) > 1 else parts[0]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasireal", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="PATH", help="write the JSON report here ('-' for stdout)")
    common.add_argument("--config", metavar="PATH", help="JSON file with parameter overrides")
    common.add_argument("--seed", type=int, default=None, help="seed for sampling-based steps (default 0)")
    common.add_argument("--describe", action="store_true", help="print the effective config and exit")
    common.add_argument("--parallel", type=int, default=1, metavar="N", help="worker count for batched runs")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_,
                            epilog="defaults: " + json.dumps(DEFAULTS[name]))
        return sp

    s = add("frdn-check", "three-way FRDN equivalence")
    s.add_argument("--lam", "--lambda", dest="lam", type=_floats, help="lambda (comma list allowed)")
    s.add_argument("--alpha", type=_floats, help="alpha (comma list allowed)")
    s.add_argument("--max-len", dest="max_len", type=int)
    s.add_argument("--tol", type=float)

    s = add("separation", "exp/power cone separation checks")
    s.add_argument("--cone", choices=["exp", "power"])
    s.add_argument("--alpha", type=float)
    s.add_argument("-a", dest="a", type=float)
    s.add_argument("-b", dest="b", type=float)
    s.add_argument("--max-len", dest="max_len", type=int)
    s.add_argument("--window", type=float, nargs=2)
    s.add_argument("--orbit-budget", dest="orbit_budget", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--density-csv", dest="density_csv")

    s = add("witness", "classical-dimension witness for FRDN")
    s.add_argument("--lam", "--lambda", dest="lam", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--eta", type=float)
    s.add_argument("-q", dest="q", type=float, help="add the depolarized-model bound at this q")
    s.add_argument("-s", dest="s", type=float)

    s = add("hankel", "Hankel rank and spectral learning")
    s.add_argument("--process", help="frdn, exp, power or a model JSON path")
    s.add_argument("--lam", "--lambda", dest="lam", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--basis-len", dest="basis_len", type=int)
    s.add_argument("--rel-threshold", dest="rel_threshold", type=float)
    s.add_argument("--csv")

    s = add("sample", "sample a symbol sequence")
    s.add_argument("--model", help="frdn or an HQMM JSON path")
    s.add_argument("--lam", "--lambda", dest="lam", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("-N", "--length", dest="length", type=int)
    s.add_argument("--format", choices=["text", "binary"])
    s.add_argument("-o", "--output")

    s = add("validate-model", "validate a model JSON file")
    s.add_argument("--path")
    s.add_argument("--max-len", dest="max_len", type=int)
    s.add_argument("--tol-prob", dest="tol_prob", type=float)
    return p


_COMMON = {"command", "json", "config", "seed", "describe", "parallel"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in _COMMON}
    try:
        cfg = effective_config(args.command, args.config, overrides)
        if args.describe:
            print(_encode({"command": args.command, "seed": args.seed, "parallel": args.parallel, "config": cfg}))
            return EXIT_PASS
        return COMMANDS[args.command](cfg, args)
    except (ParameterError, ValidityError, ConstructionError, InvalidWordError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, TruncationError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QuasiRealError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
