"""Command-line interface.

Subcommands: find (search only), analyze (full pipeline), betti, index,
bounds, morse, report.  Exit codes: 0 success, 1 check failure, 2 config or
usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .config import load_config
from .errors import ArtifactIOError, ConfigError, SpaceformError
from .indexcalc import NormalForm, index_sequence
from .pipeline import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    build_space,
    emit_report,
    run_pipeline,
)
from . import report as report_mod
from .search import find_geodesics
from .topology import (
    MorseData,
    MorseEntry,
    betti_table,
    morse_inequality_check,
    thm1_counting,
    thm3_count,
)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--seed", type=int, help="override search.rng_seed")
    parser.add_argument("--out", help="output directory (default from config)")
    parser.add_argument("--format", choices=("json", "csv", "svg"), help="artifact format")


def _load(args) -> "ExperimentConfig":
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.search_rng_seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    if args.format:
        cfg.output_format = args.format
    return cfg


def _cmd_find(args) -> int:
    cfg = _load(args)
    m, sf = build_space(cfg)
    records = find_geodesics(
        m, sf, cfg.search_class_power,
        seeds=cfg.search_seeds, rng_seed=cfg.search_rng_seed, N=cfg.search_N,
        tol_geo=cfg.search_tol_geo, max_iters=cfg.search_max_iters,
    )
    from dataclasses import asdict
    bundle = report_mod.report_bundle(records, {}, asdict(cfg))
    emit_report(records, bundle, cfg.output_dir, cfg.output_format)
    print(f"{len(records)} geodesic(s) found")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _load(args)
    bundle, code = run_pipeline(cfg)
    n = len(bundle["geodesics"])
    print(f"{n} geodesic(s); checks {'pass' if code == EXIT_OK else 'FAIL'}")
    return code


def _cmd_betti(args) -> int:
    table = betti_table(args.n, args.q_max)
    lines = ["q,b_q"] + [f"{q},{b}" for q, b in enumerate(table.values)]
    _emit_text(args, "\n".join(lines) + "\n", "betti.csv")
    return EXIT_OK


def _parse_angle(tok: str):
    tok = tok.strip()
    if "/" in tok:
        return Fraction(tok)
    return float(tok)


def read_normal_form(path: str) -> NormalForm:
    """Parse a normal-form text file of `key = value` lines."""
    ints = {"p_minus", "p_zero", "p_plus", "q_minus", "q_zero", "q_plus",
            "r_prime", "h_count", "i1", "nu1", "n"}
    lists = {"thetas", "alphas", "betas"}
    data: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key in ints:
                data[key] = int(raw)
            elif key in lists:
                data[key] = tuple(_parse_angle(t) for t in raw.split(",") if t.strip())
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    missing = {"i1", "n"} - set(data)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
    return NormalForm(**data)


def _cmd_index(args) -> int:
    nf = read_normal_form(args.nf)
    seq = index_sequence(nf, args.m_max)
    lines = ["m,i,nu"]
    lines += [f"{m},{i},{nu}" for m, (i, nu) in
              enumerate(zip(seq.indices, seq.nullities), start=1)]
    mean = seq.mean
    lines.append(f"# mean_index = {mean}")
    _emit_text(args, "\n".join(lines) + "\n", "index.csv")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    if args.theorem == "thm1":
        rep = thm1_counting(_parse_angle(args.delta), _parse_angle(args.lam))
        payload = rep.to_json_dict()
    else:
        if args.n is None or args.p is None or args.rho is None:
            raise ConfigError("bounds thm3 requires --n, --p and --rho")
        payload = {
            "thm3_count": thm3_count(args.n, args.p, _parse_angle(args.lam),
                                     _parse_angle(args.delta), _parse_angle(args.rho)),
        }
    _emit_text(args, json.dumps(payload, indent=2, sort_keys=True) + "\n", "bounds.json")
    return EXIT_OK


def read_morse_data(path: str, q_max: int) -> MorseData:
    """Rows `label,m,i,nu,kq_support` with kq_support as `q:k` pairs joined by `;`."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped or stripped.startswith("label"):
                continue
            parts = [p.strip() for p in stripped.split(",")]
            if len(parts) != 5:
                raise ConfigError(f"{path}:{lineno}: expected 5 fields")
            _label, _m, i, nu, support = parts
            k = {}
            for pair in support.split(";"):
                if not pair.strip():
                    continue
                q_str, k_str = pair.split(":")
                k[int(q_str)] = int(k_str)
            entries.append(MorseEntry(index=int(i), nullity=int(nu), k=k))
    return MorseData(entries=tuple(entries), q_max=q_max)


def _cmd_morse(args) -> int:
    data = read_morse_data(args.data, args.q_max)
    table = betti_table(args.n, args.q_max)
    result = morse_inequality_check(data, table, args.q_max)
    _emit_text(args, json.dumps(result, indent=2, sort_keys=True) + "\n", "morse.json")
    return EXIT_OK if result["pass"] else EXIT_CHECK_FAILED


def _cmd_report(args) -> int:
    """Re-render artifacts from an existing report.json."""
    with open(args.input, "r", encoding="utf-8") as fh:
        bundle = json.load(fh)

    class _Rec:
        def __init__(self, d):
            self.__dict__.update(d)

        def to_json_dict(self):
            return {k: getattr(self, k, None) for k in report_mod.CSV_COLUMNS}

    records = [_Rec(d) for d in bundle.get("geodesics", [])]
    out = args.out or "."
    fmt = args.format or "csv"
    report_mod.write_artifact(os.path.join(out, "geodesics.csv"),
                              report_mod.render_csv(records))
    if fmt == "svg":
        report_mod.write_artifact(os.path.join(out, "length_spectrum.svg"),
                                  report_mod.render_length_spectrum_svg(records))
        report_mod.write_artifact(os.path.join(out, "eigenvalues.svg"),
                                  report_mod.render_eigenvalue_svg(records))
    return EXIT_OK


def _emit_text(args, content: str, default_name: str) -> None:
    out = getattr(args, "out", None)
    if out:
        report_mod.write_artifact(os.path.join(out, default_name), content)
    else:
        sys.stdout.write(content)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spaceforms",
                                 description="closed geodesics on Finsler space forms")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("find", help="search for closed geodesics")
    _common(p)
    p.set_defaults(fn=_cmd_find)

    p = sub.add_parser("analyze", help="search plus spectral/index analysis and checks")
    _common(p)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("betti", help="equivariant Betti numbers as CSV")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q-max", type=int, required=True)
    p.set_defaults(fn=_cmd_betti)

    p = sub.add_parser("index", help="index/nullity iteration from a normal form")
    _common(p)
    p.add_argument("action", choices=("iterate",))
    p.add_argument("--nf", required=True, help="normal-form text file")
    p.add_argument("--m-max", type=int, required=True)
    p.set_defaults(fn=_cmd_index)

    p = sub.add_parser("bounds", help="counting/multiplicity bounds")
    _common(p)
    p.add_argument("theorem", choices=("thm1", "thm3"))
    p.add_argument("--delta", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--rho")
    p.set_defaults(fn=_cmd_bounds)

    p = sub.add_parser("morse", help="Morse inequality audit of critical data")
    _common(p)
    p.add_argument("action", choices=("check",))
    p.add_argument("--data", required=True, help="rows label,m,i,nu,kq_support")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q-max", type=int, required=True)
    p.set_defaults(fn=_cmd_morse)

    p = sub.add_parser("report", help="re-render artifacts from report.json")
    _common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(fn=_cmd_report)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpaceformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
