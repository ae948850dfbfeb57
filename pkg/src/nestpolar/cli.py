"""Command-line entry point: ``nestpolar <command> [options]``.

Exit codes: 0 success, 1 validation failure, 2 input error, 3 search or
design failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    SearchError,
    SnrPoint,
    StopRule,
    awgn_bpsk_llr,
    density_evolution_ga,
    ensemble_for,
    estimate_bler,
    required_snr,
)
from .decoders import DecoderConfig, ae_sc_decode, sc_decode
from .design import (
    DEFAULT_Z_MAX,
    DatasetError,
    DatasetRecord,
    DesignError,
    DesignVertex,
    PartialOrder,
    SequencePath,
    bundled_order,
    design_nested,
    disambiguate,
    dump_dataset,
    load_dataset,
    supercode_augmentation,
    validate_order,
)
from .polar_core import (
    ContractError,
    InformationSet,
    ResourceLimitError,
    TotalOrder,
    code_from_order,
    encode,
    enumerate_upo_codes,
)

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_FAILED = 0, 1, 2, 3

# seconds between checkpoint writes of a simulation file
_CHECKPOINT_EVERY = 10.0


class InputError(Exception):
    pass


def _run_config(args: argparse.Namespace) -> dict:
    # the thread count never changes results, so it is left out
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads")}
    cfg["version"] = __version__
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(Path(out), text)
    else:
        sys.stdout.write(text)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _decoder(args) -> DecoderConfig:
    return DecoderConfig(kind=args.decoder, M=args.M, min_sum=args.min_sum)


def _code_from_args(args) -> InformationSet:
    if args.info_file:
        return InformationSet.from_json(_read_json(args.info_file))
    if args.N is None:
        raise InputError("--N is required unless --info-file is given")
    N = args.N
    if N <= 0 or N & (N - 1):
        raise InputError(f"--N must be a power of two, got {N}")
    n = N.bit_length() - 1
    if args.info is not None:
        return InformationSet.from_indices(n, _int_list(args.info))
    if args.K is None:
        raise InputError("give --K, --info or --info-file")
    return code_from_order(bundled_order(), N, args.K)


# ---------------------------------------------------------------- commands


def cmd_enumerate(args) -> int:
    codes = enumerate_upo_codes(args.n, args.max_generators)
    source = {"source": "enumerate", "n": args.n, "max_generators": args.max_generators}
    if args.supercodes_from:
        design = _read_json(args.supercodes_from)
        paths = [_path_from_json(level["path"]) for level in design.get("levels", [])
                 if "path" in level and level["N"] < (1 << args.n)]
        known = {c.mask for c in codes}
        extra = [c for c in supercode_augmentation(paths, args.n) if c.mask not in known]
        codes = sorted(codes + extra, key=InformationSet.sort_key)
        source["supercodes_from"] = args.supercodes_from
        source["supercodes_added"] = len(extra)
    meta = dict(source, version=__version__)
    records = [DatasetRecord(c, 0.0 if c.K == 0 else None, meta) for c in codes]
    if args.format == "text":
        text = "".join(" ".join(map(str, c.indices)) + "\n" for c in codes)
    else:
        text = dump_dataset(records)
    if args.out:
        _atomic_write(Path(args.out), text)
    simulated = sum(1 for c in codes if c.K > 0)
    print(f"codes: {len(codes)}", file=sys.stderr if not args.out else sys.stdout)
    print(f"simulated codes (K > 0): {simulated}", file=sys.stderr if not args.out else sys.stdout)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _simulate_record(rec: DatasetRecord, args, decoder: DecoderConfig, stop: StopRule):
    info = rec.info
    base = {"decoder": decoder.label, "kind": decoder.kind, "M": decoder.M,
            "min_sum": decoder.min_sum, "epsilon": args.epsilon, "tol_db": args.tol_db,
            "seed": args.seed, "min_errors": stop.min_errors, "block_size": stop.block_size,
            "version": __version__}
    if info.K == 0:
        return DatasetRecord(info, 0.0, dict(base, trials=0, es_n0_db=None))
    log: list = []
    try:
        pt = required_snr(info, decoder, args.epsilon, args.tol_db, args.seed, stop,
                          threads=1, log=log)
    except SearchError as exc:
        return DatasetRecord(info, None, dict(base, error=str(exc)))
    trials = sum(est.trials for _, est in log)
    return DatasetRecord(info, pt.eb_n0_db, dict(base, trials=trials, es_n0_db=pt.es_n0_db))


def cmd_simulate(args) -> int:
    records = load_dataset(_read(args.dataset))
    out = Path(args.out or args.dataset)
    decoder = _decoder(args)
    stop = StopRule(args.min_errors, args.max_trials, args.block_size)
    pending = [i for i, r in enumerate(records) if r.mu_db is None and "error" not in r.meta]
    if args.retry_failed:
        pending = [i for i, r in enumerate(records) if r.mu_db is None]
    if not pending:
        if out != Path(args.dataset):
            _atomic_write(out, dump_dataset(records))
        print(f"nothing to do: {len(records)} records complete")
        return EXIT_OK

    last = time.monotonic()
    threads = max(1, args.threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, len(pending), threads):
            chunk = pending[start:start + threads]
            done = pool.map(lambda i: _simulate_record(records[i], args, decoder, stop), chunk)
            for i, rec in zip(chunk, done):
                records[i] = rec
                mu = "failed" if rec.mu_db is None else f"{rec.mu_db:.4f} dB"
                print(f"[{start + chunk.index(i) + 1}/{len(pending)}] K={rec.info.K} "
                      f"{list(rec.info.indices)[:8]}{'...' if rec.info.K > 8 else ''}: {mu}",
                      file=sys.stderr)
            if time.monotonic() - last > _CHECKPOINT_EVERY:
                _atomic_write(out, dump_dataset(records))
                last = time.monotonic()
    _atomic_write(out, dump_dataset(records))
    failed = sum(1 for r in records if r.mu_db is None)
    print(f"simulated {len(pending)} records, {failed} without a result")
    return EXIT_FAILED if failed else EXIT_OK


def _path_from_json(obj: dict) -> SequencePath:
    n = int(obj["N"]).bit_length() - 1
    verts = tuple(DesignVertex(InformationSet.from_indices(n, v["info"]), int(v["z"]), float(v["mu_db"]))
                  for v in obj["vertices"])
    return SequencePath(verts, float(obj["cost"]))


def cmd_design(args) -> int:
    datasets: dict[int, list[DatasetRecord]] = {}
    for path in args.dataset:
        recs = load_dataset(_read(path))
        if not recs:
            raise InputError(f"{path}: empty dataset")
        N = recs[0].info.N
        usable = [r for r in recs if r.mu_db is not None and math.isfinite(r.mu_db)]
        if len(usable) < len(recs):
            print(f"N={N}: ignoring {len(recs) - len(usable)} records without mu", file=sys.stderr)
        datasets.setdefault(N, []).extend(usable)
    schedule = _int_list(args.schedule) if args.schedule else sorted(datasets)
    P, paths = design_nested(schedule, datasets, args.z_max, return_paths=True)
    levels = []
    for N, groups in P.levels:
        path = paths[N]
        print(f"N={N}: average mu {path.average_mu:.4f} dB, sum {path.mu_sum:.4f} dB, "
              f"{len(groups)} groups", file=sys.stderr)
        levels.append({"N": N, "groups": [list(g) for g in groups],
                       "average_mu_db": path.average_mu, "path": path.to_json()})
    doc = {"run": _run_config(args), "schedule": schedule, "levels": levels}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


def _load_partial_order(path: str) -> PartialOrder:
    obj = _read_json(path)
    try:
        return PartialOrder.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a partial order ({exc})") from exc


def cmd_disambiguate(args) -> int:
    P = _load_partial_order(args.order)
    n = P.N_max.bit_length() - 1
    nu = density_evolution_ga(n, args.design_snr)
    q = disambiguate(P, nu, enforce_upo=not args.no_upo)
    doc = {"run": _run_config(args), **q.to_json()}
    if args.out:
        base = args.out[:-5] if args.out.endswith(".json") else args.out
        _atomic_write(Path(base + ".json"), json.dumps(doc) + "\n")
        _atomic_write(Path(base + ".txt"), q.to_text())
    elif args.format == "json":
        sys.stdout.write(json.dumps(doc) + "\n")
    else:
        sys.stdout.write(q.to_text())
    return EXIT_OK


def _load_order(path: str) -> TotalOrder:
    text = _read(path)
    try:
        if text.lstrip().startswith("{"):
            return TotalOrder.from_json(json.loads(text))
        return TotalOrder.from_text(text)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: cannot parse order ({exc})") from exc


def cmd_validate(args) -> int:
    if args.bundled:
        q = bundled_order()
    elif args.order_file:
        q = _load_order(args.order_file)
    else:
        raise InputError("give an order file or --bundled")
    P = _load_partial_order(args.partial_order) if args.partial_order else None
    rep = validate_order(q, P)
    if args.format == "json":
        sys.stdout.write(json.dumps(dict(rep.to_json(), N=q.N)) + "\n")
    else:
        print(f"N={q.N}: checked {', '.join(rep.checked)}")
        for v in rep.violations:
            print(f"  {v}")
        print("OK" if rep.ok else f"FAILED ({len(rep.violations)} violations)")
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_bler(args) -> int:
    info = _code_from_args(args)
    decoder = _decoder(args)
    stop = StopRule(args.min_errors, args.max_trials, args.block_size)
    ensemble = ensemble_for(info, decoder, args.seed) if decoder.kind == "ae-sc" else None
    rows = []
    for es in _float_list(args.snr):
        est = estimate_bler(info, decoder, es, stop, args.seed, args.threads, ensemble=ensemble)
        eb = SnrPoint.from_es(es, info.K, info.N).eb_n0_db if info.K else float("nan")
        rows.append({"es_n0_db": es, "eb_n0_db": eb, "errors": est.errors, "trials": est.trials,
                     "bler": est.bler, "ci95": est.half_width_95})
    if args.format == "json":
        text = json.dumps({"run": _run_config(args), "code": info.to_json(), "rows": rows}) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps({"run": _run_config(args), "code": info.to_json()}) + "\n")
        w = csv.DictWriter(buf, ["es_n0_db", "eb_n0_db", "errors", "trials", "bler", "ci95"],
                           lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def _bits(text: str) -> np.ndarray:
    s = "".join(text.replace(",", " ").split())
    if set(s) - {"0", "1"}:
        raise InputError("bit strings may only contain 0 and 1")
    return np.array([int(c) for c in s], dtype=np.uint8)


def cmd_encode(args) -> int:
    info = _code_from_args(args)
    msg = _bits(args.message)
    if msg.size != info.K:
        raise InputError(f"message has {msg.size} bits, code dimension is {info.K}")
    x = encode(info, msg)
    if args.es_n0_db is not None:
        llr = awgn_bpsk_llr(x, args.es_n0_db, np.random.default_rng(args.seed))
        sys.stdout.write(" ".join(f"{v:.6g}" for v in llr) + "\n")
    else:
        sys.stdout.write("".join(map(str, x)) + "\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    info = _code_from_args(args)
    llr = np.array(_float_list(args.llr))
    if llr.size != info.N:
        raise InputError(f"{llr.size} LLRs given, block length is {info.N}")
    decoder = _decoder(args)
    if decoder.kind == "sc":
        res = sc_decode(info, llr, min_sum=decoder.min_sum)
    else:
        res = ae_sc_decode(info, llr, ensemble_for(info, decoder, args.seed))
    sys.stdout.write("".join(map(str, res.message)) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_decoder_args(p):
    p.add_argument("--decoder", choices=["ae-sc", "sc"], default="ae-sc")
    p.add_argument("--M", type=int, default=8, help="ensemble size")
    p.add_argument("--min-sum", action="store_true", help="min-sum check-node update")


def _add_stop_args(p, min_errors=100):
    p.add_argument("--min-errors", type=int, default=min_errors)
    p.add_argument("--max-trials", type=int, default=10_000_000)
    p.add_argument("--block-size", type=int, default=500)


def _add_code_args(p):
    p.add_argument("--N", type=int, help="block length")
    p.add_argument("--K", type=int, help="dimension, taken from the bundled nested order")
    p.add_argument("--info", help="comma-separated information indices")
    p.add_argument("--info-file", help='JSON file {"n": .., "info": [..]}')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["json", "csv", "text"], default=None)

    parser = argparse.ArgumentParser(prog="nestpolar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="enumerate UPO codes into a dataset skeleton")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--max-generators", type=int, default=None)
    p.add_argument("--supercodes-from", help="design file whose shorter paths seed supercodes")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", parents=[common], help="fill in required Eb/N0 per record (resumable)")
    p.add_argument("dataset")
    _add_decoder_args(p)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--tol-db", type=float, default=0.05)
    p.add_argument("--retry-failed", action="store_true")
    _add_stop_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("design", parents=[common], help="nested shortest-path design")
    p.add_argument("--dataset", action="append", required=True, help="simulated dataset (repeatable)")
    p.add_argument("--schedule", help="block lengths in design order, e.g. 32,64")
    p.add_argument("--z-max", type=int, default=DEFAULT_Z_MAX)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("disambiguate", parents=[common], help="partial order to total order")
    p.add_argument("order", help="design output or partial order JSON")
    p.add_argument("--design-snr", type=float, default=0.0, help="Es/N0 in dB for density evolution")
    p.add_argument("--no-upo", action="store_true", help="do not enforce the UPO")
    p.set_defaults(func=cmd_disambiguate)

    p = sub.add_parser("validate", parents=[common], help="check a total order")
    p.add_argument("order_file", nargs="?")
    p.add_argument("--bundled", action="store_true", help="validate the bundled 256-entry order")
    p.add_argument("--partial-order", help="also check precedence against this partial order")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bler", parents=[common], help="BLER curve as CSV")
    _add_code_args(p)
    _add_decoder_args(p)
    p.add_argument("--snr", required=True, help="Es/N0 points in dB, comma-separated")
    _add_stop_args(p)
    p.set_defaults(func=cmd_bler)

    p = sub.add_parser("encode", parents=[common], help="encode one message")
    _add_code_args(p)
    p.add_argument("--message", required=True, help="message bits, e.g. 1011")
    p.add_argument("--es-n0-db", type=float, default=None, help="emit channel LLRs at this Es/N0")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="decode one LLR vector")
    _add_code_args(p)
    _add_decoder_args(p)
    p.add_argument("--llr", required=True, help="channel LLRs, comma or space separated")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, DatasetError, ContractError, ResourceLimitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DesignError, SearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
