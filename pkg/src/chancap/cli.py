"""Command-line interface.

Exit codes: 0 success, 2 unknown command or bad arguments, 3 unreadable or
malformed input file, 4 precondition violation. Failures also print a JSON
error record to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io as cio
from .channels import CostFunction, DiscreteChannel, GaussianChannel
from .errors import ChancapError, PreconditionError, SpecFileError
from .gaussian import SpectralDensity, ar1_autocorr
from .identification import (
    build_distinct_id_code,
    count_quantized_codebooks,
    duality_distance_check,
    id_errors,
)
from .quantizer import build_grid, quantization_tv, random_finite_law
from .resolvability import resolvability_curve
from .spectrum import (
    GaussianInput,
    constrained_capacity_dmc,
    j_curve,
    sample_info_density,
)
from .waterfill import anwgn_capacity_sequence, awgn_capacity, waterfill_discrete, waterfill_spectral

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_PRECONDITION = 4

NATS_PER_BIT = math.log(2.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _error_record("usage", message)
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _error_record(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_output(p, default_fmt: str):
    p.add_argument("--output", "-o", help="write results to this file instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_fmt)
    p.add_argument("--bits", action="store_true", help="also report rates in bits")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="chancap", description="Channel capacity, resolvability and identification tools.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cap = sub.add_parser("capacity", help="capacity of AWGN, colored-noise and discrete channels")
    cs = cap.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = cs.add_parser("awgn")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--noise", type=float, required=True)
    _add_output(p, "json")
    p = cs.add_parser("anwgn")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--autocorr", help="autocorrelation file")
    src.add_argument("--ar1", type=float, metavar="RHO", help="AR(1) preset with unit variance")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--n-list", type=_ints, default=None)
    p.add_argument("--spectral", action="store_true")
    p.add_argument("--grid", type=int, default=4096)
    _add_output(p, "json")
    p = cs.add_parser("dmc")
    p.add_argument("--channel", required=True)
    p.add_argument("--costs", type=_floats, default=None, help="per-letter costs c0,c1,...")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_output(p, "json")

    info = sub.add_parser("infodensity", help="information density samples and J curves")
    isub = info.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name in ("sample", "curve"):
        p = isub.add_parser(name)
        p.add_argument("--channel", required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--input", type=_floats, default=None, help="single-letter law (default uniform)")
        p.add_argument("--input-power", type=float, default=None, help="Gaussian input power")
        if name == "curve":
            p.add_argument("--rates", type=_floats, default=None)
        _add_output(p, "csv")

    wf = sub.add_parser("waterfill", help="water-filling allocations")
    wsub = wf.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = wsub.add_parser("discrete")
    p.add_argument("--noise", type=_floats, required=True)
    p.add_argument("--power", type=float, required=True)
    _add_output(p, "json")
    p = wsub.add_parser("spectral")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--autocorr")
    src.add_argument("--table", help="CSV of lambda, g(lambda)")
    src.add_argument("--ar1", type=float, metavar="RHO")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--grid", type=int, default=4096)
    _add_output(p, "json")

    q = sub.add_parser("quantize", help="quantization TV bound checks")
    qsub = q.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = qsub.add_parser("verify")
    p.add_argument("--channel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--atoms", type=int, default=4)
    _add_output(p, "csv")

    r = sub.add_parser("resolvability", help="random-binning resolvability sweeps")
    rsub = r.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = rsub.add_parser("sweep")
    p.add_argument("--channel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", type=_floats, required=True)
    p.add_argument("--seeds", type=int, required=True, help="number of seeds, 0..K-1")
    p.add_argument("--input", type=_floats, default=None)
    _add_output(p, "csv")

    idc = sub.add_parser("idcode", help="identification codes")
    dsub = idc.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = dsub.add_parser("analyze")
    p.add_argument("--channel", required=True)
    p.add_argument("--code", required=True)
    _add_output(p, "json")
    p = dsub.add_parser("count")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _add_output(p, "json")
    p = dsub.add_parser("search")
    p.add_argument("--channel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-proposals", type=int, default=10_000)
    _add_output(p, "json")
    return ap


def _with_bits(record: dict, enabled: bool) -> dict:
    if not enabled:
        return record
    out = dict(record)
    for key, val in record.items():
        if key.endswith("_nats") and isinstance(val, float):
            out[key[:-5] + "_bits"] = val / NATS_PER_BIT
    return out


def _emit(args, record=None, rows=None, columns=None):
    if rows is not None:
        if args.bits:
            extra = [c for c in columns if c.endswith("_nats")]
            idx = [columns.index(c) for c in extra]
            columns = list(columns) + [c[:-5] + "_bits" for c in extra]
            rows = [tuple(r) + tuple(r[i] / NATS_PER_BIT for i in idx) for r in rows]
        text = cio.emit_curve(rows, None, args.format, columns)
    else:
        record = _with_bits(record, args.bits)
        if args.format == "csv":
            flat = {k: v for k, v in record.items() if not isinstance(v, list | dict)}
            text = cio.curve_to_csv([tuple(flat.values())], list(flat.keys()))
        else:
            text = cio.to_json(record)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _uniform(channel: DiscreteChannel) -> np.ndarray:
    return np.full(channel.input_size, 1.0 / channel.input_size)


def _autocorr_source(args):
    if getattr(args, "ar1", None) is not None:
        return ar1_autocorr(args.ar1)
    return cio.load_autocorr(args.autocorr)


def _discrete(path, n=1) -> DiscreteChannel:
    ch = cio.load_channel(path, n)
    if not isinstance(ch, DiscreteChannel):
        raise PreconditionError("this command needs a discrete channel (bsc or dmc)")
    return ch


def cmd_capacity(args):
    if args.sub == "awgn":
        _emit(args, {"capacity_nats": awgn_capacity(args.power, args.noise)})
    elif args.sub == "anwgn":
        gamma = _autocorr_source(args)
        rows = []
        if args.n_list:
            for n, c in anwgn_capacity_sequence(gamma, args.power, args.n_list):
                rows.append((n, c))
        if args.spectral or not args.n_list:
            sol = waterfill_spectral(SpectralDensity.from_autocorr(gamma), args.power, args.grid)
            rows.append(("spectral", sol.capacity))
        _emit(args, rows=rows, columns=["n", "capacity_nats"])
    else:
        ch = _discrete(args.channel)
        if args.costs is None:
            res = constrained_capacity_dmc(ch, None, 0.0 if args.gamma is None else args.gamma, args.tol)
        else:
            if args.gamma is None:
                raise PreconditionError("--costs needs --gamma")
            res = constrained_capacity_dmc(ch, CostFunction.additive(args.costs), args.gamma, args.tol)
        rec = res.as_dict()
        if args.bits:
            rec["capacity_bits"] = rec["capacity"] / NATS_PER_BIT
        args.bits = False
        _emit(args, rec)


def _input_law(args, channel):
    if isinstance(channel, GaussianChannel):
        if args.input_power is None:
            raise PreconditionError("Gaussian channels need --input-power")
        return GaussianInput(args.input_power)
    return np.asarray(args.input) if args.input is not None else _uniform(channel)


def cmd_infodensity(args):
    ch = cio.load_channel(args.channel)
    law = _input_law(args, ch)
    samples = sample_info_density(ch, law, args.n, args.trials, args.seed)
    if args.sub == "sample":
        _emit(args, rows=[(float(v),) for v in samples.values], columns=["value_nats"])
        return
    rates = np.unique(samples.values) if args.rates is None else np.asarray(args.rates, dtype=float)
    probs = np.atleast_1d(j_curve(samples, rates))
    _emit(args, rows=list(zip(map(float, rates), map(float, probs))), columns=["rate_nats", "probability"])


def cmd_waterfill(args):
    if args.sub == "discrete":
        sol = waterfill_discrete(args.noise, args.power)
        rec = sol.as_dict()
        rec["kkt_residual"] = sol.kkt_residual()
    else:
        g = cio.load_spectral_table(args.table) if args.table else SpectralDensity.from_autocorr(_autocorr_source(args))
        sol = waterfill_spectral(g, args.power, args.grid)
        rec = sol.as_dict()
        rec["grid"] = args.grid
        rec["representation"] = g.representation
    _emit(args, rec)


def cmd_quantize(args):
    ch = cio.load_channel(args.channel, args.n)
    if not isinstance(ch, GaussianChannel):
        raise PreconditionError("quantize verify needs a Gaussian channel (awgn or anwgn)")
    if args.trials < 1 or args.atoms < 1:
        raise PreconditionError("--trials and --atoms must be positive")
    grid = build_grid(args.gamma, args.n, args.delta)
    streams = np.random.SeedSequence(args.seed).spawn(args.trials)
    rows = []
    for t, ss in enumerate(streams):
        Q = random_finite_law(args.n, args.gamma, args.atoms, np.random.default_rng(ss))
        tv, err, bound = quantization_tv(Q, ch, grid)
        rows.append((t, tv, bound))
    _emit(args, rows=rows, columns=["trial", "tv_exact", "tv_bound"])


def cmd_resolvability(args):
    ch = _discrete(args.channel)
    law = np.asarray(args.input) if args.input is not None else _uniform(ch)
    rows = resolvability_curve(law, ch, args.rates, args.n, args.seeds)
    _emit(args, rows=rows, columns=["rate_nats", "median_tv", "min_tv", "max_tv"])


def cmd_idcode(args):
    if args.sub == "count":
        exact, bound = count_quantized_codebooks(args.k, args.m)
        _emit(args, {"exact": exact, "bound": bound})
        return
    ch = _discrete(args.channel)
    if args.sub == "analyze":
        code = cio.load_code(args.code, ch)
        chn = ch.extend(code.n)
        rec = id_errors(code, chn).as_dict()
        rec["N"] = code.N
        rec["duality"] = duality_distance_check(code, chn).as_dict()
        _emit(args, rec)
        return
    res = build_distinct_id_code(ch, args.n, args.target, args.seed, max_proposals=args.max_proposals)
    chn = ch.extend(args.n)
    rep = id_errors(res.code, chn)
    _emit(args, {
        "n": args.n,
        "target_N": res.target_N,
        "achieved_N": res.achieved_N,
        "floor": res.floor,
        "mu": rep.mu,
        "lambda": rep.lam,
        "codewords": res.code.codewords,
        "decoding_sets": [format(m, "x") for m in res.code.masks()],
        "duality_passed": duality_distance_check(res.code, chn).passed,
    })


COMMANDS = {
    "capacity": cmd_capacity,
    "infodensity": cmd_infodensity,
    "waterfill": cmd_waterfill,
    "quantize": cmd_quantize,
    "resolvability": cmd_resolvability,
    "idcode": cmd_idcode,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except SpecFileError as exc:
        _error_record(exc.kind, str(exc))
        return EXIT_FILE
    except ChancapError as exc:
        _error_record(exc.kind, str(exc))
        return EXIT_PRECONDITION
    except OSError as exc:
        _error_record("io", str(exc))
        return EXIT_FILE
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
