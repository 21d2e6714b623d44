"""Command-line front end.

Thin argparse wrappers over the library; every subcommand reads optional
defaults from a TOML or JSON config file (--config), with explicit flags
winning.  POLARQKD_OUTDIR sets where default output files land.
"""

from __future__ import annotations

import argparse
import base64
import csv
import io
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import construct, harness, protocol, secrecy
from .codec import assemble_message, channel_llr, encode, message_bits, pack_bits, sc_decode
from .construct import BEC, BSC, ChannelParams

__all__ = ["main"]


def _outdir() -> str:
    return os.environ.get("POLARQKD_OUTDIR", ".")


def _load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".json"):
        return json.loads(raw)
    if path.endswith(".toml"):
        return tomllib.loads(raw.decode())
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return tomllib.loads(raw.decode())


def _merge_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    explicit = {tok.split("=", 1)[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, value in _load_config(args.config).items():
        key = key.replace("-", "_")
        if hasattr(args, key) and key not in explicit:
            setattr(args, key, value)
    return args


def _read_bits(path: str) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else open(path).read()
    chars = [c for c in text if not c.isspace()]
    if any(c not in "01" for c in chars):
        raise SystemExit("bit input must contain only 0, 1, and whitespace")
    return np.array([int(c) for c in chars], dtype=np.uint8)


def _write_bits(bits: np.ndarray, path: str | None) -> None:
    line = "".join(str(int(b)) for b in bits) + "\n"
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(line)
    else:
        sys.stdout.write(line)


def _channel(args) -> ChannelParams:
    return ChannelParams(kind=args.kind, p=args.p)


def _resolve_K(args, N: int) -> int:
    if getattr(args, "K", None) is not None:
        return args.K
    if getattr(args, "rate", None) is not None:
        return min(N, max(0, round(args.rate * N)))
    raise SystemExit("one of --K or --rate is required")


def _cmd_rs_generate(args) -> int:
    profile = construct.reliability_sequence(_channel(args), args.n)
    if args.format == "sequence":
        if args.out:
            construct.write_sequence(args.out, profile.order)
        else:
            sys.stdout.write("\n".join(str(i) for i in profile.order) + "\n")
    else:
        if args.out:
            construct.write_profile(args.out, profile)
        else:
            sys.stdout.write(construct.profile_to_json(profile) + "\n")
    return 0


def _read_order(path: str) -> np.ndarray:
    if path.endswith(".json"):
        return construct.read_profile(path).order
    return construct.read_sequence(path)


def _cmd_rs_overlap(args) -> int:
    a, b = _read_order(args.a), _read_order(args.b)
    print(format(construct.order_overlap(a, b, args.frac), ".6f"))
    return 0


def _spec_for(args):
    N = 1 << args.n
    profile = construct.cached_reliability_sequence(args.kind, args.p, args.n)
    return construct.select_frozen(profile, _resolve_K(args, N))


def _cmd_encode(args) -> int:
    spec = _spec_for(args)
    info = _read_bits(args.infile)
    if info.size != spec.K:
        raise SystemExit(f"expected {spec.K} information bits, got {info.size}")
    _write_bits(encode(assemble_message(info, spec), spec), args.out)
    return 0


def _cmd_decode(args) -> int:
    spec = _spec_for(args)
    received = _read_bits(args.infile)
    if received.size != spec.N:
        raise SystemExit(f"expected {spec.N} received bits, got {received.size}")
    u_hat = sc_decode(channel_llr(received, ChannelParams(kind=BSC, p=args.p)), spec)
    _write_bits(message_bits(u_hat, spec), args.out)
    return 0


def _print_rows(rows, out_path) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=harness.CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv_dict())
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _cmd_simulate_fer(args) -> int:
    K = _resolve_K(args, 1 << args.n)
    row = harness.estimate_fer(args.n, K, args.p, trials=args.trials, seed=args.seed,
                               rs_kind=args.rs_kind, mode=args.mode)
    _print_rows([row], args.out)
    return 0


def _cmd_sweep(args) -> int:
    out = args.out or os.path.join(_outdir(), "sweep.csv")
    cfg = harness.SweepConfig(
        n_values=tuple(args.n_values), rates=tuple(args.rates), p_values=tuple(args.p_values),
        trials=args.trials, max_fer=args.max_fer, rs_kind=args.rs_kind,
        seed=args.seed, out=out, workers=args.workers, mode=args.mode,
    )
    rows = harness.sweep(cfg)
    print(f"{len(rows)} rows -> {out}")
    return 0


def _cmd_max_qber(args) -> int:
    K = _resolve_K(args, 1 << args.n)
    res = harness.max_qber_at_rate(args.n, K, max_fer=args.max_fer,
                                   p_range=(args.lo, args.hi), trials=args.trials,
                                   seed=args.seed, rs_kind=args.rs_kind)
    json.dump({"qber": res.qber, "feasible": res.feasible,
               "evaluated": [list(pt) for pt in res.evaluated]}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_keyrate(args) -> int:
    writer = csv.writer(sys.stdout if not args.out else open(args.out, "w", newline=""),
                        lineterminator="\n")
    writer.writerow(["N", "K", "qber", "mu", "ell", "rate", "gamma", "r_infinity"])
    for K in args.K_values:
        for qber in args.qber_values:
            budget = secrecy.default_budget(args.N, K, qber, eps_cor=args.eps_cor,
                                            eps_sec=args.eps_sec, e=args.e, q=args.q)
            ell = secrecy.secret_key_length(budget)
            writer.writerow([
                args.N, K, format(qber, ".12g"),
                format(secrecy.mu(budget), ".12g"), ell,
                format(ell / args.N, ".12g"),
                format(secrecy.secrecy_content_gamma(K, args.N, args.fer, qber), ".12g"),
                format(secrecy.infinite_key_rate(qber), ".12g"),
            ])
    return 0


def _cmd_protocol_run(args) -> int:
    outcome = protocol.run_protocol(args.n, _resolve_K(args, 1 << args.n), args.p,
                                    args.seed, args.mode, eps_cor=args.eps_cor,
                                    eps_sec=args.eps_sec, rs_kind=args.rs_kind)
    def b64(key):
        return base64.b64encode(pack_bits(key)).decode("ascii") if key is not None else None
    json.dump({
        "agreed": outcome.agreed, "verified": outcome.verified,
        "leak_bits": outcome.leak_bits, "qber_estimate": outcome.qber_estimate,
        "key_length": outcome.key_length,
        "alice_secret_b64": b64(outcome.alice_secret),
        "bob_secret_b64": b64(outcome.bob_secret),
    }, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON file of default option values")


def _add_code_opts(p: argparse.ArgumentParser, with_kind=True) -> None:
    p.add_argument("--n", type=int, required=True, help="block exponent, N = 2^n")
    p.add_argument("--K", type=int, default=None, help="information bits")
    p.add_argument("--rate", type=float, default=None, help="K/N target (alternative to --K)")
    if with_kind:
        p.add_argument("--kind", choices=[BSC, BEC], default=BSC,
                       help="channel model for the reliability ordering")
    p.add_argument("--p", type=float, required=True, help="channel parameter")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="polarqkd",
                                  description="Polar-code reconciliation toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    rs = sub.add_parser("rs", help="reliability sequence tools")
    rs_sub = rs.add_subparsers(dest="rs_command", required=True)
    g = rs_sub.add_parser("generate", help="build and store an ordering")
    _add_common(g)
    g.add_argument("--kind", choices=[BSC, BEC], default=BSC)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--format", choices=["profile", "sequence"], default="profile")
    g.add_argument("--out", default=None)
    g.set_defaults(func=_cmd_rs_generate)
    o = rs_sub.add_parser("overlap", help="compare two orderings' worst sets")
    _add_common(o)
    o.add_argument("--a", required=True)
    o.add_argument("--b", required=True)
    o.add_argument("--frac", type=float, default=0.25)
    o.set_defaults(func=_cmd_rs_overlap)

    e = sub.add_parser("encode", help="information bits to codeword")
    _add_common(e)
    _add_code_opts(e)
    e.add_argument("--in", dest="infile", default="-")
    e.add_argument("--out", default=None)
    e.set_defaults(func=_cmd_encode)

    d = sub.add_parser("decode", help="received hard bits to information bits")
    _add_common(d)
    _add_code_opts(d)
    d.add_argument("--in", dest="infile", default="-")
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_decode)

    sim = sub.add_parser("simulate", help="Monte-Carlo experiments")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    f = sim_sub.add_parser("fer", help="frame error rate at one point")
    _add_common(f)
    _add_code_opts(f, with_kind=False)
    f.add_argument("--trials", type=int, default=50)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--rs-kind", choices=[BSC, BEC], default=BSC)
    f.add_argument("--mode", choices=[protocol.MODE_FULL, protocol.MODE_NAKASSIS_MINK],
                   default=protocol.MODE_FULL)
    f.add_argument("--out", default=None)
    f.set_defaults(func=_cmd_simulate_fer)

    sw = sub.add_parser("sweep", help="grid of FER points with CSV + manifest")
    _add_common(sw)
    sw.add_argument("--n-values", type=_ints, required=True, help="comma separated")
    sw.add_argument("--rates", type=_floats, required=True, help="comma separated K/N")
    sw.add_argument("--p-values", type=_floats, required=True, help="comma separated")
    sw.add_argument("--trials", type=int, default=50)
    sw.add_argument("--max-fer", type=float, default=0.05)
    sw.add_argument("--rs-kind", choices=[BSC, BEC], default=BSC)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--mode", choices=[protocol.MODE_FULL, protocol.MODE_NAKASSIS_MINK],
                    default=protocol.MODE_FULL)
    sw.add_argument("--out", default=None, help="CSV path (default sweep.csv in POLARQKD_OUTDIR)")
    sw.set_defaults(func=_cmd_sweep)

    mq = sub.add_parser("max-qber", help="largest tolerable error rate at a rate")
    _add_common(mq)
    mq.add_argument("--n", type=int, required=True)
    mq.add_argument("--K", type=int, default=None)
    mq.add_argument("--rate", type=float, default=None)
    mq.add_argument("--max-fer", type=float, default=0.05)
    mq.add_argument("--lo", type=float, default=1e-3)
    mq.add_argument("--hi", type=float, default=0.25)
    mq.add_argument("--trials", type=int, default=50)
    mq.add_argument("--seed", type=int, default=0)
    mq.add_argument("--rs-kind", choices=[BSC, BEC], default=BSC)
    mq.set_defaults(func=_cmd_max_qber)

    kr = sub.add_parser("keyrate", help="finite-key length table")
    _add_common(kr)
    kr.add_argument("--N", type=int, required=True)
    kr.add_argument("--K-values", type=_ints, required=True, help="comma separated")
    kr.add_argument("--qber-values", type=_floats, required=True, help="comma separated")
    kr.add_argument("--eps-cor", type=float, default=0.05)
    kr.add_argument("--eps-sec", type=float, default=0.5e-10)
    kr.add_argument("--q", type=float, default=1.0)
    kr.add_argument("--e", type=int, default=None, help="estimation bits (default round(N/3))")
    kr.add_argument("--fer", type=float, default=0.05, help="FER used in the gamma column")
    kr.add_argument("--out", default=None)
    kr.set_defaults(func=_cmd_keyrate)

    pr = sub.add_parser("protocol", help="end-to-end sessions")
    pr_sub = pr.add_subparsers(dest="protocol_command", required=True)
    r = pr_sub.add_parser("run", help="one reconciliation session")
    _add_common(r)
    _add_code_opts(r, with_kind=False)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--mode", choices=[protocol.MODE_FULL, protocol.MODE_NAKASSIS_MINK],
                   default=protocol.MODE_FULL)
    r.add_argument("--eps-cor", type=float, default=0.05)
    r.add_argument("--eps-sec", type=float, default=0.5e-10)
    r.add_argument("--rs-kind", choices=[BSC, BEC], default=BSC)
    r.set_defaults(func=_cmd_protocol_run)

    return top


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args = _merge_config(args, argv)
    try:
        return args.func(args)
    except ValueError as exc:
        raise SystemExit(str(exc)) from exc


if __name__ == "__main__":
    raise SystemExit(main())
