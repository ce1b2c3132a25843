import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from otslab import bench, keystore, lcg
from otslab.audit import forge_forward, recover_seed, recover_seed_from_public
from otslab.encoding import format_hex, parse_hex
from otslab.exceptions import KeyReuseError, OtsLabError
from otslab.hashchain import DEFAULT_HASH
from otslab.keystore import Scheme, SignatureRecord
from otslab.lcg import ChainMode
from otslab.signer import SignerService

load_dotenv()

logger = logging.getLogger("otslab.cli")

BUILTIN_PARAMSETS = [params.name for params in lcg.BUILTIN_PARAMS]


class ExitCode(IntEnum):
    """Process exit codes"""

    ACCEPT = 0
    REJECT = 1
    USAGE = 2
    REUSE = 3


class UsageError(Exception):
    """Flag combination the parser cannot express"""


@dataclass(frozen=True)
class CliConfig:
    key_dir: str
    default_hash: str
    bench_trials: int
    bench_warmup: int
    bench_w: int
    bench_database_url: str
    custom_params: List[str]
    log_level: str


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "")
    if not raw.strip():
        return default
    try:
        return int(raw, 10)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def create_cli() -> CliConfig:
    """从环境变量读取配置"""
    default_db = "sqlite:///" + os.path.join(os.path.dirname(os.path.abspath(__file__)), "bench.db")
    custom = os.environ.get("OTSLAB_CUSTOM_PARAMS", "")
    return CliConfig(
        key_dir=os.environ.get("OTSLAB_KEY_DIR", "."),
        default_hash=os.environ.get("OTSLAB_DEFAULT_HASH", DEFAULT_HASH),
        bench_trials=_env_int("OTSLAB_BENCH_TRIALS", bench.DEFAULT_TRIALS),
        bench_warmup=_env_int("OTSLAB_BENCH_WARMUP", bench.DEFAULT_WARMUP),
        bench_w=_env_int("OTSLAB_BENCH_W", 24),
        bench_database_url=os.environ.get("OTSLAB_BENCH_DATABASE_URL", default_db),
        custom_params=[entry for entry in custom.split(";") if entry.strip()],
        log_level=os.environ.get("OTSLAB_LOG_LEVEL", "WARNING").upper(),
    )


def _comma_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _non_negative(text: str) -> int:
    value = int(text, 10)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def create_parser(config: CliConfig) -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="print intermediates (f_t, S, V, zeta, xi) and INFO logs")
    common.add_argument("--format", choices=["text", "csv"], default=argparse.SUPPRESS)
    common.add_argument("--custom-params", action="append", metavar="NAME:A:C:K", default=argparse.SUPPRESS,
                        help="register a custom LCG parameter set (repeatable)")

    parser = argparse.ArgumentParser(prog="otslab", description="One-time signature laboratory",
                                     parents=[common])
    parser.set_defaults(verbose=False, format="text", custom_params=[])
    sub = parser.add_subparsers(dest="command", required=True)

    mode_help = "chain evaluation: jump (logarithmic) or sequential (one step at a time)"

    p = sub.add_parser("keygen", parents=[common], help="generate a one-time key pair")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    p.add_argument("--params", "--hash", dest="params", help="LCG parameter set (prng-ots) or digest name (wots)")
    p.add_argument("--w", type=int, required=True, help="chain-depth exponent, chain length 2^w - 1")
    p.add_argument("--seed-hex", help="deterministic private value (demo keys only)")
    p.add_argument("--out", help="output prefix; writes PREFIX.key and PREFIX.pub")
    p.add_argument("--mode", choices=[m.value for m in ChainMode], default=ChainMode.JUMP.value, help=mode_help)
    p.set_defaults(handler=cmd_keygen)

    p = sub.add_parser("sign", parents=[common], help="sign once with a private key file")
    p.add_argument("--key", required=True, help="private key file")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--t", type=int, help="normalized message value (decimal)")
    target.add_argument("--message-file", help="file whose contents are normalized to t")
    p.add_argument("--out", help="signature file (default: key path with .sig)")
    p.add_argument("--mode", choices=[m.value for m in ChainMode], default=ChainMode.JUMP.value, help=mode_help)
    p.set_defaults(handler=cmd_sign)

    p = sub.add_parser("verify", parents=[common], help="verify a signature")
    p.add_argument("--pub", required=True, help="public (or private) key file")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--sig-file", help="signature file")
    source.add_argument("--sig", help="signature value in hex")
    target = p.add_mutually_exclusive_group()
    target.add_argument("--t", type=int, help="normalized message value (decimal)")
    target.add_argument("--message-file", help="file whose contents are normalized to t")
    p.add_argument("--mode", choices=[m.value for m in ChainMode], default=ChainMode.JUMP.value, help=mode_help)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("rand", parents=[common], help="print f_1..f_count of a generator")
    p.add_argument("--params", required=True)
    p.add_argument("--seed", required=True, type=lambda s: int(s, 0), help="decimal or 0x-prefixed seed")
    p.add_argument("--count", required=True, type=_non_negative)
    p.set_defaults(handler=cmd_rand)

    p = sub.add_parser("params", parents=[common], help="list parameter sets and serialized lengths")
    p.set_defaults(handler=cmd_params)

    p = sub.add_parser("bench", parents=[common], help="time keygen/sign/verify")
    p.add_argument("--schemes", type=_comma_list, default=[Scheme.PRNG_OTS.value])
    p.add_argument("--params", type=_comma_list,
                   help=f"parameter sets (default: {','.join(BUILTIN_PARAMSETS)} for prng-ots, "
                        f"{config.default_hash} for wots)")
    p.add_argument("--w", type=int, default=config.bench_w)
    p.add_argument("--trials", type=int, default=config.bench_trials)
    p.add_argument("--warmup", type=int, default=config.bench_warmup)
    p.add_argument("--mode", choices=["sequential", "jump", "both"], default="sequential")
    p.add_argument("--csv", help="write the summary CSV to this path")
    p.add_argument("--raw-csv", help="write raw per-trial records to this path")
    p.add_argument("--seed", type=int, help="seed for the t sequence (keys stay random)")
    p.add_argument("--parallel", action="store_true", help="run groups in worker processes")
    p.add_argument("--expect-fastest", default="gcc", help="parameter set expected to have the lowest medians")
    p.add_argument("--archive", action="store_true", help="store the run in the bench database")
    p.add_argument("--note", help="note stored with an archived run")
    p.add_argument("--list-runs", action="store_true", help="list archived runs and exit")
    p.add_argument("--from-run", type=int, help="summarize an archived run instead of timing")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("audit", parents=[common], help="demonstrate documented limitations")
    audit_sub = p.add_subparsers(dest="audit_command", required=True)

    a = audit_sub.add_parser("forge-forward", parents=[common], help="forge a signature for a larger t")
    a.add_argument("--sig-file", required=True)
    a.add_argument("--t-target", type=int, required=True)
    a.add_argument("--pub", help="public key file to check the forgery against")
    a.add_argument("--out", help="write the forged signature file here")
    a.add_argument("--mode", choices=[m.value for m in ChainMode], default=ChainMode.JUMP.value, help=mode_help)
    a.set_defaults(handler=cmd_audit_forge)

    a = audit_sub.add_parser("recover-seed", parents=[common], help="recover a prng-ots private seed")
    source = a.add_mutually_exclusive_group(required=True)
    source.add_argument("--sig-file", help="recover from a signature")
    source.add_argument("--pub", help="public key file (requires --from-public)")
    a.add_argument("--from-public", action="store_true", help="invert 2^w - 1 steps from the public key")
    a.add_argument("--mode", choices=[m.value for m in ChainMode], default=ChainMode.JUMP.value, help=mode_help)
    a.set_defaults(handler=cmd_audit_recover)

    return parser


# ==================== Output helpers ====================

def emit(args, rows: Sequence[Dict[str, object]]) -> None:
    """Print rows as name=value lines (text) or as CSV."""
    if not rows:
        return
    if args.format == "csv":
        headers = list(rows[0].keys())
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([row[h] for h in headers])
        return
    for row in rows:
        for name, value in row.items():
            print(f"{name}={value}")


def warn(message: str) -> None:
    print(f"⚠️ {message}", file=sys.stderr, flush=True)


def audit_banner(title: str) -> None:
    print(f"# ⚠️ AUDIT: {title}")
    print("# This output demonstrates a documented limitation; it is not a valid use of the scheme.")


def _read_message(path: Optional[str]) -> Optional[bytes]:
    if path is None:
        return None
    with open(path, "rb") as f:
        return f.read()


def _default_sig_path(key_path: str) -> str:
    base, ext = os.path.splitext(key_path)
    return (base if ext == ".key" else key_path) + ".sig"


# ==================== Commands ====================

def cmd_keygen(args, config: CliConfig) -> int:
    scheme = Scheme(args.scheme)
    if scheme is Scheme.PRNG_OTS and not args.params:
        raise UsageError("keygen --scheme prng-ots requires --params")
    paramset = args.params or config.default_hash
    seed = parse_hex(args.seed_hex) if args.seed_hex else None

    service = SignerService(mode=ChainMode(args.mode))
    record = service.keygen(scheme, paramset, args.w, seed)
    prefix = args.out or os.path.join(config.key_dir, f"{scheme.value}-{paramset}")
    private_path, public_path = service.save_keypair(record, prefix)

    emit(args, [{
        "scheme": scheme.value,
        "paramset": paramset,
        "w": record.w,
        record.public_field: format_hex(record.public, record.bits),
        "private_key": private_path,
        "public_key": public_path,
    }])
    return ExitCode.ACCEPT


def cmd_sign(args, config: CliConfig) -> int:
    service = SignerService(mode=ChainMode(args.mode))
    message = _read_message(args.message_file)
    out = args.out or _default_sig_path(args.key)
    out_dir = os.path.dirname(os.path.abspath(out))
    if not os.path.isdir(out_dir) or not os.access(out_dir, os.W_OK):
        raise UsageError(f"Signature directory is missing or not writable: {out_dir}")

    signature = service.sign_with_store(args.key, t=args.t, message=message)
    if signature.t == 0:
        warn("t=0: the signature equals the private key material")

    row = {"t": signature.t, signature.value_field: format_hex(signature.value, signature.bits)}
    try:
        keystore.save_signature(signature, out)
    except OSError:
        # key is already used: the signature goes to stdout or it is gone
        emit(args, [row])
        raise

    if args.verbose:
        record = keystore.load_key(args.key, check_consistency=False)
        name = "f_t" if record.scheme is Scheme.PRNG_OTS else "h_t"
        row = {name: format_hex(service.chain_value(record, signature.t), record.bits), **row}
    row["signature"] = out
    emit(args, [row])
    return ExitCode.ACCEPT


def cmd_verify(args, config: CliConfig) -> int:
    service = SignerService(mode=ChainMode(args.mode))
    public = keystore.load_key(args.pub)

    sig_t = None
    if args.sig_file:
        stored = keystore.load_signature(args.sig_file)
        if (stored.scheme, stored.paramset, stored.w) != (public.scheme, public.paramset, public.w):
            raise UsageError(f"Signature file {args.sig_file} does not belong to key {args.pub}")
        value, sig_t = stored.value, stored.t
    else:
        value = parse_hex(args.sig, public.bits)

    if args.message_file:
        t = service.normalize(public.scheme, public.paramset, public.w, _read_message(args.message_file))
    elif args.t is not None:
        t = args.t
    elif sig_t is not None:
        t = sig_t
    else:
        raise UsageError("verify needs --t or --message-file when the signature is given as hex")

    signature = SignatureRecord(scheme=public.scheme, paramset=public.paramset, w=public.w, t=t, value=value)
    outcome = service.verify(public, signature)

    row: Dict[str, object] = {}
    if args.verbose:
        row["t"] = t
        if public.scheme is Scheme.PRNG_OTS:
            row["f_0(S)"] = format_hex(outcome.unmasked, public.bits)
            row["V"] = format_hex(outcome.recomputed, public.bits)
        else:
            row["xi"] = format_hex(outcome.recomputed, public.bits)
    row["result"] = "accepted" if outcome.accepted else "rejected"
    emit(args, [row])
    return ExitCode.ACCEPT if outcome.accepted else ExitCode.REJECT


def cmd_rand(args, config: CliConfig) -> int:
    params = lcg.registry_get(args.params)
    values = lcg.generate_sequence(args.seed, params, args.count)
    if args.format == "csv":
        emit(args, [{"n": i, "value": format_hex(v, params.k)} for i, v in enumerate(values, start=1)])
        return ExitCode.ACCEPT
    if args.verbose:
        print(f"f_0={format_hex(lcg.seed_init(args.seed, params).value, params.k)}")
    for i, value in enumerate(values, start=1):
        print(f"f_{i}={format_hex(value, params.k)}" if args.verbose else format_hex(value, params.k))
    return ExitCode.ACCEPT


def cmd_params(args, config: CliConfig) -> int:
    rows = []
    for params in lcg.list_params():
        priv_bits, pub_bits, sig_bits = keystore.serialized_lengths(params.name, Scheme.PRNG_OTS)
        rows.append({
            "name": params.name, "a": params.a, "c": params.c, "k": params.k,
            "a_odd": str(params.invertible).lower(),
            "private_bits": priv_bits, "public_bits": pub_bits, "signature_bits": sig_bits,
        })
    if args.format == "csv":
        emit(args, rows)
        return ExitCode.ACCEPT
    headers = list(rows[0].keys())
    table = [headers] + [[str(row[h]) for h in headers] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(headers))]
    for line in table:
        print("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    return ExitCode.ACCEPT


def cmd_bench(args, config: CliConfig) -> int:
    archive = bench.BenchArchive(config.bench_database_url) if (
        args.archive or args.list_runs or args.from_run is not None) else None

    if args.list_runs:
        runs = archive.list_runs()
        if not runs:
            print("no archived runs")
        emit(args, runs)
        return ExitCode.ACCEPT

    expected = None
    if args.from_run is not None:
        records = archive.load_run(args.from_run)
    else:
        records, expected = [], []
        for scheme in args.schemes:
            if args.params:
                paramsets = args.params
            elif scheme == Scheme.WOTS.value:
                paramsets = [config.default_hash]
            else:
                paramsets = BUILTIN_PARAMSETS
            groups = bench.plan_groups([scheme], paramsets, bench.resolve_modes(args.mode))
            expected.extend((g.scheme.value, g.paramset, op, g.mode.value) for g in groups for op in bench.OPERATIONS)
            records.extend(bench.run_bench([scheme], paramsets, w=args.w, trials=args.trials, mode=args.mode,
                                           warmup=args.warmup, parallel=args.parallel, seed=args.seed))
        if archive is not None:
            run_id = archive.store_run(records, args.w, args.trials, args.warmup, args.note)
            print(f"# archived as run {run_id}", file=sys.stderr)

    summaries = bench.summarize(records, expected)
    if args.raw_csv:
        with open(args.raw_csv, "w", encoding="utf-8", newline="") as f:
            bench.write_records_csv(records, f)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            bench.write_summary_csv(summaries, f)

    if args.format == "csv":
        sys.stdout.write(bench.summary_csv_text(summaries))
        return ExitCode.ACCEPT

    print(bench.format_summary_table(summaries))
    prng_sets = {s.paramset for s in summaries
                 if s.scheme == Scheme.PRNG_OTS.value and s.mode == ChainMode.SEQUENTIAL.value}
    if len(prng_sets) > 1 and args.expect_fastest in prng_sets:
        if bench.check_fastest(summaries, expected=args.expect_fastest):
            print(f"✅ {args.expect_fastest} has the lowest sequential medians for keygen, sign and verify")
        else:
            print(f"⚠️ {args.expect_fastest} is not the fastest for every operation on this machine (soft check)")
    for paramset in sorted({s.paramset for s in summaries if s.scheme == Scheme.PRNG_OTS.value}):
        ratio = bench.speedup(summaries, paramset)
        if ratio is not None:
            print(f"jump speedup for {paramset} keygen: {ratio:.0f}x")
    return ExitCode.ACCEPT


def cmd_audit_forge(args, config: CliConfig) -> int:
    signature = keystore.load_signature(args.sig_file)
    mode = ChainMode(args.mode)
    forged = forge_forward(signature, args.t_target, mode)
    audit_banner(f"forward forgery from t={signature.t} to t={forged.t} without the private key")

    row: Dict[str, object] = {"t": forged.t, forged.value_field: format_hex(forged.value, forged.bits)}
    if args.out:
        keystore.save_signature(forged, args.out)
        row["signature"] = args.out
    accepted = None
    if args.pub:
        public = keystore.load_key(args.pub)
        accepted = SignerService(mode=mode).verify(public, forged).accepted
        row["forgery_verifies"] = str(accepted).lower()
    emit(args, [row])
    return ExitCode.REJECT if accepted is False else ExitCode.ACCEPT


def cmd_audit_recover(args, config: CliConfig) -> int:
    mode = ChainMode(args.mode)
    if args.pub:
        if not args.from_public:
            raise UsageError("recover-seed --pub requires --from-public")
        public = keystore.load_key(args.pub)
        if public.scheme is not Scheme.PRNG_OTS:
            raise UsageError("seed recovery applies to prng-ots keys only")
        params = lcg.registry_get(public.paramset)
        audit_banner(f"private seed recovered from the public key by inverting 2^{public.w} - 1 steps")
        p = recover_seed_from_public(public.public, params, public.w, mode)
    else:
        signature = keystore.load_signature(args.sig_file)
        if signature.scheme is not Scheme.PRNG_OTS:
            raise UsageError("seed recovery applies to prng-ots signatures only")
        params = lcg.registry_get(signature.paramset)
        audit_banner(f"private seed recovered from a signature by inverting t={signature.t} steps")
        p = recover_seed(signature.value, signature.t, params, mode)
    emit(args, [{"p": format_hex(p, params.k)}])
    return ExitCode.ACCEPT


# ==================== Entry point ====================

def configure_logging(config: CliConfig, verbose: bool) -> None:
    level = logging.INFO if verbose else getattr(logging, config.log_level, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def register_custom_params(entries: Sequence[str]) -> None:
    for entry in entries:
        lcg.register_params(lcg.parse_custom_params(entry))


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = create_cli()
    except UsageError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return ExitCode.USAGE

    parser = create_parser(config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return exc.code if isinstance(exc.code, int) else ExitCode.USAGE

    configure_logging(config, args.verbose)
    logger.info(f"otslab {args.command} (key dir {config.key_dir})")
    handler: Callable = args.handler
    try:
        register_custom_params(config.custom_params + list(args.custom_params))
        return int(handler(args, config))
    except KeyReuseError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return ExitCode.REUSE
    except (OtsLabError, UsageError, OSError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return ExitCode.USAGE


if __name__ == "__main__":
    sys.exit(main())
