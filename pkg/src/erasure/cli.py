"""Command-line front end: encode files to packets, simulate loss, decode, benchmark.

Exit codes: 0 ok, 2 usage/parameters, 3 I/O, 4 malformed input, 5 decode failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import bench
from .cascade import build_cascade_graph
from .channel import IID, Burst, FixedCount, survivor_indices
from .codec import decode, encode
from .core import (
    CodecId,
    CodeParameters,
    Insufficient,
    PacketFormatError,
    ParameterError,
    Stalled,
    Success,
    as_fraction,
    deserialize_packet,
    params_from_header,
    serialize_packet,
)

log = logging.getLogger("erasure")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MALFORMED = 4
EXIT_DECODE = 5

MANIFEST = "manifest.json"
DROP_REPORT = "drop_report.json"
PACKET_PATTERN = "pkt_{index}.erpk"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class LoadedPacket:
    path: Path
    header: object
    packet: object


def _cascade_options(args_or_manifest) -> dict:
    get = args_or_manifest.get if isinstance(args_or_manifest, dict) else lambda k, d=None: getattr(args_or_manifest, k, d)
    opts = {}
    if get("degree") is not None:
        opts["degree"] = int(get("degree"))
    if get("decay") is not None:
        opts["decay"] = as_fraction(get("decay"))
    if get("tail_threshold") is not None:
        opts["tail_threshold"] = int(get("tail_threshold"))
    return opts


def _fraction_arg(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction_arg(x) for x in text.split(",") if x]


def _manifest_params(params: CodeParameters) -> dict:
    return {
        "codec": params.codec.name.lower(),
        "c": str(params.c),
        "l": params.l,
        "k": params.k,
        "p": params.p,
        "seed": params.seed,
        "degree": params.degree,
        "decay": str(params.decay),
        "tail_threshold": params.tail_threshold,
    }


def cmd_encode(args) -> int:
    src = Path(args.input)
    try:
        message = src.read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {src}: {exc}")
    try:
        params = CodeParameters(
            n=8 * len(message),
            c=args.c,
            l=args.l,
            codec=args.codec,
            seed=args.seed,
            **_cascade_options(args),
        )
        if params.codec is CodecId.CASCADE:
            build_cascade_graph(params)
    except ParameterError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    block_id = args.block_id
    if block_id is None:
        block_id = int.from_bytes(hashlib.sha256(message).digest()[:8], "little")
    packets = encode(message, params, block_id)
    out = Path(args.output)
    manifest = {
        "block_id": block_id,
        "filename": src.name,
        "n_bits": params.n,
        "params": _manifest_params(params),
        "packet_pattern": PACKET_PATTERN,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        for pkt in packets:
            (out / PACKET_PATTERN.format(index=pkt.index)).write_bytes(serialize_packet(pkt, params))
        (out / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write packets to {out}: {exc}")
    print(f"encoded {src} -> {len(packets)} packets (k={params.k}, p={params.p}, l={params.l}) in {out}")
    return EXIT_OK


def _load_packets(directory: Path) -> list[LoadedPacket]:
    if not directory.is_dir():
        raise CliError(EXIT_IO, f"{directory} is not a directory")
    loaded = []
    for path in sorted(directory.glob("*.erpk")):
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {path}: {exc}")
        try:
            header, packet = deserialize_packet(data)
        except PacketFormatError as exc:
            raise CliError(EXIT_MALFORMED, f"malformed packet file {path}: {exc}")
        loaded.append(LoadedPacket(path, header, packet))
    loaded.sort(key=lambda lp: lp.header.index)
    return loaded


def _loss_model(args):
    try:
        if args.model == "iid":
            return IID(args.p)
        if args.model == "burst":
            return Burst(args.p_gb, args.p_bg, args.loss_in_bad)
        if args.deliver is None:
            raise ParameterError("--model fixed needs --deliver")
        return FixedCount(args.deliver)
    except ParameterError as exc:
        raise CliError(EXIT_USAGE, str(exc))


def cmd_drop(args) -> int:
    directory = Path(args.packet_dir)
    loaded = _load_packets(directory)
    model = _loss_model(args)
    try:
        keep = survivor_indices(len(loaded), model, args.seed)
    except ParameterError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    kept = {loaded[i].header.index for i in keep}
    removed = [lp for lp in loaded if lp.header.index not in kept]
    report = {
        "model": args.model,
        "seed": args.seed,
        "removed": [lp.header.index for lp in removed],
        "survivors": sorted(kept),
    }
    if args.list:
        print(json.dumps(report))
        return EXIT_OK
    try:
        for lp in removed:
            lp.path.unlink()
        (directory / DROP_REPORT).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot prune {directory}: {exc}")
    print(f"dropped {len(removed)} of {len(loaded)} packets; {len(kept)} survive")
    return EXIT_OK


def _read_manifest(directory: Path) -> dict | None:
    path = directory / MANIFEST
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_MALFORMED, f"malformed manifest {path}: {exc}")


def _check_manifest(manifest: dict, header) -> None:
    try:
        mp = manifest["params"]
        expected = {
            "block_id": manifest["block_id"],
            "n": manifest["n_bits"],
            "codec": CodecId.parse(mp["codec"]),
            "k": mp["k"],
            "p": mp["p"],
            "l": mp["l"],
            "seed": mp["seed"],
        }
    except (KeyError, TypeError, ParameterError) as exc:
        raise CliError(EXIT_MALFORMED, f"manifest is missing or has bad fields: {exc}")
    for name, value in expected.items():
        if getattr(header, name) != value:
            raise CliError(
                EXIT_MALFORMED,
                f"manifest {name}={value} disagrees with packet header {name}={getattr(header, name)}",
            )


def cmd_decode(args) -> int:
    directory = Path(args.packet_dir)
    loaded = _load_packets(directory)
    manifest = _read_manifest(directory)
    if manifest is None:
        log.warning("no %s in %s; trusting packet headers and default cascade settings", MANIFEST, directory)
    if not loaded:
        raise CliError(EXIT_DECODE, "decode failed: no packets received")
    blocks = {lp.header.block_id for lp in loaded}
    if len(blocks) > 1:
        raise CliError(EXIT_MALFORMED, f"packets from {len(blocks)} different blocks: {sorted(blocks)}")
    first = loaded[0].header
    for lp in loaded[1:]:
        h = lp.header
        if (h.codec, h.n, h.k, h.p, h.l, h.seed) != (first.codec, first.n, first.k, first.p, first.l, first.seed):
            raise CliError(EXIT_MALFORMED, f"{lp.path} disagrees with {loaded[0].path} on code parameters")
    if manifest is not None:
        _check_manifest(manifest, first)
    options = _cascade_options(manifest["params"]) if manifest else {}
    try:
        params = params_from_header(first, **options)
    except (ParameterError, PacketFormatError) as exc:
        raise CliError(EXIT_MALFORMED, f"inconsistent packet header: {exc}")
    outcome = decode([lp.packet for lp in loaded], params)
    if isinstance(outcome, Insufficient):
        raise CliError(
            EXIT_DECODE,
            f"decode failed: Insufficient, received {outcome.received_bits} bits, "
            f"required {outcome.required_bits} bits",
        )
    if isinstance(outcome, Stalled):
        raise CliError(
            EXIT_DECODE,
            f"decode failed: Stalled with {outcome.unresolved} unresolved source packets "
            f"(received {len(loaded) * params.l} bits, required at least {params.k * params.l} bits)",
        )
    assert isinstance(outcome, Success)
    try:
        Path(args.output).write_bytes(outcome.message)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.output}: {exc}")
    print(f"decoded {len(outcome.message)} bytes from {len(loaded)} of {params.p} packets -> {args.output}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        if args.suite == "throughput":
            template = CodeParameters(n=8, c=args.c, l=args.l, codec=args.codec, seed=args.seed, **_cascade_options(args))
            sizes = args.sizes or [2**18, 2**19, 2**20, 2**21]
            records = bench.run_throughput(template, sizes, trials=args.trials, seed=args.seed, received=args.received)
            writer = lambda path: bench.write_throughput_csv(records, path)  # noqa: E731
            verdict = bench.check_linearity(records, args.max_ratio).summary() if len(records) > 1 else None
        else:
            n = args.k * args.l - 64
            params = CodeParameters(n=n, c=args.c, l=args.l, codec=args.codec, seed=args.seed, **_cascade_options(args))
            fractions = args.fractions or [Fraction(x, 20) for x in range(8, 21)]
            records = bench.run_overhead_curve(params, fractions, trials=args.trials, seed=args.seed)
            writer = lambda path: bench.write_overhead_csv(records, path)  # noqa: E731
            verdict = None
    except ParameterError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    try:
        writer(args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {exc}")
    if verdict:
        print(verdict, file=sys.stderr)
    print(f"wrote {len(records)} rows to {args.out}")
    return EXIT_OK


def _add_cascade_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--degree", type=int, default=None, help="cascade edges per symbol (default 3)")
    p.add_argument("--decay", type=_fraction_arg, default=None, help="cascade layer shrink factor (default 1/2)")
    p.add_argument("--tail-threshold", type=int, default=None, help="layer size that triggers the MDS tail (default 32)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erasure", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a file into packet files plus manifest.json")
    p.add_argument("input")
    p.add_argument("output", help="directory for pkt_<index>.erpk files")
    p.add_argument("--codec", choices=["mds", "cascade"], default="mds")
    p.add_argument("--c", type=_fraction_arg, default=Fraction(2), help="stretch factor, e.g. 2 or 3/2")
    p.add_argument("--l", type=int, default=512, help="packet payload length in bits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-id", type=int, default=None, help="default: derived from the file contents")
    _add_cascade_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("drop", help="simulate packet loss on a packet directory")
    p.add_argument("packet_dir")
    p.add_argument("--model", choices=["iid", "burst", "fixed"], required=True)
    p.add_argument("--p", type=_fraction_arg, default=Fraction(0), help="iid loss probability")
    p.add_argument("--p-gb", type=_fraction_arg, default=Fraction(0), help="burst: good->bad transition")
    p.add_argument("--p-bg", type=_fraction_arg, default=Fraction(1), help="burst: bad->good transition")
    p.add_argument("--loss-in-bad", type=_fraction_arg, default=Fraction(1), help="burst: loss probability in bad state")
    p.add_argument("--deliver", type=int, default=None, help="fixed: number of packets that survive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--list", action="store_true", help="print the drop report without deleting anything")
    p.set_defaults(func=cmd_drop)

    p = sub.add_parser("decode", help="reconstruct the original file from a packet directory")
    p.add_argument("packet_dir")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="throughput or overhead benchmarks, written as CSV")
    p.add_argument("--suite", choices=["throughput", "overhead"], required=True)
    p.add_argument("--codec", choices=["mds", "cascade"], default="cascade")
    p.add_argument("--c", type=_fraction_arg, default=Fraction(2))
    p.add_argument("--l", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--sizes", type=_int_list, default=None, help="throughput: message sizes in bits")
    p.add_argument("--received", type=_fraction_arg, default=Fraction(3, 4), help="throughput: fraction of p decoded")
    p.add_argument("--max-ratio", type=_fraction_arg, default=bench.DEFAULT_MAX_RATIO)
    p.add_argument("--k", type=int, default=1024, help="overhead: source packet count")
    p.add_argument("--fractions", type=_fraction_list, default=None, help="overhead: received fractions of p")
    p.add_argument("--out", required=True)
    _add_cascade_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
