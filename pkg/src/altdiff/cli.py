"""Command-line workbench.

One executable with subcommands covering the whole library: theta
validation, operation enumeration, H counting/sampling, DDTs,
classification campaigns and the toy-SPN experiments.  All outputs are
deterministic given --seed; exit codes: 0 ok, 2 usage, 3 domain error,
4 size guard.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass

from . import altop, ddt, homega, sboxclass, spnlab
from .altop import (
    AltOpError,
    InvalidSpecError,
    ThetaSpec,
    build_operation,
    canonical_spec_4bit,
    enumerate_canonical,
    parse_theta_text,
    validate_theta,
)
from .ddt import NotBijectiveError, Sbox
from .gf2 import GF2Error, SizeTooLargeError
from .homega import WrongRegimeError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_SIZE = 4

# thresholds above which spn-run demands an explicit --preset paper
DESK_GUARD = {"runs": 40, "keys": 1 << 10, "rounds_hi": 8}


@dataclass(frozen=True)
class RunConfig:
    """Normalised view of one invocation; identical configs must produce
    byte-identical output files."""

    subcommand: str
    seed: int
    threads: int
    out: str | None
    preset: str | None


def config_from(args) -> RunConfig:
    env = os.environ.get("ALTDIFF_THREADS")
    threads = max(1, int(env)) if env else max(1, getattr(args, "threads", 1) or 1)
    return RunConfig(
        subcommand=args.subcommand,
        seed=getattr(args, "seed", 0),
        threads=threads,
        out=getattr(args, "out", None),
        preset=getattr(args, "preset", None),
    )


@contextmanager
def _pmap(threads: int):
    """Order-preserving parallel map; results are worker-count independent."""
    if threads <= 1:
        yield map
    else:
        import multiprocessing

        with multiprocessing.Pool(threads) as pool:
            yield pool.map


def _out_stream(args):
    path = getattr(args, "out", None)
    if path:
        return open(path, "w", encoding="utf-8"), True
    return sys.stdout, False


def _load_spec(path: str) -> ThetaSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_theta_text(fh.read())


def _resolve_sbox(name: str) -> Sbox:
    key = name.lower()
    if key in sboxclass.SBOX_CORPUS:
        return sboxclass.SBOX_CORPUS[key]
    if key == "gamma":
        return sboxclass.GAMMA
    if key.startswith("g") and key[1:].isdigit():
        return sboxclass.OPTIMAL_CLASSES[int(key[1:])]
    if len(name) == 16:
        return Sbox.from_hex(name, 4)
    if len(name) == 512:
        return Sbox.from_hex(name, 8)
    raise ValueError(f"unknown s-box {name!r}")


def _fingerprint_digest(fp: tuple) -> str:
    h = hashlib.sha256(",".join(str(v) for v in fp).encode()).hexdigest()
    return h[:16]


# --- subcommands -----------------------------------------------------------------


def cmd_theta_validate(args) -> int:
    spec = _load_spec(args.spec)
    report = validate_theta(spec)
    if report.ok:
        print(f"valid: n={spec.n} d={spec.d}, columns independent")
        return EXIT_OK
    print(f"invalid: {report.message}", file=sys.stderr)
    return EXIT_DOMAIN


def cmd_ops_enumerate(args) -> int:
    stream, close = _out_stream(args)
    count = 0
    for spec in enumerate_canonical(args.n, args.d):
        count += 1
        if args.list:
            stream.write(altop.render_theta_text(spec).replace("\n", ";") + "\n")
    stream.write(f"count,{count}\n")
    if close:
        stream.close()
    return EXIT_OK


def cmd_ops_all105(args) -> int:
    if args.n != 4:
        raise SizeTooLargeError("full conjugate enumeration is a 4-bit feature")
    groups = altop.all_translation_groups_n4()
    stream, close = _out_stream(args)
    for t in groups:
        spec, g = t.canonical_origin
        stream.write(
            f"{_fingerprint_digest(t.fingerprint())},conjugator={'|'.join(format(r, '04b') for r in g.rows)}\n"
        )
    stream.write(f"count,{len(groups)}\n")
    if close:
        stream.close()
    return EXIT_OK


def _block_spec(args) -> ThetaSpec:
    if args.spec:
        return _load_spec(args.spec)
    if args.s == 4:
        return canonical_spec_4bit()
    # default single-pair spec b = 0..01 for d = s-2
    return ThetaSpec.make(args.s, args.s - 2, {(1, 2): 1})


def cmd_homega_count(args) -> int:
    spec = _block_spec(args)
    if args.d is not None and spec.d != args.d:
        raise InvalidSpecError(f"--d {args.d} contradicts the file's d={spec.d}")
    op = build_operation(spec)
    if args.blocks > 1:
        if op.d != op.n - 2:
            raise WrongRegimeError("parallel counting needs d = s-2 blocks")
        total = homega.count_parallel(op.n, args.blocks)
        if args.verbose:
            for name, value in homega.count_parallel_breakdown(op.n, args.blocks).items():
                print(f"{name},{value}")
    elif op.d == op.n - 2:
        total = homega.count_single_block(op)
    elif op.d == op.n - 3:
        total = homega.count_s_minus_3(op)
        if args.verbose:
            print(f"admissible_d,{len(homega.admissible_d_matrices(op))}")
    else:
        raise WrongRegimeError(f"no characterisation for d={op.d} at s={op.n}")
    print(total)
    return EXIT_OK


def cmd_homega_sample(args) -> int:
    spec = _block_spec(args)
    op = build_operation(spec)
    par = altop.parallel_compose([op] * args.blocks)
    le = homega.sample_parallel(par, args.seed)
    stream, close = _out_stream(args)
    for row in le.matrix.rows:
        stream.write(format(row, f"0{par.n}b") + "\n")
    if close:
        stream.close()
    return EXIT_OK


def cmd_ddt(args) -> int:
    sbox = _resolve_sbox(args.sbox)
    if args.flavor == "plus":
        table = ddt.ddt_plus(sbox)
    else:
        spec = _load_spec(args.op) if args.op else canonical_spec_4bit()
        table = ddt.ddt_circ(sbox, build_operation(spec))
    stream, close = _out_stream(args)
    stream.write(table.to_csv_text())
    if close:
        stream.close()
    print(f"uniformity,{table.uniformity}", file=sys.stderr)
    return EXIT_OK


def _parse_classes(text: str) -> list:
    if text == "all":
        return list(range(16))
    return [int(v) for v in text.split(",")]


def cmd_classify_4bit(args) -> int:
    classes = _parse_classes(args.classes)
    stream, close = _out_stream(args)
    stream.write("class,uniformity,count\n")
    if args.ops == "canonical":
        op = build_operation(canonical_spec_4bit())
        for k in classes:
            rec = sboxclass.classify_optimal_4bit(op, k)
            for u in sboxclass.UNIFORMITY_COLUMNS:
                stream.write(f"G_{k},{u},{rec.histogram.get(u, 0)}\n")
    else:  # all105
        with _pmap(config_from(args).threads) as pmap:
            result = sboxclass.aggregate_table2(dedup=args.dedup, pmap=pmap)
        for k in classes:
            for u in sboxclass.UNIFORMITY_COLUMNS:
                stream.write(f"G_{k},{u},{result.per_class_rounded[k][u]}\n")
        if args.report:
            print(result.discrepancy_report(), file=sys.stderr)
    if close:
        stream.close()
    return EXIT_OK


def cmd_classify_8bit(args) -> int:
    sbox = _resolve_sbox(args.sbox)
    with _pmap(config_from(args).threads) as pmap:
        hist, _ = sboxclass.campaign_8bit(sbox, args.d, pmap=pmap)
    stream, close = _out_stream(args)
    stream.write("sbox,d,uniformity,op_count\n")
    for u in sorted(hist):
        stream.write(f"{args.sbox},{args.d},{u},{hist[u]}\n")
    if close:
        stream.close()
    return EXIT_OK


def cmd_classify_random(args) -> int:
    sbox = _resolve_sbox(args.sbox)
    with _pmap(config_from(args).threads) as pmap:
        hist = sboxclass.campaign_random_ops(sbox, args.d, args.count, args.seed, pmap=pmap)
    stream, close = _out_stream(args)
    stream.write("sbox,d,uniformity,op_count\n")
    for u in sorted(hist):
        stream.write(f"{args.sbox},{args.d},{u},{hist[u]}\n")
    if close:
        stream.close()
    return EXIT_OK


def cmd_spn_run(args) -> int:
    if args.preset == "paper":
        params = dict(spnlab.PAPER_PRESET)
    else:
        params = dict(spnlab.DESK_PRESET)
    if args.runs is not None:
        params["runs"] = args.runs
    if args.rounds is not None:
        lo, hi = (int(v) for v in args.rounds.split(".."))
        params["rounds_lo"], params["rounds_hi"] = lo, hi
    if args.keys is not None:
        params["key_count"] = args.keys
    if args.preset != "paper" and (
        params["runs"] > DESK_GUARD["runs"]
        or params["key_count"] > DESK_GUARD["keys"]
        or params["rounds_hi"] > DESK_GUARD["rounds_hi"]
    ):
        raise SizeTooLargeError(
            "requested scale exceeds the desk guard; pass --preset paper"
        )
    estimators = {
        "both": ("markov", "montecarlo"),
        "markov": ("markov",),
        "montecarlo": ("montecarlo",),
    }[args.estimator]
    records = spnlab.run_experiment(
        runs=params["runs"],
        rounds_lo=params["rounds_lo"],
        rounds_hi=params["rounds_hi"],
        key_count=params["key_count"],
        seed=args.seed,
        estimators=estimators,
    )
    if args.out:
        rows = spnlab.write_records_csv(records, args.out)
        print(f"rows,{rows}", file=sys.stderr)
    else:
        spnlab.write_records_csv(records, sys.stdout)
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="altdiff", description=__doc__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, seed=True, out=True, threads=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if out:
            sp.add_argument("--out", type=str, default=None)
        if threads:
            sp.add_argument("--threads", "-j", type=int, default=1)

    sp = sub.add_parser("theta-validate", help="check a defining-matrix file")
    sp.add_argument("spec")
    sp.set_defaults(func=cmd_theta_validate)

    sp = sub.add_parser("ops-enumerate", help="enumerate canonical operations")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--list", action="store_true")
    common(sp, seed=False, threads=False)
    sp.set_defaults(func=cmd_ops_enumerate)

    sp = sub.add_parser("ops-all105", help="all 4-bit operations by conjugation")
    sp.add_argument("--n", type=int, default=4)
    common(sp, seed=False, threads=False)
    sp.set_defaults(func=cmd_ops_all105)

    sp = sub.add_parser("homega-count", help="size of the doubly-linear group")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--blocks", type=int, default=1)
    sp.add_argument("--spec", type=str, default=None)
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_homega_count)

    sp = sub.add_parser("homega-sample", help="sample a doubly-linear layer")
    sp.add_argument("--s", type=int, default=4)
    sp.add_argument("--blocks", type=int, default=4)
    sp.add_argument("--spec", type=str, default=None)
    common(sp, threads=False)
    sp.set_defaults(func=cmd_homega_sample)

    sp = sub.add_parser("ddt", help="difference distribution table")
    sp.add_argument("--sbox", required=True)
    sp.add_argument("--flavor", choices=("plus", "circ"), default="plus")
    sp.add_argument("--op", type=str, default=None, help="theta file for circ")
    common(sp, seed=False, threads=False)
    sp.set_defaults(func=cmd_ddt)

    sp = sub.add_parser("classify-4bit", help="optimal-class campaign")
    sp.add_argument("--classes", default="all")
    sp.add_argument("--ops", choices=("canonical", "all105"), default="all105")
    sp.add_argument("--dedup", action="store_true")
    sp.add_argument("--report", action="store_true")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_classify_4bit)

    sp = sub.add_parser("classify-8bit", help="canonical-operation campaign")
    sp.add_argument("--sbox", required=True)
    sp.add_argument("--d", type=int, choices=(5, 6), required=True)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_classify_8bit)

    sp = sub.add_parser("classify-random", help="random-operation campaign")
    sp.add_argument("--sbox", required=True)
    sp.add_argument("--d", type=int, choices=(2, 3, 4), required=True)
    sp.add_argument("--count", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_classify_random)

    sp = sub.add_parser("spn-run", help="toy-SPN differential experiment")
    sp.add_argument("--runs", type=int, default=None)
    sp.add_argument("--rounds", type=str, default=None, help="LO..HI")
    sp.add_argument("--keys", type=int, default=None)
    sp.add_argument("--preset", choices=("desk", "paper"), default="desk")
    sp.add_argument("--estimator", choices=("markov", "montecarlo", "both"), default="both")
    common(sp)
    sp.set_defaults(func=cmd_spn_run)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeTooLargeError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (
        AltOpError,
        GF2Error,
        NotBijectiveError,
        WrongRegimeError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
