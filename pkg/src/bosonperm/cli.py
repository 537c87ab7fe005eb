"""Command-line interface.

Subcommands: ``gen-unitary``, ``perm``, ``sample``, ``accuracy``, ``bench``,
``fit``.

File formats
------------
Matrix file (JSON text)::

    {"rows": R, "cols": C, "data": [[re, im], ...]}

with ``data`` holding exactly ``R*C`` pairs of decimal numbers, row-major.
Floats are written with shortest round-trip precision, so write/read is
bit-identical.

Sample file: one line per drawn sample, the output occupation as
comma-separated counts (``t1,t2,...,tm``).  Per-sample seeds and timings
live in the API records and the printed summary, not in the file, so
identical ``--seed`` runs produce byte-identical files.

Accuracy CSV header: ``engine,n,trials,median_rel_err,max_rel_err``.
Bench CSV header: ``n,m,loss,seconds_per_sample,samples`` (``loss`` is the
transmission fraction, 1.0 = lossless).

Permanent result document (JSON, ``perm --output``): ``value`` ([re, im]),
``engine``, ``precision``, ``addend_count``.  Timing is printed but never
written, keeping output files reproducible byte for byte.

Randomness: everything derives from the single ``--seed``.  Subsystem
generators use ``numpy.random.SeedSequence((seed, TAG, ...))`` with the
tags defined below; samplers additionally derive one substream per sample
index.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from statistics import median

import numpy as np

from . import fixedpoint, linalg, permanent, sampling
from ._backend import backend_name

TAG_GEN_UNITARY = 0x47454E55
TAG_ACCURACY = 0x41434355
TAG_BENCH = 0x42454E43

_MATRIX_ENGINES = (
    "naive", "ryser", "ryser-nw", "bbfg-gray", "bbfg-nogray",
    "bbfg-repeated", "fixedpoint", "multiprecision",
)
_ACCURACY_ENGINES = (
    "naive", "ryser", "ryser-nw", "bbfg-gray", "bbfg-nogray",
    "bbfg-repeated", "bbfg-repeated-extended", "fixedpoint", "oracle",
)


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    doc = {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(x.real), float(x.imag)] for x in a.ravel()],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid matrix file: {exc}") from exc
    try:
        rows = int(doc["rows"])
        cols = int(doc["cols"])
        data = doc["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: matrix file needs rows, cols and data fields") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise ValueError(f"{path}: data length does not match rows*cols")
    values = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(data):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ValueError(f"{path}: data entries must be [real, imaginary] pairs")
        values[i] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(values.view(np.float64))):
        raise ValueError(f"{path}: matrix entries must be finite")
    return values.reshape(rows, cols)


def _parse_counts(text: str) -> np.ndarray:
    try:
        return np.array([int(x) for x in text.split(",")], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_sizes(text: str):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _derived_seed(seed: int, tag: int, *extra) -> int:
    return int(np.random.SeedSequence((seed, tag) + tuple(extra)).generate_state(1)[0])


def cmd_gen_unitary(args) -> int:
    u = linalg.haar_random_unitary(args.modes, _derived_seed(args.seed, TAG_GEN_UNITARY))
    write_matrix(args.output, u)
    print(f"wrote {args.modes}x{args.modes} unitary to {args.output} "
          f"(defect {linalg.unitarity_defect(u):.2e})")
    return 0


def _run_engine(engine, a, args):
    m = _parse_counts(args.row_mult) if args.row_mult else None
    n = _parse_counts(args.col_mult) if args.col_mult else None
    if engine in ("naive", "ryser", "ryser-nw", "bbfg-gray", "bbfg-nogray") and (
            m is not None or n is not None):
        raise ValueError(f"engine {engine!r} does not take multiplicities; "
                         "use bbfg-repeated, fixedpoint or multiprecision")
    if engine == "naive":
        return permanent.perm_naive(a)
    if engine == "ryser":
        return permanent.perm_ryser(a)
    if engine == "ryser-nw":
        return permanent.perm_ryser_nw(a)
    if engine == "bbfg-gray":
        return permanent.perm_bbfg(a, gray=True, workers=args.workers, mode=args.mode)
    if engine == "bbfg-nogray":
        return permanent.perm_bbfg(a, gray=False, workers=args.workers, mode=args.mode)
    if engine == "bbfg-repeated":
        return permanent.perm_bbfg_repeated(
            a, m, n, precision=args.precision or "double",
            workers=args.workers, mode=args.mode)
    if engine == "fixedpoint":
        config = (fixedpoint.FixedPointConfig.from_file(args.fixed_config)
                  if args.fixed_config else fixedpoint.DEFAULT_CONFIG)
        return fixedpoint.perm_fixed(a, m, n, config)
    if engine == "multiprecision":
        return permanent.perm_multiprecision(a, m, n, args.mantissa_bits or 256)
    raise ValueError(f"unknown engine: {engine!r}")


def cmd_perm(args) -> int:
    a = read_matrix(args.input)
    start = time.perf_counter()
    res = _run_engine(args.engine, a, args)
    elapsed = time.perf_counter() - start
    print(f"value:    {res.value.real!r} {res.value.imag:+}j")
    print(f"engine:   {res.engine}")
    print(f"precision: {res.precision}")
    print(f"addends:  {res.addend_count}")
    print(f"elapsed:  {elapsed:.6f} s")
    if args.output:
        doc = {
            "value": [res.value.real, res.value.imag],
            "engine": res.engine,
            "precision": res.precision,
            "addend_count": res.addend_count,
        }
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    return 0


def cmd_sample(args) -> int:
    u = read_matrix(args.unitary)
    if u.shape[0] != u.shape[1]:
        raise ValueError("sampling needs a square interferometer matrix")
    m = u.shape[0]
    if args.input_state:
        s = _parse_counts(args.input_state)
        if s.shape != (m,):
            raise ValueError(f"input state must list {m} modes")
    elif args.photons:
        if args.photons > m:
            raise ValueError("more photons than modes; pass --input-state explicitly")
        s = np.zeros(m, dtype=np.int64)
        s[:args.photons] = 1
    else:
        raise ValueError("one of --input-state or --photons is required")
    if args.loss is not None and args.loss < 1.0:
        records = sampling.sample_lossy(u, s, args.loss, args.samples, args.seed,
                                        strategy=args.strategy, engine=args.engine)
    else:
        records = sampling.sample_ideal(u, s, args.samples, args.seed,
                                        engine=args.engine)
    with open(args.output, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(",".join(str(c) for c in rec.output_state))
            fh.write("\n")
    mean_photons = (sum(sum(r.output_state) for r in records) / len(records)
                    if records else float("nan"))
    mean_elapsed = (sum(r.elapsed for r in records) / len(records)
                    if records else float("nan"))
    print(f"samples:            {len(records)} -> {args.output}")
    print(f"mean photons:       {mean_photons:.4f}")
    print(f"seconds per sample: {mean_elapsed:.6f}")
    return 0


def _accuracy_value(engine, u, oracle_bits):
    if engine == "naive":
        return permanent.perm_naive(u).value
    if engine == "ryser":
        return permanent.perm_ryser(u).value
    if engine == "ryser-nw":
        return permanent.perm_ryser_nw(u).value
    if engine == "bbfg-gray":
        return permanent.perm_bbfg(u, gray=True).value
    if engine == "bbfg-nogray":
        return permanent.perm_bbfg(u, gray=False).value
    if engine == "bbfg-repeated":
        return permanent.perm_bbfg_repeated(u).value
    if engine == "bbfg-repeated-extended":
        return permanent.perm_bbfg_repeated(u, precision="extended").value
    if engine == "fixedpoint":
        return fixedpoint.perm_fixed(u).value
    if engine == "oracle":
        return permanent.perm_multiprecision(u, mantissa_bits=oracle_bits).value
    raise ValueError(f"unknown engine: {engine!r}")


def cmd_accuracy(args) -> int:
    engines = args.engines.split(",")
    for e in engines:
        if e not in _ACCURACY_ENGINES:
            raise ValueError(f"unknown engine {e!r}; choose from {', '.join(_ACCURACY_ENGINES)}")
    sizes = _parse_sizes(args.sizes)
    if args.trials < 1:
        raise ValueError("at least one trial is required")
    table = {}
    for n in sizes:
        errors = {e: [] for e in engines}
        for trial in range(args.trials):
            u = linalg.haar_random_unitary(
                n, _derived_seed(args.seed, TAG_ACCURACY, n, trial))
            oracle = permanent.perm_multiprecision(u, mantissa_bits=args.oracle_bits).value
            for e in engines:
                errors[e].append(
                    permanent.relative_error(_accuracy_value(e, u, args.oracle_bits), oracle))
        for e in engines:
            table[(e, n)] = (median(errors[e]), max(errors[e]))
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["engine", "n", "trials", "median_rel_err", "max_rel_err"])
        for e in engines:
            for n in sizes:
                med, mx = table[(e, n)]
                writer.writerow([e, n, args.trials, repr(med), repr(mx)])
    print(f"wrote {len(engines) * len(sizes)} rows to {args.output}")
    return 0


def cmd_bench(args) -> int:
    photons = _parse_sizes(args.photons)
    if args.samples < 1:
        raise ValueError("at least one sample per grid point is required")
    if not photons:
        raise ValueError("empty photon grid")
    rows = []
    for n in photons:
        if n > args.modes:
            raise ValueError(f"cannot place {n} photons into {args.modes} modes")
        u = linalg.haar_random_unitary(
            args.modes, _derived_seed(args.seed, TAG_BENCH, n))
        s = np.zeros(args.modes, dtype=np.int64)
        s[:n] = 1
        loss = 1.0 if args.loss is None else args.loss
        if loss < 1.0:
            records = sampling.sample_lossy(u, s, loss, args.samples, args.seed)
        else:
            records = sampling.sample_ideal(u, s, args.samples, args.seed)
        per_sample = sum(r.elapsed for r in records) / len(records)
        rows.append(sampling.BenchRecord(n, args.modes, loss, per_sample, len(records)))
        print(f"n={n:3d} m={args.modes} loss={loss:.2f} "
              f"{per_sample:.6f} s/sample")
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "m", "loss", "seconds_per_sample", "samples"])
        for rec in rows:
            writer.writerow([rec.n, rec.m, repr(rec.loss),
                             repr(rec.seconds_per_sample), rec.samples])
    print(f"wrote {len(rows)} records to {args.output}")
    return 0


def read_bench_csv(path):
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["n", "m", "loss", "seconds_per_sample", "samples"]:
            raise ValueError(f"{path}: not a benchmark CSV (bad header)")
        for line in reader:
            if not line:
                continue
            try:
                records.append(sampling.BenchRecord(
                    int(line[0]), int(line[1]), float(line[2]),
                    float(line[3]), int(line[4])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: malformed benchmark row {line!r}") from exc
    return records


def cmd_fit(args) -> int:
    records = read_bench_csv(args.input)
    t0, residual = sampling.fit_T0(records)
    print(f"T0:       {t0:.6e} s")
    print(f"residual: {residual:.6e} s (rms)")
    print(f"{'n':>4} {'m':>4} {'loss':>6} {'measured':>13} {'predicted':>13}")
    for rec in records:
        m_eff = rec.m if rec.loss >= 1.0 else 2 * rec.m
        pred = sampling.predicted_sampling_time(rec.n, m_eff, t0)
        print(f"{rec.n:>4} {rec.m:>4} {rec.loss:>6.2f} "
              f"{rec.seconds_per_sample:>13.6e} {pred:>13.6e}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bosonperm",
        description="Permanent engines and boson-sampling simulation "
                    f"(kernel backend: {backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-unitary", help="write a Haar-random unitary matrix file")
    p.add_argument("--modes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_unitary)

    p = sub.add_parser("perm", help="compute one permanent")
    p.add_argument("--input", required=True, help="matrix file (JSON)")
    p.add_argument("--engine", choices=_MATRIX_ENGINES, default="bbfg-repeated")
    p.add_argument("--row-mult", help="comma-separated row multiplicities")
    p.add_argument("--col-mult", help="comma-separated column multiplicities")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", choices=["contiguous", "leading-digit"],
                   default="contiguous")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--precision", choices=["double", "extended"])
    group.add_argument("--mantissa-bits", type=int,
                       help="software-float mantissa width (multiprecision engine)")
    p.add_argument("--fixed-config", help="fixed-point width config file (JSON)")
    p.add_argument("--output", help="write a machine-readable result document")
    p.set_defaults(func=cmd_perm)

    p = sub.add_parser("sample", help="draw boson-sampling outputs")
    p.add_argument("--unitary", required=True, help="matrix file (JSON)")
    p.add_argument("--input-state", help="comma-separated occupation, one per mode")
    p.add_argument("--photons", type=int,
                   help="place this many single photons in the first modes")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", type=float,
                   help="per-photon transmission fraction (1.0 = lossless)")
    p.add_argument("--strategy", choices=["dilation", "input-thinning"],
                   default="dilation")
    p.add_argument("--engine", choices=["bbfg-repeated", "bbfg"],
                   default="bbfg-repeated")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("accuracy", help="relative-error table against the oracle")
    p.add_argument("--sizes", required=True, help="e.g. 2:10 or 4,8,12")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--engines", required=True,
                   help=f"comma-separated from: {', '.join(_ACCURACY_ENGINES)}")
    p.add_argument("--oracle-bits", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("bench", help="time the sampler over a photon grid")
    p.add_argument("--modes", type=int, required=True)
    p.add_argument("--photons", required=True, help="e.g. 2:6 or 2,4,6")
    p.add_argument("--loss", type=float,
                   help="per-photon transmission fraction (1.0 = lossless)")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit", help="fit the time-scale parameter to a bench CSV")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
