"""Command line entry point: ``exchstruct <command> ...``.

Exit status is 0 when every requested test passes, 1 when a statistical or
exact test fails and 2 on usage errors.  All randomness comes from
``--seed`` (default: ``$EXCHSTRUCT_SEED`` or a fixed constant; ``fresh``
draws one from the OS and records it in the output).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import borel, finstruct, lemmas, typestats
from .finstruct import TypeId
from .measures import Weight, measure_from_name, reweight
from .reducts import ReductKind

DEFAULT_SEED = 20240517
SEED_ENV = "EXCHSTRUCT_SEED"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    structure: str | None = None
    measure: str = "normal"
    weights: list[str] = field(default_factory=list)
    n: int | None = None
    samples: int = 1
    seed: int = DEFAULT_SEED
    significance: float = typestats.DEFAULT_SIGNIFICANCE
    fmt: str = "json"
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise UsageError("--samples must be >= 1")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if not 0 < self.significance < 1:
            raise UsageError("--significance must lie in (0, 1)")


def resolve_seed(value: str | None) -> int:
    if value is None:
        value = os.environ.get(SEED_ENV)
    if value is None:
        return DEFAULT_SEED
    if value == "fresh":
        return secrets.randbits(63)
    try:
        seed = int(value)
    except ValueError:
        raise UsageError(f"seed must be an integer or 'fresh', got {value!r}") from None
    if seed < 0:
        raise UsageError("seed must be nonnegative")
    return seed


def _config(args) -> RunConfig:
    weights = [w for w in (getattr(args, "weight", None), getattr(args, "w1", None), getattr(args, "w2", None)) if w]
    return RunConfig(
        command=args.command,
        structure=getattr(args, "structure", None),
        measure=getattr(args, "measure", "normal"),
        weights=weights,
        n=getattr(args, "n", None),
        samples=getattr(args, "samples", 1),
        seed=resolve_seed(getattr(args, "seed", None)),
        significance=getattr(args, "significance", typestats.DEFAULT_SIGNIFICANCE),
        fmt=getattr(args, "format", "json"),
        out=getattr(args, "out", None),
        workers=getattr(args, "workers", 1),
    )


def _measure(cfg: RunConfig, weight_path: str | None = None):
    try:
        m = measure_from_name(cfg.measure)
        if weight_path:
            m = reweight(m, _load_weight(weight_path))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return m


def _load_weight(path: str) -> Weight:
    try:
        return Weight.load(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read weight file {path}: {exc}") from None


def _sampler(cfg: RunConfig, args):
    name = cfg.structure
    if name == "er":
        if args.p is None:
            raise UsageError("--structure er needs --p")
        try:
            return borel.ERSampler(args.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        P = borel.builtin(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return borel.MuSampler(P, _measure(cfg, getattr(args, "weight", None)))


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(cfg: RunConfig, obj):
    _emit(cfg, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _emit_report(cfg: RunConfig, report: typestats.TestReport) -> int:
    payload = report.to_json()
    payload["params"]["seed"] = cfg.seed
    _emit_json(cfg, payload)
    return 0 if report.passed else 1


def expected_types(name: str, n: int) -> frozenset:
    """Labeled types a catalog structure realizes on n distinct reals."""
    if name == "unary-split":
        # every sign pattern of n reals is realized
        return frozenset(
            TypeId(finstruct.encode_bits(n, ["".join(bits)])) for bits in itertools.product("01", repeat=n)
        )
    types, _ = typestats.enumerate_types(ReductKind.from_name(name), n)
    return types


# ---------------------------------------------------------------------------
# commands


def cmd_enumerate(args) -> int:
    cfg = _config(args)
    try:
        kind = ReductKind.from_name(cfg.structure)
        types, alpha = typestats.enumerate_types(kind, cfg.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.fmt == "json":
        _emit_json(cfg, {"structure": kind.value, "n": cfg.n, "alpha": alpha,
                         "types": sorted(str(t) for t in types)})
    else:
        _emit(cfg, f"{alpha}\n")
    return 0


def cmd_sample(args) -> int:
    cfg = _config(args)
    if cfg.n is None or cfg.n < 0:
        raise UsageError("--n must be >= 0")
    sampler = _sampler(cfg, args)
    rng = np.random.default_rng(cfg.seed)
    if cfg.fmt == "csv":
        table = typestats.estimate_frequencies(sampler, None, cfg.n, cfg.samples, rng, cfg.workers, cfg.seed)
        _emit(cfg, table.to_csv())
        return 0
    chunks = typestats._run_chunks(_diagram_chunk, sampler, cfg.samples, rng, cfg.workers, cfg.n)
    structures = [borel.diagram_to_structure(sampler.sig, cfg.n, row) for D in chunks for row in D]
    if cfg.fmt == "text":
        _emit(cfg, "\n".join(finstruct.format_structure(M) for M in structures))
        return 0
    records = [
        {"structure": sampler.name, "measure": sampler.measure_descriptor, "n": cfg.n,
         "seed": cfg.seed, "index": i, "relations": M.as_dict()}
        for i, M in enumerate(structures)
    ]
    if len(records) == 1:
        _emit_json(cfg, records[0])
    else:
        _emit(cfg, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return 0


def _diagram_chunk(sampler, size, stream, n):
    return sampler.diagrams(n, size, stream)


def cmd_test_uniqueness(args) -> int:
    cfg = _config(args)
    if cfg.structure == "er":
        raise UsageError("test-uniqueness needs a catalog structure")
    sampler = _sampler(cfg, args)
    try:
        expected = expected_types(cfg.structure, cfg.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rng = np.random.default_rng(cfg.seed)
    table = typestats.estimate_frequencies(sampler, None, cfg.n, cfg.samples, rng, cfg.workers, cfg.seed)
    try:
        report = typestats.test_uniformity(table, expected, cfg.significance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report.params["alpha_n"] = len(expected)
    return _emit_report(cfg, report)


def _parse_tuples(text: str) -> list[tuple[int, ...]]:
    try:
        return [tuple(int(x) for x in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse tuples {text!r}; use e.g. '0,1,2;2,0,1'") from None


def cmd_test_invariance(args) -> int:
    cfg = _config(args)
    sampler = _sampler(cfg, args)
    n = cfg.n
    tuples = _parse_tuples(args.tuples) if args.tuples else [
        tuple(range(n)), tuple(reversed(range(n))), tuple(range(n, 2 * n))
    ]
    rng = np.random.default_rng(cfg.seed)
    try:
        report = typestats.test_exchangeability(sampler, None, n, tuples, cfg.samples, rng,
                                                cfg.significance, cfg.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _emit_report(cfg, report)


def cmd_distinguish(args) -> int:
    cfg = _config(args)
    rng = np.random.default_rng(cfg.seed)
    if cfg.structure == "er":
        if args.p1 is None or args.p2 is None:
            raise UsageError("--structure er needs --p1 and --p2")
        report = typestats.test_edge_densities(args.p1, args.p2, cfg.n, cfg.samples, rng, cfg.significance)
    else:
        if not (args.w1 and args.w2):
            raise UsageError("distinguish needs --w1 and --w2")
        try:
            P = borel.builtin(cfg.structure)
            m = measure_from_name(cfg.measure)
            report = typestats.test_distinguish(P, m, _load_weight(args.w1), _load_weight(args.w2), cfg.n,
                                                cfg.samples, rng, cfg.significance, cfg.workers)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    verdict = "distinguishable" if report.params["distinguishable"] else "indistinguishable"
    report.params["verdict"] = verdict
    report.params["expect"] = args.expect
    # the command passes when the verdict is the one asked for
    report.decision = "pass" if verdict == args.expect else "fail"
    print(verdict, file=sys.stderr)
    return _emit_report(cfg, report)


def cmd_check_hh(args) -> int:
    cfg = _config(args)
    sampler = _sampler(cfg, args)
    rng = np.random.default_rng(cfg.seed)
    try:
        report = typestats.check_high_homogeneity_sampled(sampler, None, cfg.n, args.k, args.trials, rng)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _emit_report(cfg, report)


def cmd_verify_lemmas(args) -> int:
    cfg = _config(args)
    try:
        report = lemmas.verify_lemmas(args.max_n, args.max_l, args.tables, cfg.seed % (2**32))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit_json(cfg, report)
    return 0 if report["status"] == "pass" else 1


def cmd_inspect(args) -> int:
    cfg = _config(args)
    try:
        M = finstruct.parse_structure(Path(args.input).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read structure: {exc}") from None
    if M.size > finstruct.MAX_BRUTE_SIZE:
        raise UsageError(f"size {M.size} exceeds {finstruct.MAX_BRUTE_SIZE}")
    group = finstruct.automorphism_group(M)
    max_arity = min(max(M.sig.max_arity, 1), finstruct.MAX_CANONICAL_ARITY)
    canon = finstruct.canonical_structure(M, max_arity)
    hh = {str(k): finstruct.is_highly_homogeneous_finite(M, k) for k in range(M.size + 1)}
    _emit_json(cfg, {
        "size": M.size,
        "signature": [[n, a] for n, a in M.sig.relations],
        "automorphisms": len(group),
        "orbit_counts": {str(k): len(canon.orbit_relations(k)) for k in range(1, max_arity + 1)},
        "highly_homogeneous": hh,
        "labeled_type": str(finstruct.labeled_type(M)),
        "unlabeled_type": str(finstruct.unlabeled_type(M)),
    })
    return 0


# ---------------------------------------------------------------------------
# parser


STRUCTURES = list(borel.BUILTIN_NAMES) + ["er"]


def _common(p, *, structure=True, sampling=True):
    if structure:
        p.add_argument("--structure", required=True, choices=STRUCTURES)
    p.add_argument("--seed", default=None, help="integer or 'fresh' (default: $%s or %d)" % (SEED_ENV, DEFAULT_SEED))
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    if sampling:
        p.add_argument("--measure", default="normal", choices=["normal", "uniform01"])
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--significance", type=float, default=typestats.DEFAULT_SIGNIFICANCE)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--p", type=float, default=None, help="edge probability for --structure er")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exchstruct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="count labeled types alpha_n of a reduct")
    p.add_argument("--structure", required=True, choices=[k.value for k in ReductKind])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sample", help="sample prefixes")
    _common(p)
    p.set_defaults(samples=1)
    p.add_argument("--weight", "-w", default=None, help="weight JSON to reweight the measure")
    p.add_argument("--format", choices=["json", "csv", "text"], default="json")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("test-uniqueness", help="chi-square test of uniform labeled types")
    _common(p)
    p.add_argument("--weight", "-w", default=None)
    p.set_defaults(func=cmd_test_uniqueness, format="json")

    p = sub.add_parser("test-invariance", help="homogeneity of types across index tuples")
    _common(p)
    p.add_argument("--weight", "-w", default=None)
    p.add_argument("--tuples", default=None, help="';'-separated index tuples, e.g. '0,1,2;2,0,1;5,1,3'")
    p.set_defaults(func=cmd_test_invariance, format="json")

    p = sub.add_parser("distinguish", help="two-sample test between two reweightings")
    _common(p)
    p.add_argument("--w1", "-w1", default=None)
    p.add_argument("--w2", "-w2", default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--p2", type=float, default=None)
    p.add_argument("--expect", choices=["distinguishable", "indistinguishable"], default="distinguishable")
    p.set_defaults(func=cmd_distinguish, format="json")

    p = sub.add_parser("check-hh", help="all k-subsets of sampled prefixes isomorphic?")
    _common(p)
    p.add_argument("--weight", "-w", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_check_hh, format="json")

    p = sub.add_parser("verify-lemmas", help="exact polynomial identity checks")
    _common(p, structure=False, sampling=False)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-l", type=int, default=3)
    p.add_argument("--tables", type=int, default=200)
    p.set_defaults(func=cmd_verify_lemmas, format="json")

    p = sub.add_parser("inspect", help="automorphisms and homogeneity of a structure file")
    _common(p, structure=False, sampling=False)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_inspect, format="json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"exchstruct {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
