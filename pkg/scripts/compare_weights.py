"""Contrast one-measure and many-measure behaviour on catalog structures.

For the order reduct every reweighting of the normal gives the same labeled
type frequencies; for the unary-split structure and for G(n, p) the
frequencies move with the weight (resp. p), so the measures are distinct.
"""

import argparse
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from exchstruct.borel import builtin
from exchstruct.finstruct import TypeId
from exchstruct.measures import StdNormal, Weight, reweight
from exchstruct.typestats import edge_counts, estimate_frequencies


@dataclass
class Config:
    samples: int = 100_000
    seed: int = 20240517
    masses: list = field(default_factory=lambda: ["1/10", "3/10", "1/2", "7/10", "9/10"])
    edge_probs: list = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7])


def main(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    m = StdNormal()
    print(f"{'mass on [0,inf)':>16} {'order: P(0<1)':>14} {'unary-split: P(R(0))':>21}")
    for u in cfg.masses:
        W = Weight.split_at(0.0, 1 - Fraction(u), Fraction(u))
        mw = reweight(m, W)
        order = estimate_frequencies(builtin("order"), mw, 2, cfg.samples, rng).frequency(TypeId("2:0100"))
        unary = estimate_frequencies(builtin("unary-split"), mw, 1, cfg.samples, rng).frequency(TypeId("1:1"))
        print(f"{u:>16} {order:>14.4f} {unary:>21.4f}")
    print()
    print(f"{'p':>6} {'edge density, n=50':>19}")
    for p in cfg.edge_probs:
        e, t = edge_counts(p, 50, max(1, cfg.samples // 500), rng)
        print(f"{p:>6} {e / t:>19.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    main(Config(samples=args.samples, seed=args.seed))
