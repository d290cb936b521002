"""Distinct values of the weighted coefficient sum on finer and finer simplex grids."""

import argparse
import random
from dataclasses import dataclass

from exchstruct.lemmas import SymCoeffTable, random_nonconstant_table, spread_check


@dataclass
class Config:
    tables: int = 5
    resolutions: tuple = (5, 10, 20, 40)
    seed: int = 0


def main(cfg: Config):
    rnd = random.Random(cfg.seed)
    print("table".ljust(24) + "".join(f"r={r}".rjust(8) for r in cfg.resolutions))
    squares = SymCoeffTable(2, 1, {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1})
    rows = [("same-sign, n=2", squares), ("constant 1/2", SymCoeffTable.constant(2, 1, "1/2"))]
    for j in range(cfg.tables):
        n, l = rnd.randint(1, 4), rnd.randint(1, 2)
        rows.append((f"random n={n} l={l}", random_nonconstant_table(n, l, rnd)))
    for name, A in rows:
        print(name.ljust(24) + "".join(str(spread_check(A, r)).rjust(8) for r in cfg.resolutions))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tables", type=int, default=Config.tables)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    main(Config(tables=args.tables, seed=args.seed))
