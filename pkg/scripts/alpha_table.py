"""Print alpha_n (number of labeled types) for every reduct, n = 1..max_n."""

import argparse
import math
from dataclasses import dataclass

from exchstruct.reducts import ReductKind
from exchstruct.typestats import MAX_ENUMERATE_N, enumerate_types


@dataclass
class Config:
    max_n: int = 6


def main(cfg: Config):
    kinds = list(ReductKind)
    print("n".rjust(3) + "".join(k.value.rjust(13) for k in kinds) + "n!".rjust(8))
    for n in range(1, cfg.max_n + 1):
        row = [enumerate_types(k, n)[1] for k in kinds]
        print(str(n).rjust(3) + "".join(str(a).rjust(13) for a in row) + str(math.factorial(n)).rjust(8))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=Config.max_n, choices=range(1, MAX_ENUMERATE_N + 1))
    main(Config(ap.parse_args().max_n))
