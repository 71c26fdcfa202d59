"""Cut-elimination statistics on the generated corpus: steps, step kinds, completeness, sizes."""

from __future__ import annotations

import argparse
import collections
import statistics

from opdl.cutelim import Elimination, eliminate
from opdl.generators import cut_corpus
from opdl.opsem import OpSemRegistry


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=100)
    ap.add_argument("--depth", type=int, default=1, help="unfolding depth")
    ap.add_argument("--fuel", type=int, default=10_000)
    a = ap.parse_args()

    reg = OpSemRegistry()
    steps, sizes, kinds = [], [], collections.Counter()
    complete = exhausted = 0
    for d in cut_corpus(a.seed, a.size, reg):
        got = eliminate(d, a.depth, a.fuel, reg)
        if not isinstance(got, Elimination):
            exhausted += 1
            continue
        steps.append(len(got.trace))
        sizes.append(got.cf.size())
        kinds.update(s.step for _, s in got.trace.log)
        complete += got.complete
    print(f"derivations: {a.size}  complete: {complete}  stuck at open leaves: "
          f"{len(steps) - complete}  fuel exhausted: {exhausted}")
    if steps:
        print(f"steps: mean {statistics.mean(steps):.1f}  max {max(steps)}")
        print(f"cf size: mean {statistics.mean(sizes):.1f}  max {max(sizes)}")
    for k, n in sorted(kinds.items(), key=lambda kv: -kv[1]):
        print(f"  {k}: {n}")


if __name__ == "__main__":
    main()
