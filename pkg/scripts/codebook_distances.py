#!/usr/bin/env python3
"""Distance accounting for the named codebooks under a channel fixture.

For each book: the spectrum of pairwise received-signal distances
||H (S_i - S_j)||_F^2, the minimum (which controls the high-SNR error
floor position), and the Eb/N0 where the union bound crosses 1e-3.
Useful when choosing subsets: books with the same size can sit >3 dB
apart purely through the pairs they keep.
"""

import argparse
import sys
from collections import Counter

import numpy as np

from pmvlc.analysis import ber_union_bound
from pmvlc.channel import FIXTURES
from pmvlc.scenarios import CODEBOOKS, named_codebook
from pmvlc.txcodec import PamConfig, pam_intensity


def spectrum(codebook, pam, H):
    blocks = []
    for q in range(1, codebook.size + 1):
        w = codebook.entries[q - 1].weight
        for m in range(1, pam.M + 1):
            a = pam_intensity(m, pam.M, w, pam.I)
            blocks.append(a * codebook.matrix_stack[q - 1])
    d2 = []
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            d2.append(float(((H @ (blocks[i] - blocks[j])) ** 2).sum()))
    return np.array(d2)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default="h02", choices=sorted(FIXTURES))
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--books", nargs="*", default=sorted(CODEBOOKS))
    args = ap.parse_args()

    channel = FIXTURES[args.fixture]()
    pam = PamConfig(M=args.m)
    grid = tuple(np.arange(80.0, 130.0, 0.25))
    for name in args.books:
        cb = named_codebook(name)
        d2 = spectrum(cb, pam, channel.H)
        bound = ber_union_bound(cb, pam, channel, grid)
        cross = next((db for db, v in zip(bound.ebn0_db, bound.values)
                      if v <= 1e-3), None)
        buckets = Counter(f"{v:.3e}" for v in d2)
        top = ", ".join(f"{k} x{c}" for k, c in
                        sorted(buckets.items(), key=lambda kv: float(kv[0]))[:4])
        print(f"{name:12s} Q={cb.size:<3d} min d2 {d2.min():.3e}  "
              f"bound@1e-3 {cross if cross else '>130'} dB")
        print(f"{'':12s} spectrum: {top}"
              + (" ..." if len(buckets) > 4 else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
