from collections import namedtuple

import numpy as np


UsageStats = namedtuple('UsageStats', ['counts', 'perplexity'])


def perplexity(counts):
    counts = np.asarray(counts, dtype=np.float64)
    if (total := counts.sum()) == 0:
        return 0.0

    p = counts[counts > 0] / total
    return float(np.exp(-np.sum(p*np.log(p))))


def usage_stats(grids, V):
    counts = np.zeros(V, dtype=np.int64)
    for g in grids:
        g = np.asarray(g).ravel()
        if g.size and (g.min() < 0 or g.max() >= V):
            raise ValueError(f'Index grid holds values outside [0, {V})')

        counts += np.bincount(g, minlength=V)

    return UsageStats(counts, perplexity(counts))
