"""
Boucles compilées (numba) pour le comptage de paires et le temps mort.

Les entrées sont des tableaux float64 triés ; aucune vérification ici,
elle est faite par l'appelant.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def pair_histogram(ta, tb, bin_width, tau_max, k_min, n_bins, exclude_zero):
    """
    Histogramme de toutes les paires (a, b) avec |t_b - t_a| ≤ tau_max.

    Bin d'une paire : floor((t_b - t_a) / bin_width) - k_min.
    exclude_zero : ignore les paires d'écart exactement nul (auto-paires).
    """
    hist = np.zeros(n_bins, dtype=np.int64)
    nb_ = tb.shape[0]
    lo = 0
    for i in range(ta.shape[0]):
        t = ta[i]
        while lo < nb_ and tb[lo] - t < -tau_max:
            lo += 1
        j = lo
        while j < nb_:
            dt = tb[j] - t
            if dt > tau_max:
                break
            if not (exclude_zero and dt == 0.0):
                k = int(np.floor(dt / bin_width)) - k_min
                if k < 0:
                    k = 0
                elif k >= n_bins:
                    k = n_bins - 1
                hist[k] += 1
            j += 1
    return hist


@nb.njit(cache=True)
def dead_time_mask(times, dead_time):
    """Garde un clic si au moins `dead_time` s'est écoulé depuis le dernier clic gardé."""
    n = times.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return keep
    keep[0] = True
    last = times[0]
    for i in range(1, n):
        dt = times[i] - last
        if dt > 0.0 and dt >= dead_time:
            keep[i] = True
            last = times[i]
    return keep
