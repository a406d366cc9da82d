"""Grid search of kernel size and threshold scale against reference masks."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kde import build_density_grid, extract_clusters, kde_stage
from .masks import MIOUSummary, mask_iou

__all__ = ["SweepResult", "param_sweep"]


@dataclass(frozen=True)
class SweepResult:
    sigmas: tuple
    ns: tuple
    cells: dict  # (sigma, n) -> MIOUSummary
    cluster_counts: dict  # sigma -> tuple of cluster counts, one per case

    @property
    def best(self):
        """``(sigma, n)`` with the highest mean IOU (first in sweep order on ties)."""
        return max(self.cells, key=lambda k: (self.cells[k].mean, -self._rank(k)))

    def _rank(self, key):
        return self.sigmas.index(key[0]) * len(self.ns) + self.ns.index(key[1])

    def table(self):
        """Mean IOU as a ``len(sigmas) x len(ns)`` array."""
        return np.array([[self.cells[s, n].mean for n in self.ns] for s in self.sigmas])


def _score_case(case, sigmas, ns, spec):
    trace, gt = case
    ious, counts = {}, {}
    for sigma in sigmas:
        grid = build_density_grid(trace, sigma, spec)
        clusters = extract_clusters(grid)
        counts[sigma] = len(clusters)
        for n in ns:
            mask = kde_stage(trace, sigma, n, spec, grid=grid, clusters=clusters).mask
            ious[sigma, n] = mask_iou(gt, mask)
    return ious, counts


def param_sweep(cases, sigma_list, n_list, workers=1) -> SweepResult:
    """Score every ``(sigma, n)`` over ``cases``, a list of ``(trace, gt_mask)``.

    Cases may be scored in parallel; results are gathered in case order so
    the output does not depend on ``workers``.
    """
    cases = list(cases)
    sigmas, ns = tuple(sigma_list), tuple(n_list)
    if not cases or not sigmas or not ns:
        raise ValidationError("sweep needs at least one case, sigma and n")
    if len(set(sigmas)) != len(sigmas) or len(set(ns)) != len(ns):
        raise ValidationError("sigma and n lists must not contain duplicates")

    def run(case):
        return _score_case(case, sigmas, ns, case[1].spec)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(run, cases))
    else:
        scored = [run(c) for c in cases]

    cells = {}
    for sigma in sigmas:
        for n in ns:
            ious = np.array([s[0][sigma, n] for s in scored])
            cells[sigma, n] = MIOUSummary(float(ious.mean()), float(ious.std()), len(ious), tuple(ious.tolist()))
    counts = {sigma: tuple(s[1][sigma] for s in scored) for sigma in sigmas}
    return SweepResult(sigmas, ns, cells, counts)
