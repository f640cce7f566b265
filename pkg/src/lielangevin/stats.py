"""2-D histograms and distribution distances shared by the samplers, the
PDE solver and the equilibrium candidates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2_dist

# 2-point Gauss-Legendre nodes on [0, 1]
_GL_NODES = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass
class Histogram2D:
    edges_x: np.ndarray
    edges_y: np.ndarray
    counts: np.ndarray  # integer matrix, shape (nx, ny)
    total: int
    overflow: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.edges_x) <= 0) or np.any(np.diff(self.edges_y) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if int(self.counts.sum()) != self.total:
            raise ValueError("counts do not sum to total")

    def to_dict(self):
        return {
            "edges_x": self.edges_x.tolist(),
            "edges_y": self.edges_y.tolist(),
            "counts": self.counts.astype(int).tolist(),
            "total": int(self.total),
            "overflow": int(self.overflow),
        }


def bin_samples(samples, edges_x, edges_y) -> Histogram2D:
    """Bin (x, y) sample pairs; out-of-range samples land in the overflow tally."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        samples = samples.reshape(0, 2)
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    edges_x = np.asarray(edges_x, dtype=float)
    edges_y = np.asarray(edges_y, dtype=float)
    counts, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=[edges_x, edges_y])
    counts = counts.astype(np.int64)
    total = int(counts.sum())
    return Histogram2D(edges_x, edges_y, counts, total, overflow=len(samples) - total)


def density_cell_masses(density, edges_x, edges_y) -> np.ndarray:
    """Integrate a density callable over every cell with 2x2 Gauss quadrature."""
    ex = np.asarray(edges_x, float)
    ey = np.asarray(edges_y, float)
    dx = np.diff(ex)
    dy = np.diff(ey)
    xs = ex[:-1, None] + dx[:, None] * _GL_NODES[None, :]  # (nx, 2)
    ys = ey[:-1, None] + dy[:, None] * _GL_NODES[None, :]  # (ny, 2)
    X = xs[:, :, None, None]
    Y = ys[None, None, :, :]
    vals = density(np.broadcast_to(X, (len(dx), 2, len(dy), 2)),
                   np.broadcast_to(Y, (len(dx), 2, len(dy), 2)))
    cell = np.asarray(vals).mean(axis=(1, 3)) * dx[:, None] * dy[None, :]
    return cell


def total_variation(h: Histogram2D, density) -> float:
    """TV distance between a histogram and a density (or second histogram).

    Both sides are normalized over the histogram's domain. The density is
    integrated per cell with 2-point Gauss quadrature on each axis; passing
    another Histogram2D with identical edges compares count fractions, and
    the result is then symmetric in the two arguments.
    """
    if h.total == 0:
        raise ValueError("histogram is empty")
    p_hat = h.counts / h.total
    if isinstance(density, Histogram2D):
        if density.total == 0:
            raise ValueError("histogram is empty")
        if not (np.array_equal(h.edges_x, density.edges_x)
                and np.array_equal(h.edges_y, density.edges_y)):
            raise ValueError("histograms must share bin edges")
        q = density.counts / density.total
    else:
        q = density_cell_masses(density, h.edges_x, h.edges_y)
        s = q.sum()
        if s <= 0:
            raise ValueError("density has no mass on the histogram domain")
        q = q / s
    return 0.5 * float(np.abs(p_hat - q).sum())


def chi_square_test(h: Histogram2D, density, min_expected: float = 5.0):
    """Pearson chi-square of histogram counts against a density.

    Cells with expected count below min_expected are pooled into one class.
    Returns (statistic, dof, p_value). One dof is subtracted for the
    normalization fit.
    """
    if h.total == 0:
        raise ValueError("histogram is empty")
    if isinstance(density, Histogram2D):
        q = density.counts / density.total
    else:
        q = density_cell_masses(density, h.edges_x, h.edges_y)
        q = q / q.sum()
    expected = q.ravel() * h.total
    observed = h.counts.ravel().astype(float)
    main = expected >= min_expected
    stat = float(((observed[main] - expected[main]) ** 2 / expected[main]).sum())
    dof = int(main.sum())
    rest_e = expected[~main].sum()
    if rest_e > 0:
        stat += float((observed[~main].sum() - rest_e) ** 2 / rest_e)
        dof += 1
    dof -= 1
    return stat, dof, float(_chi2_dist.sf(stat, dof))
