"""Level-set microgeometry and per-element phase classification.

Sign convention: ``φ > 0`` is phase 2, ``φ <= 0`` is phase 1 (a sample
sitting exactly on the interface belongs to phase 1).  Points are arrays of
shape ``(..., 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLevelSet

PHASE1, PHASE2, CUT = 0, 1, 2
ETA_SNAP = 1e-6
GAUSS_2x2 = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(3.0)


class LevelSet:
    def __call__(self, X):
        raise NotImplementedError

    def gradient(self, X):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Circle(LevelSet):
    """Disc of phase 2: ``φ = r - |X - center|``."""

    center: tuple
    radius: float

    def __call__(self, X):
        d = np.asarray(X, dtype=float) - np.asarray(self.center, dtype=float)
        return self.radius - np.hypot(d[..., 0], d[..., 1])

    def gradient(self, X):
        d = np.asarray(X, dtype=float) - np.asarray(self.center, dtype=float)
        r = np.hypot(d[..., 0], d[..., 1])[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            g = -d / r
        return np.where(r > 0, g, 0.0)


@dataclass(frozen=True, eq=False)
class Plane(LevelSet):
    """Half-plane of phase 2 on the side ``normal`` points to."""

    point: tuple
    normal: tuple

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))

    def __call__(self, X):
        return (np.asarray(X, dtype=float) - self.point) @ self.normal

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(self.normal, X.shape).copy()

    def area_fractions(self, lower, size):
        """Exact phase-2 area fractions of congruent boxes."""
        lower = np.atleast_2d(lower)
        corners = lower[:, None, :] + np.array([[0, 0], [1, 0], [1, 1], [0, 1]]) * np.asarray(size)
        v = self(corners)
        frac = np.where(np.all(v > 0, axis=1), 1.0, 0.0)
        for e in np.flatnonzero(np.any(v > 0, axis=1) & np.any(v <= 0, axis=1)):
            frac[e] = clipped_area_fraction(self, ElementBox(lower[e, 0], lower[e, 1], size[0], size[1]))
        return frac


class Union(LevelSet):
    """Phase 2 wherever any part is phase 2 (pointwise maximum)."""

    def __init__(self, *parts):
        self.parts = parts

    def _stack(self, X):
        return np.stack([p(X) for p in self.parts])

    def __call__(self, X):
        return self._stack(X).max(axis=0)

    def gradient(self, X):
        k = self._stack(X).argmax(axis=0)
        grads = np.stack([p.gradient(X) for p in self.parts])
        return np.take_along_axis(grads, k[None, ..., None], axis=0)[0]


class Intersection(Union):
    """Phase 2 only where every part is phase 2 (pointwise minimum)."""

    def __call__(self, X):
        return self._stack(X).min(axis=0)

    def gradient(self, X):
        k = self._stack(X).argmin(axis=0)
        grads = np.stack([p.gradient(X) for p in self.parts])
        return np.take_along_axis(grads, k[None, ..., None], axis=0)[0]


class Complement(LevelSet):
    def __init__(self, inner):
        self.inner = inner

    def __call__(self, X):
        return -self.inner(X)

    def gradient(self, X):
        return -self.inner.gradient(X)


class Sampled(LevelSet):
    """Level set given on a regular grid, bilinearly interpolated.

    ``values[j, i]`` is the sample at ``(x0 + i dx, y0 + j dy)``.  Points
    outside the grid use the nearest boundary cell's bilinear extension.
    """

    def __init__(self, values, x0, y0, dx, dy):
        self.values = np.asarray(values, dtype=float)
        self.x0, self.y0, self.dx, self.dy = float(x0), float(y0), float(dx), float(dy)
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise ValueError("sampled level set needs at least a 2x2 grid")

    @classmethod
    def from_file(cls, path):
        """Read ``nx ny x0 y0 dx dy`` followed by ``ny*nx`` row-major values."""
        with open(path) as fh:
            tokens = fh.read().split()
        nx, ny = int(tokens[0]), int(tokens[1])
        x0, y0, dx, dy = map(float, tokens[2:6])
        vals = np.array(tokens[6:], dtype=float)
        if vals.size != nx * ny:
            raise ValueError(f"expected {nx * ny} samples, found {vals.size}")
        return cls(vals.reshape(ny, nx), x0, y0, dx, dy)

    def _locate(self, X):
        X = np.asarray(X, dtype=float)
        ny, nx = self.values.shape
        s = (X[..., 0] - self.x0) / self.dx
        t = (X[..., 1] - self.y0) / self.dy
        i = np.clip(np.floor(s).astype(int), 0, nx - 2)
        j = np.clip(np.floor(t).astype(int), 0, ny - 2)
        return i, j, s - i, t - j

    def __call__(self, X):
        i, j, a, b = self._locate(X)
        v = self.values
        return ((1 - a) * (1 - b) * v[j, i] + a * (1 - b) * v[j, i + 1]
                + a * b * v[j + 1, i + 1] + (1 - a) * b * v[j + 1, i])

    def gradient(self, X):
        i, j, a, b = self._locate(X)
        v = self.values
        gx = ((1 - b) * (v[j, i + 1] - v[j, i]) + b * (v[j + 1, i + 1] - v[j + 1, i])) / self.dx
        gy = ((1 - a) * (v[j + 1, i] - v[j, i]) + a * (v[j + 1, i + 1] - v[j, i + 1])) / self.dy
        return np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class Phase1:
    pass


@dataclass(frozen=True)
class Phase2:
    pass


@dataclass(frozen=True, eq=False)
class Cut:
    eta: float
    normal: np.ndarray


@dataclass(frozen=True)
class ElementBox:
    """Axis-aligned element ``[x0, x0+dx] × [y0, y0+dy]``."""

    x0: float
    y0: float
    dx: float
    dy: float


def _subsample_points(lower, size, n_sub):
    t = (np.arange(n_sub) + 0.5) / n_sub
    gx, gy = np.meshgrid(t, t, indexing="xy")
    offs = np.stack([gx.ravel() * size[0], gy.ravel() * size[1]], axis=-1)
    return lower[:, None, :] + offs[None]


def classify_elements(ls, lower, size, n_sub=32, chunk=4096):
    """Batch classification of congruent boxes with lower-left corners ``lower``.

    Planar level sets get exact (clipped) volume fractions; all others are
    subsampled on an ``n_sub × n_sub`` midpoint grid.  Returns
    ``(kind, eta, normal)`` with ``kind`` in {PHASE1, PHASE2, CUT}, ``eta``
    the phase-2 fraction and ``normal`` a unit 3-vector (zero for pure
    elements).
    """
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    size = np.asarray(size, dtype=float)
    exact = getattr(ls, "area_fractions", None)
    n = lower.shape[0]
    kind = np.empty(n, dtype=np.int8)
    eta = np.empty(n)
    normal = np.zeros((n, 3))
    for start in range(0, n, chunk):
        sl = slice(start, min(n, start + chunk))
        pts = _subsample_points(lower[sl], size, n_sub)
        frac = exact(lower[sl], size) if exact else (ls(pts) > 0.0).mean(axis=1)
        k = np.where(frac == 0.0, PHASE1, np.where(frac == 1.0, PHASE2, CUT)).astype(np.int8)
        k[(k == CUT) & (frac < ETA_SNAP)] = PHASE1
        k[(k == CUT) & (frac > 1.0 - ETA_SNAP)] = PHASE2
        kind[sl] = k
        eta[sl] = frac
        cut = np.flatnonzero(k == CUT)
        if cut.size:
            grads = ls.gradient(pts[cut])
            g = grads.mean(axis=1)
            gn = np.linalg.norm(g, axis=-1)
            scale = np.max(np.abs(grads), axis=(1, 2))
            bad = ~(gn > 1e-12 * np.maximum(scale, 1e-300))
            if np.any(bad):
                raise DegenerateLevelSet(
                    f"vanishing level-set gradient on cut element {start + cut[bad][0]}"
                )
            normal[start + cut, :2] = g / gn[:, None]
    return kind, eta, normal


def classify_element(ls, box, n_sub=32):
    """``Phase1()``, ``Phase2()`` or ``Cut(eta, normal)`` for one element."""
    kind, eta, normal = classify_elements(ls, [[box.x0, box.y0]], (box.dx, box.dy), n_sub)
    if kind[0] == PHASE1:
        return Phase1()
    if kind[0] == PHASE2:
        return Phase2()
    return Cut(float(eta[0]), normal[0])


def volume_fraction(ls, box, n_sub):
    """Phase-2 area fraction by ``n_sub × n_sub`` midpoint sampling."""
    if n_sub < 1:
        raise ValueError("n_sub must be at least 1")
    pts = _subsample_points(np.array([[box.x0, box.y0]]), (box.dx, box.dy), n_sub)
    return float(np.mean(ls(pts) > 0.0))


def phase_at(ls, X):
    """Phase index (0 or 1) at points; ``φ = 0`` resolves to phase 1."""
    return (np.asarray(ls(X)) > 0.0).astype(np.int8)


def element_center_phase(ls, box):
    return int(phase_at(ls, np.array([box.x0 + 0.5 * box.dx, box.y0 + 0.5 * box.dy])))


def gauss_points(box, quadrature=GAUSS_2x2):
    xi = np.asarray(quadrature, dtype=float)
    cx = box.x0 + 0.5 * box.dx
    cy = box.y0 + 0.5 * box.dy
    return np.stack([cx + 0.5 * box.dx * xi[:, 0], cy + 0.5 * box.dy * xi[:, 1]], axis=-1)


def gauss_phase_map(ls, box, quadrature=GAUSS_2x2):
    """Phase index at each quadrature point given in reference coordinates."""
    return phase_at(ls, gauss_points(box, quadrature))


def clipped_area_fraction(plane, box):
    """Exact phase-2 area fraction of a box cut by a plane (test oracle).

    Clips the rectangle against the half-plane ``φ > 0`` and applies the
    shoelace formula.
    """
    poly = [(box.x0, box.y0), (box.x0 + box.dx, box.y0),
            (box.x0 + box.dx, box.y0 + box.dy), (box.x0, box.y0 + box.dy)]
    out = []
    for k in range(4):
        p, q = np.array(poly[k]), np.array(poly[(k + 1) % 4])
        fp, fq = plane(p), plane(q)
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    if len(out) < 3:
        return 0.0
    xy = np.array(out)
    area = 0.5 * abs(np.dot(xy[:, 0], np.roll(xy[:, 1], -1)) - np.dot(xy[:, 1], np.roll(xy[:, 0], -1)))
    return area / (box.dx * box.dy)
