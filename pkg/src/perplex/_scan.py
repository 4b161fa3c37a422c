"""Grid sampling of zero sets of scalar fields on the plane.

Shared by the critical-locus sampler and the discriminant machinery:
node thresholding, sign-change bisection along grid edges, local-minimum
refinement for isolated zeros, and predictor-corrector tracing of
zero curves with caller-controlled step sizes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import optimize

Field = Callable[[np.ndarray], np.ndarray]  # (N,2) -> (N,)

_BISECT_ITERS = 60
_GRAD_FLOOR = 1e-12


def _bisect_edges(fn: Field, p_lo: np.ndarray, p_hi: np.ndarray) -> np.ndarray:
    """Vectorized bisection along segments whose endpoint values differ
    in sign.  Returns one root point per segment."""
    v_lo = fn(p_lo)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (p_lo + p_hi)
        v_mid = fn(mid)
        take_lo = np.sign(v_mid) == np.sign(v_lo)
        p_lo = np.where(take_lo[:, None], mid, p_lo)
        v_lo = np.where(take_lo, v_mid, v_lo)
        p_hi = np.where(take_lo[:, None], p_hi, mid)
    return 0.5 * (p_lo + p_hi)


def zero_points_on_grid(
    fn: Field,
    box: tuple[float, float, float, float],
    res: int = 65,
    tol: float = 1e-8,
    refine_minima: bool = True,
) -> tuple[np.ndarray, float]:
    """Sample the zero set of ``fn`` inside ``box`` on a res x res grid.

    Collects grid nodes where |fn| is tiny relative to the grid
    maximum, bisection roots along sign-changing grid edges, and (for
    zeros without sign change, e.g. touching minima) refined local
    minima of |fn|.  Returns (points, grid_max).
    """
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    vals = fn(nodes).reshape(res, res)
    grid_max = float(np.max(np.abs(vals)))
    thresh = tol * max(1.0, grid_max)

    points = [nodes[np.abs(vals).ravel() <= thresh]]

    sign = np.sign(vals)
    # vertical edges: (i, j) -- (i+1, j); horizontal: (i, j) -- (i, j+1)
    for axis in (0, 1):
        lo = sign[:-1, :] if axis == 0 else sign[:, :-1]
        hi = sign[1:, :] if axis == 0 else sign[:, 1:]
        change = (lo * hi) < 0
        ii, jj = np.nonzero(change)
        if ii.size == 0:
            continue
        if axis == 0:
            p_lo = np.column_stack([xs[ii], ys[jj]])
            p_hi = np.column_stack([xs[ii + 1], ys[jj]])
        else:
            p_lo = np.column_stack([xs[ii], ys[jj]])
            p_hi = np.column_stack([xs[ii], ys[jj + 1]])
        points.append(_bisect_edges(fn, p_lo, p_hi))

    if refine_minima and res >= 3:
        absv = np.abs(vals)
        core = absv[1:-1, 1:-1]
        is_min = np.ones_like(core, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                is_min &= core <= absv[1 + di : res - 1 + di, 1 + dj : res - 1 + dj]
        ii, jj = np.nonzero(is_min)
        for i, j in zip(ii + 1, jj + 1):
            if absv[i, j] > 0.25 * max(1.0, grid_max):
                continue
            start = np.array([xs[i], ys[j]])
            r = optimize.minimize(
                lambda p: abs(float(fn(p[None, :])[0])),
                start,
                method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400},
            )
            if abs(r.fun) <= thresh:
                points.append(r.x[None, :])

    chunks = [p for p in points if len(p)]
    all_pts = np.vstack(chunks) if chunks else np.empty((0, 2))
    if all_pts.size == 0:
        return np.empty((0, 2)), grid_max
    inside = (
        (all_pts[:, 0] >= x0)
        & (all_pts[:, 0] <= x1)
        & (all_pts[:, 1] >= y0)
        & (all_pts[:, 1] <= y1)
    )
    return all_pts[inside], grid_max


def trace_zero_curve(
    fn: Field,
    grad: Callable[[np.ndarray], np.ndarray],
    seed: np.ndarray,
    box: tuple[float, float, float, float],
    step_size: Callable[[np.ndarray, np.ndarray], float],
    max_steps: int = 4000,
    keep_going: Callable[[np.ndarray], bool] | None = None,
) -> np.ndarray:
    """Predictor-corrector walk along {fn = 0} from a seed point.

    ``step_size(point, tangent)`` lets the caller bound how far each
    step may move (e.g. so the image under another map advances at most
    one raster cell).  The walk runs in both directions, stops at the
    box boundary, on gradient collapse (curve crossings), when
    ``keep_going`` says to, or after ``max_steps`` per direction.
    """
    x0, x1, y0, y1 = box
    out = [np.asarray(seed, dtype=float)]

    for orient in (1.0, -1.0):
        p = np.asarray(seed, dtype=float).copy()
        for _ in range(max_steps):
            g = grad(p)
            gn = float(np.hypot(g[0], g[1]))
            if gn < _GRAD_FLOOR:
                break
            tangent = np.array([-g[1], g[0]]) / gn * orient
            s = float(step_size(p, tangent))
            if not np.isfinite(s) or s <= 0.0:
                break
            q = p + s * tangent
            # corrector: a few scalar Newton steps back onto the curve
            ok = True
            for _ in range(4):
                gq = grad(q)
                gq_n2 = float(gq[0] ** 2 + gq[1] ** 2)
                if gq_n2 < _GRAD_FLOOR**2:
                    ok = False
                    break
                q = q - float(fn(q[None, :])[0]) * gq / gq_n2
            if not ok:
                break
            if not (x0 <= q[0] <= x1 and y0 <= q[1] <= y1):
                break
            if keep_going is not None and not keep_going(q):
                break
            out.append(q.copy())
            p = q
    return np.array(out)
