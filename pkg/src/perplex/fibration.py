"""Desk-scale verification of local triviality over the punctured disk.

The pipeline: sample the critical set of a polynomial map, push it to
the target plane, rasterize the resulting discriminant cloud into a
mask over a small disk, flood-fill the complement into components, and
probe each component with fiber counts.  Constancy of the count within
a component is the checkable content of the fibration statement.

The mask also blanks the target's zero-divisor cone.  The cone is not
part of the discriminant, but cutting along it only refines the
partition: each refined piece sits inside a true component, so count
constancy must still hold piecewise, and the refinement keeps probe
regions away from the directions where inverse images degenerate.  For
a field algebra the cone is the origin alone and nothing changes.

Fibers over a one-variable map are finite and found by a dense damped
Newton grid; two-variable fibers are surfaces, sampled as point clouds
by Gauss-Newton projection and summarized by a single-linkage
connectivity estimate (a diagnostic, not certified topology).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize, sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .algebra import Perplex, PerplexAlgebra
from .calculus import PolyMap
from .errors import DegenerateAlgebra, EmptyFiber, MaskTooCoarse
from .multivar import PerplexPolyN, partial_derivative
from .realpoly import RealPoly
from ._scan import trace_zero_curve, zero_points_on_grid
from .structure import AlgebraKind, classify

_TARGET_RES = 256
_SOURCE_RES = 65
_NEWTON_GRID = 64
_NEWTON_ITERS = 50
_FIBER_TOL = 1e-10
_DEDUPE_RADIUS = 1e-6
_MASK_DILATION = 2
_MAX_HALVINGS = 6
_CONSISTENCY_CELLS = 3.0
_CLOUD_SEEDS = 4096
_NULLVEC_SEEDS = 96


def _require_nondegenerate(alg: PerplexAlgebra) -> AlgebraKind:
    kind = classify(alg).kind
    if kind == AlgebraKind.DEGENERATE:
        raise DegenerateAlgebra(
            "fibration analysis needs a nondegenerate algebra; the"
            " discriminant of this parameter pair sits in the degenerate band"
        )
    return kind


def _cone_directions(alg: PerplexAlgebra, tol: float = 1e-9) -> list[np.ndarray]:
    """Unit directions spanning the zero-divisor cone of the algebra."""
    c1, c2, c3 = alg.zero_divisor_conic()
    scale = max(1.0, abs(c1), abs(c2), abs(c3))
    dirs: list[np.ndarray] = []
    # directions (1, t) with c1 + c2 t + c3 t^2 = 0
    if abs(c3) > tol * scale:
        disc = c2 * c2 - 4.0 * c1 * c3
        if disc >= 0.0:
            root = np.sqrt(disc)
            for t in ((-c2 + root) / (2 * c3), (-c2 - root) / (2 * c3)):
                d = np.array([1.0, t])
                dirs.append(d / np.linalg.norm(d))
    elif abs(c2) > tol * scale:
        d = np.array([1.0, -c1 / c2])
        dirs.append(d / np.linalg.norm(d))
        dirs.append(np.array([0.0, 1.0]))
    elif abs(c1) <= tol * scale:
        # conic vanishes identically; should not happen for valid params
        dirs.append(np.array([1.0, 0.0]))
        dirs.append(np.array([0.0, 1.0]))
    else:
        if abs(c3) <= tol * scale:
            dirs.append(np.array([0.0, 1.0]))
    # dedupe up to sign
    uniq: list[np.ndarray] = []
    for d in dirs:
        if not any(min(np.linalg.norm(d - e), np.linalg.norm(d + e)) < 1e-9 for e in uniq):
            uniq.append(d)
    return uniq


def _cone_samples(alg: PerplexAlgebra, eta: float, target_res: int) -> np.ndarray:
    dirs = _cone_directions(alg)
    if not dirs:
        return np.empty((0, 2))
    radii = np.linspace(-1.45 * eta, 1.45 * eta, 6 * target_res)
    return np.vstack([radii[:, None] * d[None, :] for d in dirs])


def _jacobian_polys(m: PolyMap) -> list[list[RealPoly]]:
    dim = 2 * m.nvars
    return [[m.u.pderiv(k) for k in range(dim)], [m.v.pderiv(k) for k in range(dim)]]


def _eval_jacobian(jp: list[list[RealPoly]], pts: np.ndarray) -> np.ndarray:
    """Batched Jacobians, shape (N, 2, dim)."""
    rows = [np.stack([p.eval_many(pts) for p in row], axis=1) for row in jp]
    return np.stack(rows, axis=1)


def critical_values(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    epsilon: float = 1.0,
    eta: float = 0.05,
    grid_res: int = _SOURCE_RES,
    target_res: int = _TARGET_RES,
    seed: int = 0,
) -> np.ndarray:
    """Discriminant cloud: the critical set pushed through the map.

    One-variable maps have a critical curve cut out by the norm of the
    derivative; it is seeded from a sign grid and traced with a step
    bounded so the image advances at most half a raster cell, which
    keeps the rasterized discriminant gap-free.  Maps in more variables
    fall back to least-squares sampling of the rank-drop system (a left
    null vector of the Jacobian), which yields a cloud without curve
    structure.  Points are returned inside a slightly padded eta box.
    """
    _require_nondegenerate(alg)
    expansion = f.to_polymap(alg)
    if f.nvars == 1:
        return _critical_values_curve(
            f, alg, expansion, epsilon, eta, grid_res, target_res
        )
    return _critical_values_nullvec(expansion, epsilon, eta, seed)


def _critical_values_curve(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    expansion: PolyMap,
    epsilon: float,
    eta: float,
    grid_res: int,
    target_res: int,
) -> np.ndarray:
    deriv = partial_derivative(f, 0).to_polymap(alg)
    c1, c2, c3 = alg.norm_coeffs
    du, dv = deriv.u, deriv.v
    norm_poly = du * du * c1 + du * dv * c2 + dv * dv * c3
    gx, gy = norm_poly.pderiv(0), norm_poly.pderiv(1)

    box = (-epsilon, epsilon, -epsilon, epsilon)
    seeds, _ = zero_points_on_grid(norm_poly.eval_many, box, grid_res)
    if seeds.size == 0:
        return np.empty((0, 2))

    jac_polys = _jacobian_polys(expansion)
    cell_target = 2.0 * eta / target_res
    cell_source = 2.0 * epsilon / (grid_res - 1)

    def grad(p: np.ndarray) -> np.ndarray:
        q = p[None, :]
        return np.array([float(gx.eval_many(q)[0]), float(gy.eval_many(q)[0])])

    def step(p: np.ndarray, tangent: np.ndarray) -> float:
        jac = _eval_jacobian(jac_polys, p[None, :])[0]
        speed = float(np.linalg.norm(jac @ tangent))
        raw = 0.45 * cell_target / max(speed, 1e-9)
        return float(np.clip(raw, 1e-6, cell_source))

    image_cap = 2.2 * eta

    def keep_going(p: np.ndarray) -> bool:
        img = expansion.eval_many(p[None, :])[0]
        return float(np.abs(img).max()) <= image_cap

    collected: list[np.ndarray] = []
    tree: cKDTree | None = None
    for seedpt in seeds:
        if tree is not None:
            if tree.query(seedpt)[0] < 0.7 * cell_source:
                continue
        path = trace_zero_curve(
            norm_poly.eval_many, grad, seedpt, box, step, keep_going=keep_going
        )
        collected.append(path)
        tree = cKDTree(np.vstack(collected))
    sources = np.vstack(collected)
    targets = expansion.eval_many(sources)
    keep = np.abs(targets).max(axis=1) <= 1.35 * eta
    return targets[keep]


def _critical_values_nullvec(
    expansion: PolyMap, epsilon: float, eta: float, seed: int
) -> np.ndarray:
    dim = 2 * expansion.nvars
    jac_polys = _jacobian_polys(expansion)

    def residual(z: np.ndarray) -> np.ndarray:
        x, v = z[:dim], z[dim:]
        jac = _eval_jacobian(jac_polys, x[None, :])[0]
        return np.concatenate([jac.T @ v, [v @ v - 1.0]])

    rng = np.random.Generator(np.random.Philox(seed))
    hits = []
    for _ in range(_NULLVEC_SEEDS):
        x0 = rng.uniform(-epsilon, epsilon, size=dim)
        v0 = rng.normal(size=2)
        v0 /= np.linalg.norm(v0)
        sol = optimize.least_squares(
            residual, np.concatenate([x0, v0]), max_nfev=400
        )
        if np.abs(sol.fun).max() > 1e-8:
            continue
        x = sol.x[:dim]
        if np.linalg.norm(x) > epsilon:
            continue
        hits.append(x)
    if not hits:
        return np.empty((0, 2))
    targets = expansion.eval_many(np.array(hits))
    keep = np.abs(targets).max(axis=1) <= 1.35 * eta
    return targets[keep]


def fiber_solve(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    c: Perplex,
    epsilon: float = 1.0,
    grid_res: int = _NEWTON_GRID,
) -> list[Perplex]:
    """All solutions of f(x) = c inside the epsilon ball (one variable).

    Newton iteration runs vectorized from a grid of seeds; converged
    points are kept when the residual max-norm is at most 1e-10, then
    deduplicated so reported points stay at least 1e-6 apart.
    """
    if f.nvars != 1:
        raise ValueError("finite fiber solving needs a one-variable map")
    expansion = f.to_polymap(alg)
    jac_polys = _jacobian_polys(expansion)
    target = np.array(c.as_tuple())

    axis = np.linspace(-epsilon, epsilon, grid_res)
    xs, ys = np.meshgrid(axis, axis)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    active = np.ones(len(pts), dtype=bool)
    for _ in range(_NEWTON_ITERS):
        if not active.any():
            break
        cur = pts[active]
        res = expansion.eval_many(cur) - target
        jac = _eval_jacobian(jac_polys, cur)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        ok = np.abs(det) > 1e-14
        step = np.zeros_like(cur)
        step[ok, 0] = (jac[ok, 1, 1] * res[ok, 0] - jac[ok, 0, 1] * res[ok, 1]) / det[ok]
        step[ok, 1] = (jac[ok, 0, 0] * res[ok, 1] - jac[ok, 1, 0] * res[ok, 0]) / det[ok]
        cur = cur - step
        pts[active] = cur
        # retire walkers that left a generous bounding box or lost
        # their Jacobian; they will not produce a valid root
        alive = ok & (np.abs(cur).max(axis=1) <= 4.0 * epsilon)
        idx = np.flatnonzero(active)
        active[idx[~alive]] = False
        done = np.abs(expansion.eval_many(cur) - target).max(axis=1) <= 1e-14
        active[idx[alive & done]] = False

    res = np.abs(expansion.eval_many(pts) - target).max(axis=1)
    good = (res <= _FIBER_TOL) & (np.linalg.norm(pts, axis=1) <= epsilon + 1e-12)
    roots = pts[good]
    if roots.size == 0:
        return []
    order = np.lexsort((roots[:, 1], roots[:, 0]))
    kept: list[np.ndarray] = []
    for p in roots[order]:
        if all(np.linalg.norm(p - q) >= _DEDUPE_RADIUS for q in kept):
            kept.append(p)
    return [Perplex(float(p[0]), float(p[1])) for p in kept]


@dataclass(frozen=True)
class ComponentReport:
    """Per-component probe summary."""

    label: int
    cell_count: int
    probes: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    constant: bool
    majority: int
    low_confidence: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "cellCount": self.cell_count,
            "probes": [list(p) for p in self.probes],
            "counts": list(self.counts),
            "constant": self.constant,
            "majority": self.majority,
            "lowConfidence": self.low_confidence,
        }


@dataclass(frozen=True)
class FibrationReport:
    """Local-triviality evidence over the masked target disk."""

    algebra_kind: str
    epsilon: float
    eta: float
    components: tuple[ComponentReport, ...]
    discriminant_samples: np.ndarray
    cone_samples: np.ndarray
    consistent: bool
    halvings: int
    target_res: int = _TARGET_RES

    def fiber_counts(self) -> list[list[int]]:
        return [list(c.counts) for c in self.components]

    def to_dict(self) -> dict:
        return {
            "algebraKind": self.algebra_kind,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "halvings": self.halvings,
            "consistent": self.consistent,
            "discriminantSamples": [
                [float(a), float(b)] for a, b in self.discriminant_samples
            ],
            "coneSampleCount": int(len(self.cone_samples)),
            "componentLabels": [c.label for c in self.components],
            "fiberCounts": [
                [[list(p), n] for p, n in zip(c.probes, c.counts)]
                for c in self.components
            ],
            "constant": [c.constant for c in self.components],
            "lowConfidence": [c.low_confidence for c in self.components],
        }


def _component_reports(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    eta: float,
    epsilon: float,
    probes_per_component: int,
    seed: int,
    disc: np.ndarray,
    cone: np.ndarray,
    target_res: int,
) -> tuple[list[ComponentReport], bool]:
    cell = 2.0 * eta / target_res
    centers_axis = -eta + (np.arange(target_res) + 0.5) * cell
    mask = np.zeros((target_res, target_res), dtype=bool)
    samples = np.vstack([disc, cone]) if len(cone) else disc
    if len(samples):
        ij = np.floor((samples + eta) / cell).astype(int)
        keep = (ij >= 0).all(axis=1) & (ij < target_res).all(axis=1)
        ij = ij[keep]
        mask[ij[:, 1], ij[:, 0]] = True
    offs = np.arange(-_MASK_DILATION, _MASK_DILATION + 1)
    disk_struct = (offs[:, None] ** 2 + offs[None, :] ** 2) <= _MASK_DILATION**2
    mask = ndimage.binary_dilation(mask, structure=disk_struct)

    cx, cy = np.meshgrid(centers_axis, centers_axis)
    inside = cx**2 + cy**2 <= eta**2
    labels, ncomp = ndimage.label(~mask & inside)

    rng = np.random.Generator(np.random.Philox(seed))
    reports: list[ComponentReport] = []
    consistent = True
    sample_tree = cKDTree(samples) if len(samples) else None
    for lab in range(1, ncomp + 1):
        cells = np.argwhere(labels == lab)
        if len(cells) < probes_per_component:
            raise MaskTooCoarse(
                f"component {lab} spans only {len(cells)} cells;"
                f" need {probes_per_component} probes"
            )
        pick = rng.choice(len(cells), size=probes_per_component, replace=False)
        probes, counts = [], []
        for row, col in cells[pick]:
            tgt = (float(centers_axis[col]), float(centers_axis[row]))
            probes.append(tgt)
            counts.append(len(fiber_solve(f, alg, Perplex(*tgt), epsilon)))
        tally = np.bincount(counts)
        majority = int(tally.argmax())
        constant = bool(all(n == counts[0] for n in counts))
        if not constant and sample_tree is not None:
            for tgt, n in zip(probes, counts):
                if n == majority:
                    continue
                if sample_tree.query(np.array(tgt))[0] > _CONSISTENCY_CELLS * cell:
                    consistent = False
        elif not constant:
            consistent = False

        border = labels == lab
        ring = ndimage.binary_dilation(border) & ~border
        ring_cells = int(ring.sum())
        masked_ring = int((ring & mask).sum())
        low_conf = ring_cells > 0 and masked_ring / ring_cells > 0.5
        reports.append(
            ComponentReport(
                label=lab,
                cell_count=int(len(cells)),
                probes=tuple(probes),
                counts=tuple(counts),
                constant=constant,
                majority=majority,
                low_confidence=low_conf,
            )
        )
    reports.sort(key=lambda r: -r.cell_count)
    return reports, consistent


def local_triviality_check(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    eta: float = 0.05,
    epsilon: float = 1.0,
    probes_per_component: int = 8,
    seed: int = 1,
    target_res: int = _TARGET_RES,
) -> FibrationReport:
    """Probe fiber-count constancy over the masked punctured disk.

    The discriminant cloud and the target zero-divisor cone are
    rasterized into a mask (dilated by two cells), the unmasked disk is
    flood-filled into components, and every component is probed with
    fiber counts at seeded random cells.  When a component is too thin
    to probe or a count disagreement appears away from the mask, eta is
    halved and the check rerun, up to six times.
    """
    if f.nvars != 1:
        raise ValueError("triviality probing with fiber counts needs one variable")
    kind = _require_nondegenerate(alg)
    if eta > epsilon / 10.0:
        raise ValueError("eta must be at most epsilon/10")

    last_error: MaskTooCoarse | None = None
    report: FibrationReport | None = None
    cur_eta = eta
    for halving in range(_MAX_HALVINGS + 1):
        disc = critical_values(
            f, alg, epsilon=epsilon, eta=cur_eta, target_res=target_res
        )
        cone = _cone_samples(alg, cur_eta, target_res)
        try:
            comps, consistent = _component_reports(
                f, alg, cur_eta, epsilon, probes_per_component,
                seed, disc, cone, target_res,
            )
        except MaskTooCoarse as exc:
            last_error = exc
            cur_eta *= 0.5
            continue
        report = FibrationReport(
            algebra_kind=kind.value,
            epsilon=epsilon,
            eta=cur_eta,
            components=tuple(comps),
            discriminant_samples=disc,
            cone_samples=cone,
            consistent=consistent,
            halvings=halving,
            target_res=target_res,
        )
        if consistent:
            return report
        cur_eta *= 0.5
    if report is not None:
        return report
    assert last_error is not None
    raise last_error


@dataclass(frozen=True)
class FiberCloud:
    """Point-cloud sample of a two-variable fiber.

    ``connectivity`` counts linkage components holding at least one
    percent of the cloud; smaller clusters are sampling strays near
    the ball boundary and are tallied in ``stray_count`` instead.
    """

    points: np.ndarray
    residual_max: float
    connectivity: int
    stray_count: int
    mean_nn_distance: float
    on_discriminant: bool

    def to_dict(self) -> dict:
        return {
            "pointCount": int(len(self.points)),
            "residualMax": float(self.residual_max),
            "connectivity": int(self.connectivity),
            "strayCount": int(self.stray_count),
            "meanNearestNeighbor": float(self.mean_nn_distance),
            "onDiscriminant": bool(self.on_discriminant),
        }


def fiber_cloud(
    f: PerplexPolyN,
    alg: PerplexAlgebra,
    c: Perplex,
    epsilon: float = 1.0,
    cloud_size: int = _CLOUD_SEEDS,
    seed: int = 1,
) -> FiberCloud:
    """Sample f^{-1}(c) inside the epsilon ball for a two-variable map.

    Random seeds in the ball are projected onto the level set by
    Gauss-Newton with the pseudo-inverse; converged points inside the
    ball form the cloud.  Connectivity is estimated by single linkage
    at five mean nearest-neighbor distances.  The target is flagged as
    on-discriminant when it sits within two raster cells of the sampled
    discriminant cloud.
    """
    if f.nvars != 2:
        raise ValueError("cloud sampling needs a two-variable map")
    _require_nondegenerate(alg)
    expansion = f.to_polymap(alg)
    jac_polys = _jacobian_polys(expansion)
    target = np.array(c.as_tuple())

    rng = np.random.Generator(np.random.Philox(seed))
    dirs = rng.normal(size=(cloud_size, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = epsilon * rng.uniform(0.0, 1.0, size=cloud_size) ** 0.25
    pts = radii[:, None] * dirs

    for _ in range(_NEWTON_ITERS):
        res = expansion.eval_many(pts) - target
        if np.abs(res).max() <= 1e-14:
            break
        jac = _eval_jacobian(jac_polys, pts)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(jac), res)
        pts = pts - step

    res = np.abs(expansion.eval_many(pts) - target).max(axis=1)
    good = (res <= _FIBER_TOL) & (np.linalg.norm(pts, axis=1) <= epsilon)
    cloud = pts[good]
    if len(cloud) == 0:
        raise EmptyFiber(
            "no Newton seed converged to the target inside the ball;"
            " the fiber is empty or outside reach"
        )

    if len(cloud) == 1:
        connectivity, strays, mean_nn = 1, 0, 0.0
    else:
        tree = cKDTree(cloud)
        nn = tree.query(cloud, k=2)[0][:, 1]
        mean_nn = float(nn.mean())
        pairs = tree.query_pairs(5.0 * mean_nn, output_type="ndarray")
        graph = sparse.csr_matrix(
            (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
            shape=(len(cloud), len(cloud)),
        )
        labels = connected_components(graph, directed=False)[1]
        sizes = np.bincount(labels)
        floor = max(4, int(0.01 * len(cloud)))
        connectivity = int((sizes >= floor).sum())
        strays = int(sizes[sizes < floor].sum())
        if connectivity == 0:
            # cloud too sparse for the size floor; fall back to raw count
            connectivity, strays = len(sizes), 0

    eta_ref = 0.05
    disc = critical_values(f, alg, epsilon=epsilon, eta=eta_ref, seed=seed)
    threshold = 2.0 * (2.0 * eta_ref / _TARGET_RES)
    on_disc = bool(
        len(disc) and cKDTree(disc).query(target)[0] <= threshold
    )
    return FiberCloud(
        points=cloud,
        residual_max=float(res[good].max()) if good.any() else float("nan"),
        connectivity=connectivity,
        stray_count=strays,
        mean_nn_distance=mean_nn,
        on_discriminant=on_disc,
    )
