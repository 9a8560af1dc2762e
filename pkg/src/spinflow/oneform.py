"""Upper bounds on the C^0 norm of a closed 1-form generating H^1(Y; Z).

A Dirichlet domain with face pairings ``g_i`` and integers ``phi(g_i)`` is
triangulated by geodesic tetrahedra (face centres, edge midpoints, coning to
the basepoint).  A function ``F`` is fixed by its values at the vertices,
subject to ``F(g_i x) = F(x) + phi(g_i)``, and extended linearly on each
tetrahedron.  On a tetrahedron with circumradius ``R`` the Lipschitz constant
of the extension is at most ``cosh(R)`` times the gradient of the affine
interpolant on the horizontal simplex spanned by the centred vertices.  The
maximum over tetrahedra is minimised by line searches along random directions.

Points live in the hyperboloid model ``{<x, x> = -1, x_0 > 0}`` with
``<x, y> = -x_0 y_0 + x_1 y_1 + x_2 y_2 + x_3 y_3``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ORIGIN = np.array([1.0, 0.0, 0.0, 0.0])
LORENTZ = np.diag([-1.0, 1.0, 1.0, 1.0])
_HYP_TOL = 1e-10
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class GeometryError(ValueError):
    pass


# --------------------------------------------------------------------------
# hyperboloid model
# --------------------------------------------------------------------------

def lorentz(x, y):
    """Lorentzian inner product over the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def minkowski_norm(x) -> np.ndarray:
    """``||x|| = sqrt(-<x, x>)`` for timelike ``x``."""
    return np.sqrt(-lorentz(x, x))


def is_hpoint(x, tol: float = _HYP_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(x[0] > 0 and abs(lorentz(x, x) + 1.0) <= tol * max(1.0, x[0] ** 2))


def check_hpoint(x, tol: float = _HYP_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (4,) or not is_hpoint(x, tol):
        raise GeometryError(f"not a point of the hyperboloid: {x}")
    return x


def hpoint(x1: float, x2: float, x3: float) -> np.ndarray:
    """Point of the hyperboloid above ``(x1, x2, x3)``."""
    return np.array([math.sqrt(1.0 + x1 * x1 + x2 * x2 + x3 * x3), x1, x2, x3])


def minkowski_dist(x, y) -> np.ndarray:
    """``arccosh(-<x, y>)``, computed as ``2 asinh(|x - y|_L / 2)`` for accuracy."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    q = np.maximum(lorentz(d, d), 0.0)
    return 2.0 * np.arcsinh(np.sqrt(q) / 2.0)


def radial_project(x) -> np.ndarray:
    """``P(x) = x / ||x||`` for ``<x, x> < 0`` and ``x_0 > 0``."""
    x = np.asarray(x, dtype=float)
    q = lorentz(x, x)
    if np.any(q >= 0) or np.any(x[..., 0] <= 0):
        raise GeometryError("radial projection needs a future timelike vector")
    return x / np.sqrt(-q)[..., None]


def reflection(u) -> np.ndarray:
    """Matrix of ``x -> x - 2 <x, u> / <u, u> u`` for spacelike ``u``."""
    u = np.asarray(u, dtype=float)
    uu = lorentz(u, u)
    if uu <= 0:
        raise GeometryError("reflection vector must be spacelike")
    return np.eye(4) - 2.0 * np.outer(u, LORENTZ @ u) / uu


def boost(axis: int, s: float) -> np.ndarray:
    """Hyperbolic translation by ``s`` along coordinate axis ``1..3``."""
    m = np.eye(4)
    c, sh = math.cosh(s), math.sinh(s)
    m[0, 0] = m[axis, axis] = c
    m[0, axis] = m[axis, 0] = sh
    return m


def boost_to(x) -> np.ndarray:
    """Pure boost taking the origin to the hyperboloid point ``x``."""
    x = check_hpoint(x, 1e-8)
    p = x[1:]
    m = np.eye(4)
    m[0, 0] = x[0]
    m[0, 1:] = p
    m[1:, 0] = p
    m[1:, 1:] += np.outer(p, p) / (1.0 + x[0])
    return m


def is_isometry(g, tol: float = 1e-9) -> bool:
    g = np.asarray(g, dtype=float)
    return bool(np.allclose(g.T @ LORENTZ @ g, LORENTZ, atol=tol * max(1.0, np.abs(g).max() ** 2)) and g[0, 0] > 0)


# --------------------------------------------------------------------------
# tetrahedra
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeodesicTet:
    vertices: np.ndarray  # (4, 4), one hyperboloid point per row
    circumcenter: Optional[np.ndarray] = None
    radius: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (4, 4):
            raise GeometryError("a tetrahedron has four vertices in R^4")
        for p in v:
            check_hpoint(p)
        if abs(np.linalg.det(v)) <= 1e-14 * np.prod(np.linalg.norm(v, axis=1)):
            raise GeometryError("tetrahedron vertices are linearly dependent")
        object.__setattr__(self, "vertices", v)


def circumcenter(tet: GeodesicTet) -> tuple[np.ndarray, float]:
    """Point equidistant from the four vertices, and the common distance."""
    v = tet.vertices
    rows = (v[1:] - v[0]) @ LORENTZ  # <z, v_i - v_0> = 0
    _, sv, vt = np.linalg.svd(rows)
    z = vt[-1]
    q = lorentz(z, z)
    if q >= -1e-14 * float(np.dot(z, z)):
        raise GeometryError("no circumcenter: the bisector line does not meet the hyperboloid")
    c = z / math.sqrt(-q)
    if c[0] < 0:
        c = -c
    d = minkowski_dist(v, c)
    if np.ptp(d) > 1e-10 * max(1.0, d.max()):
        raise GeometryError("no circumcenter: equidistance check failed")
    return c, float(d.mean())


def center_tet(tet: GeodesicTet) -> GeodesicTet:
    """Image of ``tet`` under the reflection exchanging its circumcentre and the origin."""
    c, R = circumcenter(tet)
    u = c - ORIGIN
    if lorentz(u, u) <= 1e-28:
        return GeodesicTet(tet.vertices, ORIGIN.copy(), R)
    m = reflection(u)
    w = tet.vertices @ m.T
    # renormalise against rounding
    w = w / minkowski_norm(w)[:, None]
    return GeodesicTet(w, ORIGIN.copy(), R)


def _gradient_map(centered: GeodesicTet) -> np.ndarray:
    """3x4 matrix sending vertex values to the gradient of the affine interpolant."""
    p = centered.vertices[:, 1:]
    D = p[1:] - p[0]
    if abs(np.linalg.det(D)) <= 1e-14 * max(1.0, np.abs(D).max()) ** 3:
        raise GeometryError("degenerate tetrahedron: projected vertices are coplanar")
    Dinv = np.linalg.inv(D)  # grad = Dinv @ (f[1:] - f[0])
    return np.hstack([-Dinv.sum(axis=1, keepdims=True), Dinv])


def lipschitz_bound(tet: GeodesicTet, values: Sequence[float]) -> float:
    """``cosh(R) |grad|`` of the linear extension of ``values`` on ``tet``."""
    if tet.radius is None or tet.circumcenter is None or not np.allclose(tet.circumcenter, ORIGIN, atol=1e-9):
        tet = center_tet(tet)
    g = _gradient_map(tet) @ np.asarray(values, dtype=float)
    return float(math.cosh(tet.radius) * np.linalg.norm(g))


def phor_inverse_stretch(a: float, q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Length ratio ``|w|_eucl / |dP(w)|_hyp`` at horizontal points ``(sqrt(1 + a^2), q)``.

    ``q`` and ``w`` have shape ``(N, 3)``; the ratio is the stretch of ``P_hor^{-1}``.
    """
    q = np.atleast_2d(q)
    w = np.atleast_2d(w)
    x = np.column_stack([np.full(len(q), math.sqrt(1.0 + a * a)), q])
    wv = np.column_stack([np.zeros(len(w)), w])
    nx = minkowski_norm(x)
    dp = wv / nx[:, None] + x * (lorentz(x, wv) / nx**3)[:, None]
    return np.linalg.norm(w, axis=1) / np.sqrt(lorentz(dp, dp))


# --------------------------------------------------------------------------
# domains and their triangulation
# --------------------------------------------------------------------------

@dataclass
class Face:
    vertices: tuple  # indices into the domain vertex list, cyclic order
    partner: int
    matrix: np.ndarray  # maps this face onto the partner face
    phi: int


@dataclass
class DirichletDomain:
    vertices: np.ndarray
    faces: list
    basepoint: np.ndarray
    name: str = "domain"

    def validate(self) -> None:
        for p in self.vertices:
            check_hpoint(p, 1e-8)
        check_hpoint(self.basepoint, 1e-8)
        for i, f in enumerate(self.faces):
            if not is_isometry(f.matrix):
                raise GeometryError(f"face {i}: pairing matrix does not preserve the Lorentzian form")
            j = f.partner
            if not 0 <= j < len(self.faces):
                raise GeometryError(f"face {i}: partner {j} out of range")
            back = self.faces[j]
            if back.partner != i:
                raise GeometryError(f"face {i}: pairing with face {j} is not symmetric")
            if back.phi != -f.phi:
                raise GeometryError(f"face {i}: phi values of paired faces must be opposite")
            if not np.allclose(back.matrix @ f.matrix, np.eye(4), atol=1e-8) and i != j:
                raise GeometryError(f"faces {i}, {j}: pairing matrices are not mutually inverse")
            img = self.vertices[list(f.vertices)] @ f.matrix.T
            tgt = self.vertices[list(back.vertices)]
            for p in img:
                if np.min(np.linalg.norm(tgt - p, axis=1)) > 1e-7 * max(1.0, np.abs(p).max()):
                    raise GeometryError(f"face {i}: pairing does not map its vertices onto face {j}")


def load_domain(path) -> DirichletDomain:
    doc = json.loads(Path(path).read_text())
    return parse_domain(doc)


def parse_domain(doc: dict) -> DirichletDomain:
    def vec(v):
        return np.array([float(x) for x in v])

    verts = np.array([vec(v) for v in doc["vertices"]])
    faces = [
        Face(tuple(int(i) for i in f["vertices"]), int(f["partner"]),
             np.array([[float(x) for x in row] for row in f["matrix"]]), int(f["phi"]))
        for f in doc["faces"]
    ]
    dom = DirichletDomain(verts, faces, vec(doc["basepoint"]), doc.get("name", "domain"))
    dom.validate()
    return dom


def domain_document(dom: DirichletDomain) -> dict:
    r = lambda x: repr(float(x))
    return {
        "name": dom.name,
        "vertices": [[r(x) for x in v] for v in dom.vertices],
        "basepoint": [r(x) for x in dom.basepoint],
        "faces": [
            {"vertices": list(f.vertices), "partner": f.partner,
             "matrix": [[r(x) for x in row] for row in f.matrix], "phi": f.phi}
            for f in dom.faces
        ],
    }


class _OffsetUnionFind:
    """Union-find storing ``value(x) = value(root) + offset(x)``."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.offset = [0] * n

    def find(self, x: int) -> tuple[int, int]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root, acc = x, 0
        for y in reversed(path):
            acc += self.offset[y]
            self.offset[y] = acc
            self.parent[y] = root
        return root, (self.offset[path[0]] if path else 0)

    def union(self, x: int, y: int, delta: int) -> None:
        """Impose ``value(y) = value(x) + delta``."""
        rx, ox = self.find(x)
        ry, oy = self.find(y)
        if rx == ry:
            if oy - ox != delta:
                raise GeometryError(
                    f"infeasible equivariance constraints: cycle through points {x}, {y} has offset {oy - ox - delta}"
                )
            return
        # value(ry) = value(rx) + ox + delta - oy
        self.parent[ry] = rx
        self.offset[ry] = ox + delta - oy


@dataclass
class DomainComplex:
    points: np.ndarray  # (P, 4) triangulation vertices
    tets: np.ndarray  # (T, 4) point indices
    roots: np.ndarray  # (P,) index of the free value slot for each point
    offsets: np.ndarray  # (P,) integer offsets: value = free[root] + offset
    n_free: int
    radii: np.ndarray
    gradient_maps: np.ndarray  # (T, 3, 4)
    point_kind: list = field(default_factory=list)

    def point_values(self, free: np.ndarray) -> np.ndarray:
        return np.asarray(free, dtype=float)[self.roots] + self.offsets

    def tet_bounds(self, free: np.ndarray) -> np.ndarray:
        vals = self.point_values(free)[self.tets]  # (T, 4)
        grads = np.einsum("tij,tj->ti", self.gradient_maps, vals)
        return np.cosh(self.radii) * np.linalg.norm(grads, axis=1)

    def objective(self, free: np.ndarray) -> float:
        return float(self.tet_bounds(free).max())

    def euler_characteristic(self) -> int:
        faces, edges = set(), set()
        for t in self.tets.tolist():
            for i in range(4):
                faces.add(tuple(sorted(t[:i] + t[i + 1:])))
                for j in range(i + 1, 4):
                    edges.add(tuple(sorted((t[i], t[j]))))
        verts = set(self.tets.ravel().tolist())
        return len(verts) - len(edges) + len(faces) - len(self.tets)


def triangulate(dom: DirichletDomain, tol: float = 1e-8) -> DomainComplex:
    """Cone the subdivided boundary to the basepoint and glue paired faces."""
    pts: list[np.ndarray] = []
    kinds: list[str] = []

    def add(p, kind):
        p = np.asarray(p, dtype=float)
        for i, q in enumerate(pts):
            if np.linalg.norm(q - p) <= tol * max(1.0, np.abs(p).max()):
                return i
        pts.append(p)
        kinds.append(kind)
        return len(pts) - 1

    V = dom.vertices
    vid = [add(v, "vertex") for v in V]
    base = add(dom.basepoint, "basepoint")
    tets = []
    face_points: list[list[int]] = []
    for f in dom.faces:
        cyc = list(f.vertices)
        centre = add(radial_project(V[cyc].sum(axis=0)), "face")
        mine = [vid[i] for i in cyc] + [centre]
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            mid = add(radial_project(V[a] + V[b]), "edge")
            mine.append(mid)
            tets.append((base, centre, vid[a], mid))
            tets.append((base, centre, mid, vid[b]))
        face_points.append(sorted(set(mine)))
    P = np.array(pts)
    uf = _OffsetUnionFind(len(P))
    for i, f in enumerate(dom.faces):
        tgt = face_points[f.partner]
        for x in face_points[i]:
            gx = f.matrix @ P[x]
            d = np.linalg.norm(P[tgt] - gx, axis=1)
            j = int(np.argmin(d))
            if d[j] > 1e-7 * max(1.0, np.abs(gx).max()):
                raise GeometryError(f"face {i}: pairing image of a subdivision point is not on face {f.partner}")
            uf.union(x, tgt[j], f.phi)
    roots, offs = [], []
    for x in range(len(P)):
        r, o = uf.find(x)
        roots.append(r)
        offs.append(o)
    uniq = {r: i for i, r in enumerate(sorted(set(roots)))}
    T = np.array(tets, dtype=int)
    radii, maps = [], []
    for t_idx, t in enumerate(T):
        try:
            ct = center_tet(GeodesicTet(P[t]))
        except GeometryError as exc:
            raise GeometryError(f"tetrahedron {t_idx}: {exc}; try a different basepoint") from None
        radii.append(ct.radius)
        maps.append(_gradient_map(ct))
    return DomainComplex(
        points=P,
        tets=T,
        roots=np.array([uniq[r] for r in roots]),
        offsets=np.array(offs, dtype=float),
        n_free=len(uniq),
        radii=np.array(radii),
        gradient_maps=np.array(maps),
        point_kind=kinds,
    )


# --------------------------------------------------------------------------
# optimisation
# --------------------------------------------------------------------------

@dataclass
class LipschitzReport:
    per_tet: list
    bound: float
    rounded_bound: float
    iterations: int
    seed: int
    log: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "rounded_bound": self.rounded_bound,
            "iterations": self.iterations,
            "seed": self.seed,
            "per_tet": self.per_tet,
            "values": self.values,
        }

    def write(self, json_path, csv_path=None) -> None:
        Path(json_path).write_text(json.dumps(self.to_json(), indent=1))
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "bound"])
                w.writerows(self.log)


def round_up(x: float, digits: int = 4) -> float:
    """Smallest multiple of ``10^-digits`` that is >= ``x``."""
    scale = 10**digits
    return math.ceil(x * scale - 1e-9) / scale if x * scale - math.floor(x * scale) > 1e-9 else math.floor(x * scale) / scale


def _line_min(fun, x0: float, f0: float, width: float, iters: int = 40) -> tuple[float, float]:
    """Golden-section search for a convex function of one variable around 0."""
    lo, hi = -width, width
    # widen until both ends are worse than the centre
    for _ in range(30):
        if fun(lo) > f0 and fun(hi) > f0:
            break
        lo, hi = 2 * lo, 2 * hi
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def optimize(cx: DomainComplex, iterations: int = 1000, seed: int = 0, init: Optional[np.ndarray] = None,
             log_every: int = 1) -> LipschitzReport:
    """Random-line descent on the max-over-tetrahedra Lipschitz bound."""
    rng = np.random.default_rng(seed)
    free = rng.normal(size=cx.n_free) if init is None else np.asarray(init, dtype=float).copy()
    best = cx.objective(free)
    log = [(0, best)]
    for it in range(1, iterations + 1):
        d = rng.normal(size=cx.n_free)
        d /= np.linalg.norm(d)
        t, ft = _line_min(lambda s: cx.objective(free + s * d), 0.0, best, 0.1 * max(1.0, best))
        if ft < best:
            free = free + t * d
            best = cx.objective(free)
        if it % log_every == 0 or it == iterations:
            log.append((it, best))
    per = cx.tet_bounds(free).tolist()
    return LipschitzReport(per, best, round_up(best), iterations, seed, log, free.tolist())


def lower_bound_geodesic(data) -> float:
    """``max |[gamma]| / l(gamma)`` over the closed geodesics in the data."""
    g = data.geodesics
    if len(g) == 0:
        return 0.0
    return float(np.max(np.abs(g.free_class) / g.length))


def lower_bound_thurston(th: float, vol: float) -> float:
    """``pi Th(Y) / vol(Y)``."""
    if th < 0 or vol <= 0:
        raise ValueError("need th >= 0 and vol > 0")
    return math.pi * th / vol


def cube_domain(s: float, phi: tuple = (1, 0, 0), basepoint: Optional[np.ndarray] = None) -> DirichletDomain:
    """Cube ``|x_i / x_0| <= s`` with opposite faces paired by reflections.

    A small synthetic domain with a known answer: any admissible ``F`` with
    ``phi = (1, 0, 0)`` has Lipschitz constant at least ``1 / (2 artanh s)``.
    """
    corners = [(i, j, k) for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)]
    verts = np.array([radial_project(np.array([1.0, s * i, s * j, s * k])) for i, j, k in corners])
    idx = {c: n for n, c in enumerate(corners)}
    faces = []
    for axis in range(3):
        for side in (-1, 1):
            cyc2 = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
            cyc = []
            for a, b in cyc2:
                c = [0, 0, 0]
                c[axis] = side
                others = [o for o in range(3) if o != axis]
                c[others[0]], c[others[1]] = a, b
                cyc.append(idx[tuple(c)])
            m = np.eye(4)
            m[axis + 1, axis + 1] = -1.0
            partner = 2 * axis + (1 if side == -1 else 0)
            faces.append(Face(tuple(cyc), partner, m, phi[axis] if side == -1 else -phi[axis]))
    bp = ORIGIN.copy() if basepoint is None else basepoint
    dom = DirichletDomain(verts, faces, bp, f"cube_{s}")
    dom.validate()
    return dom
