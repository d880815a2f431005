"""Polytopal meshes with cells of all dimensions and simplicial submeshes.

Geometry conventions:

* every cell of dimension >= 1 carries an ordered frame of pairwise
  orthogonal columns with exact rational entries (not normalized, so that
  all frame coordinates stay rational); the column order *is* the cell's
  orientation;
* top-dimensional cells use the ambient standard basis as frame, so their
  metric is the identity;
* frame coordinates of a point x are ``<x - x_f, u_i> / |u_i|^2``;
* the orientation of f' relative to f is the sign of the determinant, in
  f's frame, of (outward direction, frame of f').

Built-in families generate exact rational vertices; JSON meshes round-trip
losslessly (rationals serialized as 'p/q' strings).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .scalars import QQ, ZERO, ONE, rat, rat_str, to_float

RHO_DEFAULT = 0.01  # minimal admissible interior-ball ratio for x_f


class MeshError(Exception):
    """Invalid mesh topology, geometry, or schema."""


# ---------------------------------------------------------------------------
# exact vector helpers (tuples of mpq)


def vsub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def vscale(a, s):
    return tuple(x * s for x in a)


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), ZERO)


def det(rows):
    """Exact determinant by cofactor/elimination on small matrices."""
    n = len(rows)
    M = [list(r) for r in rows]
    sign = ONE
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c]), None)
        if p is None:
            return ZERO
        if p != c:
            M[c], M[p] = M[p], M[c]
            sign = -sign
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    out = sign
    for i in range(n):
        out = out * M[i][i]
    return out


def gram_schmidt(vectors):
    """Orthogonalize without normalizing; keeps entries rational."""
    basis = []
    for v in vectors:
        w = v
        for u in basis:
            g = dot(u, u)
            w = vsub(w, vscale(u, dot(w, u) / g))
        if any(w):
            basis.append(w)
    return basis


@dataclass(frozen=True)
class Frame:
    """Orthogonal rational frame with origin; empty for 0-cells."""

    origin: tuple
    columns: tuple  # tuple of length-n tuples, pairwise orthogonal

    @property
    def dim(self) -> int:
        return len(self.columns)

    @property
    def ambient_dim(self) -> int:
        return len(self.origin)

    def metric(self):
        """Squared column lengths (diagonal metric in frame coordinates)."""
        return tuple(dot(u, u) for u in self.columns)

    def detg(self):
        out = ONE
        for g in self.metric():
            out = out * g
        return out

    def coords(self, point):
        """Frame coordinates of an ambient point (exact)."""
        rel = vsub(point, self.origin)
        return tuple(dot(rel, u) / dot(u, u) for u in self.columns)

    def point(self, coords):
        p = self.origin
        for u, c in zip(self.columns, coords):
            p = vadd(p, vscale(u, c))
        return p

    def inclusion_into(self, other: "Frame"):
        """Affine map (A, c) with other_coords = A @ self_coords + c.

        Valid when the span of self's columns is contained in other's span.
        """
        return _inclusion_cached(self, other)


from functools import lru_cache


@lru_cache(maxsize=100000)
def _inclusion_cached(frame: "Frame", other: "Frame"):
    go = other.metric()
    A = [
        [dot(u_other, u_self) / go[i] for u_self in frame.columns]
        for i, u_other in enumerate(other.columns)
    ]
    c = other.coords(frame.origin)
    return A, c


@dataclass
class SimplexCell:
    """A submesh simplex: ordered global vertex ids, host cell, orientation."""

    dim: int
    vertices: tuple
    parent: tuple  # (dim, id) of host cell
    orientation: int = 1  # sign of vertex order relative to the parent frame


@dataclass
class Cell:
    dim: int
    id: int
    vertex_ids: tuple
    frame: Frame
    x_f: tuple
    h: float
    submesh: list = field(default_factory=list)
    boundary: list = field(default_factory=list)  # [(id of (d-1)-cell, sign)]
    on_boundary: bool = False

    @property
    def key(self):
        return (self.dim, self.id)


class PolytopalMesh:
    """Immutable after construction; all queries read-only."""

    def __init__(self, n: int, vertices, cells):
        self.n = n
        self.vertices = [tuple(rat(x) for x in v) for v in vertices]
        self.cells = {d: list(cs) for d, cs in cells.items()}
        for d in range(n + 1):
            self.cells.setdefault(d, [])
        self._by_key = {(c.dim, c.id): c for d in self.cells for c in self.cells[d]}
        self._down = {}
        self._build_closure()
        self._mark_boundary()
        self.caches = {}

    # -- construction helpers ------------------------------------------------

    def _build_closure(self):
        for d in sorted(self.cells):
            for c in self.cells[d]:
                self._down[c.key] = {d: {c.id}}
                if d == 0:
                    continue
                sub = self._down[c.key]
                for fid, _ in c.boundary:
                    for dd, ids in self._down[(d - 1, fid)].items():
                        sub.setdefault(dd, set()).update(ids)

    def _mark_boundary(self):
        if self.n == 0:
            return
        count = {}
        for c in self.cells[self.n]:
            for fid, _ in c.boundary:
                count[fid] = count.get(fid, 0) + 1
        boundary_faces = {fid for fid, k in count.items() if k == 1}
        for fid in boundary_faces:
            face = self.cell(self.n - 1, fid)
            face.on_boundary = True
            for dd, ids in self._down[face.key].items():
                for i in ids:
                    self.cell(dd, i).on_boundary = True

    # -- queries ---------------------------------------------------------

    def cell(self, dim: int, cid: int) -> Cell:
        return self._by_key[(dim, cid)]

    def delta(self, f: Cell, d: int):
        """Cells of dimension d contained in f (the incidence set)."""
        ids = sorted(self._down[f.key].get(d, ()))
        return [self.cell(d, i) for i in ids]

    def boundary_cells(self, f: Cell):
        return [(self.cell(f.dim - 1, fid), sign) for fid, sign in f.boundary]

    def h_max(self) -> float:
        return max(c.h for c in self.cells[self.n])

    def vertex(self, vid: int):
        return self.vertices[vid]

    # -- diagnostics -------------------------------------------------------

    def regularity_report(self):
        """(min inradius/diameter over simplices, min h_F/h_f over cells)."""
        min_inradius = math.inf
        min_hratio = math.inf
        for d in range(1, self.n + 1):
            for c in self.cells[d]:
                for s in c.submesh:
                    pts = [self.vertices[v] for v in s.vertices]
                    hF = _diameter(pts)
                    min_inradius = min(min_inradius, _inradius(pts) / hF)
                    min_hratio = min(min_hratio, hF / c.h)
        return min_inradius, min_hratio

    def validate(self, rho: float = RHO_DEFAULT):
        """Structural and geometric invariants; raises MeshError on failure."""
        for d in range(1, self.n + 1):
            for c in self.cells[d]:
                if not c.boundary:
                    raise MeshError(f"cell ({d},{c.id}) has empty boundary")
                _check_partition(self, c)
                if d >= 2:
                    _check_dd_zero(self, c)
                _check_interior_point(self, c, rho)
        for c in self.cells[self.n]:
            vol = sum(abs(simplex_volume([self.vertices[v] for v in s.vertices]))
                      for s in c.submesh)
            signed = abs(sum(simplex_volume_in_frame(self, s, c) for s in c.submesh))
            if vol != signed:
                raise MeshError(f"submesh of cell ({self.n},{c.id}) is not consistently oriented")
        return self

    # -- test hook ---------------------------------------------------------

    def _with_flipped_sign(self, dim: int, cid: int, face_id: int) -> "PolytopalMesh":
        """Copy of the mesh with one relative orientation flipped (fault injection)."""
        import copy

        other = copy.deepcopy(self)
        other.caches = {}
        cell = other.cell(dim, cid)
        cell.boundary = [(fid, -s if fid == face_id else s) for fid, s in cell.boundary]
        return other


# ---------------------------------------------------------------------------
# geometry


def _diameter(points) -> float:
    best = ZERO
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d2 = dot(vsub(points[i], points[j]), vsub(points[i], points[j]))
            if d2 > best:
                best = d2
    return math.sqrt(to_float(best))


def simplex_volume(points):
    """Unsigned d-volume of a simplex given by d+1 ambient points (exact^2 root).

    Returns the exact rational volume when the simplex is axis-aligned enough
    for the Gram determinant to be a perfect square, otherwise a float.
    """
    d = len(points) - 1
    if d == 0:
        return ONE
    edges = [vsub(p, points[0]) for p in points[1:]]
    gram = [[dot(a, b) for b in edges] for a in edges]
    g = det(gram)
    from .scalars import sqrt_exact, factorial

    root = sqrt_exact(g)
    if root is not None:
        return root / factorial(d)
    return math.sqrt(to_float(g)) / float(factorial(d))


def simplex_volume_in_frame(mesh: PolytopalMesh, s: SimplexCell, cell: Cell):
    """Signed coordinate volume of s in cell's frame (exact)."""
    pts = [cell.frame.coords(mesh.vertices[v]) for v in s.vertices]
    edges = [vsub(p, pts[0]) for p in pts[1:]]
    from .scalars import factorial

    return det(edges) / factorial(cell.dim)


def _inradius(points) -> float:
    d = len(points) - 1
    vol = simplex_volume(points)
    vol = to_float(vol) if not isinstance(vol, float) else vol
    area = 0.0
    for i in range(d + 1):
        facet = [p for j, p in enumerate(points) if j != i]
        fv = simplex_volume(facet)
        area += to_float(fv) if not isinstance(fv, float) else fv
    return d * vol / area


def _check_partition(mesh, c):
    """Boundary simplices of S_h(f) must tile the boundary cells' submeshes."""
    count = {}
    for s in c.submesh:
        for i in range(len(s.vertices)):
            face = tuple(v for j, v in enumerate(s.vertices) if j != i)
            count[frozenset(face)] = count.get(frozenset(face), 0) + 1
    outer = {f for f, k in count.items() if k == 1}
    covered = set()
    for fid, _ in c.boundary:
        fc = mesh.cell(c.dim - 1, fid)
        for s in fc.submesh:
            key = frozenset(s.vertices)
            if key not in outer:
                raise MeshError(
                    f"submesh of cell ({c.dim},{c.id}) does not conform to boundary cell {fid}")
            covered.add(key)
    if covered != outer:
        raise MeshError(f"boundary of cell ({c.dim},{c.id}) is not a union of (d-1)-cells")


def _check_dd_zero(mesh, c):
    """For each (d-2)-cell e of f: sum over faces f' of eps_ff' * eps_f'e = 0."""
    acc = {}
    for fid, s1 in c.boundary:
        face = mesh.cell(c.dim - 1, fid)
        for eid, s2 in face.boundary:
            acc[eid] = acc.get(eid, 0) + s1 * s2
    bad = {e: v for e, v in acc.items() if v != 0}
    if bad:
        raise MeshError(f"dd != 0 at cell ({c.dim},{c.id}): {bad}")


def _check_interior_point(mesh, c, rho):
    r = _ball_radius(mesh, c)
    if r <= rho * c.h:
        raise MeshError(
            f"x_f of cell ({c.dim},{c.id}) has interior ball radius {r:.3e} < rho*h")


def _ball_radius(mesh, c) -> float:
    """Distance from x_f to the affine hulls of the boundary cells, in f."""
    if c.dim == 0:
        return math.inf
    best = math.inf
    x = c.frame.coords(c.x_f)
    g = c.frame.metric()
    for fid, _ in c.boundary:
        face = mesh.cell(c.dim - 1, fid)
        if c.dim == 1:
            p = c.frame.coords(face.x_f)
            dist2 = sum(to_float((a - b) * (a - b) * gi) for a, b, gi in zip(x, p, g))
        else:
            p = c.frame.coords(face.x_f)
            rel = vsub(x, p)
            cols = [c.frame.coords(vadd(face.frame.origin, u)) for u in face.frame.columns]
            base = c.frame.coords(face.frame.origin)
            cols = [vsub(col, base) for col in cols]
            # orthogonalize face directions inside f's (diagonal) metric
            def mdot(a, b):
                return sum((ai * bi * gi for ai, bi, gi in zip(a, b, g)), ZERO)

            for u in gram_schmidt_metric(cols, mdot):
                rel = vsub(rel, vscale(u, mdot(rel, u) / mdot(u, u)))
            dist2 = to_float(mdot(rel, rel))
        best = min(best, math.sqrt(max(dist2, 0.0)))
    return best


def gram_schmidt_metric(vectors, mdot):
    basis = []
    for v in vectors:
        w = v
        for u in basis:
            w = vsub(w, vscale(u, mdot(w, u) / mdot(u, u)))
        if any(w):
            basis.append(w)
    return basis


def relative_orientation(mesh: PolytopalMesh, f: Cell, fp: Cell) -> int:
    """+1 iff the orientation induced on fp by f matches fp's own orientation."""
    for fid, sign in f.boundary:
        if fid == fp.id and fp.dim == f.dim - 1:
            return sign
    raise MeshError(f"cell ({fp.dim},{fp.id}) is not a boundary cell of ({f.dim},{f.id})")


def induced_sign(frame_f: Frame, point_inside, frame_sub: Frame) -> int:
    """Sign of det_f-frame[outward direction at sub, columns of sub's frame].

    ``point_inside`` is any point of the sub-entity; outwardness comes from
    x_f being interior to the convex cell f.
    """
    m = frame_f.coords(point_inside)
    cols = [vsub(frame_f.coords(vadd(frame_sub.origin, u)), frame_f.coords(frame_sub.origin))
            for u in frame_sub.columns]
    rows = [[m[i]] + [col[i] for col in cols] for i in range(frame_f.dim)]
    d = det(rows)
    if d == 0:
        raise MeshError("degenerate orientation determinant")
    return 1 if d > 0 else -1


# ---------------------------------------------------------------------------
# builder


def _canonical_frame(vertices, simplex_pts, ambient_n, top=False):
    """Frame for a cell: ambient basis if top-dimensional, else Gram-Schmidt."""
    d = len(simplex_pts) - 1
    if top:
        cols = tuple(tuple(ONE if i == j else ZERO for i in range(ambient_n)) for j in range(ambient_n))
        return cols
    edges = [vsub(p, simplex_pts[0]) for p in simplex_pts[1:]]
    basis = gram_schmidt(edges)
    if len(basis) != d:
        raise MeshError("degenerate cell: affine span has wrong dimension")
    return tuple(tuple(u) for u in basis)


class MeshBuilder:
    """Assembles a PolytopalMesh from top cells plus optional explicit faces.

    Top cells are given either as simplices (vertex tuples) or as convex
    polygon loops (2D). Lower-dimensional cells are derived: polygon edges
    from consecutive loop pairs, simplex facets by vertex subsets.
    """

    def __init__(self, n: int, vertices):
        self.n = n
        self.vertices = [tuple(rat(x) for x in v) for v in vertices]
        self.tops = []  # (kind, data, submesh_override)

    def add_simplex(self, vids):
        self.tops.append(("simplex", tuple(vids), None))

    def add_polygon(self, loop, split: str = "fan"):
        if self.n != 2:
            raise MeshError("polygon cells only supported for n = 2")
        self.tops.append(("polygon", tuple(loop), split))

    def _new_vertex(self, p):
        self.vertices.append(tuple(p))
        return len(self.vertices) - 1

    def build(self) -> PolytopalMesh:
        n = self.n
        tri_of_top = []
        loops = []
        for kind, data, split in self.tops:
            if kind == "simplex":
                tri_of_top.append([tuple(data)])
                loops.append(tuple(data))
            else:
                loop = data
                if len(loop) == 3:
                    tri_of_top.append([tuple(loop)])
                elif len(loop) == 4 and split == "diagonal":
                    a, b, c, d = loop
                    tri_of_top.append([(a, b, c), (a, c, d)])
                else:
                    centroid = self.vertices[loop[0]]
                    for v in loop[1:]:
                        centroid = vadd(centroid, self.vertices[v])
                    centroid = vscale(centroid, QQ(1, len(loop)))
                    cv = self._new_vertex(centroid)
                    tri_of_top.append(
                        [(loop[i], loop[(i + 1) % len(loop)], cv) for i in range(len(loop))])
                loops.append(loop)

        # enumerate cells of each dimension
        facesets = {d: {} for d in range(n + 1)}  # frozenset(vids) -> id

        def face_id(d, vids):
            key = frozenset(vids)
            if key not in facesets[d]:
                facesets[d][key] = len(facesets[d])
            return facesets[d][key]

        for vid in range(len(self.vertices)):
            pass  # vertices of lower cells are registered below

        top_ids = []
        for (kind, data, split), loop in zip(self.tops, loops):
            top_ids.append(face_id(n, loop))
            if kind == "simplex":
                for i in range(len(data)):
                    sub = tuple(v for j, v in enumerate(data) if j != i)
                    face_id(n - 1, sub)
                    if n == 3:
                        for ii in range(3):
                            e = tuple(v for jj, v in enumerate(sub) if jj != ii)
                            face_id(1, e)
                    for v in sub:
                        face_id(0, (v,))
            else:
                m = len(loop)
                for i in range(m):
                    e = (loop[i], loop[(i + 1) % m])
                    face_id(1, e)
                    face_id(0, (loop[i],))

        # vertex sets per cell, sorted ids
        cells = {d: [None] * len(facesets[d]) for d in range(n + 1)}
        vsets = {d: {} for d in range(n + 1)}
        for d in facesets:
            for key, cid in facesets[d].items():
                vsets[d][cid] = tuple(sorted(key))

        def make_cell(d, cid, submesh_tris=None):
            vids = vsets[d][cid]
            pts = [self.vertices[v] for v in vids]
            if d == 0:
                frame = Frame(pts[0], ())
                return Cell(0, cid, vids, frame, pts[0], 0.0, submesh=[
                    SimplexCell(0, vids, (0, cid), 1)])
            if submesh_tris is None:
                if d == 1:
                    submesh_tris = [vids]
                elif len(vids) == d + 1:
                    submesh_tris = [vids]
                else:
                    raise MeshError("non-simplex lower cell without explicit submesh")
            # x_f: centroid of the largest-volume submesh simplex
            best = None
            for tri in submesh_tris:
                vol = abs_simplex_gram(self.vertices, tri)
                if best is None or vol > best[0] or (vol == best[0] and tri < best[1]):
                    best = (vol, tri)
            bp = best[1]
            x_f = self.vertices[bp[0]]
            for v in bp[1:]:
                x_f = vadd(x_f, self.vertices[v])
            x_f = vscale(x_f, QQ(1, len(bp)))
            first = sorted(submesh_tris)[0]
            cols = _canonical_frame(self.vertices, [self.vertices[v] for v in first], n,
                                    top=(d == n))
            frame = Frame(x_f, cols)
            h = _diameter(pts)
            cell = Cell(d, cid, vids, frame, x_f, h)
            for tri in sorted(submesh_tris):
                coords = [frame.coords(self.vertices[v]) for v in tri]
                edges = [vsub(p, coords[0]) for p in coords[1:]]
                sgn = 1 if det(edges) > 0 else -1
                cell.submesh.append(SimplexCell(d, tuple(tri), (d, cid), sgn))
            return cell

        for cid in range(len(facesets[0])):
            cells[0][cid] = make_cell(0, cid)
        for d in range(1, n):
            for key, cid in facesets[d].items():
                cells[d][cid] = make_cell(d, cid)
        for (kind, data, split), loop, tid, tris in zip(
                self.tops, loops, top_ids, tri_of_top):
            cells[n][tid] = make_cell(n, tid, submesh_tris=tris)

        # boundary lists with signs
        for d in range(1, n + 1):
            for cell in cells[d]:
                if cell is None:
                    raise MeshError("unreferenced cell slot")
                subs = []
                for key, cid in facesets[d - 1].items():
                    if key <= frozenset(cell.vertex_ids) and _face_of(
                            cells, d, cell, vsets[d - 1][cid]):
                        subs.append(cid)
                for cid in sorted(subs):
                    fp = cells[d - 1][cid]
                    sgn = induced_sign(cell.frame, fp.x_f, Frame(fp.x_f, fp.frame.columns))
                    cell.boundary.append((cid, sgn))
        mesh = PolytopalMesh(n, self.vertices, cells)
        return mesh


def _face_of(cells, d, cell, face_vids) -> bool:
    """Is the (d-1)-cell with those vertices geometrically a face of cell?

    For the builder's convex cells it suffices that the face's vertices all
    appear in the cell and its affine hull does not meet the cell interior,
    which for our derived faces reduces to a submesh-facet containment test.
    """
    fset = frozenset(face_vids)
    for s in cell.submesh:
        for i in range(len(s.vertices)):
            facet = frozenset(v for j, v in enumerate(s.vertices) if j != i)
            if fset <= facet or (len(fset) <= len(facet) and fset == facet):
                return True
    # faces may be unions of several submesh facets only through their own
    # submesh; the builder never produces that case for derived faces
    return False


def abs_simplex_gram(vertices, vids):
    pts = [vertices[v] for v in vids]
    edges = [vsub(p, pts[0]) for p in pts[1:]]
    if not edges:
        return ONE
    return det([[dot(a, b) for b in edges] for a in edges])


# ---------------------------------------------------------------------------
# built-in families


@dataclass(frozen=True)
class MeshFamily:
    name: str  # triangular | cartesian-polygonal | hexagonal-dominant
    level: int
    n: int = 2


def build_family(family: MeshFamily) -> PolytopalMesh:
    if family.level < 0:
        raise MeshError("refinement level must be >= 0")
    if family.name == "triangular" and family.n == 2:
        mesh = _triangular_2d(family.level)
    elif family.name == "triangular" and family.n == 3:
        mesh = _kuhn_3d(family.level)
    elif family.name == "cartesian-polygonal" and family.n == 2:
        mesh = _cartesian_2d(family.level)
    elif family.name == "hexagonal-dominant" and family.n == 2:
        mesh = _hexagonal_2d(family.level)
    else:
        raise MeshError(f"unsupported family {family.name!r} for n={family.n}")
    return mesh.validate()


def _grid_vertices(m: int, n: int):
    verts = []
    if n == 2:
        for j in range(m + 1):
            for i in range(m + 1):
                verts.append((QQ(i, m), QQ(j, m)))
    else:
        for k in range(m + 1):
            for j in range(m + 1):
                for i in range(m + 1):
                    verts.append((QQ(i, m), QQ(j, m), QQ(k, m)))
    return verts


def _triangular_2d(level: int) -> PolytopalMesh:
    m = 2 ** level
    b = MeshBuilder(2, _grid_vertices(m, 2))
    idx = lambda i, j: j * (m + 1) + i
    for j in range(m):
        for i in range(m):
            v00, v10 = idx(i, j), idx(i + 1, j)
            v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
            b.add_simplex((v00, v10, v11))
            b.add_simplex((v00, v11, v01))
    return b.build()


def _cartesian_2d(level: int) -> PolytopalMesh:
    m = 2 ** level
    b = MeshBuilder(2, _grid_vertices(m, 2))
    idx = lambda i, j: j * (m + 1) + i
    for j in range(m):
        for i in range(m):
            b.add_polygon((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)),
                          split="diagonal")
    return b.build()


def _kuhn_3d(level: int) -> PolytopalMesh:
    import itertools

    m = 2 ** level
    b = MeshBuilder(3, _grid_vertices(m, 3))
    idx = lambda i, j, k: (k * (m + 1) + j) * (m + 1) + i
    for k in range(m):
        for j in range(m):
            for i in range(m):
                for perm in itertools.permutations(range(3)):
                    path = [(i, j, k)]
                    for ax in perm:
                        p = list(path[-1])
                        p[ax] += 1
                        path.append(tuple(p))
                    b.add_simplex(tuple(idx(*p) for p in path))
    return b.build()


def _hexagonal_2d(level: int) -> PolytopalMesh:
    """Flattened-hexagon tiling of the unit square, exactly rational.

    Even columns tile [0,1] in y exactly; odd columns are offset by half a
    cell and clipped, producing trapezoid caps. All cells are convex.
    """
    M = 2 ** level
    C = 2 * M
    a = QQ(1, 3 * C + 1)
    bq = QQ(1, 4 * M)
    polys = []
    for c in range(C):
        cx = 2 * a + 3 * a * c
        if c % 2 == 0:
            centers = [bq + 2 * bq * row for row in range(2 * M)]
        else:
            centers = [2 * bq * row for row in range(2 * M + 1)]
        for cy in centers:
            hexagon = [
                (cx - 2 * a, cy), (cx - a, cy - bq), (cx + a, cy - bq),
                (cx + 2 * a, cy), (cx + a, cy + bq), (cx - a, cy + bq),
            ]
            clipped = _clip_unit_square(hexagon)
            if len(clipped) >= 3:
                polys.append(clipped)
    # dedupe vertices exactly
    vid = {}
    verts = []
    loops = []
    for poly in polys:
        loop = []
        for p in poly:
            if p not in vid:
                vid[p] = len(verts)
                verts.append(p)
            loop.append(vid[p])
        loops.append(tuple(loop))
    b = MeshBuilder(2, verts)
    for loop in loops:
        b.add_polygon(loop)
    return b.build()


def _clip_unit_square(poly):
    """Sutherland-Hodgman against [0,1]^2, exact rational arithmetic."""
    def clip(points, inside, intersect):
        out = []
        for i, p in enumerate(points):
            q = points[(i + 1) % len(points)]
            pin, qin = inside(p), inside(q)
            if pin:
                out.append(p)
                if not qin:
                    out.append(intersect(p, q))
            elif qin:
                out.append(intersect(p, q))
        return out

    def against(axis, bound, keep_leq):
        def inside(p):
            return p[axis] <= bound if keep_leq else p[axis] >= bound

        def intersect(p, q):
            t = (bound - p[axis]) / (q[axis] - p[axis])
            pt = tuple(pc + t * (qc - pc) for pc, qc in zip(p, q))
            return tuple(bound if i == axis else x for i, x in enumerate(pt))

        return inside, intersect

    out = [tuple(p) for p in poly]
    for axis in (0, 1):
        for bound, keep_leq in ((ZERO, False), (ONE, True)):
            if not out:
                return []
            out = clip(out, *against(axis, bound, keep_leq))
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if dedup and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


# ---------------------------------------------------------------------------
# generic fan triangulation of a standalone convex cell


def simplicial_submesh(cell: Cell):
    """The stored submesh; every built cell carries one."""
    if not cell.submesh:
        raise MeshError(f"cell ({cell.dim},{cell.id}) has no submesh")
    return list(cell.submesh)


# ---------------------------------------------------------------------------
# JSON round-trip


def _coord_json(x):
    return rat_str(x)


def save_json(mesh: PolytopalMesh, path: str):
    doc = {
        "n": mesh.n,
        "vertices": [[_coord_json(x) for x in v] for v in mesh.vertices],
        "cells": {
            str(d): [
                {
                    "id": c.id,
                    "boundary": [{"id": fid, "sign": s} for fid, s in c.boundary],
                    "frame": [[_coord_json(x) for x in col] for col in c.frame.columns],
                    "x_f": [_coord_json(x) for x in c.x_f],
                    "submesh": [list(s.vertices) for s in c.submesh],
                }
                for c in mesh.cells[d]
            ]
            for d in sorted(mesh.cells)
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_json(path: str) -> PolytopalMesh:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        n = doc["n"]
        vertices = [tuple(rat(x) for x in v) for v in doc["vertices"]]
    except (KeyError, TypeError) as exc:
        raise MeshError(f"schema violation at top level: {exc}") from exc
    cells = {}
    for dkey in sorted(doc.get("cells", {}), key=int):
        d = int(dkey)
        cells[d] = []
        for i, rec in enumerate(doc["cells"][dkey]):
            where = f"cells[{d}][{i}]"
            for fieldname in ("id", "boundary", "frame", "x_f", "submesh"):
                if fieldname not in rec:
                    raise MeshError(f"schema violation: missing {where}.{fieldname}")
            boundary = []
            for j, b in enumerate(rec["boundary"]):
                if "sign" not in b:
                    raise MeshError(
                        f"schema violation: missing {where}.boundary[{j}].sign (orientation)")
                if b["sign"] not in (-1, 1):
                    raise MeshError(
                        f"schema violation: {where}.boundary[{j}].sign must be +-1")
                boundary.append((b["id"], b["sign"]))
            x_f = tuple(rat(x) for x in rec["x_f"])
            cols = tuple(tuple(rat(x) for x in col) for col in rec["frame"])
            if d >= 1 and len(cols) != d:
                raise MeshError(f"schema violation: {where}.frame (orientation) has wrong rank")
            frame = Frame(x_f, cols)
            vids = sorted({v for s in rec["submesh"] for v in s})
            pts = [vertices[v] for v in vids]
            h = _diameter(pts) if d >= 1 else 0.0
            cell = Cell(d, rec["id"], tuple(vids), frame, x_f, h, boundary=boundary)
            for tri in rec["submesh"]:
                if len(tri) != d + 1:
                    raise MeshError(f"schema violation: {where}.submesh simplex arity")
                coords = [frame.coords(vertices[v]) for v in tri] if d >= 1 else []
                sgn = 1
                if d >= 1:
                    edges = [vsub(p, coords[0]) for p in coords[1:]]
                    dd = det(edges)
                    if dd == 0:
                        raise MeshError(f"schema violation: degenerate simplex in {where}")
                    sgn = 1 if dd > 0 else -1
                cell.submesh.append(SimplexCell(d, tuple(tri), (d, rec["id"]), sgn))
            cells[d].append(cell)
    return PolytopalMesh(n, vertices, cells)
