"""Polynomial form spaces: full, trimmed, conforming FE on submeshes, bubbles.

Bases live in frame coordinates. Conforming FE spaces on a cell's submesh
are built generically: per-simplex trimmed bases, exact trace-matching
constraints across shared subsimplices, nullspace extraction, then
re-normalization against the canonical DOF functionals so that the basis is
dual to the DOF set; coefficients of a conforming form are then exactly its
DOF values. Everything here is cached per cell congruence class, so meshes
from the structured families reuse a handful of exact factorizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import linalg
from .exterior import (PolyForm, ext_d, integrate_simplex, integrate_top, koszul,
                       inner_product_poly, pullback, wedge)
from .mesh import Cell, Frame, PolytopalMesh, det, gram_schmidt, vadd, vscale, vsub
from .polynomial import Poly
from .scalars import ONE, QQ, ZERO, binomial


# ---------------------------------------------------------------------------
# monomial and trimmed bases on a single frame


from functools import lru_cache


def scalar_monomials(dim: int, r: int):
    """Monomials of total degree <= r, graded-lex ordered."""
    if r < 0:
        return []
    out = []
    for total in range(r + 1):
        for e in _exponents(total, dim):
            out.append(Poly.monomial(dim, e))
    return out


def _exponents(total: int, dim: int):
    if dim == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _exponents(total - first, dim - 1):
            yield (first,) + rest


def full_basis_forms(dim: int, r: int, k: int):
    """Basis of P_r Lambda^k: monomials times increasing index subsets."""
    if r < 0 or k < 0 or k > dim:
        return []
    monos = scalar_monomials(dim, r)
    return [PolyForm(dim, k, {I: m}) for I in combinations(range(dim), k) for m in monos]


def full_dim(d: int, r: int, k: int) -> int:
    if r < 0 or k < 0 or k > d:
        return 0
    return binomial(r + d, d) * binomial(d, k)


def trimmed_dim(d: int, r: int, k: int) -> int:
    if r < 0 or k < 0 or k > d:
        return 0
    if k == 0:
        return binomial(r + d, d)
    return binomial(r + d, r + k) * binomial(r + k - 1, k)


def _form_vector(w: PolyForm):
    return {(I, e): c for I, p in w.comps.items() for e, c in p.coeffs.items()}


def independent_forms(forms):
    """Maximal independent subset, exact, deterministic order."""
    pivots = []  # (key, reduced dict)
    keep = []
    for f in forms:
        vec = _form_vector(f)
        for key, row in pivots:
            c = vec.get(key)
            if c:
                for kk, vv in row.items():
                    nv = vec.get(kk, ZERO) - c * vv
                    if nv:
                        vec[kk] = nv
                    else:
                        vec.pop(kk, None)
        if vec:
            key = min(vec)
            piv = vec[key]
            row = {kk: vv / piv for kk, vv in vec.items()}
            pivots.append((key, row))
            keep.append(f)
    return keep


@lru_cache(maxsize=None)
def koszul_image_basis(dim: int, r: int, k: int):
    """Basis of kappa P_r Lambda^k (Koszul about the frame origin)."""
    if k < 1 or r < 0 or k > dim:
        return []
    return independent_forms([koszul(w) for w in full_basis_forms(dim, r, k)])


@lru_cache(maxsize=None)
def d_image_basis(dim: int, r: int, k: int):
    """Basis of d P_r Lambda^k."""
    if r < 0 or k < 0 or k >= dim:
        return []
    return independent_forms([ext_d(w) for w in full_basis_forms(dim, r, k)])


@lru_cache(maxsize=None)
def trimmed_basis_forms(dim: int, r: int, k: int):
    """Basis of the trimmed space d P_r Lambda^{k-1} + kappa P_{r-1} Lambda^{k+1}.

    For k = 0 the trimmed space is the full P_r Lambda^0.
    """
    if r < 0 or k < 0 or k > dim:
        return []
    if k == 0:
        return full_basis_forms(dim, r, 0)
    out = list(d_image_basis(dim, r, k - 1)) + list(koszul_image_basis(dim, r - 1, k + 1))
    return independent_forms(out)


def decompose_koszul(w: PolyForm):
    """Split w in P_r Lambda^k as alpha + beta per the homotopy formula.

    alpha lies in d P_{r+1} Lambda^{k-1} (constants for k = 0) and beta in
    kappa_f P_{r-1} Lambda^{k+1}; exact, degree by degree, no linear solve.
    """
    k = w.degree
    alpha = PolyForm(w.dim, k)
    beta = PolyForm(w.dim, k)
    for t in range(w.poly_degree() + 1):
        wt = PolyForm(w.dim, k, {I: p.homogeneous_part(t) for I, p in w.comps.items()})
        if wt.is_zero():
            continue
        if t + k == 0:
            alpha = alpha + wt
            continue
        s = QQ(1, t + k)
        if k >= 1:
            alpha = alpha + ext_d(koszul(wt)).scale(s)
        if k < w.dim:
            beta = beta + koszul(ext_d(wt)).scale(s)
        elif k >= 1:
            # top degree: d wt = 0, so wt = d kappa wt / (t+k) entirely
            pass
    return alpha, beta


# ---------------------------------------------------------------------------
# local simplicial complexes


@dataclass
class Simplex:
    verts: tuple  # global vertex ids, ascending
    dim: int
    frame: Frame  # canonical frame (origin = centroid, Gram-Schmidt columns)
    interior: bool = True

    @property
    def key(self):
        return self.verts


@dataclass
class LocalComplex:
    """Closure complex of a submesh (volume) or of a cell boundary."""

    mesh: PolytopalMesh
    dim: int
    simplices: dict = field(default_factory=dict)  # d -> [Simplex]
    index: dict = field(default_factory=dict)      # verts -> (d, i)
    tops: list = field(default_factory=list)       # [(top Simplex, assigned Frame, owner sign)]
    label: tuple = ()

    def simplex(self, d: int, i: int) -> Simplex:
        return self.simplices[d][i]

    def count(self, d: int) -> int:
        return len(self.simplices.get(d, ()))

    def faces_of(self, d: int, i: int):
        """Combinatorial boundary with (-1)^position signs (sorted convention)."""
        s = self.simplices[d][i]
        out = []
        for pos in range(d + 1):
            fv = tuple(v for j, v in enumerate(s.verts) if j != pos)
            out.append((self.index[fv][1], (-1) ** pos))
        return out

    def tops_containing(self, verts) -> list:
        memo = self.__dict__.setdefault("_tops_memo", {})
        key = tuple(verts)
        if key not in memo:
            vset = set(verts)
            memo[key] = [t for t, (simp, _, _) in enumerate(self.tops)
                         if vset <= set(simp.verts)]
        return memo[key]

    def coords_in(self, verts, frame: Frame):
        memo = self.__dict__.setdefault("_coords_memo", {})
        key = (tuple(verts), id(frame))
        if key not in memo:
            memo[key] = [frame.coords(self.mesh.vertices[v]) for v in verts]
        return memo[key]

    def top_orientation(self, t: int) -> int:
        """Sign of the sorted vertex order in the assigned frame."""
        memo = self.__dict__.setdefault("_orient_memo", {})
        if t not in memo:
            simp, aframe, _ = self.tops[t]
            coords = self.coords_in(simp.verts, aframe)
            edges = [vsub(p, coords[0]) for p in coords[1:]]
            dd = det(edges)
            memo[t] = 1 if dd > 0 else -1
        return memo[t]

    def shape_key(self):
        return self.label


def _canonical_simplex_frame(mesh: PolytopalMesh, verts):
    pts = [mesh.vertices[v] for v in verts]
    centroid = pts[0]
    for p in pts[1:]:
        centroid = vadd(centroid, p)
    centroid = vscale(centroid, QQ(1, len(pts)))
    if len(verts) == 1:
        return Frame(centroid, ())
    cols = gram_schmidt([vsub(p, pts[0]) for p in pts[1:]])
    return Frame(centroid, tuple(tuple(u) for u in cols))


def _close_complex(mesh, top_vert_tuples):
    simplices = {}
    index = {}
    for verts in top_vert_tuples:
        d0 = len(verts) - 1
        for size in range(1, d0 + 2):
            for sub in combinations(verts, size):
                if sub in index:
                    continue
                d = size - 1
                simp = Simplex(sub, d, _canonical_simplex_frame(mesh, sub))
                simplices.setdefault(d, []).append(simp)
                index[sub] = (d, len(simplices[d]) - 1)
    for d in simplices:
        order = sorted(range(len(simplices[d])), key=lambda i: simplices[d][i].verts)
        simplices[d] = [simplices[d][i] for i in order]
        for i, s in enumerate(simplices[d]):
            index[s.verts] = (d, i)
    return simplices, index


def _mark_boundary(simplices, index, dim):
    count = {}
    for s in simplices.get(dim, ()):
        for pos in range(dim + 1):
            fv = tuple(v for j, v in enumerate(s.verts) if j != pos)
            count[fv] = count.get(fv, 0) + 1
    boundary_facets = {fv for fv, c in count.items() if c == 1}
    for d in simplices:
        for s in simplices[d]:
            s.interior = True
    for fv in boundary_facets:
        for size in range(1, len(fv) + 1):
            for sub in combinations(fv, size):
                d, i = index[sub]
                simplices[d][i].interior = False


def volume_complex(mesh: PolytopalMesh, cell: Cell) -> LocalComplex:
    tops_verts = [tuple(sorted(s.vertices)) for s in cell.submesh]
    simplices, index = _close_complex(mesh, tops_verts)
    _mark_boundary(simplices, index, cell.dim)
    lc = LocalComplex(mesh, cell.dim, simplices, index)
    frame = cell.frame
    for verts in sorted(tops_verts):
        d, i = index[verts]
        lc.tops.append((simplices[d][i], frame, 1))
    lc.label = _complex_label(lc)
    return lc


def boundary_complex(mesh: PolytopalMesh, cell: Cell) -> LocalComplex:
    tops = []
    for fid, sign in cell.boundary:
        face = mesh.cell(cell.dim - 1, fid)
        for s in face.submesh:
            tops.append((tuple(sorted(s.vertices)), face.frame, sign))
    simplices, index = _close_complex(mesh, [t[0] for t in tops])
    # a boundary complex is closed: no simplex is marked non-interior
    lc = LocalComplex(mesh, cell.dim - 1, simplices, index)
    for verts, frame, sign in sorted(tops):
        d, i = index[verts]
        lc.tops.append((simplices[d][i], frame, sign))
    lc.label = _complex_label(lc)
    return lc


def single_simplex_complex(mesh: PolytopalMesh, cell: Cell, top_index: int) -> LocalComplex:
    """One-simplex complex for the given *volume-complex* top index."""
    vol = get_complex(mesh, cell)
    verts = vol.tops[top_index][0].verts
    simplices, index = _close_complex(mesh, [verts])
    _mark_boundary(simplices, index, cell.dim)
    lc = LocalComplex(mesh, cell.dim, simplices, index)
    lc.tops.append((simplices[cell.dim][0], cell.frame, 1))
    lc.label = _complex_label(lc)
    return lc


def _complex_label(lc: LocalComplex):
    """Congruence-class key: local combinatorics plus exact local geometry."""
    vids = sorted({v for d in lc.simplices for s in lc.simplices[d] for v in s.verts})
    local = {v: i for i, v in enumerate(vids)}
    tops = []
    for simp, aframe, sign in lc.tops:
        coords = tuple(tuple((c.numerator, c.denominator) for c in aframe.coords(lc.mesh.vertices[v]))
                       for v in simp.verts)
        g = aframe.metric()
        g0 = g[0] if g else ONE
        gnorm = tuple((x / g0).numerator for x in g) + tuple((x / g0).denominator for x in g)
        tops.append((tuple(local[v] for v in simp.verts), coords, gnorm, sign))
    interiors = tuple(
        tuple(local[v] for v in s.verts)
        for d in sorted(lc.simplices) for s in lc.simplices[d] if s.interior)
    return (lc.dim, tuple(tops), interiors)


# ---------------------------------------------------------------------------
# traces and integrals on complexes


def trace_to_simplex(lc: LocalComplex, per_top, simplex: Simplex) -> PolyForm:
    """Single-valued trace of a piecewise form onto a subsimplex.

    ``per_top`` maps top index -> PolyForm in the top's assigned frame.
    """
    tops = lc.tops_containing(simplex.verts)
    if not tops:
        raise ValueError("simplex not contained in any top simplex")
    t = tops[0]
    form = per_top[t]
    _, aframe, _ = lc.tops[t]
    A, c = simplex.frame.inclusion_into(aframe)
    return pullback(form, A, c, simplex.dim)


def integral_over_simplex(lc: LocalComplex, simplex: Simplex, form: PolyForm):
    """Integral of a top-degree form on the simplex, canonical orientation."""
    coords = lc.coords_in(simplex.verts, simplex.frame)
    return integrate_top(form, coords)


def integral_over_tops(lc: LocalComplex, per_top_integrand):
    """Sum over tops of assigned-frame-oriented integrals times owner signs.

    For a volume complex this is the integral over the cell in its own
    orientation; for a boundary complex it is the signed boundary integral.
    """
    total = ZERO
    for t, (simp, aframe, sign) in enumerate(lc.tops):
        form = per_top_integrand(t)
        if form is None or form.is_zero():
            continue
        coords = lc.coords_in(simp.verts, aframe)
        total = total + integrate_top(form, coords) * sign * lc.top_orientation(t)
    return total


# ---------------------------------------------------------------------------
# degrees of freedom


def dof_weight_basis(dim: int, s: int, k: int, d_sub: int):
    """Weights on a d_sub-simplex for the DOFs of trimmed degree-s k-forms.

    The weights span P_{s+k-d_sub-1} Lambda^{d_sub-k} on the subsimplex.
    """
    return full_basis_forms(d_sub, s + k - d_sub - 1, d_sub - k)


@dataclass
class Dof:
    sdim: int
    sidx: int
    weight: PolyForm
    key: tuple  # (simplex verts, weight position)


class FEForm:
    """Element of a conforming FE space, stored by DOF coefficients."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: "FESpace", coeffs):
        self.space = space
        self.coeffs = list(coeffs)

    def on_top(self, t: int) -> PolyForm:
        return self.space.materialize(self.coeffs, t)

    def __add__(self, other):
        return FEForm(self.space, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return FEForm(self.space, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def scale(self, s):
        return FEForm(self.space, [s * a for a in self.coeffs])


class FESpace:
    """Conforming trimmed FE space on a local complex, basis dual to DOFs."""

    def __init__(self, lc: LocalComplex, s: int, k: int):
        self.lc = lc
        self.s = s
        self.k = k
        self.dofs = self._make_dofs()
        self.ndof = len(self.dofs)
        self._dof_pos = {}
        for pos, dof in enumerate(self.dofs):
            self._dof_pos.setdefault(self.lc.simplex(dof.sdim, dof.sidx).verts, []).append(pos)
        self._build_basis()
        self._gram = None

    # -- construction ------------------------------------------------------

    def _make_dofs(self):
        out = []
        for d in range(self.k, self.lc.dim + 1):
            for i, simp in enumerate(self.lc.simplices.get(d, ())):
                for w, weight in enumerate(dof_weight_basis(d, self.s, self.k, d)):
                    out.append(Dof(d, i, weight, (simp.verts, w)))
        return out

    def _per_top_basis(self):
        return trimmed_basis_forms(self.lc.dim, self.s, self.k)

    def _build_basis(self):
        lc, k = self.lc, self.k
        local = self._per_top_basis()
        nloc = len(local)
        ntop = len(lc.tops)
        nvar = nloc * ntop
        memo = {}

        def dof_of_candidate(t, b, d, i, weight, w):
            key = (t, b, d, i, w)
            if key not in memo:
                simp = lc.simplex(d, i)
                _, aframe, _ = lc.tops[t]
                A, c = simp.frame.inclusion_into(aframe)
                tr = pullback(local[b], A, c, simp.dim)
                memo[key] = integral_over_simplex(lc, simp, wedge(tr, weight))
            return memo[key]

        # trace-matching constraints on shared subsimplices
        rows = []
        for d in range(k, lc.dim):
            for i, simp in enumerate(lc.simplices.get(d, ())):
                tops = lc.tops_containing(simp.verts)
                if len(tops) < 2:
                    continue
                weights = dof_weight_basis(d, self.s, k, d)
                owner = tops[0]
                for other in tops[1:]:
                    for w, weight in enumerate(weights):
                        row = [ZERO] * nvar
                        for b in range(nloc):
                            row[owner * nloc + b] = dof_of_candidate(owner, b, d, i, weight, w)
                            row[other * nloc + b] = -dof_of_candidate(other, b, d, i, weight, w)
                        rows.append(row)
        null = linalg.nullspace(rows) if rows else linalg.identity(nvar)
        if len(null) != self.ndof:
            raise ValueError(
                f"FE space dimension mismatch: nullspace {len(null)} vs dofs {self.ndof}")

        # DOF matrix of the raw conforming basis, then normalize to duality
        D = []
        for dof in self.dofs:
            simp = lc.simplex(dof.sdim, dof.sidx)
            t = lc.tops_containing(simp.verts)[0]
            row = []
            for vec in null:
                val = ZERO
                for b in range(nloc):
                    cb = vec[t * nloc + b]
                    if cb:
                        val = val + cb * dof_of_candidate(
                            t, b, dof.sdim, dof.sidx, dof.weight, dof.key[1])
                row.append(val)
            D.append(row)
        Dinv = linalg.inverse(D)
        coefs = linalg.matmul(_cols_to_matrix(null), Dinv) if null else []
        # columns of coefs are the per-top coefficients of the dual basis
        self._local = local
        self._coefs = [[coefs[t * nloc + b] for b in range(nloc)] for t in range(ntop)]
        self._elements = []
        for j in range(self.ndof):
            per_top = []
            for t in range(ntop):
                form = PolyForm(lc.dim, k)
                for b in range(nloc):
                    cb = coefs[t * nloc + b][j]
                    if cb:
                        form = form + local[b].scale(cb)
                per_top.append(form)
            self._elements.append(per_top)

    # -- queries -------------------------------------------------------------

    def element_on_top(self, j: int, t: int) -> PolyForm:
        return self._elements[j][t]

    def materialize(self, coeffs, t: int) -> PolyForm:
        form = PolyForm(self.lc.dim, self.k)
        for j, c in enumerate(coeffs):
            if c:
                form = form + self._elements[j][t].scale(c)
        return form

    def dof_value_of(self, per_top, dof: Dof):
        simp = self.lc.simplex(dof.sdim, dof.sidx)
        tr = trace_to_simplex(self.lc, per_top, simp)
        return integral_over_simplex(self.lc, simp, wedge(tr, dof.weight))

    def dof_values(self, per_top):
        """DOF vector of a piecewise form given per top index (dict or list)."""
        if not isinstance(per_top, dict):
            per_top = dict(enumerate(per_top))
        return [self.dof_value_of(per_top, dof) for dof in self.dofs]

    def dof_values_of_polyform(self, form: PolyForm):
        """DOF vector of a single cell-frame polynomial form (volume complexes)."""
        per_top = {t: form for t in range(len(self.lc.tops))}
        return self.dof_values(per_top)

    def dofs_on(self, verts):
        return self._dof_pos.get(tuple(verts), [])

    def boundary_dof_positions(self):
        out = []
        for pos, dof in enumerate(self.dofs):
            if not self.lc.simplex(dof.sdim, dof.sidx).interior:
                out.append(pos)
        return out

    def gram(self):
        """Coordinate Gram matrix (true L2 Gram divided by sqrt(det g)).

        Requires all tops to share one assigned frame (volume complexes).
        Assembled as sum_t C_t^T M_t C_t from the per-top local Gram M_t and
        the local coefficient matrices of the dual basis.
        """
        if self._gram is not None:
            return self._gram
        if len({id(t[1]) for t in self.lc.tops}) != 1:
            raise ValueError("Gram matrix needs a single assigned frame (volume complex)")
        from .exterior import integrate_inner_simplex

        metric = self.lc.tops[0][1].metric()
        g0 = metric[0] if metric else ONE
        metric = tuple(x / g0 for x in metric)  # scale-invariant; minimizers unaffected
        n = self.ndof
        nloc = len(self._local)
        G = linalg.zeros(n, n)
        for t, (simp, aframe, _) in enumerate(self.lc.tops):
            coords = self.lc.coords_in(simp.verts, aframe)
            sgn = self.lc.top_orientation(t)
            M = linalg.zeros(nloc, nloc)
            for b1 in range(nloc):
                for b2 in range(b1, nloc):
                    val = integrate_inner_simplex(self._local[b1], self._local[b2],
                                                  metric, coords)
                    M[b1][b2] = sgn * val
                    M[b2][b1] = sgn * val
            Ct = self._coefs[t]
            MC = linalg.matmul(M, Ct)
            CtT = linalg.transpose(Ct)
            contrib = linalg.matmul(CtT, MC)
            for i in range(n):
                Gi, Ci = G[i], contrib[i]
                G[i] = [a + b for a, b in zip(Gi, Ci)]
        self._gram = G
        return G

    def d_matrix(self, target: "FESpace"):
        """Matrix of the exterior derivative into the target FE space (by DOFs).

        Row for a target DOF contracts the owner-top local coefficients with
        the table of DOF values of d(local basis element).
        """
        lc = self.lc
        nloc = len(self._local)
        dloc = [ext_d(w) for w in self._local]
        memo = {}
        rows = []
        for dof in target.dofs:
            simp = target.lc.simplex(dof.sdim, dof.sidx)
            t = lc.tops_containing(simp.verts)[0]
            _, aframe, _ = lc.tops[t]
            tkey = (t, dof.sdim, dof.sidx, dof.key[1])
            row_local = []
            for b in range(nloc):
                key = (t, b, simp.verts, dof.key[1])
                if key not in memo:
                    A, c = simp.frame.inclusion_into(aframe)
                    tr = pullback(dloc[b], A, c, simp.dim)
                    memo[key] = integral_over_simplex(lc, simp, wedge(tr, dof.weight))
                row_local.append(memo[key])
            Ct = self._coefs[t]
            rows.append([sum((row_local[b] * Ct[b][j] for b in range(nloc)
                              if row_local[b] and Ct[b][j]), ZERO)
                         for j in range(self.ndof)])
        return rows


def _cols_to_matrix(cols):
    n = len(cols[0])
    return [[col[i] for col in cols] for i in range(n)]


# ---------------------------------------------------------------------------
# bubbles


class BubbleSpace:
    """Zero-trace trimmed forms on one simplex: interior-DOF duals."""

    def __init__(self, space: FESpace):
        self.space = space
        self.interior = [pos for pos, dof in enumerate(space.dofs)
                         if space.lc.simplex(dof.sdim, dof.sidx).interior]
        self.dim = len(self.interior)

    def element(self, j: int) -> PolyForm:
        return self.space.element_on_top(self.interior[j], 0)


def bubble_dim(d: int, s: int, k: int) -> int:
    """dim of zero-trace trimmed forms on a d-simplex (0 when empty)."""
    if k == d:
        return trimmed_dim(d, s, d)
    total = trimmed_dim(d, s, k)
    boundary = 0
    for dd in range(k, d):
        n_sub = binomial(d + 1, dd + 1)
        boundary += n_sub * full_dim(dd, s + k - dd - 1, dd - k)
    return total - boundary


# ---------------------------------------------------------------------------
# projections


def l2_trimmed_project(basis, metric, oriented_simplices, moments=None, form=None):
    """L2-orthogonal projection onto span(basis) over the given simplices.

    ``oriented_simplices`` is a list of (vertex coords, orientation sign) so
    that integrals are taken against the positive frame measure. Either
    ``form`` (a PolyForm in the same frame) or precomputed ``moments`` (the
    inner products against the basis) must be supplied. The common
    sqrt(det g) factor cancels between Gram and moments.
    """
    n = len(basis)
    if n == 0:
        return None
    g0 = metric[0] if metric else ONE
    nm = tuple(x / g0 for x in metric)

    def dens_int(p):
        vals = [sgn * integrate_simplex(p, coords) for coords, sgn in oriented_simplices]
        if any(isinstance(v, float) for v in vals):
            return float(sum(map(float, vals)))
        return sum(vals, ZERO)

    G = linalg.zeros(n, n)
    for i in range(n):
        for j in range(i, n):
            val = dens_int(inner_product_poly(basis[i], basis[j], nm))
            G[i][j] = val
            G[j][i] = val
    if moments is None:
        moments = [dens_int(inner_product_poly(form, b, nm)) for b in basis]
    if any(isinstance(x, float) for row in G for x in row) or \
            any(isinstance(x, float) for x in moments):
        import numpy as np

        c = list(np.linalg.solve(linalg.to_numpy(G), [float(x) for x in moments]))
    else:
        c = linalg.solve(G, moments)
    out = PolyForm(basis[0].dim, basis[0].degree)
    for ci, b in zip(c, basis):
        if ci:
            out = out + b.scale(ci)
    return out


# ---------------------------------------------------------------------------
# per-mesh cache


def _cache(mesh: PolytopalMesh, kind: str):
    return mesh.caches.setdefault(kind, {})


def fe_space(mesh: PolytopalMesh, cell: Cell, s: int, k: int, boundary=False) -> FESpace:
    comp = get_complex(mesh, cell, boundary=boundary)
    shapes = _cache(mesh, "fe_by_shape")
    key = (comp.shape_key(), s, k)
    if key not in shapes:
        shapes[key] = FESpace(comp, s, k)
    proto = shapes[key]
    if proto.lc is comp:
        return proto
    return _rebind(proto, comp)


def get_complex(mesh: PolytopalMesh, cell: Cell, boundary=False) -> LocalComplex:
    cache = _cache(mesh, "complexes")
    key = (cell.dim, cell.id, boundary)
    if key not in cache:
        cache[key] = boundary_complex(mesh, cell) if boundary else volume_complex(mesh, cell)
    return cache[key]


def single_complex(mesh: PolytopalMesh, cell: Cell, top_index: int) -> LocalComplex:
    cache = _cache(mesh, "single_complexes")
    key = (cell.dim, cell.id, top_index)
    if key not in cache:
        cache[key] = single_simplex_complex(mesh, cell, top_index)
    return cache[key]


def bubble_space(mesh: PolytopalMesh, cell: Cell, top_index: int, s: int, k: int) -> BubbleSpace:
    comp = single_complex(mesh, cell, top_index)
    shapes = _cache(mesh, "bubble_by_shape")
    key = (comp.shape_key(), s, k)
    if key not in shapes:
        shapes[key] = BubbleSpace(FESpace(comp, s, k))
    proto = shapes[key]
    if proto.space.lc is comp:
        return proto
    rebound = BubbleSpace.__new__(BubbleSpace)
    rebound.space = _rebind(proto.space, comp)
    rebound.interior = proto.interior
    rebound.dim = proto.dim
    return rebound


def _rebind(proto: FESpace, comp: LocalComplex) -> FESpace:
    """Shallow copy of a cached FE space onto a congruent complex.

    Congruent complexes have identical local geometry in assigned-frame
    coordinates, so the basis polynomials, DOF weights and Gram carry over;
    only the complex reference (global vertex ids) changes.
    """
    out = FESpace.__new__(FESpace)
    out.lc = comp
    out.s = proto.s
    out.k = proto.k
    out.ndof = proto.ndof
    out._elements = proto._elements
    out._local = proto._local
    out._coefs = proto._coefs
    out._gram = proto._gram
    out.dofs = []
    out._dof_pos = {}
    for dof in proto.dofs:
        simp = comp.simplex(dof.sdim, dof.sidx)
        nd = Dof(dof.sdim, dof.sidx, dof.weight, (simp.verts, dof.key[1]))
        out.dofs.append(nd)
    for pos, dof in enumerate(out.dofs):
        out._dof_pos.setdefault(comp.simplex(dof.sdim, dof.sidx).verts, []).append(pos)
    return out
