"""The discrete de Rham complex: spaces, interpolator, potentials, norms.

The component of a degree-k discrete vector on a d-cell f lives in the
star-inverse of the trimmed space of (d-k)-forms on f; its defining data
are the wedge moments against that trimmed space, so interpolation and all
reconstruction operators assemble star-free, exactly, in frame coordinates.
The discrete exterior derivative and potential are the unique polynomial
forms matching the usual moment systems; both systems are square and are
factored once per cell congruence class.
"""

from __future__ import annotations

import math

import numpy as np

from . import linalg
from .exterior import (PolyForm, SimplexQuadrature, ext_d, inner_product_poly,
                       integrate_simplex, pullback, star_inverse_rational, wedge)
from .mesh import Cell, Frame, PolytopalMesh
from .scalars import ONE, ZERO, rat, rat_str, to_float
from .spaces import (LocalComplex, full_basis_forms, get_complex,
                     koszul_image_basis, trimmed_basis_forms)


def ambient_frame(n: int) -> Frame:
    cols = tuple(tuple(ONE if i == j else ZERO for i in range(n)) for j in range(n))
    return Frame((ZERO,) * n, cols)


def cell_integral(lc: LocalComplex, form: PolyForm):
    """Integral of a top-degree cell-frame form over the cell's submesh,
    in the orientation of the assigned frame (not the vertex order)."""
    if form.degree != form.dim:
        raise ValueError("cell integral expects a top-degree form")
    if form.dim == 0:
        return form.component(()).eval(())
    p = form.component(tuple(range(form.dim)))
    total = ZERO
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)
        total = total + lc.top_orientation(t) * integrate_simplex(p, coords)
    return total


_cell_integral = cell_integral


def trace_between_cells(mesh: PolytopalMesh, form: PolyForm, frame_from: Frame,
                        cell_to: Cell) -> PolyForm:
    A, c = cell_to.frame.inclusion_into(frame_from)
    return pullback(form, A, c, cell_to.dim)


class CellOps:
    """Per congruence class: bases and factored moment systems for one cell."""

    def __init__(self, lc: LocalComplex, r: int, k: int):
        d = lc.dim
        self.r, self.k, self.dim = r, k, d
        metric = lc.tops[0][1].metric()
        g0 = metric[0] if metric else ONE
        self.metric_norm = tuple(g / g0 for g in metric)
        self.test = trimmed_basis_forms(d, r, d - k)
        self.comp = [star_inverse_rational(t, self.metric_norm) for t in self.test]
        self.ncomp = len(self.comp)
        if self.ncomp:
            M = [[_cell_integral(lc, wedge(ci, tj)) for ci in self.comp] for tj in self.test]
            self.pair_solver = linalg.ExactSolver(M)
            self._pair_lu = None
            self._pair_np = M
        if d >= k + 1:
            self.dd_tests = full_basis_forms(d, r, d - k - 1)
            self.dd_basis = full_basis_forms(d, r, k + 1)
            A = [[_cell_integral(lc, wedge(ui, tj)) for ui in self.dd_basis]
                 for tj in self.dd_tests]
            self.dd_solver = linalg.ExactSolver(A)
            self._dd_np = A
            self._dd_lu = None
            self.pot_mu = koszul_image_basis(d, r, d - k)
            self.pot_nu = koszul_image_basis(d, r - 1, d - k + 1)
            self.pot_basis = full_basis_forms(d, r, k)
            sgn = rat((-1) ** (k + 1))
            rows = []
            for mu in self.pot_mu:
                dmu = ext_d(mu)
                rows.append([_cell_integral(lc, wedge(pi, dmu)) * sgn for pi in self.pot_basis])
            for nu in self.pot_nu:
                rows.append([_cell_integral(lc, wedge(pi, nu)) * sgn for pi in self.pot_basis])
            self.pot_solver = linalg.ExactSolver(rows)
            self._pot_np = rows
            self._pot_lu = None

    def pair_solve(self, moments, float_mode: bool):
        if not float_mode:
            return self.pair_solver(moments)
        import scipy.linalg as sla

        if self._pair_lu is None:
            self._pair_lu = sla.lu_factor(linalg.to_numpy(self._pair_np))
        return list(sla.lu_solve(self._pair_lu, np.asarray(moments, dtype=float)))

    def dd_solve(self, rhs, float_mode: bool):
        if not float_mode:
            return self.dd_solver(rhs)
        import scipy.linalg as sla

        if self._dd_lu is None:
            self._dd_lu = sla.lu_factor(linalg.to_numpy(self._dd_np))
        return list(sla.lu_solve(self._dd_lu, np.asarray(rhs, dtype=float)))

    def pot_solve(self, rhs, float_mode: bool):
        if not float_mode:
            return self.pot_solver(rhs)
        import scipy.linalg as sla

        if self._pot_lu is None:
            self._pot_lu = sla.lu_factor(linalg.to_numpy(self._pot_np))
        return list(sla.lu_solve(self._pot_lu, np.asarray(rhs, dtype=float)))


class DdrSpace:
    """Discrete counterpart of the space of k-forms at polynomial degree r."""

    def __init__(self, mesh: PolytopalMesh, r: int, k: int):
        if r < 0 or k < 0 or k > mesh.n:
            raise ValueError("invalid DDR space parameters")
        self.mesh = mesh
        self.r = r
        self.k = k
        self.cells = []
        for d in range(k, mesh.n + 1):
            self.cells.extend(mesh.cells[d])
        self.offsets = {}
        total = 0
        for c in self.cells:
            ops = self.ops(c)
            self.offsets[c.key] = (total, ops.ncomp)
            total += ops.ncomp
        self.ndof = total

    def ops(self, cell: Cell) -> CellOps:
        cache = self.mesh.caches.setdefault("cell_ops", {})
        lc = get_complex(self.mesh, cell)
        key = (lc.shape_key(), self.r, self.k)
        if key not in cache:
            cache[key] = CellOps(lc, self.r, self.k)
        return cache[key]

    def complex_of(self, cell: Cell) -> LocalComplex:
        return get_complex(self.mesh, cell)

    def zero(self, float_mode: bool = False) -> "DdrVector":
        fill = 0.0 if float_mode else ZERO
        return DdrVector(self, [fill] * self.ndof, float_mode)

    def vector(self, data, float_mode=None) -> "DdrVector":
        if float_mode is None:
            float_mode = any(isinstance(x, float) for x in data)
        return DdrVector(self, list(data), float_mode)

    def block(self, vec: "DdrVector", cell: Cell):
        off, n = self.offsets[cell.key]
        return vec.data[off:off + n]

    def set_block(self, vec: "DdrVector", cell: Cell, values):
        off, n = self.offsets[cell.key]
        vec.data[off:off + n] = list(values)


class DdrVector:
    """Coefficients of one discrete k-form; restriction views are implicit."""

    def __init__(self, space: DdrSpace, data, float_mode: bool):
        self.space = space
        self.data = data
        self.float_mode = float_mode
        self._memo = {}

    def copy(self) -> "DdrVector":
        return DdrVector(self.space, list(self.data), self.float_mode)

    def scaled(self, s) -> "DdrVector":
        return DdrVector(self.space, [s * x for x in self.data],
                         self.float_mode or isinstance(s, float))

    def __add__(self, other: "DdrVector") -> "DdrVector":
        return DdrVector(self.space, [a + b for a, b in zip(self.data, other.data)],
                         self.float_mode or other.float_mode)

    def __sub__(self, other: "DdrVector") -> "DdrVector":
        return DdrVector(self.space, [a - b for a, b in zip(self.data, other.data)],
                         self.float_mode or other.float_mode)

    def component_form(self, cell: Cell) -> PolyForm:
        """The stored component on one cell, as a cell-frame polynomial form."""
        ops = self.space.ops(cell)
        block = self.space.block(self, cell)
        form = PolyForm(cell.dim, self.space.k)
        for c, b in zip(block, ops.comp):
            if c:
                form = form + b.scale(c)
        return form

    def to_json(self):
        def enc(x):
            return x if isinstance(x, float) else rat_str(x)

        return {
            "r": self.space.r, "k": self.space.k, "float": self.float_mode,
            "blocks": {f"{c.dim},{c.id}": [enc(x) for x in self.space.block(self, c)]
                       for c in self.space.cells},
        }

    @classmethod
    def from_json(cls, space: DdrSpace, doc) -> "DdrVector":
        vec = space.zero(doc["float"])
        for key, block in doc["blocks"].items():
            d, i = (int(x) for x in key.split(","))
            cell = space.mesh.cell(d, i)
            vals = [float(x) if doc["float"] else rat(x) for x in block]
            space.set_block(vec, cell, vals)
        return vec


# ---------------------------------------------------------------------------
# interpolation


def interpolate(space: DdrSpace, omega, quad_order: int | None = None) -> DdrVector:
    """Moment-matching interpolation of an ambient form onto the space.

    ``omega`` is an ambient-frame PolyForm (exact path) or a SmoothForm
    (quadrature path). Components reproduce the wedge moments of the trace
    against the trimmed test space on every cell.
    """
    from .exterior import SmoothForm

    if isinstance(omega, SmoothForm):
        return _interpolate_smooth(space, omega, quad_order)
    amb = ambient_frame(space.mesh.n)

    def moments(cell, ops, lc):
        tr = trace_between_cells(space.mesh, omega, amb, cell)
        return [_cell_integral(lc, wedge(tr, t)) for t in ops.test]

    return interpolate_from_moments(space, moments, float_mode=False)


def interpolate_from_moments(space: DdrSpace, moment_fn, float_mode: bool) -> DdrVector:
    vec = space.zero(float_mode)
    for cell in space.cells:
        ops = space.ops(cell)
        if not ops.ncomp:
            continue
        lc = space.complex_of(cell)
        m = moment_fn(cell, ops, lc)
        space.set_block(vec, cell, ops.pair_solve(m, float_mode))
    return vec


def _interpolate_smooth(space: DdrSpace, omega, quad_order: int | None) -> DdrVector:
    order = quad_order if quad_order is not None else 2 * space.r + 6

    def moments(cell, ops, lc):
        d = cell.dim
        out = []
        if d == 0:
            pt = [to_float(x) for x in cell.x_f]
            val = omega.eval_component((), pt) if space.k == 0 else 0.0
            return [val * to_float(t.component(()).eval(())) for t in ops.test]
        quad = SimplexQuadrature(order + space.r + 1, d)
        frame = cell.frame
        coeff_fns = {J: omega.pulled_back_coeff(frame, J)
                     for J in _subsets(d, space.k)}
        for t in ops.test:
            total = 0.0
            for simp, aframe, _ in lc.tops:
                coords = lc.coords_in(simp.verts, aframe)

                def integrand(y, t=t):
                    val = 0.0
                    for J, fn in coeff_fns.items():
                        Jc = tuple(i for i in range(d) if i not in J)
                        from .exterior import perm_sign

                        comp = t.component(Jc)
                        if comp.is_zero():
                            continue
                        sgn = perm_sign(list(J) + list(Jc))
                        val += sgn * fn(y) * to_float(comp.eval(tuple(y)))
                    return val

                total += quad.integrate(coords, integrand)
            out.append(total)
        return out

    return interpolate_from_moments(space, moments, float_mode=True)


def _subsets(d, k):
    from itertools import combinations

    return list(combinations(range(d), k))


# ---------------------------------------------------------------------------
# reconstructions


def potential(space: DdrSpace, vec: DdrVector, cell: Cell) -> PolyForm:
    """Polynomial potential on the cell, memoized per vector."""
    key = ("P", cell.key)
    if key in vec._memo:
        return vec._memo[key]
    if cell.dim == space.k:
        out = vec.component_form(cell)
    else:
        ops = space.ops(cell)
        lc = space.complex_of(cell)
        dd = discrete_d(space, vec, cell)
        sgn = rat((-1) ** (space.k + 1))
        if vec.float_mode:
            sgn = float(sgn)
        rhs = []
        for mu in ops.pot_mu:
            val = _cell_integral(lc, wedge(dd, mu))
            val = val - _boundary_potential_moment(space, vec, cell, mu)
            rhs.append(val)
        wf = vec.component_form(cell)
        for nu in ops.pot_nu:
            rhs.append(sgn * _cell_integral(lc, wedge(wf, nu)))
        coeffs = ops.pot_solve(rhs, vec.float_mode)
        out = PolyForm(cell.dim, space.k)
        for c, b in zip(coeffs, ops.pot_basis):
            if c:
                out = out + b.scale(c)
    vec._memo[key] = out
    return out


def discrete_d(space: DdrSpace, vec: DdrVector, cell: Cell) -> PolyForm:
    """Discrete exterior derivative on a cell of dimension >= k+1."""
    key = ("d", cell.key)
    if key in vec._memo:
        return vec._memo[key]
    if cell.dim < space.k + 1:
        raise ValueError("discrete exterior derivative needs dim >= k+1")
    ops = space.ops(cell)
    lc = space.complex_of(cell)
    wf = vec.component_form(cell)
    sgn = rat((-1) ** (space.k + 1))
    if vec.float_mode:
        sgn = float(sgn)
    rhs = []
    for mu in ops.dd_tests:
        val = sgn * _cell_integral(lc, wedge(wf, ext_d(mu)))
        val = val + _boundary_potential_moment(space, vec, cell, mu)
        rhs.append(val)
    coeffs = ops.dd_solve(rhs, vec.float_mode)
    out = PolyForm(cell.dim, space.k + 1)
    for c, b in zip(coeffs, ops.dd_basis):
        if c:
            out = out + b.scale(c)
    vec._memo[key] = out
    return out


def _boundary_potential_moment(space: DdrSpace, vec: DdrVector, cell: Cell, mu: PolyForm):
    """sum over facets of eps * int_facet (potential on facet) ^ tr mu."""
    total = ZERO if not vec.float_mode else 0.0
    for face, sign in space.mesh.boundary_cells(cell):
        if face.dim < space.k:
            continue
        pf = potential(space, vec, face)
        tr_mu = trace_between_cells(space.mesh, mu, cell.frame, face)
        lcf = space.complex_of(face)
        val = _cell_integral(lcf, wedge(pf, tr_mu))
        if vec.float_mode:
            val = to_float(val)
        total = total + sign * val
    return total


def global_d(space: DdrSpace, vec: DdrVector) -> DdrVector:
    """Projection of the cellwise discrete derivative onto the (k+1)-space."""
    target = get_space(space.mesh, space.r, space.k + 1)

    def moments(cell, ops, lc):
        dd = discrete_d(space, vec, cell)
        return [_coerce(_cell_integral(lc, wedge(dd, t)), vec.float_mode) for t in ops.test]

    return interpolate_from_moments(target, moments, vec.float_mode)


def _coerce(x, float_mode):
    return to_float(x) if float_mode and not isinstance(x, float) else x


def get_space(mesh: PolytopalMesh, r: int, k: int) -> DdrSpace:
    cache = mesh.caches.setdefault("ddr_spaces", {})
    if (r, k) not in cache:
        cache[(r, k)] = DdrSpace(mesh, r, k)
    return cache[(r, k)]


# ---------------------------------------------------------------------------
# norms and inner products


def component_l2_norm(space: DdrSpace, vec: DdrVector, cell: Cell) -> float:
    """True L2 norm of the stored component on one cell."""
    form = vec.component_form(cell)
    if form.is_zero():
        return 0.0
    return form_l2_norm(space, form, cell)


def form_l2_norm(space: DdrSpace, form: PolyForm, cell: Cell) -> float:
    lc = space.complex_of(cell)
    metric = cell.frame.metric()
    detg = cell.frame.detg()
    if cell.dim == 0:
        v = form.component(()).eval(())
        return abs(to_float(v))
    p = inner_product_poly(form, form, metric)
    total = 0.0
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)
        sgn = lc.top_orientation(t)
        total += sgn * to_float(integrate_simplex(p, coords))
    return math.sqrt(max(total, 0.0) * math.sqrt(to_float(detg)))


def component_norm(space: DdrSpace, vec: DdrVector, cell: Cell) -> float:
    """Recursive h-weighted component norm on the restriction to one cell."""
    total = component_l2_norm(space, vec, cell) ** 2
    if cell.dim > space.k:
        for face, _ in space.mesh.boundary_cells(cell):
            if face.dim >= space.k:
                total += cell.h * component_norm(space, vec, face) ** 2
    return math.sqrt(total)


def global_component_norm(space: DdrSpace, vec: DdrVector) -> float:
    return math.sqrt(sum(component_norm(space, vec, c) ** 2
                         for c in space.mesh.cells[space.mesh.n]))


def _potential_l2(space: DdrSpace, vec1, vec2, cell):
    """Exact coordinate inner product of the two potentials, plus detg."""
    p1 = potential(space, vec1, cell)
    p2 = potential(space, vec2, cell)
    lc = space.complex_of(cell)
    metric = cell.frame.metric()
    if cell.dim == 0:
        return p1.component(()).eval(()) * p2.component(()).eval(()), ONE
    p = inner_product_poly(p1, p2, metric)
    total = ZERO if not (vec1.float_mode or vec2.float_mode) else 0.0
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)
        sgn = lc.top_orientation(t)
        total = total + sgn * integrate_simplex(p, coords)
    return total, cell.frame.detg()


def stabilization(space: DdrSpace, vec1: DdrVector, vec2: DdrVector, cell: Cell):
    """Difference-of-potentials penalty over all proper subcells of dim >= k.

    Exactly zero when both arguments interpolate one polynomial of degree
    <= r: every trace difference then vanishes as a form before any norm is
    taken, so the exact path returns the rational 0.
    """
    pf1 = potential(space, vec1, cell)
    pf2 = potential(space, vec2, cell)
    terms = []
    for dsub in range(space.k, cell.dim):
        for face in space.mesh.delta(cell, dsub):
            d1 = (trace_between_cells(space.mesh, pf1, cell.frame, face)
                  - potential(space, vec1, face))
            d2 = (trace_between_cells(space.mesh, pf2, cell.frame, face)
                  - potential(space, vec2, face))
            if d1.is_zero() or d2.is_zero():
                continue
            lcf = space.complex_of(face)
            metric = face.frame.metric()
            if face.dim == 0:
                val = d1.component(()).eval(()) * d2.component(()).eval(())
                rootg = 1.0
            else:
                p = inner_product_poly(d1, d2, metric)
                val = ZERO
                for t, (simp, aframe, _) in enumerate(lcf.tops):
                    coords = lcf.coords_in(simp.verts, aframe)
                    val = val + lcf.top_orientation(t) * integrate_simplex(p, coords)
                rootg = math.sqrt(to_float(face.frame.detg()))
            weight = cell.h ** (cell.dim - dsub)
            terms.append(to_float(val) * rootg * weight)
    if not terms:
        return ZERO
    return math.fsum(terms)


def inner_product(space: DdrSpace, vec1: DdrVector, vec2: DdrVector, cell: Cell):
    """Local stabilized inner product <P w, P m>_f + s_f(w, m)."""
    core, detg = _potential_l2(space, vec1, vec2, cell)
    root = math.sqrt(to_float(detg))
    s = stabilization(space, vec1, vec2, cell)
    exact_ok = (not (vec1.float_mode or vec2.float_mode)) and detg == ONE and s == 0
    if exact_ok:
        return core
    return to_float(core) * root + to_float(s)


def global_inner_product(space: DdrSpace, vec1: DdrVector, vec2: DdrVector):
    vals = [inner_product(space, vec1, vec2, c) for c in space.mesh.cells[space.mesh.n]]
    if all(not isinstance(v, float) for v in vals):
        return sum(vals, ZERO)
    return math.fsum(to_float(v) for v in vals)


def l2_inner(mesh: PolytopalMesh, cell: Cell, a: PolyForm, b: PolyForm):
    """L2 inner product of cell-frame forms over the cell.

    Exact rational when sqrt(det g) is rational (coordinate-aligned and
    top-dimensional cells), float otherwise.
    """
    from .exterior import integrate_inner_simplex
    from .scalars import sqrt_exact

    lc = get_complex(mesh, cell)
    if cell.dim == 0:
        return a.component(()).eval(()) * b.component(()).eval(())
    metric = cell.frame.metric()
    total = ZERO
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)
        total = total + lc.top_orientation(t) * integrate_inner_simplex(a, b, metric, coords)
    root = sqrt_exact(cell.frame.detg())
    if root is not None and not isinstance(total, float):
        return total * root
    return to_float(total) * math.sqrt(to_float(cell.frame.detg()))
