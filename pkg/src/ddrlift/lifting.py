"""Conforming lifting of discrete k-forms into piecewise polynomials.

The lifting is assembled cell by cell, by increasing dimension. On each cell
it solves a finite element boundary value problem (prescribed exterior
derivative and boundary trace) picking the minimum-L2-norm solution, then
adds an exterior derivative of per-simplex zero-trace bubbles so that the
projection property against trimmed test forms holds. On cells of
codimension two or more relative to the form degree, a correction term
built from a second boundary value problem and a bubble problem restores
the compatibility of the derivative data.

An independent construction of a (non-minimal) solution to the same
boundary value problem is kept as an oracle: it reduces the data by the
Whitney form of a cochain solution and then sets the degrees of freedom by
induction on the subsimplex dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import linalg
from .cochain import (Cochain, CompatibilityError, de_rham_map,
                      solve_cochain_bvp, whitney_map)
from .ddr import DdrSpace, DdrVector, discrete_d, interpolate_from_moments, potential
from .exterior import PolyForm, ext_d, integrate_top, pullback, wedge
from .mesh import Cell, PolytopalMesh, induced_sign
from .scalars import ONE, ZERO, rat, rat_str
from .spaces import (FEForm, FESpace, LocalComplex, Simplex, _close_complex,
                     _mark_boundary, bubble_space, fe_space, full_basis_forms,
                     get_complex, koszul_image_basis, trace_to_simplex)


# ---------------------------------------------------------------------------
# constrained minimum-norm solves


@dataclass
class ConstrainedLeastNormProblem:
    """min x^T G x subject to A x = b; exact KKT solve with certificate."""

    gram: list
    constraints: list
    solver: linalg.MinNormSolver = field(init=False)

    def __post_init__(self):
        self.solver = linalg.MinNormSolver(self.gram, self.constraints)

    def solve(self, b):
        return self.solver.solve(b)

    def kkt_certificate(self, x, y, b) -> bool:
        """Stationarity G x = -Ar^T y and feasibility A x = b, both exact."""
        gx = linalg.matvec(self.gram, x)
        rows = [self.constraints[i] for i in self.solver.keep]
        for i in range(len(gx)):
            aty = sum((rows[j][i] * y[j] for j in range(len(rows)) if rows[j][i]), ZERO)
            if gx[i] + aty != 0:
                return False
        for row, bi in zip(self.constraints, b):
            if sum((a * xi for a, xi in zip(row, x) if a), ZERO) != bi:
                return False
        return True


def _fe_bvp_problem(mesh: PolytopalMesh, cell: Cell, s: int, k: int):
    """Shape-cached min-norm problem for d lambda = xi, tr lambda = theta."""
    cache = mesh.caches.setdefault("fe_bvp_problems", {})
    lc = get_complex(mesh, cell)
    key = (lc.shape_key(), s, k)
    if key not in cache:
        trial = fe_space(mesh, cell, s + 1, k)
        cspace = fe_space(mesh, cell, s + 1, k + 1)
        A = []
        for pos in trial.boundary_dof_positions():
            row = [ZERO] * trial.ndof
            row[pos] = ONE
            A.append(row)
        A.extend(trial.d_matrix(cspace))
        cache[key] = ConstrainedLeastNormProblem(trial.gram(), A)
    return cache[key]


def _boundary_tops_as_volume(mesh, cell, lc_vol, lc_bnd):
    """For each boundary-complex top, the matching (face cell, top index)."""
    out = []
    for simp, aframe, sign in lc_bnd.tops:
        for fid, _ in cell.boundary:
            face = mesh.cell(cell.dim - 1, fid)
            lcf = get_complex(mesh, face)
            if simp.verts in lcf.index and lcf.index[simp.verts][0] == face.dim:
                t = next(i for i, (sp, _, _) in enumerate(lcf.tops) if sp.verts == simp.verts)
                out.append((face, t))
                break
        else:
            raise ValueError("boundary top not found in any face submesh")
    return out


def check_compatibility(mesh, cell, k, xi_per_top, theta_per_top, where: str):
    """Exact verification of the boundary value problem compatibility."""
    d = cell.dim
    lc = get_complex(mesh, cell)
    lcb = get_complex(mesh, cell, boundary=True)
    if d == k + 1:
        vol = ZERO
        for t, (simp, aframe, _) in enumerate(lc.tops):
            coords = lc.coords_in(simp.verts, aframe)
            vol = vol + lc.top_orientation(t) * integrate_top(xi_per_top[t], coords)
        bnd = ZERO
        for t, (simp, aframe, sign) in enumerate(lcb.tops):
            coords = lcb.coords_in(simp.verts, aframe)
            bnd = bnd + sign * lcb.top_orientation(t) * integrate_top(theta_per_top[t], coords)
        if vol != bnd:
            raise CompatibilityError(
                f"{where}: closed-boundary integral condition fails, defect {vol - bnd}")
    elif d >= k + 2:
        # compare DOFs of tr xi and d theta in a boundary FE space holding both
        deg = max([f.poly_degree() for f in xi_per_top.values()]
                  + [f.poly_degree() for f in theta_per_top.values()] + [0])
        bspace = fe_space(mesh, cell, deg + 1, k + 1, boundary=True)
        dtheta = {t: ext_d(theta_per_top[t]) for t in theta_per_top}
        dofs_dtheta = bspace.dof_values(dtheta)
        for pos, dof in enumerate(bspace.dofs):
            simp = bspace.lc.simplex(dof.sdim, dof.sidx)
            tr = trace_to_simplex(lc, xi_per_top, _find(lc, simp.verts))
            val = integrate_top(wedge(tr, dof.weight),
                                lc.coords_in(simp.verts, simp.frame))
            if val != dofs_dtheta[pos]:
                raise CompatibilityError(
                    f"{where}: trace condition fails on simplex {simp.verts}, "
                    f"defect {val - dofs_dtheta[pos]}")


def _find(lc: LocalComplex, verts) -> Simplex:
    d, i = lc.index[tuple(verts)]
    return lc.simplex(d, i)


def solve_fe_bvp(mesh: PolytopalMesh, cell: Cell, s: int, k: int,
                 xi_per_top, theta_per_top, where: str = "fe bvp") -> FEForm:
    """Minimum-norm lambda in the degree-(s+1) trimmed FE space on the
    submesh of the cell with d lambda = xi and tr lambda = theta.

    ``xi_per_top``: dict top index -> PolyForm ((k+1)-form, cell frame) on
    the volume complex; ``theta_per_top``: dict top index -> PolyForm
    (k-form, owner face frame) on the boundary complex. Compatibility is
    checked exactly first; incompatible data raise CompatibilityError.
    """
    dxi_zero = all(ext_d(f).is_zero() for f in xi_per_top.values())
    if not dxi_zero:
        raise CompatibilityError(f"{where}: volume data is not closed (d xi != 0)")
    check_compatibility(mesh, cell, k, xi_per_top, theta_per_top, where)
    trial = fe_space(mesh, cell, s + 1, k)
    cspace = fe_space(mesh, cell, s + 1, k + 1)
    problem = _fe_bvp_problem(mesh, cell, s, k)
    lcb = get_complex(mesh, cell, boundary=True)
    b = []
    for pos in trial.boundary_dof_positions():
        dof = trial.dofs[pos]
        simp = trial.lc.simplex(dof.sdim, dof.sidx)
        bsimp = _find(lcb, simp.verts)
        tr = trace_to_simplex(lcb, theta_per_top, bsimp)
        b.append(integrate_top(wedge(tr, dof.weight),
                               lcb.coords_in(bsimp.verts, bsimp.frame)))
    b.extend(cspace.dof_values(xi_per_top))
    x, _ = problem.solve(b)
    return FEForm(trial, x)


# ---------------------------------------------------------------------------
# bubble solves (Petrov-Galerkin on one simplex, Koszul about the cell point)


def _bubble_problem(mesh, cell, top_index, s_bubble, k_form, s_test, k_test):
    """Shape-cached min-norm problem for one simplex bubble solve.

    Unknown: zero-trace trimmed (k_form)-forms of degree s_bubble on the
    simplex; tests: kappa_f P_{s_test} Lambda^{k_test}; rows are the wedge
    integrals against the exterior derivative of the tests.
    """
    cache = mesh.caches.setdefault("bubble_problems", {})
    from .spaces import single_complex

    lc = single_complex(mesh, cell, top_index)
    key = (lc.shape_key(), s_bubble, k_form, s_test, k_test)
    if key not in cache:
        bs = bubble_space(mesh, cell, top_index, s_bubble, k_form)
        tests = koszul_image_basis(cell.dim, s_test, k_test)
        simp, aframe, _ = lc.tops[0]
        coords = lc.coords_in(simp.verts, aframe)
        sgn = lc.top_orientation(0)
        A = []
        for nu in tests:
            dnu = ext_d(nu)
            A.append([sgn * integrate_top(wedge(bs.element(i), dnu), coords)
                      for i in range(bs.dim)])
        # Gram of the bubble elements (normalized metric, positive measure)
        G = [[bs.space.gram()[bs.interior[i]][bs.interior[j]]
              for j in range(bs.dim)] for i in range(bs.dim)]
        cache[key] = (ConstrainedLeastNormProblem(G, A) if bs.dim else None, tests, bs)
    problem, tests, bs_proto = cache[key]
    bs = bubble_space(mesh, cell, top_index, s_bubble, k_form)
    return problem, tests, bs


def solve_bubble(mesh: PolytopalMesh, cell: Cell, top_index: int, s: int, k: int,
                 zeta: PolyForm) -> PolyForm | None:
    """Minimum-norm tau with zero boundary trace solving the moment problem

        (-1)^k int_F tau ^ d nu = int_F zeta ^ nu
        for all nu in kappa_f P_{s-1} Lambda^{d-k+1}(F).

    Returns None when the test space is empty (k = 0), where tau = 0 works.
    """
    d = cell.dim
    if k == 0 or d - k + 1 > d:
        return None
    problem, tests, bs = _bubble_problem(mesh, cell, top_index,
                                         s + d - k + 1, k - 1, s - 1, d - k + 1)
    if problem is None:
        return None
    from .spaces import single_complex

    lc = single_complex(mesh, cell, top_index)
    simp, aframe, _ = lc.tops[0]
    coords = lc.coords_in(simp.verts, aframe)
    sgnF = lc.top_orientation(0)
    sgn = rat((-1) ** k)
    b = [sgn * sgnF * integrate_top(wedge(zeta, nu), coords) for nu in tests]
    x, _ = problem.solve(b)
    out = PolyForm(d, k - 1)
    for c, i in zip(x, range(bs.dim)):
        if c:
            out = out + bs.element(i).scale(c)
    return out


# ---------------------------------------------------------------------------
# the recursive lifting


def rep_degree(r: int, k: int, d: int) -> int:
    """Trimmed degree of the lifting representative on a d-cell.

    One degree above the base-plus-codimension count, because the bubble
    term is the exterior derivative of a degree-(r+2+d-k) zero-trace form
    and d preserves the trimmed degree.
    """
    return r + 1 if d == k else r + 2 + d - k


@dataclass
class LiftedForm:
    """Per-cell conforming FE representatives of the lifted discrete form."""

    space: DdrSpace
    reps: dict  # cell.key -> FEForm

    def rep(self, cell: Cell) -> FEForm:
        return self.reps[cell.key]

    def to_json(self):
        return {
            "r": self.space.r, "k": self.space.k,
            "cells": {f"{key[0]},{key[1]}": [rat_str(c) for c in fe.coeffs]
                      for key, fe in sorted(self.reps.items())},
        }

    @classmethod
    def from_json(cls, space: DdrSpace, doc) -> "LiftedForm":
        reps = {}
        for key, coeffs in doc["cells"].items():
            d, i = (int(x) for x in key.split(","))
            cell = space.mesh.cell(d, i)
            fes = fe_space(space.mesh, cell, rep_degree(space.r, space.k, d), space.k)
            reps[(d, i)] = FEForm(fes, [rat(c) for c in coeffs])
        return cls(space, reps)


def _theta_from_reps(mesh, cell, reps):
    """Boundary data on the boundary complex from the facet representatives."""
    lcb = get_complex(mesh, cell, boundary=True)
    matches = _boundary_tops_as_volume(mesh, cell, get_complex(mesh, cell), lcb)
    theta = {}
    for t, (face, tf) in enumerate(matches):
        theta[t] = reps[face.key].on_top(tf)
    return theta, lcb


def local_lifting(space: DdrSpace, vec: DdrVector, cell: Cell, reps,
                  skip_correction: bool = False) -> FEForm:
    """Lifting representative on one cell, given those on its boundary.

    ``skip_correction`` disables the codimension->=2 correction term; it
    exists only so the test suite can demonstrate that the correction is
    what makes the derivative data compatible (the solve then fails).
    """
    mesh, r, k = space.mesh, space.r, space.k
    d = cell.dim
    if d == k:
        fes = fe_space(mesh, cell, r + 1, k)
        return FEForm(fes, fes.dof_values_of_polyform(vec.component_form(cell)))
    lc = get_complex(mesh, cell)
    ntop = len(lc.tops)
    dd = discrete_d(space, vec, cell)
    theta, lcb = _theta_from_reps(mesh, cell, reps)
    if d == k + 1:
        s_lam = r + 1
        xi = {t: dd for t in range(ntop)}
        lam = solve_fe_bvp(mesh, cell, s_lam, k, xi, theta,
                           where=f"lifting on cell ({d},{cell.id})")
    else:
        s_lam = r + 1 + d - k
        if skip_correction:
            xi = {t: dd for t in range(ntop)}
            lam = solve_fe_bvp(mesh, cell, s_lam, k, xi, theta,
                               where=f"lifting (no correction) on cell ({d},{cell.id})")
        else:
            corr = _lifting_correction(space, vec, cell, reps, dd)
            xi = {t: dd + corr[t] for t in range(ntop)}
            lam = solve_fe_bvp(mesh, cell, s_lam, k, xi, theta,
                               where=f"lifting on cell ({d},{cell.id})")
    pot = potential(space, vec, cell)
    per_top = {}
    for t in range(ntop):
        lam_t = lam.on_top(t)
        zeta = pot - lam_t
        tau = solve_bubble(mesh, cell, t, r + 1, k, zeta)
        per_top[t] = lam_t + ext_d(tau) if tau is not None else lam_t
    rep_space = fe_space(mesh, cell, rep_degree(r, k, d), k)
    return FEForm(rep_space, rep_space.dof_values(per_top))


def _lifting_correction(space: DdrSpace, vec: DdrVector, cell: Cell, reps, dd: PolyForm):
    """chi + d rho on the cell: restores compatibility of the derivative data."""
    mesh, r, k = space.mesh, space.r, space.k
    d = cell.dim
    lc = get_complex(mesh, cell)
    lcb = get_complex(mesh, cell, boundary=True)
    ntop = len(lc.tops)
    matches = _boundary_tops_as_volume(mesh, cell, lc, lcb)
    xi_chi = {t: ext_d(dd).scale(rat(-1)) for t in range(ntop)}
    theta_chi = {}
    for t, (face, tf) in enumerate(matches):
        drep = ext_d(reps[face.key].on_top(tf))
        A, c = face.frame.inclusion_into(cell.frame)
        tr_dd = pullback(dd, A, c, face.dim)
        theta_chi[t] = drep - tr_dd
    chi = solve_fe_bvp(mesh, cell, r + d - k, k + 1, xi_chi, theta_chi,
                       where=f"lifting correction on cell ({d},{cell.id})")
    out = {}
    for t in range(ntop):
        chi_t = chi.on_top(t)
        rho = solve_bubble(mesh, cell, t, r + 1, k + 1, chi_t.scale(rat(-1)))
        psi = ext_d(rho) if rho is not None else PolyForm(d, k + 1)
        out[t] = chi_t + psi
    return out


def global_lifting(space: DdrSpace, vec: DdrVector, skip_correction=False) -> LiftedForm:
    """Conforming lifting of a discrete vector, cell by cell by dimension."""
    if vec.float_mode:
        raise ValueError("the lifting path is exact-only; supply rational vectors")
    mesh, k = space.mesh, space.k
    reps = {}
    for d in range(k, mesh.n + 1):
        for cell in mesh.cells[d]:
            reps[cell.key] = local_lifting(space, vec, cell, reps,
                                           skip_correction=skip_correction)
    return LiftedForm(space, reps)


# ---------------------------------------------------------------------------
# interpolation of a lifted form (right-inverse check) and projections


def interpolate_lifted(lift: LiftedForm) -> DdrVector:
    space = lift.space

    def moments(cell, ops, lc):
        rep = lift.rep(cell)
        out = []
        for tform in ops.test:
            total = ZERO
            for t, (simp, aframe, _) in enumerate(lc.tops):
                coords = lc.coords_in(simp.verts, aframe)
                total = total + lc.top_orientation(t) * integrate_top(
                    wedge(rep.on_top(t), tform), coords)
            out.append(total)
        return out

    return interpolate_from_moments(space, moments, float_mode=False)


def lift_projection_residuals(space: DdrSpace, vec: DdrVector, lift: LiftedForm,
                              cell: Cell):
    """Moments of tr_f(L w) - P_f w against trimmed (r+1)-test forms; all 0."""
    from .spaces import trimmed_basis_forms

    lc = get_complex(space.mesh, cell)
    rep = lift.rep(cell)
    pot = potential(space, vec, cell)
    out = []
    for zeta in trimmed_basis_forms(cell.dim, space.r + 1, cell.dim - space.k):
        total = ZERO
        for t, (simp, aframe, _) in enumerate(lc.tops):
            coords = lc.coords_in(simp.verts, aframe)
            total = total + lc.top_orientation(t) * integrate_top(
                wedge(rep.on_top(t) - pot, zeta), coords)
        out.append(total)
    return out


# ---------------------------------------------------------------------------
# explicit (oracle) solution of the FE boundary value problem


def _simplex_fe_space(mesh: PolytopalMesh, simp: Simplex, s: int, k: int) -> FESpace:
    """Trimmed FE space on one subsimplex, in its canonical frame."""
    cache = mesh.caches.setdefault("subsimplex_fe", {})
    lc_key = ("sub", simp.verts, s, k)
    if lc_key not in cache:
        simplices, index = _close_complex(mesh, [simp.verts])
        _mark_boundary(simplices, index, simp.dim)
        lc = LocalComplex(mesh, simp.dim, simplices, index)
        top = simplices[simp.dim][0]
        lc.tops.append((top, top.frame, 1))
        from .spaces import _complex_label

        lc.label = _complex_label(lc)
        shape_cache = mesh.caches.setdefault("fe_by_shape", {})
        key = (lc.label, s, k)
        if key not in shape_cache:
            shape_cache[key] = FESpace(lc, s, k)
        proto = shape_cache[key]
        from .spaces import _rebind

        cache[lc_key] = proto if proto.lc is lc else _rebind(proto, lc)
    return cache[lc_key]


def _koszul_decomp_on_simplex(mesh, dsub: int, t: int, kk: int, mu: PolyForm):
    """omega with mu = d omega + zeta per the Koszul-pair isomorphism
    kappa P_t Lambda^kk x kappa P_{t-1} Lambda^{kk+1} -> P_t Lambda^kk.

    kappa is about the frame origin, so the decomposition depends only on
    (dsub, t, kk) and is cached globally for the mesh.
    """
    cache = mesh.caches.setdefault("koszul_iso", {})
    key = (dsub, t, kk)
    if key not in cache:
        B1 = koszul_image_basis(dsub, t, kk)
        B2 = koszul_image_basis(dsub, t - 1, kk + 1)
        cols = [ext_d(w) for w in B1] + list(B2)
        keys = sorted({(I, e) for w in full_basis_forms(dsub, t, kk)
                       for I, p in w.comps.items() for e in p.coeffs})
        M = [[_form_entry(w, pos) for w in cols] for pos in keys]
        if len(keys) != len(cols):
            rows = linalg.independent_rows(M)
            keys = [keys[i] for i in rows[:len(cols)]]
            M = [M[i] for i in rows[:len(cols)]]
        cache[key] = (B1, keys, linalg.ExactSolver(M), cols)
    B1, keys, solver, cols = cache[key]
    rhs = [_form_entry(mu, pos) for pos in keys]
    c = solver(rhs)
    recomposed = PolyForm(mu.dim, mu.degree)
    for ci, w in zip(c, cols):
        if ci:
            recomposed = recomposed + w.scale(ci)
    if not (recomposed - mu).is_zero():
        raise AssertionError("Koszul-pair decomposition failed to reproduce the weight")
    omega = PolyForm(dsub, kk - 1)
    for ci, w in zip(c[:len(B1)], B1):
        if ci:
            omega = omega + w.scale(ci)
    return omega


def _form_entry(w: PolyForm, pos):
    I, e = pos
    p = w.comps.get(I)
    return p.coeffs.get(e, ZERO) if p is not None else ZERO


def explicit_fe_bvp(mesh: PolytopalMesh, cell: Cell, s: int, k: int,
                    xi_per_top, theta_per_top, where: str = "explicit fe bvp") -> FEForm:
    """Existence oracle: a (not minimum-norm) solution of the FE boundary
    value problem, built from a cochain solution plus DOF induction."""
    dxi_zero = all(ext_d(f).is_zero() for f in xi_per_top.values())
    if not dxi_zero:
        raise CompatibilityError(f"{where}: volume data is not closed (d xi != 0)")
    check_compatibility(mesh, cell, k, xi_per_top, theta_per_top, where)
    lc = get_complex(mesh, cell)
    lcb = get_complex(mesh, cell, boundary=True)
    d = cell.dim

    # step 1: zero-average reduction by Whitney forms of a cochain solution
    xi_cochain = de_rham_map(lc, xi_per_top, k + 1)
    theta_cochain = Cochain(lc, k)
    for i, simp in enumerate(lc.simplices.get(k, ())):
        if simp.interior:
            continue
        bsimp = _find(lcb, simp.verts)
        tr = trace_to_simplex(lcb, theta_per_top, bsimp)
        val = integrate_top(tr, lcb.coords_in(bsimp.verts, bsimp.frame))
        if val:
            theta_cochain.coeffs[i] = val
    lam_cochain = solve_cochain_bvp(lc, k, xi_cochain, theta_cochain)
    w_lam = whitney_map(fe_space(mesh, cell, 1, k), lam_cochain)
    w_xi = whitney_map(fe_space(mesh, cell, 1, k + 1), xi_cochain)
    xi_hat = {t: xi_per_top[t] - w_xi.on_top(t) for t in xi_per_top}
    bspace1 = fe_space(mesh, cell, 1, k, boundary=True)
    theta_b = Cochain(lcb, k)
    for i, simp in enumerate(lcb.simplices.get(k, ())):
        vol_idx = lc.index[simp.verts][1]
        v = lam_cochain.value(vol_idx)
        if v:
            theta_b.coeffs[i] = v
    w_theta = whitney_map(bspace1, theta_b)
    theta_hat = {t: theta_per_top[t] - w_theta.on_top(t) for t in theta_per_top}

    # step 2: DOF induction on the subsimplex dimension
    trial = fe_space(mesh, cell, s + 1, k)
    dof_vals = {}
    matches_b = {simp.verts: t for t, (simp, _, _) in enumerate(lcb.tops)}

    def theta_hat_dof(simp, weight):
        bsimp = _find(lcb, simp.verts)
        tr = trace_to_simplex(lcb, theta_hat, bsimp)
        return integrate_top(wedge(tr, weight), lcb.coords_in(bsimp.verts, bsimp.frame))

    def reconstruct_on(simp):
        sub = _simplex_fe_space(mesh, simp, s + 1, k)
        coeffs = [dof_vals[dof.key] for dof in sub.dofs]
        return FEForm(sub, coeffs)

    for dsub in range(k, d + 1):
        for i, simp in enumerate(lc.simplices.get(dsub, ())):
            weights = _dof_weights(dsub, s + 1, k)
            if not simp.interior:
                for w, weight in enumerate(weights):
                    dof_vals[(simp.verts, w)] = theta_hat_dof(simp, weight)
                continue
            if dsub == k:
                for w, _ in enumerate(weights):
                    dof_vals[(simp.verts, w)] = ZERO
                continue
            tr_xi = trace_to_simplex(lc, xi_hat, simp)
            coords = lc.coords_in(simp.verts, simp.frame)
            for w, weight in enumerate(weights):
                omega = _koszul_decomp_on_simplex(mesh, dsub, s + k - dsub,
                                                  dsub - k, weight)
                val = integrate_top(wedge(tr_xi, omega), coords) * rat((-1) ** (k + 1))
                # boundary term over the faces of the subsimplex
                for pos in range(dsub + 1):
                    fverts = tuple(v for j, v in enumerate(simp.verts) if j != pos)
                    fsimp = _find(lc, fverts)
                    lam_f = reconstruct_on(fsimp)
                    Af, cf = fsimp.frame.inclusion_into(simp.frame)
                    tro = pullback(omega, Af, cf, fsimp.dim)
                    sgn = induced_sign(simp.frame, fsimp.frame.origin, fsimp.frame)
                    contrib = integrate_top(wedge(lam_f.on_top(0), tro),
                                            lc.coords_in(fverts, fsimp.frame))
                    val = val + rat((-1) ** k) * sgn * contrib
                dof_vals[(simp.verts, w)] = val

    coeffs = [dof_vals[dof.key] for dof in trial.dofs]
    lam_hat = FEForm(trial, coeffs)
    w_part = trial.dof_values({t: w_lam.on_top(t) for t in range(len(lc.tops))})
    return FEForm(trial, [a + b for a, b in zip(lam_hat.coeffs, w_part)])


def _dof_weights(dsub, s_plus_1, k):
    from .spaces import dof_weight_basis

    return dof_weight_basis(dsub, s_plus_1, k, dsub)


def verify_fe_solution(mesh, cell, s, k, lam: FEForm, xi_per_top, theta_per_top) -> bool:
    """Exact check of d lambda = xi and tr lambda = theta."""
    cspace = fe_space(mesh, cell, s + 1, k + 1)
    lc = get_complex(mesh, cell)
    dlam = {t: ext_d(lam.on_top(t)) for t in range(len(lc.tops))}
    if cspace.dof_values(dlam) != cspace.dof_values(xi_per_top):
        return False
    lcb = get_complex(mesh, cell, boundary=True)
    for pos in lam.space.boundary_dof_positions():
        dof = lam.space.dofs[pos]
        simp = lam.space.lc.simplex(dof.sdim, dof.sidx)
        bsimp = _find(lcb, simp.verts)
        tr = trace_to_simplex(lcb, theta_per_top, bsimp)
        want = integrate_top(wedge(tr, dof.weight),
                             lcb.coords_in(bsimp.verts, bsimp.frame))
        if lam.coeffs[pos] != want:
            return False
    return True
