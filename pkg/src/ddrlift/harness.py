"""Batch studies: approximation, primal and adjoint consistency, lifting checks.

Test data are smooth forms whose components are products of sin(pi x_i)
factors, so traces vanish analytically on the boundary of the unit domain
and all derivatives are available in closed form. Rates are measured on
residuals only; the data norms on the right-hand sides of the estimates are
fixed per study and treated as level-independent constants.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .ddr import (DdrSpace, DdrVector, ambient_frame, cell_integral, component_norm,
                  discrete_d, get_space, global_component_norm, global_d,
                  global_inner_product, interpolate, potential, trace_between_cells)
from .exterior import (PolyForm, SimplexQuadrature, SmoothForm, ext_d, koszul,
                       perm_sign, star_rational, wedge)
from .mesh import MeshFamily, PolytopalMesh, build_family
from .polynomial import Poly
from .scalars import QQ, ZERO, to_float
from .spaces import (decompose_koszul, full_basis_forms, get_complex,
                     l2_trimmed_project, trimmed_basis_forms)


def parallel_map(fn, items):
    """Map over independent per-cell work; DDR_LIFT_THREADS caps workers."""
    workers = int(os.environ.get("DDR_LIFT_THREADS", "1"))
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# separable smooth forms with analytic partial derivatives


def _sin(x):
    return math.sin(math.pi * x)


def _cos(x):
    return math.cos(math.pi * x)


class SepProduct:
    """c * prod_i f_i(x_i) with f_i in {1, sin(pi x), cos(pi x)}."""

    def __init__(self, factors, coef=1.0):
        self.factors = tuple(factors)  # entries: 'one' | 'sin' | 'cos'
        self.coef = coef

    def __call__(self, x):
        v = self.coef
        for xi, f in zip(x, self.factors):
            if f == "sin":
                v *= _sin(xi)
            elif f == "cos":
                v *= _cos(xi)
        return v

    def partial(self, j):
        f = self.factors[j]
        if f == "one":
            return None
        new = list(self.factors)
        new[j] = "cos" if f == "sin" else "sin"
        coef = self.coef * math.pi * (1.0 if f == "sin" else -1.0)
        return SepProduct(new, coef)


class SepSum:
    def __init__(self, terms):
        self.terms = [t for t in terms if t is not None and t.coef != 0.0]

    def __call__(self, x):
        return sum(t(x) for t in self.terms)

    def partial(self, j):
        return SepSum([t.partial(j) for t in self.terms])

    def scaled(self, c):
        return SepSum([SepProduct(t.factors, t.coef * c) for t in self.terms])


def smooth_form(n: int, k: int, comps: dict) -> SmoothForm:
    """SmoothForm from SepSum components with partials attached."""
    form = SmoothForm(n, k, {I: c for I, c in comps.items()})
    form.partials = {I: [c.partial(j) for j in range(n)] for I, c in comps.items()}
    return form


def smooth_ext_d(form: SmoothForm) -> SmoothForm:
    n = form.n
    comps = {}
    for I, _ in form.comps.items():
        for j in range(n):
            if j in I:
                continue
            dj = form.partials[I][j]
            K = tuple(sorted(I + (j,)))
            sign = perm_sign((j,) + I)
            term = dj.scaled(float(sign))
            comps[K] = SepSum(comps[K].terms + term.terms) if K in comps else term
    return smooth_form(n, form.degree + 1, comps)


def smooth_star(form: SmoothForm) -> SmoothForm:
    """Hodge star in the ambient orthonormal coordinates."""
    n = form.n
    comps = {}
    for I, c in form.comps.items():
        Ic = tuple(i for i in range(n) if i not in I)
        sign = perm_sign(list(I) + list(Ic))
        comps[Ic] = c.scaled(float(sign))
    return smooth_form(n, n - form.degree, comps)


def smooth_codifferential(form: SmoothForm) -> SmoothForm:
    n, k = form.n, form.degree
    s1 = smooth_star(form)
    ds1 = smooth_ext_d(s1)
    ell = ds1.degree
    s2 = smooth_star(ds1)
    sign = (-1) ** k * (-1) ** (ell * (n - ell))
    return smooth_form(n, k - 1, {I: c.scaled(float(sign)) for I, c in s2.comps.items()})


def bump_form(n: int, k: int, weights=None) -> SmoothForm:
    """k-form with every component a weighted product of sin(pi x_i).

    All traces vanish on the boundary of the unit square/cube, as required
    by the adjoint consistency hypotheses.
    """
    comps = {}
    for pos, I in enumerate(combinations(range(n), k)):
        w = 1.0 + 0.25 * pos if weights is None else weights[pos]
        comps[I] = SepSum([SepProduct(("sin",) * n, w)])
    return smooth_form(n, k, comps)


def generic_form(n: int, k: int, shift=0) -> SmoothForm:
    """Smooth k-form with mixed sin/cos components (no boundary condition)."""
    comps = {}
    pats = [("cos", "sin", "cos"), ("sin", "cos", "cos"), ("cos", "cos", "sin")]
    for pos, I in enumerate(combinations(range(n), k)):
        pat = pats[(pos + shift) % len(pats)][:n]
        comps[I] = SepSum([SepProduct(pat, 1.0 + 0.3 * pos)])
    return smooth_form(n, k, comps)


# ---------------------------------------------------------------------------
# quadrature of mixed smooth/polynomial integrands over cells


def quad_wedge_cell(mesh, cell, smooth: SmoothForm, poly: PolyForm, order: int) -> float:
    """Integral over the cell of smooth ^ poly (top degree), frame-oriented."""
    lc = get_complex(mesh, cell)
    d = cell.dim
    quad = SimplexQuadrature(order, d)
    frame = cell.frame
    coeff_fns = {J: smooth.pulled_back_coeff(frame, J)
                 for J in combinations(range(d), smooth.degree)}
    pieces = []
    for J, fn in coeff_fns.items():
        Jc = tuple(i for i in range(d) if i not in J)
        comp = poly.component(Jc)
        if comp.is_zero():
            continue
        sgn = perm_sign(list(J) + list(Jc))
        pieces.append((sgn, fn, comp))
    if not pieces:
        return 0.0
    total = 0.0
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)

        def integrand(y):
            return sum(sgn * fn(y) * to_float(comp.eval(tuple(y)))
                       for sgn, fn, comp in pieces)

        total += quad.integrate(coords, integrand)
    return total


def quad_error_norm(mesh, cell, smooth: SmoothForm | None, poly: PolyForm | None,
                    order: int) -> float:
    """L2 norm over the cell of (smooth - poly); either part may be None."""
    lc = get_complex(mesh, cell)
    d = cell.dim
    quad = SimplexQuadrature(order, d)
    frame = cell.frame
    metric = [to_float(g) for g in frame.metric()]
    rootg = math.sqrt(float(np.prod(metric))) if metric else 1.0
    subsets = list(combinations(range(d), smooth.degree if smooth else poly.degree))
    fns = {}
    for J in subsets:
        sfn = smooth.pulled_back_coeff(frame, J) if smooth else (lambda y: 0.0)
        comp = poly.component(J) if poly is not None else None
        fns[J] = (sfn, comp, float(np.prod([1.0 / metric[i] for i in J])) if J else 1.0)
    total = 0.0
    for t, (simp, aframe, _) in enumerate(lc.tops):
        coords = lc.coords_in(simp.verts, aframe)

        def integrand(y):
            acc = 0.0
            for J, (sfn, comp, gfac) in fns.items():
                v = sfn(y)
                if comp is not None:
                    v -= to_float(comp.eval(tuple(y)))
                acc += gfac * v * v
            return acc

        total += quad.integrate(coords, integrand)
    return math.sqrt(max(total, 0.0) * rootg)


# ---------------------------------------------------------------------------
# constructive trimmed approximation


def build_trimmed_approx(mesh, cell, r: int, k: int, alpha: SmoothForm,
                         order: int | None = None):
    """Element of the degree-(r+1) trimmed space close to alpha.

    Mirrors the constructive argument: project onto full degree-r forms,
    project the remainder onto degree r+1, keep only the Koszul part of the
    remainder's decomposition, and add it back.
    """
    d = cell.dim
    order = order if order is not None else 2 * r + 8
    lc = get_complex(mesh, cell)
    metric = cell.frame.metric()
    oriented = [(lc.coords_in(s.verts, af), lc.top_orientation(t))
                for t, (s, af, _) in enumerate(lc.tops)]

    def smooth_moments(basis):
        quad = SimplexQuadrature(order, d)
        g0 = metric[0] if metric else 1
        nm = [to_float(g / g0) for g in metric]
        out = []
        frame = cell.frame
        fns = {J: alpha.pulled_back_coeff(frame, J)
               for J in combinations(range(d), k)}
        for b in basis:
            total = 0.0
            for coords, sgn in oriented:
                def integrand(y, b=b):
                    acc = 0.0
                    for J, fn in fns.items():
                        comp = b.component(J)
                        if comp.is_zero():
                            continue
                        gfac = float(np.prod([1.0 / nm[i] for i in J])) if J else 1.0
                        acc += gfac * fn(y) * to_float(comp.eval(tuple(y)))
                    return acc
                total += quad.integrate(coords, integrand)
            out.append(total)
        return out

    full_r = [f.map_coeffs(to_float) for f in full_basis_forms(d, r, k)]
    mu_hat = l2_trimmed_project(full_r, metric, oriented, moments=smooth_moments(full_r))
    if k == 0:
        full_r1 = [f.map_coeffs(to_float) for f in full_basis_forms(d, r + 1, 0)]
        return l2_trimmed_project(full_r1, metric, oriented, moments=smooth_moments(full_r1))
    full_r1 = [f.map_coeffs(to_float) for f in full_basis_forms(d, r + 1, k)]
    m_alpha = smooth_moments(full_r1)
    m_hat = None
    # beta = projection of (alpha - mu_hat) onto degree r+1
    from .exterior import integrate_inner_simplex

    g0 = metric[0] if metric else 1
    nm = tuple(g / g0 for g in metric)
    m_hat = []
    for b in full_r1:
        val = 0.0
        for coords, sgn in oriented:
            val += sgn * to_float(integrate_inner_simplex(mu_hat, b, nm, coords))
        m_hat.append(val)
    beta = l2_trimmed_project(full_r1, metric, oriented,
                              moments=[a - b for a, b in zip(m_alpha, m_hat)])
    _, rho = decompose_koszul(beta)
    return mu_hat + rho


# ---------------------------------------------------------------------------
# rate tables


@dataclass
class RateRow:
    level: int
    h: float
    ndof: int
    residual: float
    aux: dict = field(default_factory=dict)
    slope_running: float = float("nan")


@dataclass
class RateTable:
    rows: list
    config: dict
    config_hash: str = ""
    fitted_slope: float = float("nan")

    def finalize(self):
        self.config_hash = config_hash(self.config)
        rows = self.rows
        for i in range(1, len(rows)):
            if rows[i].residual > 0 and rows[i - 1].residual > 0:
                rows[i].slope_running = (
                    math.log(rows[i - 1].residual / rows[i].residual)
                    / math.log(rows[i - 1].h / rows[i].h))
        self.fitted_slope = fitted_slope([r.h for r in rows],
                                         [r.residual for r in rows])
        return self

    def to_csv(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("level,h,ndof,residual,slope_running\n")
            for row in self.rows:
                s = "" if math.isnan(row.slope_running) else f"{row.slope_running:.17g}"
                fh.write(f"{row.level},{row.h:.17g},{row.ndof},{row.residual:.17g},{s}\n")

    def to_plot_data(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# config {self.config_hash}\n")
            for row in self.rows:
                fh.write(f"{row.h:.12g} {row.residual:.12g}\n")

    def report(self) -> dict:
        return {
            "config": self.config, "config_hash": self.config_hash,
            "fitted_slope": self.fitted_slope,
            "rows": [{"level": r.level, "h": r.h, "ndof": r.ndof,
                      "residual": r.residual, "aux": r.aux,
                      "slope_running": None if math.isnan(r.slope_running)
                      else r.slope_running} for r in self.rows],
        }


def fitted_slope(hs, residuals) -> float:
    """Least-squares slope on log-log over the last max(2, L-1) points."""
    pts = [(h, e) for h, e in zip(hs, residuals) if e > 0]
    if len(pts) < 2:
        return float("nan")
    take = max(2, min(len(pts) - 1, 3))
    pts = pts[-take:]
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def config_hash(config: dict) -> str:
    doc = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


@dataclass
class StudyConfig:
    family: str = "triangular"
    n: int = 2
    levels: int = 4
    r: int = 0
    k: int = 0
    exact: bool = False
    quad_order: int | None = None
    form: str = "bump"
    seed: int = 1
    out: str | None = None
    plot_data: str | None = None

    def as_dict(self):
        return {
            "family": self.family, "n": self.n, "levels": self.levels,
            "r": self.r, "k": self.k, "exact": self.exact,
            "quad_order": self.quad_order, "form": self.form, "seed": self.seed,
        }

    def order(self):
        return self.quad_order if self.quad_order is not None else 2 * self.r + 6

    def meshes(self):
        return [build_family(MeshFamily(self.family, lev, n=self.n))
                for lev in range(self.levels)]


def _rng_vector(space: DdrSpace, seed: int, float_mode=True) -> DdrVector:
    rng = np.random.default_rng(seed)
    if float_mode:
        return space.vector([float(x) for x in rng.uniform(-1, 1, space.ndof)],
                            float_mode=True)
    return space.vector([QQ(int(x), 8) for x in rng.integers(-16, 17, space.ndof)],
                        float_mode=False)


# ---------------------------------------------------------------------------
# studies


def approx_study(config: StudyConfig) -> RateTable:
    """Decay of the trimmed-space approximation error, L2 and d-error.

    The per-cell work is independent; DDR_LIFT_THREADS caps the worker pool.
    """
    alpha = bump_form(config.n, config.k)
    dalpha = smooth_ext_d(alpha)
    rows = []
    for lev, mesh in enumerate(config.meshes()):
        def cell_errors(cell):
            mu = build_trimmed_approx(mesh, cell, config.r, config.k, alpha,
                                      order=config.order())
            return (quad_error_norm(mesh, cell, alpha, mu, config.order() + 4) ** 2,
                    quad_error_norm(mesh, cell, dalpha, ext_d(mu),
                                    config.order() + 4) ** 2)

        pairs = parallel_map(cell_errors, mesh.cells[mesh.n])
        e0sq = math.fsum(p[0] for p in pairs)
        e1sq = math.fsum(p[1] for p in pairs)
        rows.append(RateRow(lev, mesh.h_max(), len(pairs), math.sqrt(e0sq),
                            aux={"d_error": math.sqrt(e1sq)}))
    table = RateTable(rows, {"study": "approx", **config.as_dict()}).finalize()
    table.aux_slope = fitted_slope([r.h for r in rows],
                                   [r.aux["d_error"] for r in rows])
    return table


def primal_study(config: StudyConfig) -> RateTable:
    """Consistency of potential, discrete derivative, and inner product."""
    n, r, k = config.n, config.r, config.k
    omega = bump_form(n, k)
    domega = smooth_ext_d(omega) if k < n else None
    rows = []
    for lev, mesh in enumerate(config.meshes()):
        space = get_space(mesh, r, k)
        vec = interpolate(space, omega, quad_order=config.order())
        ep2 = ed2 = 0.0
        for cell in mesh.cells[n]:
            P = potential(space, vec, cell)
            ep2 += quad_error_norm(mesh, cell, omega, P, config.order() + 4) ** 2
            if domega is not None:
                dd = discrete_d(space, vec, cell)
                ed2 += quad_error_norm(mesh, cell, domega, dd, config.order() + 4) ** 2
        mu = _rng_vector(space, config.seed + lev)
        lhs = global_inner_product(space, vec, mu)
        rhs = 0.0
        for cell in mesh.cells[n]:
            Pmu = potential(space, mu, cell)
            starP = star_rational(Pmu, cell.frame.metric())
            rhs += quad_wedge_cell(mesh, cell, omega, starP, config.order())
        opn_mu = global_component_norm(space, mu)
        einner = abs(to_float(lhs) - rhs) / (opn_mu if opn_mu else 1.0)
        rows.append(RateRow(lev, mesh.h_max(), space.ndof, math.sqrt(ep2),
                            aux={"d_error": math.sqrt(ed2), "inner_defect": einner}))
    table = RateTable(rows, {"study": "primal", **config.as_dict()}).finalize()
    table.d_slope = fitted_slope([w.h for w in rows],
                                 [w.aux["d_error"] for w in rows]) if k < n else float("nan")
    table.inner_slope = fitted_slope([w.h for w in rows],
                                     [w.aux["inner_defect"] for w in rows])
    return table


def adjoint_residual(mesh, r: int, k: int, alpha: SmoothForm, vec: DdrVector,
                     order: int, debug: bool = False):
    """|int alpha ^ d_h w - (-1)^{k+1} int d alpha ^ P_h w| over the mesh.

    ``vec`` lives in the degree-(n-k-1) space. With ``debug`` the three-term
    split of the residual argument is returned alongside.
    """
    n = mesh.n
    space = vec.space
    dalpha = smooth_ext_d(alpha)
    sgn = float((-1) ** (k + 1))
    term1 = term2 = 0.0
    for cell in mesh.cells[n]:
        dd = discrete_d(space, vec, cell)
        P = potential(space, vec, cell)
        term1 += quad_wedge_cell(mesh, cell, alpha, dd, order)
        term2 += quad_wedge_cell(mesh, cell, dalpha, P, order)
    argument = term1 - sgn * term2
    if not debug:
        return abs(argument)
    t1 = t2 = t3 = 0.0
    amb = ambient_frame(n)
    for cell in mesh.cells[n]:
        mu = build_trimmed_approx(mesh, cell, r, k, alpha, order=order)
        dd = discrete_d(space, vec, cell)
        P = potential(space, vec, cell)
        lc = get_complex(mesh, cell)
        t1 += quad_wedge_cell(mesh, cell, alpha, dd, order) \
            - to_float(cell_integral(lc, wedge(mu, dd)))
        t2 += sgn * (to_float(cell_integral(lc, wedge(ext_d(mu), P)))
                     - quad_wedge_cell(mesh, cell, dalpha, P, order))
        for face, sign in mesh.boundary_cells(cell):
            Pf = potential(space, vec, face)
            A, c = face.frame.inclusion_into(cell.frame)
            from .exterior import pullback

            tr_mu = pullback(mu, A, c, face.dim)
            lcf = get_complex(mesh, face)
            t3 -= sgn * sign * to_float(cell_integral(lcf, wedge(tr_mu, Pf)))
    return abs(argument), (argument, t1, t2, t3)


def adjoint_study(config: StudyConfig, debug: bool = False) -> RateTable:
    n, r, k = config.n, config.r, config.k
    if not 0 <= k <= n - 1:
        raise ValueError("adjoint study needs 0 <= k <= n-1")
    alpha = bump_form(n, k)
    beta = generic_form(n, n - k - 1)
    rows = []
    for lev, mesh in enumerate(config.meshes()):
        space = get_space(mesh, r, n - k - 1)
        vec = interpolate(space, beta, quad_order=config.order())
        res = adjoint_residual(mesh, r, k, alpha, vec, config.order(), debug=debug)
        aux = {}
        if debug:
            res, (arg, t1, t2, t3) = res
            aux = {"argument": arg, "t1": t1, "t2": t2, "t3": t3,
                   "t_sum_defect": abs(arg - (t1 + t2 + t3))}
        rows.append(RateRow(lev, mesh.h_max(), space.ndof, res, aux=aux))
    return RateTable(rows, {"study": "adjoint", **config.as_dict()}).finalize()


def adjoint_inner_residual(mesh, r: int, k: int, zeta: SmoothForm, mu_vec: DdrVector,
                           order: int) -> float:
    """|(I zeta, d mu)_{k,h} - int delta zeta ^ star P mu| for k >= 1."""
    space_k = get_space(mesh, r, k)
    izeta = interpolate(space_k, zeta, quad_order=order)
    dmu = global_d(mu_vec.space, mu_vec)
    lhs = to_float(global_inner_product(space_k, izeta, dmu))
    dzeta = smooth_codifferential(zeta)
    rhs = 0.0
    for cell in mesh.cells[mesh.n]:
        P = potential(mu_vec.space, mu_vec, cell)
        starP = star_rational(P, cell.frame.metric())
        rhs += quad_wedge_cell(mesh, cell, dzeta, starP, order)
    return abs(lhs - rhs)


def adjoint_inner_study(config: StudyConfig) -> RateTable:
    n, r, k = config.n, config.r, config.k
    if not 1 <= k <= n:
        raise ValueError("inner adjoint study needs 1 <= k <= n")
    zeta = bump_form(n, k)
    beta = generic_form(n, k - 1)
    rows = []
    for lev, mesh in enumerate(config.meshes()):
        space = get_space(mesh, r, k - 1)
        vec = interpolate(space, beta, quad_order=config.order())
        res = adjoint_inner_residual(mesh, r, k, zeta, vec, config.order())
        rows.append(RateRow(lev, mesh.h_max(), space.ndof, res))
    return RateTable(rows, {"study": "adjoint-inner", **config.as_dict()}).finalize()


# ---------------------------------------------------------------------------
# verification suites


def exterior_identity_suite(n: int = 2, cases: int = 1000, seed: int = 0) -> dict:
    """Randomized exact identities of the form algebra; counts failures."""
    from .exterior import codifferential, star_rational

    rng = np.random.default_rng(seed)
    fails = {"dd": 0, "leibniz": 0, "kk": 0, "homotopy": 0, "star": 0, "deltadelta": 0}

    def rand_poly(d, deg):
        coeffs = {}
        for e in _exps(deg, d):
            if rng.integers(0, 3):
                coeffs[e] = QQ(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))
        return Poly(d, coeffs)

    def rand_form(d, k, deg):
        return PolyForm(d, k, {I: rand_poly(d, deg)
                               for I in combinations(range(d), k)})

    done = 0
    while done < cases:
        d = int(rng.integers(1, n + 1))
        k = int(rng.integers(0, d + 1))
        deg = int(rng.integers(0, 4))
        a = rand_form(d, k, deg)
        if ext_d(ext_d(a)).degree <= d and not ext_d(ext_d(a)).is_zero():
            fails["dd"] += 1
        l = int(rng.integers(0, d - k + 1))
        b = rand_form(d, l, deg)
        lhs = ext_d(wedge(a, b))
        rhs = wedge(ext_d(a), b) + wedge(a, ext_d(b)).scale(QQ((-1) ** k))
        if not (lhs - rhs).is_zero():
            fails["leibniz"] += 1
        if k >= 2 and not koszul(koszul(a)).is_zero():
            fails["kk"] += 1
        # homotopy identity on a homogeneous part (degree-aware at k=0, k=d)
        t = int(rng.integers(0, deg + 1))
        at = PolyForm(d, k, {I: p.homogeneous_part(t) for I, p in a.comps.items()})
        if t + k > 0:
            h = at.scale(QQ(-(t + k)))
            if k >= 1:
                h = h + ext_d(koszul(at))
            if k < d:
                h = h + koszul(ext_d(at))
            if not h.is_zero():
                fails["homotopy"] += 1
        metric = tuple(QQ(int(rng.integers(1, 5)), int(rng.integers(1, 3)))
                       for _ in range(d))
        detg = math.prod(metric, start=QQ(1))
        ss = star_rational(star_rational(a, metric), metric).scale(detg)
        if not (ss - a.scale(QQ((-1) ** (k * (d - k))))).is_zero():
            fails["star"] += 1
        if k >= 2:
            ddel = codifferential(codifferential(a, metric), metric)
            if not ddel.is_zero():
                fails["deltadelta"] += 1
        done += 1
    return {"cases": cases, "failures": fails, "pass": not any(fails.values())}


def _exps(deg, d):
    def gen(total, dim):
        if dim == 0:
            if total == 0:
                yield ()
            return
        for first in range(total + 1):
            for rest in gen(total - first, dim - 1):
                yield (first,) + rest

    out = []
    for tt in range(deg + 1):
        out.extend(gen(tt, d))
    return out


def stokes_suite(mesh: PolytopalMesh, cases: int = 50, seed: int = 0) -> dict:
    """Exact Stokes on every cell against random polynomial forms."""
    rng = np.random.default_rng(seed)
    amb = ambient_frame(mesh.n)
    bad = 0
    checked = 0
    for _ in range(cases):
        d = int(rng.integers(1, mesh.n + 1))
        cells = mesh.cells[d]
        cell = cells[int(rng.integers(0, len(cells)))]
        deg = int(rng.integers(0, 3))
        comps = {}
        for I in combinations(range(mesh.n), d - 1):
            coeffs = {e: QQ(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
                      for e in _exps(deg, mesh.n)}
            comps[I] = Poly(mesh.n, coeffs)
        omega = PolyForm(mesh.n, d - 1, comps)
        tr = trace_between_cells(mesh, omega, amb, cell)
        lhs = cell_integral(get_complex(mesh, cell), ext_d(tr))
        rhs = ZERO
        for face, sign in mesh.boundary_cells(cell):
            trf = trace_between_cells(mesh, omega, amb, face)
            rhs = rhs + sign * cell_integral(get_complex(mesh, face), trf)
        if lhs != rhs:
            bad += 1
        checked += 1
    return {"cases": checked, "failures": bad, "pass": bad == 0}


def lifting_verification_suite(family: str, levels: int, r: int, k: int, n: int = 2,
                               seed: int = 5, ratio_levels: int | None = None) -> dict:
    """Exact projection / right-inverse / boundary checks plus bound ratios."""
    from .lifting import (global_lifting, interpolate_lifted,
                          lift_projection_residuals)

    report = {"family": family, "r": r, "k": k, "exact_checks": [], "ratios": []}
    all_pass = True
    rng = np.random.default_rng(seed)
    nlev = levels
    for lev in range(nlev):
        mesh = build_family(MeshFamily(family, lev, n=n))
        space = get_space(mesh, r, k)
        vec = space.vector([QQ(int(x), 8) for x in rng.integers(-16, 17, space.ndof)],
                           float_mode=False)
        lift = global_lifting(space, vec)
        proj_ok = True
        for d in range(k, mesh.n + 1):
            for cell in mesh.cells[d]:
                if any(x != 0 for x in lift_projection_residuals(space, vec, lift, cell)):
                    proj_ok = False
        rinv_ok = interpolate_lifted(lift).data == vec.data
        # homogeneous boundary preservation
        vec0 = vec.copy()
        for cell in space.cells:
            if cell.on_boundary:
                space.set_block(vec0, cell, [ZERO] * space.offsets[cell.key][1])
        lift0 = global_lifting(space, vec0)
        bnd_ok = all(
            all(c == 0 for c in lift0.rep(cell).coeffs)
            for d in range(k, mesh.n) for cell in mesh.cells[d] if cell.on_boundary)
        report["exact_checks"].append(
            {"level": lev, "projection": proj_ok, "right_inverse": rinv_ok,
             "boundary_preservation": bnd_ok})
        all_pass = all_pass and proj_ok and rinv_ok and bnd_ok
        c0, c1 = _bound_ratios(mesh, space, vec, lift)
        report["ratios"].append({"level": lev, "c0": c0, "c1": c1})
    c0s = [x["c0"] for x in report["ratios"] if x["c0"] > 0]
    c1s = [x["c1"] for x in report["ratios"] if x["c1"] > 0]
    report["c0_drift"] = max(c0s) / min(c0s) if c0s else 1.0
    report["c1_drift"] = max(c1s) / min(c1s) if c1s else 1.0
    report["pass"] = bool(all_pass)
    return report


def _bound_ratios(mesh, space, vec, lift):
    """Max over cells of |tr L| / |w|_comp and |d tr L| / |d w|_comp."""
    k = space.k
    c0 = c1 = 0.0
    dvec = global_d(space, vec) if k < mesh.n else None
    for d in range(k, mesh.n + 1):
        for cell in mesh.cells[d]:
            rep = lift.rep(cell)
            num = _fe_l2_norm(mesh, cell, rep)
            den = component_norm(space, vec, cell)
            if den > 1e-13:
                c0 = max(c0, num / den)
            if dvec is not None and d >= k + 1:
                dnum = _fe_l2_norm(mesh, cell, rep, derivative=True)
                dden = component_norm(dvec.space, dvec, cell)
                if dden > 1e-13:
                    c1 = max(c1, dnum / dden)
    return c0, c1


def _fe_l2_norm(mesh, cell, rep, derivative=False) -> float:
    from .exterior import integrate_inner_simplex

    lc = get_complex(mesh, cell)
    metric = cell.frame.metric()
    if cell.dim == 0:
        v = rep.on_top(0).component(()).eval(())
        return abs(to_float(v))
    rootg = math.sqrt(to_float(cell.frame.detg()))
    total = 0.0
    for t, (simp, aframe, _) in enumerate(lc.tops):
        form = rep.on_top(t)
        if derivative:
            form = ext_d(form)
        coords = lc.coords_in(simp.verts, aframe)
        total += lc.top_orientation(t) * to_float(
            integrate_inner_simplex(form, form, metric, coords))
    return math.sqrt(max(total, 0.0) * rootg)


def ddr_verification_suite(family: str, level: int, r: int, k: int, n: int = 2,
                           seed: int = 9, cases: int = 5) -> dict:
    """Exact moment-system identities of the discrete operators."""
    from .ddr import _boundary_potential_moment

    mesh = build_family(MeshFamily(family, level, n=n))
    space = get_space(mesh, r, k)
    rng = np.random.default_rng(seed)
    ok_defd = ok_ipp = ok_pi = ok_stab = True
    amb = ambient_frame(n)
    for _ in range(cases):
        vec = space.vector([QQ(int(x), 8) for x in rng.integers(-16, 17, space.ndof)],
                           float_mode=False)
        for d in range(k + 1, n + 1):
            for cell in mesh.cells[d]:
                lc = get_complex(mesh, cell)
                dd = discrete_d(space, vec, cell)
                P = potential(space, vec, cell)
                wf = vec.component_form(cell)
                sgn = QQ((-1) ** (k + 1))
                for mu in full_basis_forms(d, r, d - k - 1):
                    lhs = cell_integral(lc, wedge(dd, mu))
                    rhs = sgn * cell_integral(lc, wedge(wf, ext_d(mu))) \
                        + _boundary_potential_moment(space, vec, cell, mu)
                    if lhs != rhs:
                        ok_defd = False
                for mu in trimmed_basis_forms(d, r + 1, d - k - 1):
                    lhs = sgn * cell_integral(lc, wedge(P, ext_d(mu)))
                    rhs = cell_integral(lc, wedge(dd, mu)) \
                        - _boundary_potential_moment(space, vec, cell, mu)
                    if lhs != rhs:
                        ok_ipp = False
    # polynomial consistency and stabilization vanishing
    poly = PolyForm(n, k)
    for I in combinations(range(n), k):
        coeffs = {e: QQ(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
                  for e in _exps(r, n)}
        poly = poly + PolyForm(n, k, {I: Poly(n, coeffs)})
    ivec = interpolate(space, poly)
    for d in range(k, n + 1):
        for cell in mesh.cells[d]:
            if not (potential(space, ivec, cell)
                    - trace_between_cells(mesh, poly, amb, cell)).is_zero():
                ok_pi = False
    from .ddr import stabilization

    for cell in mesh.cells[n]:
        s = stabilization(space, ivec, ivec, cell)
        if s != 0:
            ok_stab = False
    report = {"family": family, "r": r, "k": k,
              "def_d_moments": ok_defd, "ipp_pot": ok_ipp,
              "potential_of_interpolant": ok_pi, "stabilization_vanishes": ok_stab}
    report["pass"] = ok_defd and ok_ipp and ok_pi and ok_stab
    return report


# ---------------------------------------------------------------------------
# norm equivalence of the stabilized inner product vs the component norm


def _component_weights(mesh, cell, factor, acc):
    """Recursive h-weights of the component-norm expansion on subcells."""
    acc[cell.key] = acc.get(cell.key, 0.0) + factor
    for face, _ in mesh.boundary_cells(cell):
        _component_weights(mesh, face, factor * cell.h, acc)


def norm_equivalence_constants(mesh, r: int, k: int, cell) -> tuple:
    """(c, C) with c <= inner_norm/component_norm <= C on one cell.

    Generalized eigenvalue bounds of the two quadratic forms on the local
    restriction space (all components on the cell and its subcells).
    """
    import scipy.linalg as sla

    space = get_space(mesh, r, k)
    local_cells = [cell] + [c for d in range(k, cell.dim)
                            for c in mesh.delta(cell, d)]
    local_cells.sort(key=lambda c: (c.dim, c.id))
    index = []
    for c in local_cells:
        off, nc = space.offsets[c.key]
        index.extend(range(off, off + nc))
    nloc = len(index)
    weights = {}
    _component_weights(mesh, cell, 1.0, weights)
    # component-norm quadratic form: blockdiagonal weighted Grams
    B = np.zeros((nloc, nloc))
    pos = 0
    for c in local_cells:
        ops = space.ops(c)
        nc = ops.ncomp
        lc = get_complex(mesh, c)
        metric = c.frame.metric()
        rootg = math.sqrt(to_float(c.frame.detg()))
        Gc = np.zeros((nc, nc))
        from .exterior import integrate_inner_simplex

        for i in range(nc):
            for j in range(i, nc):
                val = 0.0
                if c.dim == 0:
                    val = to_float(ops.comp[i].component(()).eval(())
                                   * ops.comp[j].component(()).eval(()))
                else:
                    for t, (simp, af, _) in enumerate(lc.tops):
                        coords = lc.coords_in(simp.verts, af)
                        val += lc.top_orientation(t) * to_float(
                            integrate_inner_simplex(ops.comp[i], ops.comp[j],
                                                    metric, coords))
                    val *= rootg
                Gc[i, j] = Gc[j, i] = val
        B[pos:pos + nc, pos:pos + nc] = weights[c.key] * Gc
        pos += nc
    # inner-product quadratic form via basis vectors of the local space
    basis_vecs = []
    for idx in index:
        v = space.zero(float_mode=True)
        v.data[idx] = 1.0
        basis_vecs.append(v)
    A = np.zeros((nloc, nloc))
    from .ddr import inner_product

    for i in range(nloc):
        for j in range(i, nloc):
            val = to_float(inner_product(space, basis_vecs[i], basis_vecs[j], cell))
            A[i, j] = A[j, i] = val
    eig = sla.eigh(A, B, eigvals_only=True)
    eig = [x for x in eig if x > 1e-14]
    return math.sqrt(min(eig)), math.sqrt(max(eig))


def norm_equivalence_report(family: str, levels: int, r: int, k: int, n: int = 2) -> dict:
    out = {"family": family, "r": r, "k": k, "levels": []}
    ratios = []
    for lev in range(levels):
        mesh = build_family(MeshFamily(family, lev, n=n))
        cbest, cworst = math.inf, 0.0
        for cell in mesh.cells[n]:
            c, C = norm_equivalence_constants(mesh, r, k, cell)
            cbest = min(cbest, c)
            cworst = max(cworst, C)
        out["levels"].append({"level": lev, "c": cbest, "C": cworst,
                              "ratio": cworst / cbest})
        ratios.append(cworst / cbest)
    out["drift"] = max(ratios) / min(ratios) if ratios else 1.0
    out["pass"] = out["drift"] < 2.0
    return out
