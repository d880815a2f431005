"""Exact algebra of polynomial differential forms in a cell frame.

A ``PolyForm`` of degree k on a d-dimensional frame stores one polynomial
per strictly increasing index subset of {0..d-1}. The frame's diagonal
metric g (squared column lengths) enters only through the Hodge machinery:
the true star factors as ``star = sqrt(det g) * S`` with ``S`` exactly
rational, and every identity this package asserts exactly is phrased in
terms of ``S`` and ``det g``. Wedge products, exterior derivative, Koszul
operator, traces and integrals are metric-free and exact.
"""

from __future__ import annotations

import math
from itertools import combinations

from .polynomial import Poly, affine_polys
from .scalars import ZERO, ONE, QQ, rat, sqrt_exact, to_float, factorial


def _merge_sign(I, J):
    """Sign of sorting the concatenation of disjoint increasing tuples, or 0."""
    if set(I) & set(J):
        return 0, ()
    merged = []
    sign = 1
    items = list(I)
    for j in J:
        pos = len(items)
        for idx, i in enumerate(items):
            if j < i:
                pos = idx
                break
        sign *= (-1) ** (len(items) - pos)
        items.insert(pos, j)
        merged = items
    return sign, tuple(items)


def perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class FormError(Exception):
    pass


class PolyForm:
    """Differential k-form with polynomial coefficients in frame coordinates."""

    __slots__ = ("dim", "degree", "comps", "host")

    def __init__(self, dim: int, degree: int, comps=None, host=None):
        if degree < 0 or degree > dim:
            if comps:
                raise FormError(f"form degree {degree} out of range for dim {dim}")
        self.dim = dim
        self.degree = degree
        self.host = host
        self.comps = {}
        if comps:
            for I, p in comps.items():
                if not p.is_zero():
                    self.comps[tuple(I)] = p

    @classmethod
    def zero(cls, dim: int, degree: int, host=None) -> "PolyForm":
        return cls(dim, degree, host=host)

    @classmethod
    def basis_covector(cls, dim: int, I, host=None) -> "PolyForm":
        return cls(dim, len(I), {tuple(I): Poly.const(dim, ONE)}, host=host)

    @classmethod
    def from_scalar(cls, p: Poly, host=None) -> "PolyForm":
        return cls(p.nvars, 0, {(): p}, host=host)

    def component(self, I) -> Poly:
        return self.comps.get(tuple(I), Poly.zero(self.dim))

    def is_zero(self) -> bool:
        return not self.comps

    def poly_degree(self) -> int:
        return max((p.degree() for p in self.comps.values()), default=-1)

    def __add__(self, other: "PolyForm") -> "PolyForm":
        self._compat(other)
        out = dict(self.comps)
        for I, p in other.comps.items():
            q = out.get(I)
            q = p if q is None else q + p
            if q.is_zero():
                out.pop(I, None)
            else:
                out[I] = q
        f = PolyForm(self.dim, self.degree, host=self.host)
        f.comps = out
        return f

    def __neg__(self) -> "PolyForm":
        f = PolyForm(self.dim, self.degree, host=self.host)
        f.comps = {I: -p for I, p in self.comps.items()}
        return f

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return self + (-other)

    def scale(self, s) -> "PolyForm":
        f = PolyForm(self.dim, self.degree, host=self.host)
        if s:
            f.comps = {I: p.scale(s) for I, p in self.comps.items()}
        return f

    def map_coeffs(self, fn) -> "PolyForm":
        f = PolyForm(self.dim, self.degree, host=self.host)
        for I, p in self.comps.items():
            q = p.map_coeffs(fn)
            if not q.is_zero():
                f.comps[I] = q
        return f

    def _compat(self, other):
        if self.dim != other.dim or self.degree != other.degree:
            raise FormError("form dimension/degree mismatch")
        if self.host is not None and other.host is not None and self.host != other.host:
            raise FormError(f"forms live on different cells: {self.host} vs {other.host}")

    def key(self):
        return tuple(sorted((I, p.key()) for I, p in self.comps.items()))

    def __eq__(self, other) -> bool:
        return (isinstance(other, PolyForm) and self.dim == other.dim
                and self.degree == other.degree and self.comps == other.comps)

    def __hash__(self):
        return hash((self.dim, self.degree, self.key()))

    def __repr__(self) -> str:
        if not self.comps:
            return "0"
        parts = []
        for I, p in sorted(self.comps.items()):
            dxs = "^".join(f"dy{i}" for i in I)
            parts.append(f"({p})" + (f" {dxs}" if dxs else ""))
        return " + ".join(parts)

    def to_json(self):
        return {
            "dim": self.dim, "degree": self.degree,
            "comps": {
                ",".join(map(str, I)): {
                    ",".join(map(str, e)): str(c) for e, c in sorted(p.coeffs.items())
                } for I, p in sorted(self.comps.items())
            },
        }

    @classmethod
    def from_json(cls, doc) -> "PolyForm":
        comps = {}
        for ikey, poly in doc["comps"].items():
            I = tuple(int(x) for x in ikey.split(",")) if ikey else ()
            coeffs = {}
            for ekey, c in poly.items():
                e = tuple(int(x) for x in ekey.split(",")) if ekey else ()
                coeffs[e] = rat(c)
            comps[I] = Poly(doc["dim"], coeffs)
        return cls(doc["dim"], doc["degree"], comps)


# ---------------------------------------------------------------------------
# core operators


def wedge(a: PolyForm, b: PolyForm) -> PolyForm:
    if a.dim != b.dim:
        raise FormError("wedge of forms on different frames")
    if a.host is not None and b.host is not None and a.host != b.host:
        raise FormError("wedge of forms on different cells")
    k = a.degree + b.degree
    if k > a.dim:
        return PolyForm(a.dim, a.dim, host=a.host or b.host)  # zero by alternation
    out = PolyForm(a.dim, k, host=a.host or b.host)
    comps = {}
    for I, p in a.comps.items():
        for J, q in b.comps.items():
            sign, K = _merge_sign(I, J)
            if sign == 0:
                continue
            term = (p * q).scale(rat(sign))
            cur = comps.get(K)
            comps[K] = term if cur is None else cur + term
    out.comps = {K: p for K, p in comps.items() if not p.is_zero()}
    return out


def ext_d(w: PolyForm) -> PolyForm:
    """Exterior derivative; the zero top form when k = dim (by convention)."""
    if w.degree >= w.dim:
        return PolyForm(w.dim, w.dim, host=w.host)
    out = PolyForm(w.dim, w.degree + 1, host=w.host)
    comps = {}
    for I, p in w.comps.items():
        for i in range(w.dim):
            dp = p.diff(i)
            if dp.is_zero():
                continue
            sign, K = _merge_sign((i,), I)
            if sign == 0:
                continue
            term = dp.scale(rat(sign))
            cur = comps.get(K)
            comps[K] = term if cur is None else cur + term
    out.comps = {K: p for K, p in comps.items() if not p.is_zero()}
    return out


def koszul(w: PolyForm, base=None) -> PolyForm:
    """Contraction with the position field x - x_f.

    In centered frame coordinates the field is just y, so the default base
    is the frame origin. ``base`` shifts the contraction point: coordinates
    of the desired base point in this frame, giving multipliers (y_i - b_i).
    """
    if w.degree == 0:
        return PolyForm(w.dim, 0, host=w.host)
    out = PolyForm(w.dim, w.degree - 1, host=w.host)
    comps = {}
    for I, p in w.comps.items():
        for pos, i in enumerate(I):
            mult = p.mul_var(i)
            if base is not None and base[i]:
                mult = mult + p.scale(-rat(base[i]))
            term = mult.scale(rat((-1) ** pos))
            K = tuple(x for x in I if x != i)
            cur = comps.get(K)
            comps[K] = term if cur is None else cur + term
    out.comps = {K: p for K, p in comps.items() if not p.is_zero()}
    return out


def star_rational(w: PolyForm, metric) -> PolyForm:
    """S with star = sqrt(det g) * S; exactly rational.

    S(p dy_I) = p * perm_sign(I + Ic) * prod_{i in I} g_i^{-1} * dy_Ic.
    """
    d = w.dim
    out = PolyForm(d, d - w.degree, host=w.host)
    comps = {}
    for I, p in w.comps.items():
        Ic = tuple(i for i in range(d) if i not in I)
        sign = perm_sign(list(I) + list(Ic))
        coef = rat(sign)
        for i in I:
            coef = coef / metric[i]
        comps[Ic] = p.scale(coef)
    out.comps = {K: p for K, p in comps.items() if not p.is_zero()}
    return out


def star_inverse_rational(w: PolyForm, metric) -> PolyForm:
    """Exact inverse of star_rational: S^{-1} = (-1)^{l(d-l)} det(g) S on l-forms."""
    d = w.dim
    detg = ONE
    for g in metric:
        detg = detg * g
    s = star_rational(w, metric)
    sign = (-1) ** (w.degree * (d - w.degree))
    return s.scale(detg * sign)


def hodge(w: PolyForm, metric) -> tuple[PolyForm, object]:
    """True Hodge star as (rational part, sqrt(det g) factor).

    The factor is an exact rational when det g is a perfect square (all
    coordinate-aligned and top-dimensional cells), else a float.
    """
    detg = ONE
    for g in metric:
        detg = detg * g
    root = sqrt_exact(detg)
    factor = root if root is not None else math.sqrt(to_float(detg))
    return star_rational(w, metric), factor


def codifferential(w: PolyForm, metric) -> PolyForm:
    """delta = (-1)^k star^{-1} d star; the sqrt(det g) factors cancel exactly."""
    if w.degree == 0:
        return PolyForm(w.dim, 0, host=w.host).scale(ZERO)
    s = star_rational(w, metric)
    ds = ext_d(s)
    out = star_inverse_rational(ds, metric)
    return out.scale(rat((-1) ** w.degree))


_PULLBACK_CACHE = {}


def pullback(w: PolyForm, A, c, nvars_out: int) -> PolyForm:
    """Pullback under the affine map t -> A t + c into w's coordinates.

    A is (w.dim x nvars_out); covectors transform as dy_i = sum_j A[i][j] dt_j.
    Substitution power tables and covector minors are cached per affine map.
    """
    key = (tuple(tuple(row) for row in A), tuple(c), nvars_out)
    entry = _PULLBACK_CACHE.get(key)
    if entry is None:
        subs = affine_polys(A, c, nvars_out)
        entry = (subs, [{0: Poly.const(nvars_out, ONE), 1: s} for s in subs], {})
        _PULLBACK_CACHE[key] = entry
    subs, pows, minors = entry
    if w.degree > nvars_out:
        return PolyForm(nvars_out, nvars_out)  # zero: no covectors of that degree
    out = PolyForm(nvars_out, w.degree)
    comps = {}
    for I, p in w.comps.items():
        psub = _substitute_cached(p, subs, pows)
        if psub.is_zero():
            continue
        for J in combinations(range(nvars_out), w.degree):
            mkey = (I, J)
            dd = minors.get(mkey)
            if dd is None:
                dd = _small_det([[A[i][j] for j in J] for i in I])
                minors[mkey] = dd
            if not dd:
                continue
            term = psub.scale(dd)
            cur = comps.get(J)
            comps[J] = term if cur is None else cur + term
    out.comps = {J: p for J, p in comps.items() if not p.is_zero()}
    return out


def _substitute_cached(p: Poly, subs, pows) -> Poly:
    nv = subs[0].nvars if subs else 0
    out = Poly.zero(nv)
    for e, ccoef in p.coeffs.items():
        term = Poly.const(nv, ccoef)
        for i, ei in enumerate(e):
            if ei:
                cache = pows[i]
                if ei not in cache:
                    top = max(cache)
                    acc = cache[top]
                    for n in range(top + 1, ei + 1):
                        acc = acc * subs[i]
                        cache[n] = acc
                term = term * cache[ei]
        out = out + term
    return out


def _small_det(M):
    n = len(M)
    if n == 0:
        return ONE
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = ZERO
    for j in range(n):
        if M[0][j]:
            minor = [row[:j] + row[j + 1:] for row in M[1:]]
            total = total + M[0][j] * _small_det(minor) * ((-1) ** j)
    return total


# ---------------------------------------------------------------------------
# exact integration


_SIMPLEX_TABLES = {}


def _ref_integral(q: Poly):
    """Integral over the unit reference simplex of a reference-coordinate poly."""
    total = ZERO
    d = q.nvars
    for e, ccoef in q.coeffs.items():
        num = ONE
        for ei in e:
            num = num * factorial(ei)
        total = total + ccoef * num / factorial(sum(e) + d)
    return total


class _SimplexTable:
    """Per-simplex cache of exact monomial integrals."""

    __slots__ = ("detJ", "subs", "pows", "mono")

    def __init__(self, vertex_coords, d):
        v0 = vertex_coords[0]
        J = [[vertex_coords[j + 1][i] - v0[i] for j in range(d)] for i in range(d)]
        self.detJ = _small_det(J)
        self.subs = affine_polys(J, v0, d)
        self.pows = [{0: Poly.const(d, ONE), 1: s} for s in self.subs]
        self.mono = {}

    def monomial_integral(self, e):
        val = self.mono.get(e)
        if val is None:
            d = len(e)
            q = Poly.const(d, ONE)
            for i, ei in enumerate(e):
                if ei:
                    cache = self.pows[i]
                    if ei not in cache:
                        top = max(cache)
                        acc = cache[top]
                        for n in range(top + 1, ei + 1):
                            acc = acc * self.subs[i]
                            cache[n] = acc
                    q = q * cache[ei]
            val = _ref_integral(q) * self.detJ
            self.mono[e] = val
        return val


def integrate_simplex(p: Poly, vertex_coords):
    """Exact integral of the coordinate polynomial over an oriented simplex.

    ``vertex_coords`` are the d+1 vertices in the integration frame; the
    result is signed by the vertex order (det of the edge matrix). Monomial
    integrals are cached per simplex, so repeated moment assembly on one
    simplex costs one table lookup per term.
    """
    d = p.nvars
    if d == 0:
        return p.eval(())
    if p.is_zero():
        return ZERO
    key = tuple(tuple(v) for v in vertex_coords)
    table = _SIMPLEX_TABLES.get(key)
    if table is None:
        table = _SimplexTable(vertex_coords, d)
        if table.detJ == 0:
            return ZERO
        _SIMPLEX_TABLES[key] = table
    if table.detJ == 0:
        return ZERO
    total = ZERO
    for e, ccoef in p.coeffs.items():
        v = table.monomial_integral(e)
        if isinstance(ccoef, float):
            total = to_float(total) + ccoef * to_float(v)
        else:
            total = total + ccoef * v
    return total


def integrate_product_simplex(p: Poly, q: Poly, vertex_coords):
    """Exact integral of p*q over the simplex without forming the product."""
    d = p.nvars
    if d == 0:
        return p.eval(()) * q.eval(())
    if p.is_zero() or q.is_zero():
        return ZERO
    key = tuple(tuple(v) for v in vertex_coords)
    table = _SIMPLEX_TABLES.get(key)
    if table is None:
        table = _SimplexTable(vertex_coords, d)
        _SIMPLEX_TABLES[key] = table
    if table.detJ == 0:
        return ZERO
    total = ZERO
    for e1, c1 in p.coeffs.items():
        for e2, c2 in q.coeffs.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = table.monomial_integral(e)
            if isinstance(c1, float) or isinstance(c2, float):
                total = to_float(total) + to_float(c1) * to_float(c2) * to_float(v)
            else:
                total = total + c1 * c2 * v
    return total


def integrate_inner_simplex(a: PolyForm, b: PolyForm, metric, vertex_coords):
    """Exact integral of the pointwise inner product <a, b> over a simplex."""
    total = ZERO
    for I, p in a.comps.items():
        q = b.comps.get(I)
        if q is None:
            continue
        coef = ONE
        for i in I:
            coef = coef / metric[i]
        total = total + coef * integrate_product_simplex(p, q, vertex_coords)
    return total


def integrate_top(form: PolyForm, vertex_coords):
    """Integral of a top-degree form over an oriented simplex in its frame."""
    if form.degree != form.dim:
        raise FormError("integrate expects a top-degree form")
    if form.dim == 0:
        p = form.component(())
        return p.eval(())
    p = form.component(tuple(range(form.dim)))
    return integrate_simplex(p, vertex_coords)


def inner_product_poly(a: PolyForm, b: PolyForm, metric) -> Poly:
    """Pointwise <a, b> as a polynomial (rational; true value needs no factor)."""
    if a.degree != b.degree or a.dim != b.dim:
        raise FormError("inner product degree mismatch")
    out = Poly.zero(a.dim)
    for I, p in a.comps.items():
        q = b.comps.get(I)
        if q is None:
            continue
        coef = ONE
        for i in I:
            coef = coef / metric[i]
        out = out + (p * q).scale(coef)
    return out


def l2_inner_coordinate(a: PolyForm, b: PolyForm, metric, simplices_coords):
    """Coordinate part of <a,b>_f: the true inner product is sqrt(det g) times this."""
    p = inner_product_poly(a, b, metric)
    total = ZERO
    for coords in simplices_coords:
        total = total + integrate_simplex(p, coords)
    return total


# ---------------------------------------------------------------------------
# quadrature (Grundmann-Moller) and smooth forms


def grundmann_moeller(s: int, d: int):
    """Symmetric simplex rule, exact for total degree <= 2s+1.

    Returns (barycentric points, weights) with weights summing to 1; scale by
    the simplex coordinate volume when integrating.
    """
    deg = 2 * s + 1
    pw = {}
    for i in range(s + 1):
        denom = d + deg - 2 * i
        w = QQ((-1) ** i) * QQ(denom, 2) ** deg / (factorial(i) * factorial(d + deg - i))
        for comp in _compositions(s - i, d + 1):
            bary = tuple(QQ(2 * bj + 1, denom) for bj in comp)
            pw[bary] = pw.get(bary, ZERO) + w
    pts, wts = [], []
    norm = sum(pw.values())
    for bary, w in sorted(pw.items()):
        pts.append(bary)
        wts.append(w / norm)
    return pts, wts


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class SimplexQuadrature:
    """Float quadrature over a coordinate simplex."""

    _cache = {}

    def __init__(self, order: int, dim: int):
        s = max((order - 1 + 1) // 2, 1)  # 2s+1 >= order
        key = (s, dim)
        if key not in self._cache:
            pts, wts = grundmann_moeller(s, dim)
            self._cache[key] = (
                [[to_float(x) for x in p] for p in pts],
                [to_float(w) for w in wts],
            )
        self.bary, self.weights = self._cache[key]
        self.dim = dim

    def integrate(self, vertex_coords, fn) -> float:
        """Integral of fn(coords) over the simplex against the positive
        coordinate measure (vertex order does not affect the sign)."""
        d = self.dim
        if d == 0:
            return fn(tuple())
        v0 = vertex_coords[0]
        J = [[to_float(vertex_coords[j + 1][i] - v0[i]) for j in range(d)] for i in range(d)]
        detJ = abs(_float_det(J))
        vol = detJ / float(factorial(d))
        verts = [[to_float(x) for x in v] for v in vertex_coords]
        total = 0.0
        for bary, w in zip(self.bary, self.weights):
            pt = [sum(bary[j] * verts[j][i] for j in range(d + 1)) for i in range(d)]
            total += w * fn(pt)
        return total * vol


def _float_det(M):
    import numpy as np

    return float(np.linalg.det(np.array(M, dtype=float))) if M else 1.0


class SmoothForm:
    """A k-form on ambient coordinates given by component callables.

    ``comps`` maps increasing ambient index tuples to functions of an ambient
    point; ``d_comps``, when supplied, are the analytic components of the
    exterior derivative (needed by the rate studies).
    """

    def __init__(self, n: int, degree: int, comps, d_comps=None, smoothness: int = 8):
        self.n = n
        self.degree = degree
        self.comps = dict(comps)
        self.d_comps = dict(d_comps) if d_comps is not None else None
        self.smoothness = smoothness

    def eval_component(self, I, x) -> float:
        fn = self.comps.get(tuple(I))
        return fn(x) if fn else 0.0

    def deriv(self) -> "SmoothForm":
        if self.d_comps is None:
            raise FormError("smooth form has no analytic exterior derivative")
        return SmoothForm(self.n, self.degree + 1, self.d_comps)

    def pulled_back_coeff(self, frame, J):
        """Callable: frame coords -> coefficient of dy_J of the pullback."""
        cols = [[to_float(c) for c in u] for u in frame.columns]
        origin = [to_float(c) for c in frame.origin]
        n = self.n
        terms = []
        for I, fn in self.comps.items():
            sub = [[cols[j][i] for j in J] for i in I]
            dd = _float_det(sub) if J else (1.0 if not I else 0.0)
            if abs(dd) > 0:
                terms.append((dd, fn))
        if not terms:
            return lambda y: 0.0

        def coeff(y):
            x = list(origin)
            for j, u in enumerate(cols):
                for i in range(n):
                    x[i] += y[j] * u[i]
            return sum(dd * fn(x) for dd, fn in terms)

        return coeff


def quad_integrate(vertex_coords, fn, order: int) -> float:
    """Quadrature of a scalar integrand over one coordinate simplex.

    Exact for polynomial integrands of total degree <= order; convergent of
    order ~order+1 for smooth integrands.
    """
    d = len(vertex_coords) - 1
    return SimplexQuadrature(order, d).integrate(vertex_coords, fn)
