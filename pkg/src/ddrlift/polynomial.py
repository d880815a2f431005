"""Sparse multivariate polynomials with exact or float coefficients.

A polynomial in ``nvars`` variables is stored as a dict mapping exponent
tuples to nonzero coefficients. Coefficients are ``mpq`` on the exact path
and ``float`` on the float path; mixed operations promote to float (gmpy2
would otherwise silently produce mpfr values).
"""

from __future__ import annotations

from .scalars import ZERO, ONE, rat, to_float


def _mix(a, b):
    """Multiply with exact->float promotion on kind mismatch."""
    if isinstance(a, float) != isinstance(b, float):
        return to_float(a) * to_float(b)
    return a * b


def _mixsum(a, b):
    if isinstance(a, float) != isinstance(b, float):
        return to_float(a) + to_float(b)
    return a + b


class Poly:
    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs=None):
        self.nvars = nvars
        self.coeffs = {}
        if coeffs:
            for e, c in coeffs.items():
                if c:
                    self.coeffs[tuple(e)] = c

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c} if c else None)

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): ONE})

    @classmethod
    def monomial(cls, nvars: int, expo, c=ONE) -> "Poly":
        return cls(nvars, {tuple(expo): c} if c else None)

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=-1)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            s = out.get(e)
            s = c if s is None else _mixsum(s, c)
            if s:
                out[e] = s
            elif e in out:
                del out[e]
        p = Poly(self.nvars)
        p.coeffs = out
        return p

    def __neg__(self) -> "Poly":
        p = Poly(self.nvars)
        p.coeffs = {e: -c for e, c in self.coeffs.items()}
        return p

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, s) -> "Poly":
        p = Poly(self.nvars)
        if s:
            p.coeffs = {e: _mix(c, s) for e, c in self.coeffs.items()}
        return p

    def __mul__(self, other: "Poly") -> "Poly":
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = _mix(c1, c2)
                s = out.get(e)
                s = v if s is None else _mixsum(s, v)
                if s:
                    out[e] = s
                elif e in out:
                    del out[e]
        p = Poly(self.nvars)
        p.coeffs = out
        return p

    def diff(self, i: int) -> "Poly":
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        p = Poly(self.nvars)
        p.coeffs = out
        return p

    def mul_var(self, i: int) -> "Poly":
        out = {}
        for e, c in self.coeffs.items():
            e2 = list(e)
            e2[i] += 1
            out[tuple(e2)] = c
        p = Poly(self.nvars)
        p.coeffs = out
        return p

    def homogeneous_part(self, t: int) -> "Poly":
        p = Poly(self.nvars)
        p.coeffs = {e: c for e, c in self.coeffs.items() if sum(e) == t}
        return p

    def eval(self, point):
        total = None
        for e, c in self.coeffs.items():
            term = c
            for xi, ei in zip(point, e):
                for _ in range(ei):
                    term = term * xi
            total = term if total is None else total + term
        if total is None:
            return 0.0 if any(isinstance(x, float) for x in point) else ZERO
        return total

    def substitute(self, exprs: list["Poly"]) -> "Poly":
        """Substitute variable i -> exprs[i] (polynomials in the new variables)."""
        nv = exprs[0].nvars if exprs else 0
        out = Poly.zero(nv)
        pow_cache = [{0: Poly.const(nv, ONE)} for _ in exprs]
        for e, c in self.coeffs.items():
            term = Poly.const(nv, c)
            for i, ei in enumerate(e):
                if ei:
                    cache = pow_cache[i]
                    if ei not in cache:
                        p = cache[max(cache)]
                        for k in range(max(cache) + 1, ei + 1):
                            p = p * exprs[i]
                            cache[k] = p
                    term = term * cache[ei]
            out = out + term
        return out

    def map_coeffs(self, fn) -> "Poly":
        p = Poly(self.nvars)
        for e, c in self.coeffs.items():
            v = fn(c)
            if v:
                p.coeffs[e] = v
        return p

    def key(self):
        return tuple(sorted(self.coeffs.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, self.key()))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for e, c in sorted(self.coeffs.items()):
            mono = "*".join(f"y{i}^{p}" if p > 1 else f"y{i}" for i, p in enumerate(e) if p)
            terms.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(terms)


def affine_polys(A, c, nvars_out: int) -> list[Poly]:
    """Polynomials for the affine map y -> A y + c, one per output variable.

    A has shape (len(c), nvars_out); entries are scalars.
    """
    out = []
    for i, ci in enumerate(c):
        p = Poly.const(nvars_out, rat(ci) if not isinstance(ci, float) else ci)
        for j in range(nvars_out):
            aij = A[i][j]
            if aij:
                p = p + Poly.var(nvars_out, j).scale(aij)
        out.append(p)
    return out
