import math
from itertools import combinations

import pytest

from ddrlift.ddr import (DdrVector, ambient_frame, cell_integral, component_norm,
                         discrete_d, form_l2_norm, get_space, global_component_norm,
                         global_d, global_inner_product, inner_product, interpolate,
                         potential, stabilization, trace_between_cells)
from ddrlift.ddr import _boundary_potential_moment
from ddrlift.exterior import PolyForm, SmoothForm, ext_d, wedge
from ddrlift.polynomial import Poly
from ddrlift.scalars import ONE, QQ, ZERO, to_float
from ddrlift.spaces import (full_basis_forms, get_complex, koszul_image_basis,
                            trimmed_basis_forms)


def random_poly_form(rng, n, k, deg):
    comps = {}
    for I in combinations(range(n), k):
        coeffs = {}
        for e in [(a, b) for a in range(deg + 1) for b in range(deg + 1) if a + b <= deg] \
                if n == 2 else \
                [(a, b, c) for a in range(deg + 1) for b in range(deg + 1)
                 for c in range(deg + 1) if a + b + c <= deg]:
            coeffs[e] = QQ(rng.randint(-5, 5), rng.randint(1, 4))
        comps[I] = Poly(n, coeffs)
    return PolyForm(n, k, comps)


def random_vector(space, rng):
    return space.vector([QQ(rng.randint(-8, 8), rng.randint(1, 4))
                         for _ in range(space.ndof)], float_mode=False)


def test_interpolate_constant_form_reproduced(tri1):
    sp = get_space(tri1, 0, 1)
    dx = PolyForm.basis_covector(2, (0,))
    vec = interpolate(sp, dx)
    for d in (1, 2):
        for cell in tri1.cells[d]:
            P = potential(sp, vec, cell)
            tr = trace_between_cells(tri1, dx, ambient_frame(2), cell)
            assert (P - tr).is_zero()


@pytest.mark.parametrize("fixture,n", [("tri1", 2), ("cart1", 2), ("hexa0", 2),
                                       ("kuhn0", 3)])
@pytest.mark.parametrize("r", [0, 1])
def test_potential_and_d_consistency(fixture, n, r, rng, request):
    mesh = request.getfixturevalue(fixture)
    for k in range(n + 1):
        sp = get_space(mesh, r, k)
        omega = random_poly_form(rng, n, k, r)
        vec = interpolate(sp, omega)
        for d in range(k, n + 1):
            for cell in mesh.cells[d]:
                P = potential(sp, vec, cell)
                tr = trace_between_cells(mesh, omega, ambient_frame(n), cell)
                assert (P - tr).is_zero()
        if k < n:
            dom = ext_d(omega)
            for d in range(k + 1, n + 1):
                for cell in mesh.cells[d]:
                    dd = discrete_d(sp, vec, cell)
                    tr = trace_between_cells(mesh, dom, ambient_frame(n), cell)
                    assert (dd - tr).is_zero()


def test_edge_discrete_d_is_difference(tri0):
    sp = get_space(tri0, 0, 0)
    vec = sp.zero()
    values = {}
    for cell in tri0.cells[0]:
        v = QQ(cell.id + 1, 2)
        sp.set_block(vec, cell, [v])
        values[cell.id] = v
    for edge in tri0.cells[1]:
        dd = discrete_d(sp, vec, edge)
        lc = get_complex(tri0, edge)
        integral = cell_integral(lc, dd)
        ends = {}
        for vcell, sign in tri0.boundary_cells(edge):
            ends[sign] = values[vcell.id]
        assert integral == ends[1] - ends[-1]


def test_def_d_moment_residuals_zero(cart1, rng):
    r, k = 1, 0
    sp = get_space(cart1, r, k)
    vec = random_vector(sp, rng)
    sgn = QQ((-1) ** (k + 1))
    for cell in cart1.cells[2]:
        lc = get_complex(cart1, cell)
        dd = discrete_d(sp, vec, cell)
        wf = vec.component_form(cell)
        for mu in full_basis_forms(2, r, 2 - k - 1):
            lhs = cell_integral(lc, wedge(dd, mu))
            rhs = sgn * cell_integral(lc, wedge(wf, ext_d(mu))) \
                + _boundary_potential_moment(sp, vec, cell, mu)
            assert lhs == rhs


@pytest.mark.parametrize("r,k", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_ipp_pot_residuals_zero(tri1, r, k, rng):
    sp = get_space(tri1, r, k)
    vec = random_vector(sp, rng)
    sgn = QQ((-1) ** (k + 1))
    for cell in tri1.cells[2]:
        lc = get_complex(tri1, cell)
        P = potential(sp, vec, cell)
        dd = discrete_d(sp, vec, cell)
        for mu in trimmed_basis_forms(2, r + 1, 2 - k - 1):
            lhs = sgn * cell_integral(lc, wedge(P, ext_d(mu)))
            rhs = cell_integral(lc, wedge(dd, mu)) \
                - _boundary_potential_moment(sp, vec, cell, mu)
            assert lhs == rhs


def test_potential_moments_match_component(tri1, rng):
    # int (P - w_f) ^ mu = 0 for mu in the trimmed test space of the cell
    r, k = 1, 1
    sp = get_space(tri1, r, k)
    vec = random_vector(sp, rng)
    for cell in tri1.cells[2]:
        lc = get_complex(tri1, cell)
        P = potential(sp, vec, cell)
        wf = vec.component_form(cell)
        for mu in trimmed_basis_forms(2, r, 2 - k):
            assert cell_integral(lc, wedge(P - wf, mu)) == 0


def test_global_d_squared_zero(cart1, rng):
    sp = get_space(cart1, 1, 0)
    vec = random_vector(sp, rng)
    dvec = global_d(sp, vec)
    ddvec = global_d(dvec.space, dvec)
    assert all(x == 0 for x in ddvec.data)


def test_global_d_zero_vector(tri0):
    sp = get_space(tri0, 0, 0)
    out = global_d(sp, sp.zero())
    assert all(x == 0 for x in out.data)


def test_global_d_of_closed_interpolant(tri1):
    sp = get_space(tri1, 1, 0)
    # omega with d omega = 0: a constant
    vec = interpolate(sp, PolyForm.from_scalar(Poly.const(2, QQ(7, 3))))
    out = global_d(sp, vec)
    assert all(x == 0 for x in out.data)


def test_potential_of_global_d_equals_discrete_d(tri1, rng):
    sp = get_space(tri1, 0, 0)
    vec = random_vector(sp, rng)
    dvec = global_d(sp, vec)
    for cell in tri1.cells[2]:
        Pd = potential(dvec.space, dvec, cell)
        dd = discrete_d(sp, vec, cell)
        assert (Pd - dd).is_zero()


def test_component_norm_properties(tri1, rng):
    sp = get_space(tri1, 1, 0)
    vec = random_vector(sp, rng)
    cell = tri1.cells[2][0]
    base = component_norm(sp, vec, cell)
    assert base > 0
    # scaling by 2 scales the norm exactly (dyadic scaling is float-exact)
    assert component_norm(sp, vec.scaled(QQ(2)), cell) == 2 * base
    # zeroing any component can only decrease the norm
    for sub in [cell] + [c for d in range(2) for c in sp.mesh.delta(cell, d)]:
        v2 = vec.copy()
        sp.set_block(v2, sub, [ZERO] * sp.offsets[sub.key][1])
        assert component_norm(sp, v2, cell) <= base + 1e-14
    assert component_norm(sp, sp.zero(), cell) == 0.0
    # d = k: the component norm is the plain L2 norm
    spk = get_space(tri1, 1, 2)
    veck = random_vector(spk, rng)
    c2 = tri1.cells[2][1]
    assert component_norm(spk, veck, c2) == pytest.approx(
        form_l2_norm(spk, veck.component_form(c2), c2), rel=1e-14)


def test_inner_product_on_interpolants_exact(tri1, rng):
    r, k = 1, 0
    sp = get_space(tri1, r, k)
    omega = random_poly_form(rng, 2, k, r)
    vec = interpolate(sp, omega)
    total = ZERO
    for cell in tri1.cells[2]:
        s = stabilization(sp, vec, vec, cell)
        assert s == 0  # exact rational zero
        val = inner_product(sp, vec, vec, cell)
        lc = get_complex(tri1, cell)
        tr = trace_between_cells(tri1, omega, ambient_frame(2), cell)
        from ddrlift.exterior import integrate_inner_simplex

        expect = ZERO
        for t, (simp, af, _) in enumerate(lc.tops):
            coords = lc.coords_in(simp.verts, af)
            expect = expect + lc.top_orientation(t) * integrate_inner_simplex(
                tr, tr, cell.frame.metric(), coords)
        assert val == expect
        total = total + val


def test_stabilization_psd(cart1, rng):
    sp = get_space(cart1, 0, 0)
    for _ in range(10):
        vec = random_vector(sp, rng)
        for cell in cart1.cells[2]:
            assert to_float(stabilization(sp, vec, vec, cell)) >= -1e-13


def test_vector_serialization_roundtrip(tri0, rng):
    sp = get_space(tri0, 1, 1)
    vec = random_vector(sp, rng)
    doc = vec.to_json()
    back = DdrVector.from_json(sp, doc)
    assert back.data == vec.data


def test_smooth_interpolation_float_path(tri1):
    sp = get_space(tri1, 0, 0)
    f = SmoothForm(2, 0, {(): lambda x: math.sin(math.pi * x[0]) * math.sin(math.pi * x[1])})
    vec = interpolate(sp, f, quad_order=8)
    assert vec.float_mode
    # vertex components approximate point values of the trace
    for cell in tri1.cells[0]:
        x = [to_float(c) for c in cell.x_f]
        got = sp.block(vec, cell)[0]
        assert got == pytest.approx(math.sin(math.pi * x[0]) * math.sin(math.pi * x[1]),
                                    abs=1e-12)


def test_float_vector_serialization_roundtrip(tri0):
    sp = get_space(tri0, 0, 0)
    f = SmoothForm(2, 0, {(): lambda x: x[0] * x[1] + 0.25})
    vec = interpolate(sp, f, quad_order=6)
    back = DdrVector.from_json(sp, vec.to_json())
    assert back.float_mode
    assert all(abs(a - b) < 1e-15 for a, b in zip(back.data, vec.data))
