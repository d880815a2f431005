import json
import math

import pytest

from ddrlift.ddr import ambient_frame, cell_integral, trace_between_cells
from ddrlift.exterior import PolyForm, ext_d
from ddrlift.mesh import (MeshBuilder, MeshError, MeshFamily, build_family, load_json,
                          relative_orientation, save_json, simplicial_submesh)
from ddrlift.polynomial import Poly
from ddrlift.scalars import QQ, ZERO
from ddrlift.spaces import get_complex


def test_triangular_level0_counts(tri0):
    assert len(tri0.cells[2]) == 2
    assert len(tri0.cells[1]) == 5
    assert len(tri0.cells[0]) == 4


def test_cartesian_level1_quads():
    m = build_family(MeshFamily("cartesian-polygonal", 1))
    assert len(m.cells[2]) == 4
    assert all(len(c.submesh) == 2 for c in m.cells[2])


def test_kuhn_level0_tet_volumes(kuhn0):
    from ddrlift.mesh import simplex_volume

    assert len(kuhn0.cells[3]) == 6
    total = sum(simplex_volume([kuhn0.vertices[v] for v in s.vertices])
                for c in kuhn0.cells[3] for s in c.submesh)
    assert total == 1


def test_hexagonal_submesh_area(hexa0):
    hexes = [c for c in hexa0.cells[2] if len(c.vertex_ids) == 6]
    assert hexes, "family should contain hexagons"
    cell = hexes[0]
    assert len(simplicial_submesh(cell)) == 6
    # shoelace area of the loop vs sum of submesh triangle areas
    lc = get_complex(hexa0, cell)
    one = PolyForm(2, 2, {(0, 1): Poly.const(2, QQ(1))})
    area = cell_integral(lc, one)
    x = PolyForm(2, 1, {(1,): Poly.var(2, 0)})  # x dy in cell frame coordinates
    # Stokes: area = boundary integral of x dy
    rhs = ZERO
    amb_x = PolyForm(2, 1, {(1,): Poly.var(2, 0)})
    for face, sign in hexa0.boundary_cells(cell):
        tr = trace_between_cells(hexa0, amb_x, ambient_frame(2), face)
        rhs = rhs + sign * cell_integral(get_complex(hexa0, face), tr)
    # the cell frame is the ambient frame for top cells, but centered at x_f;
    # d(x dy) = dx^dy either way, so both sides measure the area
    assert area > 0
    assert rhs == area


def test_relative_orientation_signs(tri0):
    cell = tri0.cells[2][0]
    for face, sign in tri0.boundary_cells(cell):
        assert sign in (-1, 1)
        assert relative_orientation(tri0, cell, face) == sign
    with pytest.raises(MeshError):
        far = next(f for f in tri0.cells[1]
                   if f.id not in [i for i, _ in cell.boundary])
        relative_orientation(tri0, cell, far)


@pytest.mark.parametrize("family,n", [("triangular", 2), ("cartesian-polygonal", 2),
                                      ("hexagonal-dominant", 2), ("triangular", 3)])
def test_boundary_of_boundary_cancels(family, n):
    m = build_family(MeshFamily(family, 0, n=n))
    for d in range(2, n + 1):
        for c in m.cells[d]:
            acc = {}
            for fid, s1 in c.boundary:
                for eid, s2 in m.cell(d - 1, fid).boundary:
                    acc[eid] = acc.get(eid, 0) + s1 * s2
            assert all(v == 0 for v in acc.values())


def test_stokes_closed_boundary(cart0):
    # sum over the closed boundary of the trace integral of x dx vanishes
    cell = cart0.cells[2][0]
    amb = ambient_frame(2)
    omega = PolyForm(2, 1, {(0,): Poly.var(2, 0)})  # x dx, closed
    total = ZERO
    for face, sign in cart0.boundary_cells(cell):
        tr = trace_between_cells(cart0, omega, amb, face)
        total = total + sign * cell_integral(get_complex(cart0, face), tr)
    assert total == 0


def test_mesh_level_stokes_random(tri1, rng):
    amb = ambient_frame(2)
    for _ in range(25):
        deg = rng.randrange(3)
        comps = {}
        for I in [(), (0,), (1,)][1:]:
            pass
        coeffs = {(a, b): QQ(rng.randint(-5, 5), rng.randint(1, 4))
                  for a in range(deg + 1) for b in range(deg + 1) if a + b <= deg}
        omega = PolyForm(2, 1, {(0,): Poly(2, dict(coeffs)),
                                (1,): Poly(2, {e: c * 2 for e, c in coeffs.items()})})
        cell = tri1.cells[2][rng.randrange(len(tri1.cells[2]))]
        tr = trace_between_cells(tri1, omega, amb, cell)
        lhs = cell_integral(get_complex(tri1, cell), ext_d(tr))
        rhs = ZERO
        for face, sign in tri1.boundary_cells(cell):
            trf = trace_between_cells(tri1, omega, amb, face)
            rhs = rhs + sign * cell_integral(get_complex(tri1, face), trf)
        assert lhs == rhs


def test_regularity_equilateral_triangle():
    b = MeshBuilder(2, [(QQ(0), QQ(0)), (QQ(1), QQ(0)),
                        (QQ(1, 2), QQ(866025403784439, 10 ** 15))])
    b.add_simplex((0, 1, 2))
    m = b.build()
    inr, hr = m.regularity_report()
    assert inr == pytest.approx(1 / (2 * math.sqrt(3)), rel=1e-6)
    assert hr == 1.0


def test_regularity_flags_sliver():
    b = MeshBuilder(2, [(QQ(0), QQ(0)), (QQ(1), QQ(0)), (QQ(1, 2), QQ(1, 100))])
    b.add_simplex((0, 1, 2))
    m = b.build()
    inr, _ = m.regularity_report()
    assert inr < 0.05  # flagged by any sensible threshold


def test_regularity_constant_across_levels():
    values = []
    for lev in range(4):
        m = build_family(MeshFamily("cartesian-polygonal", lev))
        values.append(m.regularity_report())
    for inr, hr in values[1:]:
        assert abs(inr - values[0][0]) <= 1e-12
        assert abs(hr - values[0][1]) <= 1e-12


def test_json_roundtrip_byte_identical(tmp_path, tri1):
    p1 = tmp_path / "m1.json"
    p2 = tmp_path / "m2.json"
    save_json(tri1, str(p1))
    m2 = load_json(str(p1))
    save_json(m2, str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    assert m2.regularity_report() == tri1.regularity_report()


def test_json_missing_sign_names_field(tmp_path, tri0):
    p = tmp_path / "m.json"
    save_json(tri0, str(p))
    doc = json.loads(p.read_text())
    del doc["cells"]["2"][0]["boundary"][0]["sign"]
    p.write_text(json.dumps(doc))
    with pytest.raises(MeshError, match=r"cells\[2\]\[0\]\.boundary\[0\]\.sign"):
        load_json(str(p))


def test_json_missing_frame_named(tmp_path, tri0):
    p = tmp_path / "m.json"
    save_json(tri0, str(p))
    doc = json.loads(p.read_text())
    del doc["cells"]["2"][0]["frame"]
    p.write_text(json.dumps(doc))
    with pytest.raises(MeshError, match=r"cells\[2\]\[0\]\.frame"):
        load_json(str(p))


def test_h_refinement_factor():
    for family in ("triangular", "cartesian-polygonal", "hexagonal-dominant"):
        hs = [build_family(MeshFamily(family, lev)).h_max() for lev in range(3)]
        for a, b in zip(hs, hs[1:]):
            assert b <= 0.6 * a


def test_validation_rejects_unknown_family():
    with pytest.raises(MeshError):
        build_family(MeshFamily("hexagonal-dominant", 0, n=3))
    with pytest.raises(MeshError):
        build_family(MeshFamily("triangular", -1))


def test_hexagonal_regularity_uniform_floor():
    ratios = []
    for lev in range(3):
        m = build_family(MeshFamily("hexagonal-dominant", lev))
        inr, hr = m.regularity_report()
        ratios.append((inr, hr))
    assert all(inr > 0.08 and hr > 0.3 for inr, hr in ratios)
