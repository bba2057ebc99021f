import json

import numpy as np
import pytest

from minlab import catalog as C
from minlab.errors import BundleFormatError
from minlab.io import (ImmersionBundle, field_from_dict, field_to_dict, load_bundle, mesh_from_immersion,
                       read_ply, save_bundle, write_obj, write_ply)


@pytest.fixture(scope="module")
def screw():
    return C.screw_motion(1.0).immersion(n=33)


def test_field_round_trip_is_exact(screw):
    g, h = field_from_dict(json.loads(json.dumps(field_to_dict(screw.grid, screw.h))))
    assert g == screw.grid and np.array_equal(h, screw.h)
    with pytest.raises(ValueError):
        field_to_dict(screw.grid, screw.h[:-1])


def test_bundle_round_trip_is_bit_exact(tmp_path, screw):
    path = tmp_path / "s.json"
    save_bundle(ImmersionBundle(screw, "screw-motion", {"d": 1.0}, 0.25), str(path))
    back = load_bundle(str(path))
    imm = back.imm
    assert back.entry == "screw-motion" and back.params == {"d": 1.0} and back.theta == 0.25
    for a, b in ((imm.h, screw.h), (imm.f, screw.f), (imm.hfield.hw, screw.hfield.hw),
                 (imm.wf.omega, screw.wf.omega), (imm.lambda_sq, screw.lambda_sq)):
        assert np.array_equal(a, b)
    assert imm.wf.eta_sign == screw.wf.eta_sign
    assert not list(tmp_path.glob("*.tmp*"))


def test_bundle_metadata(screw):
    d = ImmersionBundle(screw).to_dict()
    assert d["format"] == "minlab-immersion" and d["version"] == 1
    assert d["anchor"] == {"iV": 16, "jU": 16, "f": float(screw.f[16, 16])}
    assert set(d["fields"]) == {"h", "hw", "hwb", "f"}


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d["fields"].pop("hw"),
    lambda d: d["fields"]["h"].update(kind="quaternion"),
    lambda d: d["fields"]["f"]["values"].pop(),
    lambda d: d.update(etaSign=-d["etaSign"]),
])
def test_malformed_bundles_are_rejected(screw, mutate):
    d = json.loads(json.dumps(ImmersionBundle(screw).to_dict()))
    mutate(d)
    with pytest.raises(BundleFormatError):
        ImmersionBundle.from_dict(d)


def test_unparsable_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(BundleFormatError):
        load_bundle(str(p))


def test_mesh_layout(screw):
    m = mesh_from_immersion(screw)
    nv, nu = screw.grid.shape
    assert m.vertices.shape == (nv * nu, 3) and m.faces.shape == ((nv - 1) * (nu - 1), 4)
    k = 5 * nu + 7
    assert np.array_equal(m.vertices[k], [screw.h[5, 7].real, screw.h[5, 7].imag, screw.f[5, 7]])
    assert list(m.faces[0]) == [0, 1, nu + 1, nu]
    assert np.isnan(m.channels["K"][0]) and np.isfinite(m.channels["K"][k])


def test_ply_binary_layout(tmp_path, screw):
    m = mesh_from_immersion(screw)
    p = tmp_path / "s.ply"
    write_ply(m, str(p))
    raw = p.read_bytes()
    head = raw[:raw.index(b"end_header\n")].decode()
    assert "format binary_little_endian 1.0" in head
    assert "property list uchar int vertex_indices" in head
    body = len(raw) - raw.index(b"end_header\n") - len(b"end_header\n")
    assert body == m.vertices.shape[0] * 4 * (3 + len(m.channels)) + m.faces.shape[0] * 17
    back = read_ply(str(p))
    assert np.array_equal(back.vertices, m.vertices.astype(np.float32).astype(float))
    assert np.array_equal(back.faces, m.faces)
    assert np.array_equal(back.channels["N3"], m.channels["N3"].astype(np.float32).astype(float), equal_nan=True)


def test_obj_lines(tmp_path, screw):
    m = mesh_from_immersion(screw, channels=("N3",))
    p = tmp_path / "s.obj"
    write_obj(m, str(p))
    lines = p.read_text().splitlines()
    v = [ln for ln in lines if ln.startswith("v ")]
    f = [ln for ln in lines if ln.startswith("f ")]
    c = [ln for ln in lines if ln.startswith("# c ")]
    assert len(v) == len(c) == m.vertices.shape[0] and len(f) == m.faces.shape[0]
    assert [float(x) for x in v[3].split()[1:]] == m.vertices[3].tolist()
    assert f[0] == f"f 1 2 {screw.grid.n_u + 2} {screw.grid.n_u + 1}"


def test_cylinder_mesh_stays_over_its_geodesic():
    m = mesh_from_immersion(C.cylinder().immersion(n=17))
    assert np.abs(m.vertices[:, 1]).max() < 1e-15


def test_scherk_mesh_heights_match_the_graph():
    imm = C.scherk_h2().immersion(n=17)
    m = mesh_from_immersion(imm)
    z = C.half_plane(m.vertices[:, 0] + 1j * m.vertices[:, 1])
    assert np.abs(m.vertices[:, 2] - C.scherk_closed_form(z.real, z.imag)).max() < 1e-12
