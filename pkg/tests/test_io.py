import numpy as np
import pytest

from pointfreq import (
    ParseError,
    TriangleMesh,
    ValidationError,
    load_cloud,
    load_mesh,
    save_cloud,
    save_mesh,
)
from conftest import cube_mesh, sphere_cloud


def test_xyz_three_lines(tmp_path):
    path = tmp_path / "tiny.xyz"
    path.write_text("0 0 0\n1 0 0\n0 1 0\n")
    cloud = load_cloud(path)
    np.testing.assert_array_equal(cloud, [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_xyz_comments_blank_lines_and_extra_columns(tmp_path):
    path = tmp_path / "c.xyz"
    path.write_text("# header\n\n1 2 3 0.5\n\n  4 5 6\n")
    cloud = load_cloud(path)
    np.testing.assert_array_equal(cloud, [[1, 2, 3], [4, 5, 6]])


def test_xyz_non_numeric_token_names_line(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("0 0 0\n1 oops 0\n")
    with pytest.raises(ParseError, match=":2"):
        load_cloud(path)


def test_xyz_empty_file_errors(tmp_path):
    path = tmp_path / "empty.xyz"
    path.write_text("")
    with pytest.raises(ParseError, match="no points"):
        load_cloud(path)


def test_xyz_roundtrip_precision_unit_sphere(tmp_path):
    cloud = sphere_cloud(256, seed=3)
    path = tmp_path / "s.xyz"
    save_cloud(cloud, path)
    back = load_cloud(path)
    assert np.abs(back - cloud).max() <= 1e-8


def test_ply_binary_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    cloud = rng.normal(scale=123.456, size=(300, 3))
    path = tmp_path / "r.ply"
    save_cloud(cloud, path)
    back = load_cloud(path)
    assert np.array_equal(back, cloud)


def test_ply_ascii_roundtrip(tmp_path):
    cloud = sphere_cloud(64, seed=1)
    path = tmp_path / "a.ply"
    save_cloud(cloud, path, format="ply-ascii")
    back = load_cloud(path)
    assert np.array_equal(back, cloud)  # %.17g round-trips doubles


def test_ply_2048_vertices_roundtrip(tmp_path):
    cloud = sphere_cloud(2048, seed=2)
    path = tmp_path / "big.ply"
    save_cloud(cloud, path)
    assert load_cloud(path).shape == (2048, 3)


def test_ply_float32_and_unknown_properties(tmp_path):
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        "element vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\n"
        "end_header\n"
    )
    row = np.array([(1.0, 2.0, 3.0), (4.0, 5.0, 6.0)],
                   dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4")])
    payload = b"".join(
        row[i].tobytes() + bytes([200]) for i in range(2)
    )
    path = tmp_path / "f32.ply"
    path.write_bytes(header.encode() + payload)
    cloud = load_cloud(path)
    np.testing.assert_allclose(cloud, [[1, 2, 3], [4, 5, 6]])


def test_save_empty_cloud_errors(tmp_path):
    with pytest.raises(ValidationError):
        save_cloud(np.empty((0, 3)), tmp_path / "e.xyz")


def test_save_non_finite_errors(tmp_path):
    with pytest.raises(ValidationError):
        save_cloud([[0, 0, np.nan]], tmp_path / "n.xyz")


def test_scores_column_written_and_ignored_on_read(tmp_path):
    cloud = np.array([[0.0, 0, 0], [1, 0, 0]])
    path = tmp_path / "s.xyz"
    save_cloud(cloud, path, scores=[5.0, 2.0])
    text = path.read_text().splitlines()
    assert text[0].split()[3] == "5"
    np.testing.assert_array_equal(load_cloud(path), cloud)


def test_off_roundtrip(tmp_path):
    mesh = cube_mesh()
    path = tmp_path / "cube.off"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)


def test_off_fan_triangulation(tmp_path):
    path = tmp_path / "quad.off"
    path.write_text(
        "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
    )
    mesh = load_mesh(path)
    assert mesh.num_triangles == 2
    np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3]])


def test_ply_mesh_with_faces(tmp_path):
    path = tmp_path / "m.ply"
    path.write_text(
        "ply\nformat ascii 1.0\n"
        "element vertex 3\n"
        "property double x\nproperty double y\nproperty double z\n"
        "element face 1\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
        "0 0 0\n1 0 0\n0 1 0\n"
        "3 0 1 2\n"
    )
    mesh = load_mesh(path)
    assert mesh.num_triangles == 1
    cloud = load_cloud(path)  # same file readable as a cloud
    assert cloud.shape == (3, 3)


def test_mesh_index_out_of_range_rejected():
    with pytest.raises(ValidationError):
        TriangleMesh(np.zeros((3, 3)), [[0, 1, 5]])
