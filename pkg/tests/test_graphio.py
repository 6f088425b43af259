import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from roimatch.graphio import (
    AnnotationError,
    EdgeParameterError,
    GraphError,
    Node,
    RoiGraph,
    SplitError,
    build_edges_delaunay,
    build_edges_distance,
    build_edges_knn,
    centroid,
    count_components,
    ensure_connected,
    load_graph,
    load_manifest,
    make_split,
    parse_annotations,
    rasterize,
    save_graph,
    split_from_manifest,
    write_manifest,
)


def write_ann(tmp_path, shapes, name="s1.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"image_path": "s1.png", "shapes": shapes}))
    return path


SQUARE = [[0, 0], [4, 0], [4, 4], [0, 4]]


def test_parse_seven_polygons_in_order(tmp_path):
    labels = ["femoral head", "subcapital", "superior neck", "inferior neck",
              "intertrochanteric", "greater trochanter", "femur shaft"]
    shapes = [{"label": lab, "points": [[x + 10 * k, y] for x, y in SQUARE]}
              for k, lab in enumerate(labels)]
    anns, image = parse_annotations(write_ann(tmp_path, shapes))
    assert [a.label for a in anns] == labels
    assert image.endswith("s1.png")


def test_parse_degenerate_polygon(tmp_path):
    with pytest.raises(AnnotationError, match="degenerate polygon"):
        parse_annotations(write_ann(tmp_path, [{"label": "femoral head", "points": [[0, 0], [1, 1]]}]))


def test_parse_duplicate_label_is_named(tmp_path):
    shapes = [{"label": "femur head", "points": SQUARE}] * 2
    with pytest.raises(AnnotationError, match="femur head"):
        parse_annotations(write_ann(tmp_path, shapes), vocabulary=None)


def test_parse_self_intersecting(tmp_path):
    bowtie = [[0, 0], [4, 4], [4, 0], [0, 4]]
    with pytest.raises(AnnotationError, match="self-intersecting"):
        parse_annotations(write_ann(tmp_path, [{"label": "femoral head", "points": bowtie}]))


def test_parse_unknown_label_error_or_warn(tmp_path, caplog):
    path = write_ann(tmp_path, [{"label": "patella", "points": SQUARE}])
    with pytest.raises(AnnotationError, match="patella"):
        parse_annotations(path)
    anns, _ = parse_annotations(path, unknown="warn")
    assert anns[0].label == "patella"
    assert "patella" in caplog.text


def test_parse_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "shapes": [\n  {"label": }\n ]\n}')
    with pytest.raises(AnnotationError, match="line 3"):
        parse_annotations(path)


def test_centroid_examples():
    m = np.zeros((10, 10), bool)
    m[0:2, 0:2] = True
    assert centroid(m) == (0.5, 0.5)
    m = np.zeros((10, 10), bool)
    m[7, 3] = True                 # row 7, column 3 -> (x, y) = (3, 7)
    assert centroid(m) == (3.0, 7.0)
    m = np.zeros((4, 4), bool)
    m[0, 0] = m[0, 1] = m[1, 0] = True
    x, y = centroid(m)
    assert x == pytest.approx(1 / 3) and y == pytest.approx(1 / 3)


def test_centroid_empty_mask():
    with pytest.raises(AnnotationError, match="empty RoI mask"):
        centroid(np.zeros((3, 3), bool))


def test_rasterize_square_centroid():
    mask = rasterize([(2, 3), (6, 3), (6, 9), (2, 9)], (20, 20))
    x, y = centroid(mask)
    assert 3.5 < x < 4.5 and 5.5 < y < 6.5


def test_knn_line_example():
    assert build_edges_knn(np.array([[0, 0], [1, 0], [5, 0]], float), 1) == [(0, 1), (1, 2)]


def test_knn_complete_at_n_minus_one():
    pts = np.random.default_rng(0).uniform(size=(6, 2))
    assert len(build_edges_knn(pts, 5)) == 15


def test_knn_tie_break_lower_index():
    pts = np.array([[0, 0], [0, 0], [1, 0]], float)
    first = build_edges_knn(pts, 1)
    assert first == build_edges_knn(pts, 1)
    assert (0, 1) in first and (1, 2) in first or (0, 2) in first


def test_knn_rejects_bad_k():
    with pytest.raises(EdgeParameterError):
        build_edges_knn(np.zeros((3, 2)), 3)
    with pytest.raises(EdgeParameterError):
        build_edges_knn(np.zeros((3, 2)), 0)


def test_delaunay_triangle_and_square():
    assert len(build_edges_delaunay(np.array([[0, 0], [1, 0], [0, 1]], float))) == 3
    assert len(build_edges_delaunay(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))) == 5


def test_delaunay_collinear_falls_back_with_warning():
    pts = np.array([[0, 0], [1, 0], [2, 0]], float)
    with pytest.warns(RuntimeWarning):
        edges, params = ensure_connected(pts, "delaunay", {})
    assert count_components(3, edges) == 1
    assert params["fallback"] == "knn"


def test_distance_bounds_and_path():
    pts = np.array([[0, 0], [1, 0], [2, 0], [3, 0]], float)
    assert build_edges_distance(pts, 0.5) == []
    assert len(build_edges_distance(pts, 10.0)) == 6
    assert build_edges_distance(pts, 1.5) == [(0, 1), (1, 2), (2, 3)]


def test_repair_joins_two_clusters():
    pts = np.array([[0, 0], [1, 0], [100, 0], [101, 0]], float)
    edges, params = ensure_connected(pts, "knn", {"k": 1})
    assert count_components(4, edges) == 1
    assert params["k"] > 1
    edges, params = ensure_connected(pts, "distance", {"threshold": 2.0})
    assert count_components(4, edges) == 1
    assert params["threshold"] > 2.0


def test_repair_leaves_connected_graph_alone():
    pts = np.array([[0, 0], [1, 0], [2, 0]], float)
    edges, params = ensure_connected(pts, "knn", {"k": 1})
    assert edges == [(0, 1), (1, 2)] and params == {"k": 1}


def test_single_node_graph():
    edges, _ = ensure_connected(np.array([[3.0, 4.0]]), "knn", {"k": 2})
    assert edges == []


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 12), method=st.sampled_from(["knn", "delaunay", "distance"]),
       seed=st.integers(0, 10_000))
def test_every_builder_ends_connected(n, method, seed):
    pts = np.random.default_rng(seed).uniform(0, 100, size=(n, 2))
    params = {"knn": {"k": 1}, "delaunay": {}, "distance": {"threshold": 5.0}}[method]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        edges, _ = ensure_connected(pts, method, params)
    assert count_components(n, edges) == 1
    assert all(i < j for i, j in edges)


def test_graph_invariants_enforced(rng):
    nodes = [Node("a", (0.0, 0.0), np.zeros(4)), Node("b", (1.0, 0.0), np.zeros(4))]
    with pytest.raises(GraphError):
        RoiGraph("g", "fractured", nodes, [], "knn", {})          # disconnected
    with pytest.raises(GraphError):
        RoiGraph("g", "maybe", nodes, [(0, 1)], "knn", {})        # bad label
    bad = [Node("a", (0.0, 0.0), np.zeros(4)), Node("b", (1.0, 0.0), np.zeros(3))]
    with pytest.raises(GraphError):
        RoiGraph("g", "fractured", bad, [(0, 1)], "knn", {})


def test_graph_json_roundtrip(tmp_path, rng):
    g = random_graph(rng, 6, 130)
    save_graph(g, tmp_path / "g.json")
    assert load_graph(tmp_path / "g.json") == g
    first = (tmp_path / "g.json").read_bytes()
    save_graph(load_graph(tmp_path / "g.json"), tmp_path / "g.json")
    assert (tmp_path / "g.json").read_bytes() == first


def pool(n_pos, n_neg, rng):
    return ([random_graph(rng, 4, 3, f"p{i}", "fractured") for i in range(n_pos)]
            + [random_graph(rng, 4, 3, f"n{i}", "non-fractured") for i in range(n_neg)])


def test_split_matches_cohort_sizes(rng):
    s = make_split(pool(94, 453, rng), seed=3)
    assert len(s.template) == 55 and len(s.test) == 98 and len(s.train) == 394
    ids = [g.graph_id for g in s.template + s.train + s.test]
    assert len(set(ids)) == 547


def test_split_small_pool(rng):
    s = make_split(pool(2, 8, rng), seed=0)
    assert len(s.template) == 1


def test_split_deterministic_and_stratified(rng):
    p = pool(30, 70, rng)
    a, b = make_split(p, seed=5), make_split(p, seed=5)
    assert a.ids() == b.ids()
    pos = sum(g.subject_label == "fractured" for g in a.template)
    assert abs(pos - 3) <= 1
    assert make_split(p, seed=6).ids() != a.ids()


def test_split_needs_both_classes(rng):
    with pytest.raises(SplitError):
        make_split(pool(0, 5, rng))


def test_manifest_roundtrip(tmp_path, rng):
    graphs = pool(5, 15, rng)
    files = {}
    for g in graphs:
        save_graph(g, tmp_path / "graphs" / f"{g.graph_id}.json")
        files[g.graph_id] = f"graphs/{g.graph_id}.json"
    split = make_split(graphs, seed=1)
    write_manifest(tmp_path / "manifest.json", files, split)
    loaded, doc = load_manifest(tmp_path / "manifest.json")
    again = split_from_manifest(loaded, doc)
    assert again.ids() == split.ids() and again.seed == 1
