from .annotations import (
    DEFAULT_VOCABULARY,
    AnnotationError,
    RoiAnnotation,
    centroid,
    load_image,
    parse_annotations,
    rasterize,
)
from .edges import (
    EdgeParameterError,
    build_edges_delaunay,
    build_edges_distance,
    build_edges_knn,
    ensure_connected,
)
from .graph import GraphError, Node, RoiGraph, count_components, load_graph, save_graph, write_json_atomic
from .split import DatasetSplit, SplitError, load_manifest, make_split, split_from_manifest, write_manifest
