from .assemble import (
    LayoutError,
    SubjectRecord,
    assemble_node_vector,
    compute_radiomics,
    read_precomputed,
    read_subject_table,
)
from .firstorder import DEFAULT_LEVELS, FeatureError, first_order_features, quantize
from .glcm import glcm_features, glcm_matrix, glcm_statistics
from .layout import FAMILIES, N_SLOTS, SLOT_INDEX, SLOT_NAMES, family_slice
from .normalize import Normalizer
from .shape import shape_features
