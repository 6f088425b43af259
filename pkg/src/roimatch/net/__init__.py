from .model import (
    MatchingError,
    NetConfig,
    cross_embed,
    forward_batch,
    forward_embedded,
    forward_pair,
    init_params,
    intra_embed,
    node_affinity,
    pool,
    similarity,
    sinkhorn,
)
