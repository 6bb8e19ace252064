"""Balanced two-concept embedding fusion via score-guided group swapping."""

from .embedding import (
    EmbeddingBundle,
    ExchangeGroup,
    ExchangeVector,
    apply_group,
    init_exchange_vector,
    swap,
)
from .errors import (
    AgswapError,
    BiasUnresolvable,
    ConflictingLists,
    IndexOutOfBounds,
    InsufficientHyponyms,
    InvalidTaxonomy,
    InvalidWidth,
    LengthMismatch,
    NoPathToRoot,
    OracleFailure,
    ProtocolError,
    ShapeMismatch,
    UnknownCategory,
    WidthTooLarge,
)
from .metrics import (
    BalanceScore,
    OracleFeature,
    balance_score,
    biased_balance_score,
    cosine,
    eval_metrics,
)
from .optimizer import (
    BiasSpec,
    FusionResult,
    IterationRecord,
    OptimizerParams,
    brute_force_search,
    run_fusion,
    schedule_size,
    update_vector,
)
from .oracle import (
    GeneratorOracle,
    OracleCapabilities,
    RemoteOracle,
    SyntheticOracle,
    SyntheticOracleSpec,
)
from .taxonomy import (
    SuperclassEntry,
    TaxonomyGraph,
    TaxonomyManifest,
    apply_curation,
    balance_subclasses,
    build_manifest,
    enumerate_pairs,
    hypernym_path,
    superclass_candidates,
    tiny_selection,
)

__version__ = "0.1.0"
