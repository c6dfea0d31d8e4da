"""flowrec: service embeddings from workflow provenance.

Pipeline: parse workflow files into a repository, build the dependency
knowledge graph, generate a token-sequence corpus (depth-first,
breadth-first, or probabilistic walks), train skip-gram embeddings with
hierarchical softmax, and rank next-service candidates online by
successor probability times embedding similarity.
"""

from .corpus import (
    Corpus,
    PwConfig,
    ServiceToken,
    TokenSequence,
    dedupe,
    generate_bfs,
    generate_dfs,
    generate_pw,
    load_corpus,
    save_corpus,
    transition_distribution,
)
from .embed import (
    EmbeddingModel,
    HuffmanTree,
    TrainConfig,
    build_huffman,
    leaf_probability,
    load_model,
    save_model,
    similarity,
    train,
    untrained_model,
)
from .errors import (
    ColdStartError,
    EmptySessionError,
    FlowrecError,
    ParseError,
    TrainingDivergedError,
    UnknownServiceError,
    UnknownTokenError,
    ValidationError,
    VocabularyTooSmallError,
)
from .evaluate import (
    EvalCase,
    EvalConfig,
    Metrics,
    MetricsReport,
    build_eval_cases,
    compute_metrics,
    hit,
    run_evaluation,
    split_repository,
    sweep_pw,
    sweep_to_csv,
)
from .ingest import (
    Repository,
    RepositoryLoad,
    Service,
    WorkflowGraph,
    load_repository,
    parse_canonical_json,
    parse_taverna_xml,
    serialize_canonical_json,
)
from .recommend import (
    RecommendationEntry,
    Session,
    p_successor,
    recommend_top_k,
    score_token,
    select_token,
)
from .synth import make_synthetic_repository
from .wskg import Edge, Wskg, build_wskg, load_edge_list, save_edge_list

__version__ = "0.1.0"
