"""Structure-aware evaluation and reward toolkit for XML document translation."""

from .corpusio import (
    CorpusRecord,
    FixtureRecord,
    FixtureSpec,
    generate_fixtures,
    read_corpus,
    write_corpus,
    write_report,
)
from .docmetrics import (
    METRICS,
    CorpusReport,
    DocScores,
    content_bleu,
    evaluate_corpus,
    node_chrf,
    optimal_node_chrf,
    strucauc,
    xml_bleu,
    xml_match,
)
from .errors import (
    ConfigError,
    DuplicateId,
    EmptyCorpus,
    GroupTooSmall,
    InvalidReference,
    LengthMismatch,
    MalformedLine,
    NonFiniteCost,
    StructEvalError,
)
from .grposim import (
    CandidatePool,
    CategoricalPolicy,
    StepStats,
    TrainConfig,
    TrainingTrace,
    grpo_step,
    run_training,
)
from .nodealign import (
    NodePairing,
    OptimalAlignment,
    hungarian,
    optimal_alignment,
    parallel_pairing,
)
from .rewards import (
    REWARD_COMPONENTS,
    CandidateGroup,
    RewardSpec,
    build_candidate_group,
    component_scores,
    group_advantages,
    score_reward,
)
from .stats import BootstrapConfig, paired_bootstrap
from .textmetrics import BleuConfig, ChrfConfig, chrf, corpus_bleu
from .treedist import EditCostScheme, tree_edit_distance, tree_sim, tree_similarity
from .xmltree import (
    DocTree,
    ParseOutcome,
    TreeNode,
    canonical_xml,
    is_isomorphic,
    parse_document,
    strip_markup,
    text_segments,
)

__version__ = "0.1.0"
