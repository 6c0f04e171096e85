"""personakit: data-driven persona pipeline.

Turns raw social-media post exports into validated persona classifications:
two-tier corpus collection, embedding-based weighted cosine scoring,
LLM-assisted taxonomy drafting with two-stage human review, and agreement
metrics over the results.
"""

__version__ = "0.1.0"

from .classifier import (  # noqa: F401
    ClassificationResult,
    FeatureWeight,
    PersonaCategory,
    RecycleQueue,
    Strategy,
    ThresholdPolicy,
    classify,
    classify_corpus,
    load_categories,
    score_category,
)
from .corpus import (  # noqa: F401
    CleaningConfig,
    CorpusStats,
    DatasetLabel,
    KeywordFramework,
    MatchMode,
    Post,
    PostCollection,
    UserProfile,
    clean,
    corpus_stats,
    dedup_users,
    expand_user_posts,
    filter_relevant,
    load_posts,
)
from .embedding import EmbeddingStore, cosine, load_store, save_store  # noqa: F401
from .extraction import (  # noqa: F401
    CostarPrompt,
    CostarTemplate,
    LlmClientConfig,
    MockLlmClient,
    SchemaError,
    TaxonomyDraft,
    build_prompt,
    extract_features,
    refine,
    sample_posts,
)
from .metrics import (  # noqa: F401
    AgreementReport,
    ConfusionMatrix,
    agreement_report,
    class_metrics,
    cohen_kappa,
    confusion,
    pearson,
    spearman,
)
from .textproc import (  # noqa: F401
    SegmenterDictionary,
    StopwordSet,
    TokenizerMode,
    TokenSequence,
    filter_stopwords,
    normalize_text,
    tokenize,
)
from .validation import (  # noqa: F401
    Decision,
    RecordState,
    ReviewItem,
    ReviewWorkflow,
    Stage,
    ValidationRecord,
)
