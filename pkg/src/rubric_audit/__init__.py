"""Audit how LLM-generated analytic rubrics line up with human rubrics, and how that affects grading."""

from .align import (
    AlignmentConfig,
    AlignmentReport,
    EmbeddingScorer,
    GeneratedRubric,
    JaccardScorer,
    RemoteSimilarityScorer,
    Rule,
    align,
    f1,
    parse_rules,
    precision,
    recall,
)
from .errors import ErrorCause, annotate, cause_proportions, collect_incorrect_rules
from .gateway import ChatAPIBackend, ChatParams, MockBackend, ResponseCache, cached_complete, complete
from .grading import GradingOutcome, GradingReport, accuracy, extract_rating, grade_item
from .items import (
    AssessmentItem,
    GradeLabel,
    SampledCorpus,
    StudentResponse,
    load_items,
    sample_balanced,
    select_graded_examples,
)
from .prompts import (
    ChatMessage,
    ChatTranscript,
    GenerationSetting,
    RubricVariant,
    render_grading_prompt,
    render_markdown_block,
    render_rubric_prompt,
)
from .stats import mean_std, paired_t_test, pooled_t_test, spearman, t_tail

__version__ = "0.1.0"
