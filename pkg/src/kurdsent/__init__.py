"""Central Kurdish (Sorani) sentiment analysis toolkit.

Everything needed to go from raw tweet-like text to benchmarked sentiment
classifiers: corpus filtering and normalization, annotation aggregation with
reliability measurement, translate-and-label silver data generation, TF-IDF
features with four classical classifiers, a from-scratch BiLSTM, and an
experiment runner. All estimators follow the fit/transform/predict
convention.
"""

__version__ = "0.1.0"

from .base import ClientError, DataError, Estimator, NotFittedError, clone
from .corpus import (
    CLASS_ORDER,
    Dataset,
    Document,
    SentimentLabel,
    Source,
    detect_emoji,
    load_jsonl,
    normalize,
    save_jsonl,
    script_filter,
    split_dataset,
    strip_emoji,
)
from .annotation import (
    AgreementResult,
    AnnotationLabel,
    AnnotationRecord,
    Sentiment,
    Subjectivity,
    aggregate,
    krippendorff_alpha,
    to_classification_dataset,
)
from .features import SparseVector, TfidfVectorizer, tokenize
from .classifiers import (
    DecisionTreeClassifier,
    LinearSvmClassifier,
    LogisticRegressionClassifier,
    RandomForestClassifier,
)
from .neural import BiLstmClassifier
from .augment import (
    BalanceSpec,
    CachingTeacher,
    CachingTranslator,
    IdentityTranslator,
    LexiconTeacher,
    generate_silver,
    merge,
    upsample,
    zero_shot_eval,
)
from .evaluation import ConfusionMatrix, EvaluationReport, confusion, metrics

__all__ = [
    "CLASS_ORDER",
    "AgreementResult",
    "AnnotationLabel",
    "AnnotationRecord",
    "BalanceSpec",
    "BiLstmClassifier",
    "CachingTeacher",
    "CachingTranslator",
    "ClientError",
    "ConfusionMatrix",
    "DataError",
    "Dataset",
    "DecisionTreeClassifier",
    "Document",
    "Estimator",
    "EvaluationReport",
    "IdentityTranslator",
    "LexiconTeacher",
    "LinearSvmClassifier",
    "LogisticRegressionClassifier",
    "NotFittedError",
    "RandomForestClassifier",
    "Sentiment",
    "SentimentLabel",
    "Source",
    "SparseVector",
    "Subjectivity",
    "TfidfVectorizer",
    "aggregate",
    "clone",
    "confusion",
    "detect_emoji",
    "generate_silver",
    "krippendorff_alpha",
    "load_jsonl",
    "merge",
    "metrics",
    "normalize",
    "save_jsonl",
    "script_filter",
    "split_dataset",
    "strip_emoji",
    "to_classification_dataset",
    "tokenize",
    "upsample",
    "zero_shot_eval",
]
