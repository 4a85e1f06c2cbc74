from .models import ACCEPTABLE_RATES, RATES, AnnotationSession, EvalItem, RubricDefinition, default_rubric
from .store import SessionStore

__all__ = [
    "ACCEPTABLE_RATES",
    "RATES",
    "AnnotationSession",
    "EvalItem",
    "RubricDefinition",
    "SessionStore",
    "default_rubric",
]
