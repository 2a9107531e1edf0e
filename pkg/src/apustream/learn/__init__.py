"""Incremental learners: GNB, Hoeffding trees, adaptive forest, drift detection."""

from .adwin import Adwin, DRIFT, STABLE, WARNING
from .base import Classifier
from .checkpoint import load_checkpoint, save_checkpoint
from .forest import AdaptiveRandomForestClassifier
from .gnb import GaussianNaiveBayes
from .hatc import HoeffdingAdaptiveTreeClassifier
from .htree import HoeffdingTreeClassifier, SplitEvent, hoeffding_bound

MODEL_FAMILIES = {
    "gnb": GaussianNaiveBayes,
    "htc": HoeffdingTreeClassifier,
    "hatc": HoeffdingAdaptiveTreeClassifier,
    "arfc": AdaptiveRandomForestClassifier,
}

__all__ = [
    "Adwin",
    "AdaptiveRandomForestClassifier",
    "Classifier",
    "DRIFT",
    "GaussianNaiveBayes",
    "HoeffdingAdaptiveTreeClassifier",
    "HoeffdingTreeClassifier",
    "MODEL_FAMILIES",
    "STABLE",
    "SplitEvent",
    "WARNING",
    "hoeffding_bound",
    "load_checkpoint",
    "save_checkpoint",
]
