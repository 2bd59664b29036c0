"""Cohort-level glue between decomposition, featurization and selection."""

from .config import RunConfig
from .decompose import decompose
from .errors import PipelineError
from .featurize import featurize_subject
from .select import FeatureMatrix


def decompose_cohort(cohort, config=RunConfig()):
    """Decompositions in cohort order; errors name the offending subject."""
    out = []
    for s in cohort:
        try:
            out.append(decompose(s.values, window=config.window, num_modes=config.num_modes,
                                 tol=config.tol, max_iter=config.max_iter))
        except PipelineError as exc:
            raise type(exc)(f"subject {s.id!r}: {exc}") from None
    return out


def featurize_cohort(cohort, config=RunConfig(), decompositions=None):
    if decompositions is None:
        decompositions = decompose_cohort(cohort, config)
    vectors = []
    for s, d in zip(cohort, decompositions):
        try:
            vectors.append(featurize_subject(d, config.subseries, id=s.id, label=s.label))
        except PipelineError as exc:
            raise type(exc)(f"subject {s.id!r}: {exc}") from None
    return FeatureMatrix.from_vectors(vectors)
