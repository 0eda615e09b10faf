"""Scikit-learn style facade over the training and decoding pipeline.

TransitionTripletExtractor composes with the wider sklearn ecosystem:
constructor arguments are plain scalars stored verbatim (so get_params /
set_params / clone work), fit returns self, and fitted state lives in
trailing-underscore attributes.
"""

from __future__ import annotations

from typing import Sequence

from sklearn.base import BaseEstimator

from .core import PairRelation, Sentence, make_sentence
from .data import Corpus
from .decode import decode_corpus, evaluate
from .scorer import Dims, TokenVectors
from .training import EarlyStop, LossWeights, TrainConfig, train


def as_sentences(X, allow_annotations: bool = True) -> tuple[Sentence, ...]:
    """Normalize estimator input to Sentence values.

    Accepts a Corpus, Sentence values, whitespace-joined strings, or token
    lists; the latter two carry no annotations.
    """
    if isinstance(X, Corpus):
        return tuple(X.sentences)
    sentences = []
    for i, item in enumerate(X):
        if isinstance(item, Sentence):
            sentences.append(item)
        elif isinstance(item, str):
            sentences.append(make_sentence(str(i), item.split(), []))
        elif isinstance(item, (list, tuple)) and all(isinstance(t, str) for t in item):
            sentences.append(make_sentence(str(i), list(item), []))
        else:
            raise TypeError(
                f"X[{i}] must be a Sentence, a string, or a token list, got {type(item)!r}"
            )
    if not allow_annotations:
        sentences = [Sentence(s.id, s.tokens, ()) for s in sentences]
    return tuple(sentences)


def _unique_ids(sentences: Sequence[Sentence]) -> tuple[Sentence, ...]:
    seen = set()
    out = []
    for i, s in enumerate(sentences):
        if s.id in seen:
            s = Sentence(f"{s.id}#{i}", s.tokens, s.triplets)
        seen.add(s.id)
        out.append(s)
    return tuple(out)


class TransitionTripletExtractor(BaseEstimator):
    """Aspect-opinion pair and sentiment-triplet extractor.

    fit(X) learns action and sentiment scoring from annotated sentences;
    predict(X) returns a list of PairRelation lists, one per input sentence.
    """

    def __init__(
        self,
        epochs: int = 60,
        learning_rate: float = 0.01,
        batch_size: int = 4,
        seed: int = 0,
        base_weight: float = 1.0,
        contrastive_weight: float = 0.0,
        token_dim: int = 64,
        action_dim: int = 32,
        distance_dim: int = 16,
        hidden_dim: int = 64,
        mlp_dim: int = 64,
        max_distance: int = 10,
        early_stop_accuracy: float | None = None,
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.base_weight = base_weight
        self.contrastive_weight = contrastive_weight
        self.token_dim = token_dim
        self.action_dim = action_dim
        self.distance_dim = distance_dim
        self.hidden_dim = hidden_dim
        self.mlp_dim = mlp_dim
        self.max_distance = max_distance
        self.early_stop_accuracy = early_stop_accuracy

    def _config(self) -> TrainConfig:
        dims = Dims(
            token=self.token_dim,
            action=self.action_dim,
            distance=self.distance_dim,
            hidden=self.hidden_dim,
            mlp=self.mlp_dim,
            max_distance=self.max_distance,
        )
        early = (
            EarlyStop(action_accuracy=self.early_stop_accuracy, dev_aope_f1=0.0)
            if self.early_stop_accuracy is not None
            else None
        )
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            weights=LossWeights(self.base_weight, self.contrastive_weight),
            dims=dims,
            early_stop=early,
        )

    def fit(self, X, y=None, vectors: TokenVectors | None = None):
        sentences = _unique_ids(as_sentences(X))
        corpus = Corpus("fit", "train", sentences)
        result = train(corpus, self._config(), vectors=vectors)
        self.params_ = result.params
        self.history_ = result.history
        self.vectors_ = vectors
        self.n_features_in_ = len(sentences)
        return self

    def predict(self, X) -> list[list[PairRelation]]:
        self._check_fitted()
        sentences = _unique_ids(as_sentences(X))
        corpus = Corpus("predict", "test", sentences)
        predictions = decode_corpus(corpus, self.params_, self.vectors_)
        return [list(p.relations) for p in predictions]

    def score(self, X, y=None) -> float:
        """Micro pair-extraction F1 against the annotations on X, in [0, 1]."""
        self._check_fitted()
        sentences = _unique_ids(as_sentences(X))
        corpus = Corpus("score", "test", sentences)
        predictions = decode_corpus(corpus, self.params_, self.vectors_)
        return evaluate(predictions, corpus, task="AOPE").f1 / 100.0

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise RuntimeError("this extractor is not fitted; call fit first")
