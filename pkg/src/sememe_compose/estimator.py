"""scikit-learn style estimator wrapping the composition models, so they can
sit in pipelines next to the rest of the ecosystem (get_params/set_params,
clone, fit/transform/predict)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .compose import compose_entry
from .kb import KbDataset
from .metrics import make_record, tune_delta
from .train import Hyperparams, predict_sememes, train


class SememeComposer(BaseEstimator):
    """Composes MWE embeddings from constituent words and their sememes.

    fit() trains the chosen composition model with per-example SGD on the
    dataset's training split; transform() returns composed embeddings for MWE
    tokens; predict_scores()/predict() expose the tied sememe classifier.

    Parameters
    ----------
    model : one of add, mul, scas_s, scas, scmsa, scas_r, scmsa_r
    task : "similarity" (regress onto reference embeddings) or "sememe"
        (multi-label sememe prediction)
    rule_mode : "full" or "lowrank", for the rule-aware kinds
    delta : sememe decision threshold; None tunes it on the validation split
        after fitting (sememe task only)
    """

    def __init__(self, model="scas", task="similarity", rule_mode="lowrank",
                 rank=5, lam=1e-4, pos_weight=100.0, lr0=None, lr_decay=0.99,
                 epochs=50, batch_size=1, seed=0, delta=None, attention_tied=True):
        self.model = model
        self.task = task
        self.rule_mode = rule_mode
        self.rank = rank
        self.lam = lam
        self.pos_weight = pos_weight
        self.lr0 = lr0
        self.lr_decay = lr_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.delta = delta
        self.attention_tied = attention_tied

    def fit(self, dataset: KbDataset, word_vectors=None, sememe_vectors=None,
            reference_vectors=None):
        """Train on dataset's `train` split; returns self.

        word_vectors and sememe_vectors are EmbeddingTable resources;
        reference_vectors supplies the regression targets for the similarity
        task (lookup by MWE token).
        """
        if word_vectors is None or sememe_vectors is None:
            raise ValueError("fit requires word_vectors and sememe_vectors tables")
        hyper = Hyperparams(dim=word_vectors.dim, rank=self.rank, lam=self.lam,
                            pos_weight=self.pos_weight, lr0=self.lr0,
                            lr_decay=self.lr_decay, epochs=self.epochs,
                            batch_size=self.batch_size, seed=self.seed)
        state = train(dataset, self.model, self.task, hyper, word_vectors,
                      sememe_vectors, references=reference_vectors,
                      rule_mode=self.rule_mode, attention_tied=self.attention_tied)
        self.state_ = state
        self.params_ = state.params
        self.dataset_ = dataset
        self.words_ = word_vectors
        self.inventory_ = dataset.inventory
        self.delta_ = self.delta if self.delta is not None else 0.5
        if self.task == "sememe" and self.delta is None:
            valid = [i for i in dataset.split_indices("valid") if dataset.mwes[i].sememes]
            if valid:
                records = [self._record(dataset.mwes[i]) for i in valid]
                self.delta_ = tune_delta(records)
        return self

    def _record(self, mwe):
        p = compose_entry(self.params_, mwe, self.dataset_, self.words_).p
        scores = predict_sememes(p, self.params_.sememes.matrix)
        return make_record(mwe.token, scores, self.inventory_.indices(mwe.sememes))

    def _compose(self, token):
        if token not in self.dataset_.mwe_index:
            raise KeyError(f"token {token!r} is not an MWE in the fitted dataset")
        mwe = self.dataset_.mwes[self.dataset_.mwe_index[token]]
        return compose_entry(self.params_, mwe, self.dataset_, self.words_).p

    def transform(self, tokens) -> np.ndarray:
        """Composed embeddings for MWE tokens, shape (n_tokens, dim)."""
        check_is_fitted(self, "params_")
        return np.array([self._compose(t) for t in tokens])

    def predict_scores(self, tokens) -> np.ndarray:
        """Sememe scores in (0, 1), shape (n_tokens, n_sememes)."""
        check_is_fitted(self, "params_")
        W_s = self.params_.sememes.matrix
        return np.array([predict_sememes(self._compose(t), W_s) for t in tokens])

    def predict(self, tokens) -> list[list[str]]:
        """Sememe identifiers scoring above the decision threshold, per token,
        in descending score order."""
        scores = self.predict_scores(tokens)
        ids = self.inventory_.ids
        out = []
        for row in scores:
            chosen = np.flatnonzero(row > self.delta_)
            chosen = chosen[np.argsort(-row[chosen], kind="stable")]
            out.append([ids[int(i)] for i in chosen])
        return out
