"""Concrete classifiers for entity detection and relation prediction.

Neural kinds are assembled from kbqa.neural layers:

  BILSTM2     two bidirectional LSTM layers (entity-detection baseline)
  BIGRU2      two bidirectional GRU layers (relation-prediction baseline)
  NT_BILSTM1  one bidirectional LSTM layer, usually fed noun-filtered input
  CONV_GRU    conv(filters, width) -> dropout -> one bidirectional GRU

Non-neural kinds: NB_MULTINOMIAL (bag-of-words Naive Bayes, relation
task), MAJORITY (most common training relation), NAIVE_ALL_ENTITY (tags
every token as entity).

Entity models emit per-token binary tags; relation models emit one
class over the label space.  An all-zero tag prediction falls back to
all-ones so the pipeline always has an entity phrase.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import AnnotatedQuestion, EmbeddingTable
from .neural.config import TrainConfig
from .neural.layers import (
    BidirectionalLayer,
    Conv1dLayer,
    DenseLayer,
    DropoutLayer,
    EmbeddingLayer,
)
from .neural.optim import Optimizer
from .neural.ops import softmax
from .seeding import rng_for
from .textproc import noun_chunk_filter, pos_tag

__all__ = [
    "ArchitectureDescriptor",
    "EpochStats",
    "MajorityModel",
    "MultinomialNBModel",
    "NaiveAllEntityModel",
    "NeuralSequenceModel",
    "RelationLabelSpace",
    "TagPrediction",
    "build_model",
    "default_descriptor",
    "entity_phrase",
    "nb_predict",
    "nb_train",
    "predict_relation",
    "predict_tags",
    "train",
]

NEURAL_KINDS = ("BILSTM2", "NT_BILSTM1", "BIGRU2", "CONV_GRU")
BASELINE_KINDS = ("NB_MULTINOMIAL", "MAJORITY", "NAIVE_ALL_ENTITY")
PAD_ID = 0
UNK_ID = 1

# (hidden sizes, dropout rates) per neural kind; BIGRU2/BILSTM2 first-layer
# sizes follow the tuned first-to-second ratios 3.5 and 3.1 over a
# 400-neuron second layer.
_NEURAL_DEFAULTS = {
    "BILSTM2": ((1240, 400), (0.1, 0.1)),
    "BIGRU2": ((1400, 400), (0.1, 0.1)),
    "NT_BILSTM1": ((400,), (0.1,)),
    "CONV_GRU": ((400,), (0.2, 0.1)),
}


@dataclass(frozen=True)
class ArchitectureDescriptor:
    task: str  # ENTITY or RELATION
    kind: str
    hidden_sizes: tuple[int, ...] = ()
    dropout_rates: tuple[float, ...] = ()
    conv_filters: int = 0
    conv_width: int = 0
    noun_filter: bool = False

    def __post_init__(self):
        if self.task not in ("ENTITY", "RELATION"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.kind not in NEURAL_KINDS + BASELINE_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError(f"hidden sizes must be >= 1, got {self.hidden_sizes}")
        if self.kind == "CONV_GRU" and (self.conv_filters < 1 or self.conv_width < 1):
            raise ValueError("CONV_GRU needs conv_filters and conv_width >= 1")


def default_descriptor(
    task: str,
    kind: str,
    desk_scale: int = 1,
    noun_filter: bool | None = None,
    hidden_sizes: tuple[int, ...] | None = None,
    dropout_rates: tuple[float, ...] | None = None,
    conv_filters: int = 50,
    conv_width: int = 2,
) -> ArchitectureDescriptor:
    """Descriptor with per-kind defaults; desk_scale divides hidden sizes
    (preserving their ratios) so full architectures shrink to test scale."""
    if kind in BASELINE_KINDS:
        return ArchitectureDescriptor(task, kind, noun_filter=bool(noun_filter))
    if kind not in _NEURAL_DEFAULTS:
        raise ValueError(f"unknown model kind {kind!r}")
    hidden, dropout = _NEURAL_DEFAULTS[kind]
    if hidden_sizes is not None:
        hidden = tuple(hidden_sizes)
    if desk_scale != 1:
        hidden = tuple(max(1, round(h / desk_scale)) for h in hidden)
    if dropout_rates is not None:
        dropout = tuple(dropout_rates)
    if noun_filter is None:
        noun_filter = kind == "NT_BILSTM1"
    if kind != "CONV_GRU":
        conv_filters = 0
        conv_width = 0
    return ArchitectureDescriptor(
        task, kind, hidden, dropout, conv_filters, conv_width, bool(noun_filter)
    )


@dataclass(frozen=True)
class RelationLabelSpace:
    """Relation labels in first-occurrence training order."""

    labels: tuple[str, ...]

    @classmethod
    def from_questions(cls, questions) -> "RelationLabelSpace":
        seen: dict[str, None] = {}
        for q in questions:
            seen.setdefault(q.gold_relation, None)
        if not seen:
            raise ValueError("cannot build a label space from no questions")
        return cls(tuple(seen))

    def index(self, label: str) -> int | None:
        try:
            return self.labels.index(label)
        except ValueError:
            return None

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class TagPrediction:
    """tags align to the model's input tokens; mapped_tags to the original
    question tokens (zeros at filtered-out positions)."""

    tags: tuple[int, ...]
    mapped_tags: tuple[int, ...]
    degraded: bool


class NeuralSequenceModel:
    """A trainable tagger or classifier built from the minimal layer stack."""

    def __init__(
        self,
        descriptor: ArchitectureDescriptor,
        vocab: dict[str, int],
        embedding_matrix: np.ndarray,
        label_space: RelationLabelSpace | None,
        max_len: int,
        seed: int,
        freeze_embeddings: bool = True,
        init_scale: float = 0.08,
    ):
        if descriptor.kind not in NEURAL_KINDS:
            raise ValueError(f"{descriptor.kind} is not a neural kind")
        if descriptor.task == "RELATION" and label_space is None:
            raise ValueError("relation models need a label space")
        self.descriptor = descriptor
        self.vocab = vocab
        self.label_space = label_space
        self.max_len = max_len
        self.seed = seed
        self.l1_activity = 0.0
        self._dropout_rng = rng_for(seed, "dropout")

        rng = rng_for(seed, "init")
        dim = embedding_matrix.shape[1]
        self.embedding = EmbeddingLayer(embedding_matrix, trainable=not freeze_embeddings)
        self.drops: list[DropoutLayer] = []
        rates = list(descriptor.dropout_rates)

        self.conv = None
        feed_dim = dim
        if descriptor.kind == "CONV_GRU":
            self.conv = Conv1dLayer(
                descriptor.conv_filters, descriptor.conv_width, dim, rng, init_scale
            )
            self.drops.append(DropoutLayer(rates.pop(0) if rates else 0.0))
            feed_dim = descriptor.conv_filters

        cell = "lstm" if descriptor.kind in ("BILSTM2", "NT_BILSTM1") else "gru"
        self.recurrents: list[BidirectionalLayer] = []
        for hidden in descriptor.hidden_sizes:
            layer = BidirectionalLayer(cell, feed_dim, hidden, rng, init_scale)
            self.recurrents.append(layer)
            self.drops.append(DropoutLayer(rates.pop(0) if rates else 0.0))
            feed_dim = layer.output_dim

        n_classes = 2 if descriptor.task == "ENTITY" else len(label_space)
        self.dense = DenseLayer(feed_dim, n_classes, rng, init_scale)

    # -- parameter plumbing ------------------------------------------------

    def _layer_items(self, grads: bool):
        if self.embedding.trainable:
            source = self.embedding.grads if grads else self.embedding.params
            yield "embedding.E", source["E"]
        if self.conv is not None:
            source = self.conv.grads if grads else self.conv.params
            for name, arr in source.items():
                yield f"conv.{name}", arr
        for i, layer in enumerate(self.recurrents):
            for name, arr in (layer.grad_items() if grads else layer.param_items()):
                yield f"rec{i}.{name}", arr
        source = self.dense.grads if grads else self.dense.params
        for name, arr in source.items():
            yield f"dense.{name}", arr

    def trainable_params(self) -> dict[str, np.ndarray]:
        return dict(self._layer_items(grads=False))

    def trainable_param_count(self) -> int:
        return sum(arr.size for arr in self.trainable_params().values())

    def all_params(self) -> dict[str, np.ndarray]:
        out = {"embedding.E": self.embedding.params["E"]}
        out.update(
            (n, a) for n, a in self._layer_items(grads=False) if n != "embedding.E"
        )
        return out

    def _zero_grads(self):
        self.embedding.zero_grads()
        if self.conv is not None:
            self.conv.zero_grads()
        for layer in self.recurrents:
            layer.zero_grads()
        self.dense.zero_grads()

    # -- encoding ----------------------------------------------------------

    def encode(self, token_seqs) -> tuple[np.ndarray, np.ndarray]:
        """Pad/truncate token sequences to ids and mask arrays."""
        clipped = [seq[: self.max_len] for seq in token_seqs]
        t_len = max(1, max((len(s) for s in clipped), default=1))
        ids = np.zeros((len(clipped), t_len), dtype=np.int64)
        mask = np.zeros((len(clipped), t_len))
        for b, seq in enumerate(clipped):
            for t, token in enumerate(seq):
                ids[b, t] = self.vocab.get(token, UNK_ID)
                mask[b, t] = 1.0
        return ids, mask

    # -- forward/backward --------------------------------------------------

    def _forward(self, ids, mask, training):
        rng = self._dropout_rng
        x = self.embedding.forward(ids)
        drop_i = 0
        if self.conv is not None:
            x = self.conv.forward(x)
            x = self.drops[drop_i].forward(x, training, rng)
            drop_i += 1
        seq_outs = []
        for li, layer in enumerate(self.recurrents):
            out = layer.forward(x, mask)
            seq_outs.append(out)
            if li < len(self.recurrents) - 1:
                x = self.drops[drop_i + li].forward(out, training, rng)
        last_drop = self.drops[drop_i + len(self.recurrents) - 1]
        last_out = seq_outs[-1]
        if self.descriptor.task == "ENTITY":
            head_in = last_drop.forward(last_out, training, rng)
            logits = self.dense.forward(head_in)
        else:
            final = BidirectionalLayer.final_state(
                last_out, self.recurrents[-1].hidden_dim
            )
            head_in = last_drop.forward(final, training, rng)
            logits = self.dense.forward(head_in)
        return seq_outs, last_drop, logits

    def _activity_terms(self, seq_outs, logits, mask):
        """Designated activations: recurrent outputs and dense logits,
        masked positions excluded."""
        mask3 = mask[:, :, None]
        terms = [(out, mask3) for out in seq_outs]
        if self.descriptor.task == "ENTITY":
            terms.append((logits, mask3))
        else:
            terms.append((logits, None))
        return terms

    def loss_and_grads(self, batch, training: bool = False):
        """Mean cross-entropy plus L1 activity penalty; exact gradients."""
        ids, mask, targets = batch
        self._zero_grads()
        seq_outs, last_drop, logits = self._forward(ids, mask, training)
        probs = softmax(logits)
        l1 = self.l1_activity

        terms = self._activity_terms(seq_outs, logits, mask)
        act_count = 0
        act_total = 0.0
        if l1:
            for act, m in terms:
                if m is None:
                    act_total += np.abs(act).sum()
                    act_count += act.size
                else:
                    act_total += (np.abs(act) * m).sum()
                    act_count += int(m.sum()) * act.shape[-1]

        if self.descriptor.task == "ENTITY":
            n_real = mask.sum()
            picked = np.take_along_axis(probs, targets[:, :, None], axis=2)[:, :, 0]
            ce = -(np.log(np.maximum(picked, 1e-300)) * mask).sum() / n_real
            d_logits = probs.copy()
            np.put_along_axis(
                d_logits,
                targets[:, :, None],
                np.take_along_axis(d_logits, targets[:, :, None], axis=2) - 1.0,
                axis=2,
            )
            d_logits *= mask[:, :, None] / n_real
            if l1:
                d_logits += l1 * np.sign(logits) * mask[:, :, None] / act_count
        else:
            n = ids.shape[0]
            picked = probs[np.arange(n), targets]
            ce = -np.log(np.maximum(picked, 1e-300)).sum() / n
            d_logits = probs.copy()
            d_logits[np.arange(n), targets] -= 1.0
            d_logits /= n
            if l1:
                d_logits += l1 * np.sign(logits) / act_count

        total = float(ce + (l1 * act_total / act_count if l1 else 0.0))

        d_head_in = self.dense.backward(d_logits)
        if self.descriptor.task == "ENTITY":
            d = last_drop.backward(d_head_in)
        else:
            d_final = last_drop.backward(d_head_in)
            d = BidirectionalLayer.inject_final_grad(
                d_final, seq_outs[-1].shape, self.recurrents[-1].hidden_dim
            )
        conv_sites = 1 if self.conv is not None else 0
        for li in range(len(self.recurrents) - 1, -1, -1):
            if l1:
                d = d + l1 * np.sign(seq_outs[li]) * mask[:, :, None] / act_count
            d = self.recurrents[li].backward(d)
            if li > 0:
                d = self.drops[conv_sites + li - 1].backward(d)
        if self.conv is not None:
            d = self.drops[0].backward(d)
            d = self.conv.backward(d)
        self.embedding.backward(d)

        return total, dict(self._layer_items(grads=True))

    def loss(self, batch) -> float:
        ids, mask, targets = batch
        seq_outs, _, logits = self._forward(ids, mask, training=False)
        probs = softmax(logits)
        l1 = self.l1_activity
        penalty = 0.0
        if l1:
            total = 0.0
            count = 0
            for act, m in self._activity_terms(seq_outs, logits, mask):
                if m is None:
                    total += np.abs(act).sum()
                    count += act.size
                else:
                    total += (np.abs(act) * m).sum()
                    count += int(m.sum()) * act.shape[-1]
            penalty = l1 * total / count
        if self.descriptor.task == "ENTITY":
            picked = np.take_along_axis(probs, targets[:, :, None], axis=2)[:, :, 0]
            ce = -(np.log(np.maximum(picked, 1e-300)) * mask).sum() / mask.sum()
        else:
            n = ids.shape[0]
            ce = -np.log(
                np.maximum(probs[np.arange(n), targets], 1e-300)
            ).sum() / n
        return float(ce + penalty)

    # -- prediction ---------------------------------------------------------

    def predict_probs(self, token_seqs) -> np.ndarray:
        ids, mask = self.encode(token_seqs)
        _, _, logits = self._forward(ids, mask, training=False)
        return softmax(logits)

    def predict_token_tags(self, tokens) -> list[int]:
        """Argmax tags for one token sequence; truncated tail positions get 0."""
        probs = self.predict_probs([list(tokens)])[0]
        seen = min(len(tokens), self.max_len)
        tags = list(np.argmax(probs[:seen], axis=1).astype(int))
        return tags + [0] * (len(tokens) - seen)

    def predict_label(self, tokens) -> tuple[str, float]:
        probs = self.predict_probs([list(tokens)])[0]
        best = int(np.argmax(probs))
        return self.label_space.labels[best], float(probs[best])


class MajorityModel:
    """Predicts the most frequent training relation, with its frequency."""

    def __init__(self, descriptor: ArchitectureDescriptor, label_space: RelationLabelSpace):
        self.descriptor = descriptor
        self.label_space = label_space
        self.counts = np.zeros(len(label_space))

    def fit(self, questions) -> None:
        for q in questions:
            idx = self.label_space.index(q.gold_relation)
            if idx is None:
                raise ValueError(f"label {q.gold_relation!r} outside label space")
            self.counts[idx] += 1

    def predict_label(self, tokens) -> tuple[str, float]:
        if self.counts.sum() == 0:
            raise ValueError("majority model was never fit")
        best = int(np.argmax(self.counts))
        return self.label_space.labels[best], float(self.counts[best] / self.counts.sum())


class MultinomialNBModel:
    """Bag-of-words multinomial Naive Bayes with add-alpha smoothing."""

    def __init__(
        self,
        descriptor: ArchitectureDescriptor,
        label_space: RelationLabelSpace,
        alpha: float = 1.0,
    ):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.descriptor = descriptor
        self.label_space = label_space
        self.alpha = alpha
        self.vocab: dict[str, int] = {}
        self.class_counts = np.zeros(len(label_space))
        self.token_counts = np.zeros((len(label_space), 0))
        self.total_tokens = np.zeros(len(label_space))

    def fit(self, questions) -> None:
        if not questions:
            raise ValueError("cannot fit Naive Bayes on an empty dataset")
        for q in questions:
            for token in q.tokens:
                self.vocab.setdefault(token, len(self.vocab))
        self.token_counts = np.zeros((len(self.label_space), len(self.vocab)))
        for q in questions:
            idx = self.label_space.index(q.gold_relation)
            if idx is None:
                raise ValueError(f"label {q.gold_relation!r} outside label space")
            self.class_counts[idx] += 1
            for token in q.tokens:
                self.token_counts[idx, self.vocab[token]] += 1
                self.total_tokens[idx] += 1

    def log_scores(self, tokens) -> np.ndarray:
        if self.class_counts.sum() == 0:
            raise ValueError("Naive Bayes model was never fit")
        v_size = len(self.vocab)
        scores = np.log(self.class_counts / self.class_counts.sum())
        denom = self.total_tokens + self.alpha * v_size
        for token in tokens:
            col = self.vocab.get(token)
            counts = self.token_counts[:, col] if col is not None else 0.0
            scores = scores + np.log((counts + self.alpha) / denom)
        return scores

    def predict_label(self, tokens) -> tuple[str, float]:
        scores = self.log_scores(tokens)
        best = int(np.argmax(scores))
        posterior = softmax(scores)
        return self.label_space.labels[best], float(posterior[best])


class NaiveAllEntityModel:
    """Tags every token as part of the entity."""

    def __init__(self, descriptor: ArchitectureDescriptor):
        self.descriptor = descriptor

    def predict_token_tags(self, tokens) -> list[int]:
        return [1] * len(tokens)


def build_model(
    descriptor: ArchitectureDescriptor,
    embeddings: EmbeddingTable | None,
    label_space: RelationLabelSpace | None,
    vocab_tokens=(),
    max_len: int = 36,
    seed: int = 0,
    freeze_embeddings: bool = True,
    alpha: float = 1.0,
):
    """Construct any model kind; neural kinds embed vocab_tokens through
    the embedding table (row 0 pad, row 1 the OOV vector)."""
    if descriptor.kind == "MAJORITY":
        return MajorityModel(descriptor, label_space)
    if descriptor.kind == "NB_MULTINOMIAL":
        return MultinomialNBModel(descriptor, label_space, alpha)
    if descriptor.kind == "NAIVE_ALL_ENTITY":
        return NaiveAllEntityModel(descriptor)

    if embeddings is None:
        raise ValueError("neural models need an embedding table")
    vocab: dict[str, int] = {}
    rows = [np.zeros(embeddings.dimension), np.asarray(embeddings.unk_vector, dtype=np.float64)]
    for token in vocab_tokens:
        if token not in vocab:
            vocab[token] = len(rows)
            rows.append(np.asarray(embeddings.lookup(token), dtype=np.float64))
    matrix = np.stack(rows, axis=0)
    return NeuralSequenceModel(
        descriptor, vocab, matrix, label_space, max_len, seed, freeze_embeddings
    )


# -- shared prediction helpers ----------------------------------------------


def predict_tags(model, tokens, lexicon=None, pos_tags=None) -> TagPrediction:
    """Tag a question, applying noun-cluster filtering when the model's
    descriptor asks for it and falling back to all-ones on an all-zero
    prediction."""
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot tag an empty token sequence")
    degraded = False
    if model.descriptor.noun_filter:
        tag_seq = list(pos_tags) if pos_tags is not None else pos_tag(tokens, lexicon)
        filtered = noun_chunk_filter(tokens, tag_seq)
        input_tokens = list(filtered.kept_tokens)
        index_map = list(filtered.index_map)
        degraded = filtered.degraded
    else:
        input_tokens = tokens
        index_map = list(range(len(tokens)))
    raw = list(model.predict_token_tags(input_tokens))
    if all(t == 0 for t in raw):
        raw = [1] * len(input_tokens)
        degraded = True
    mapped = [0] * len(tokens)
    for pos, src in enumerate(index_map):
        mapped[src] = raw[pos]
    return TagPrediction(tuple(raw), tuple(mapped), degraded)


def entity_phrase(tags, tokens) -> list[str]:
    """Tokens of the longest run of 1s (earliest run on ties)."""
    if len(tags) != len(tokens):
        raise ValueError(f"tags and tokens must align, got {len(tags)} vs {len(tokens)}")
    best_start, best_len = -1, 0
    run_start = None
    for i, tag in enumerate(list(tags) + [0]):
        if tag == 1 and run_start is None:
            run_start = i
        elif tag != 1 and run_start is not None:
            length = i - run_start
            if length > best_len:
                best_start, best_len = run_start, length
            run_start = None
    if best_len == 0:
        raise ValueError("no entity-tagged tokens to build a phrase from")
    return list(tokens[best_start : best_start + best_len])


def predict_relation(model, tokens, lexicon=None) -> tuple[str, float]:
    """Most likely relation label and its probability."""
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot classify an empty token sequence")
    if getattr(model.descriptor, "noun_filter", False):
        filtered = noun_chunk_filter(tokens, pos_tag(tokens, lexicon))
        tokens = list(filtered.kept_tokens)
    return model.predict_label(tokens)


def nb_train(dataset, label_space: RelationLabelSpace, alpha: float = 1.0) -> MultinomialNBModel:
    desc = ArchitectureDescriptor("RELATION", "NB_MULTINOMIAL")
    model = MultinomialNBModel(desc, label_space, alpha)
    model.fit(dataset)
    return model


def nb_predict(model: MultinomialNBModel, tokens) -> tuple[str, float]:
    scores = model.log_scores(tokens)
    best = int(np.argmax(scores))
    return model.label_space.labels[best], float(scores[best])


# -- training -----------------------------------------------------------------


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    valid_accuracy: float  # nan when there is no validation set


def _entity_example(model, question: AnnotatedQuestion, lexicon):
    """Model-input tokens and aligned gold tags for one question."""
    if model.descriptor.noun_filter:
        filtered = noun_chunk_filter(list(question.tokens), pos_tag(list(question.tokens), lexicon))
        tokens = list(filtered.kept_tokens)
        tags = [question.gold_tags[i] for i in filtered.index_map]
    else:
        tokens = list(question.tokens)
        tags = list(question.gold_tags)
    return tokens, tags


def _encode_entity_batch(model, examples):
    token_seqs = [tokens for tokens, _ in examples]
    ids, mask = model.encode(token_seqs)
    targets = np.zeros_like(ids)
    for b, (_, tags) in enumerate(examples):
        for t, tag in enumerate(tags[: ids.shape[1]]):
            targets[b, t] = tag
    return ids, mask, targets


def _valid_accuracy(model, questions, lexicon) -> float:
    if not questions:
        return float("nan")
    if model.descriptor.task == "RELATION":
        correct = 0
        for q in questions:
            label, _ = predict_relation(model, list(q.tokens), lexicon)
            correct += int(label == q.gold_relation)
        return correct / len(questions)
    correct = 0
    for q in questions:
        pred = predict_tags(model, list(q.tokens), lexicon)
        correct += int(pred.mapped_tags == q.gold_tags)
    return correct / len(questions)


def train(
    model,
    train_set,
    config: TrainConfig,
    optimizer: Optimizer | None = None,
    valid_set=(),
    lexicon=None,
) -> list[EpochStats]:
    """Fit a model; neural kinds run seeded minibatch epochs and keep the
    best-validation parameters, baseline kinds just count."""
    train_set = list(train_set)
    if not train_set:
        raise ValueError("training set is empty")
    if isinstance(model, (MajorityModel, MultinomialNBModel)):
        model.fit(train_set)
        return []
    if isinstance(model, NaiveAllEntityModel):
        return []
    if optimizer is None:
        raise ValueError("neural training needs an optimizer")

    model.max_len = config.max_len
    model.l1_activity = config.l1_activity
    model._dropout_rng = rng_for(config.seed, "dropout")
    if not config.freeze_embeddings:
        model.embedding.trainable = True
    if config.dropout_rates is not None:
        if len(config.dropout_rates) != len(model.drops):
            raise ValueError(
                f"model has {len(model.drops)} dropout sites, config gives "
                f"{len(config.dropout_rates)} rates"
            )
        for drop, rate in zip(model.drops, config.dropout_rates):
            drop.rate = rate

    if model.descriptor.task == "RELATION":
        examples = []
        for q in train_set:
            idx = model.label_space.index(q.gold_relation)
            if idx is None:
                raise ValueError(f"training label {q.gold_relation!r} outside label space")
            tokens = list(q.tokens)
            if model.descriptor.noun_filter:
                tokens = list(
                    noun_chunk_filter(tokens, pos_tag(tokens, lexicon)).kept_tokens
                )
            examples.append((tokens, idx))

        def batch_of(indices):
            seqs = [examples[i][0] for i in indices]
            ids, mask = model.encode(seqs)
            targets = np.array([examples[i][1] for i in indices], dtype=np.int64)
            return ids, mask, targets

    else:
        examples = [_entity_example(model, q, lexicon) for q in train_set]

        def batch_of(indices):
            return _encode_entity_batch(model, [examples[i] for i in indices])

    shuffle_rng = rng_for(config.seed, "shuffle")
    n = len(examples)
    log: list[EpochStats] = []
    best_acc = -1.0
    best_params = None
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            indices = order[start : start + config.batch_size]
            batch = batch_of(indices)
            loss, grads = model.loss_and_grads(batch, training=True)
            optimizer.step(model.trainable_params(), grads)
            total_loss += loss * len(indices)
        val_acc = _valid_accuracy(model, valid_set, lexicon)
        log.append(EpochStats(epoch, total_loss / n, val_acc))
        if valid_set and val_acc > best_acc:
            best_acc = val_acc
            best_params = {k: v.copy() for k, v in model.all_params().items()}
    if best_params is not None:
        for name, arr in model.all_params().items():
            arr[...] = best_params[name]
    return log
