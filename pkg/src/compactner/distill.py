"""Training loops: the supervised recipe and its teacher-guided variant.

The objective is a weighted sum of two terms. The task term is
cross-entropy against gold tags for labeled sentences and against the
teacher's argmax tags for unlabeled ones (under the CRF head, negative
log-likelihood of those tag paths). The distillation term is the KL
divergence between the student's and the teacher's temperature-softened
token distributions, applied wherever teacher scores exist. Zero-weight
terms are skipped outright, never computed and multiplied by zero, so a
run with distill_weight=0 and no unlabeled text reproduces the plain
supervised loop bit for bit.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Rng, Tensor, derive_seed
from .crf import crf_nll
from .errors import AlignmentError, ContractError, CoverageError, ParameterError
from .evaluate import evaluate_model
from .model import CRF, ModelBundle, encode_batch, forward, init_params
from .optim import AdamState, adam_step

STUDENT_FIRST = "student-first"
TEACHER_FIRST = "teacher-first"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 0.001
    seed: int = 0
    temperature: float = 2.0
    task_weight: float = 1.0
    distill_weight: float = 1.0
    scale_by_t2: bool = True
    kl_direction: str = STUDENT_FIRST
    # 0 draws batches from one shuffled labeled+unlabeled pool; a positive
    # value pins that many labeled sentences per batch, cycling the labeled
    # set while the unlabeled set is swept once per epoch.
    labeled_per_batch: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ParameterError("lr must be positive")
        if self.temperature <= 0:
            raise ParameterError("temperature must be positive")
        if self.task_weight < 0 or self.distill_weight < 0:
            raise ParameterError("loss weights must be non-negative")
        if self.task_weight == 0 and self.distill_weight == 0:
            raise ParameterError("at least one loss weight must be positive")
        if self.kl_direction not in (STUDENT_FIRST, TEACHER_FIRST):
            raise ParameterError(
                f"kl_direction must be {STUDENT_FIRST!r} or {TEACHER_FIRST!r}")
        if not 0 <= self.labeled_per_batch < self.batch_size:
            raise ParameterError("labeled_per_batch must be in [0, batch_size)")


@dataclass
class LossBreakdown:
    combined: float
    task_term: float
    distill_term: float
    token_count: int
    labeled_ids: list = field(default_factory=list)
    unlabeled_ids: list = field(default_factory=list)


def softmax_np(x, temperature=1.0, axis=-1):
    """Plain-array softened softmax, for constants such as teacher rows."""
    z = np.asarray(x) / temperature
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def pseudo_labels(store, sentence):
    """The teacher's argmax tag ids for one sentence (ties to lower index)."""
    rows = store.get(sentence.id)
    if rows.shape[0] != len(sentence):
        raise AlignmentError(
            f"sentence {sentence.id}: {len(sentence)} tokens but "
            f"{rows.shape[0]} teacher rows")
    return rows.argmax(axis=1)


def batch_loss(params, config, vocab, tagset, sentences, labeled_ids, store,
               cfg, train=False, rng=None):
    """Combined loss over one batch; returns (scalar tensor, breakdown).

    ``labeled_ids`` decides which sentences contribute gold tags to the
    task term; the rest use pseudo labels from ``store``.
    """
    batch = encode_batch(sentences, vocab, config)
    em = forward(params, config, batch, train=train, rng=rng)
    b, lmax = batch.mask.shape
    k = config.n_tags
    flat_logits = ad.reshape(em.logits, (b * lmax, k))
    flat_mask = batch.mask.reshape(-1)

    targets = np.zeros((b, lmax), dtype=np.int64)
    seen_labeled, seen_unlabeled = [], []
    for i, sent in enumerate(sentences):
        if sent.id in labeled_ids:
            if sent.gold_tags is None:
                raise ContractError(
                    f"sentence {sent.id} is marked labeled but carries no gold tags")
            ids = [tagset.id_of(t) for t in sent.gold_tags]
            seen_labeled.append(sent.id)
        else:
            ids = pseudo_labels(store, sent)
            seen_unlabeled.append(sent.id)
        targets[i, :len(sent)] = ids

    terms = []
    task_val = distill_val = 0.0
    if cfg.task_weight != 0.0:
        if config.classifier == CRF:
            per_sentence = []
            for i, sent in enumerate(sentences):
                emissions = ad.slice2d(flat_logits, i * lmax, i * lmax + len(sent), 0, k)
                per_sentence.append(crf_nll(emissions, params.crf_trans,
                                            targets[i, :len(sent)]))
            task = ad.scale(ad.add_n(per_sentence), 1.0 / len(sentences))
        else:
            task = ad.cross_entropy(flat_logits, targets.reshape(-1), flat_mask)
        task_val = float(task.data)
        terms.append(task if cfg.task_weight == 1.0 else ad.scale(task, cfg.task_weight))

    if cfg.distill_weight != 0.0:
        teacher = np.zeros((b, lmax, k), dtype=flat_logits.data.dtype)
        for i, sent in enumerate(sentences):
            rows = store.get(sent.id)
            if rows.shape[0] != len(sent):
                raise AlignmentError(
                    f"sentence {sent.id}: {len(sent)} tokens but "
                    f"{rows.shape[0]} teacher rows")
            teacher[i, :len(sent)] = rows
        t = cfg.temperature
        student_probs = ad.softmax_T(flat_logits, t)
        teacher_probs = Tensor(softmax_np(teacher.reshape(b * lmax, k), t),
                               requires_grad=False)
        if cfg.kl_direction == STUDENT_FIRST:
            kl = ad.kl_divergence(student_probs, teacher_probs, flat_mask)
        else:
            kl = ad.kl_divergence(teacher_probs, student_probs, flat_mask)
        if cfg.scale_by_t2:
            kl = ad.scale(kl, t * t)
        distill_val = float(kl.data)
        terms.append(kl if cfg.distill_weight == 1.0 else ad.scale(kl, cfg.distill_weight))

    loss = terms[0] if len(terms) == 1 else ad.add_n(terms)
    breakdown = LossBreakdown(float(loss.data), task_val, distill_val,
                              int(flat_mask.sum()), seen_labeled, seen_unlabeled)
    return loss, breakdown


@dataclass
class TrainReport:
    history: list
    best_epoch: int
    best_dev_f1: float
    param_count: int
    labeled_count: int
    unlabeled_count: int
    seconds: float

    def to_dict(self):
        return {
            "history": self.history,
            "best_epoch": self.best_epoch,
            "best_dev_f1": self.best_dev_f1,
            "param_count": self.param_count,
            "labeled_count": self.labeled_count,
            "unlabeled_count": self.unlabeled_count,
            "seconds": self.seconds,
        }


def _check_coverage(store, sentences, what):
    missing = store.missing([s.id for s in sentences])
    if missing:
        shown = ", ".join(str(i) for i in missing[:20])
        more = "" if len(missing) <= 20 else f" (+{len(missing) - 20} more)"
        raise CoverageError(
            f"teacher scores missing for {len(missing)} {what} sentence ids: {shown}{more}")


def _epoch_batches(labeled, unlabeled, cfg, epoch):
    """Batch plan for one epoch, fixed by (seed, epoch).

    Default: one pass over the shuffled labeled+unlabeled pool. With
    labeled_per_batch set and unlabeled text present: one pass over the
    shuffled unlabeled set, each batch topped up with that many labeled
    sentences, reshuffling the labeled set whenever it runs out.
    """
    rng = Rng(derive_seed(cfg.seed, "shuffle", epoch))
    if not (cfg.labeled_per_batch and unlabeled):
        pool = list(labeled) + list(unlabeled)
        perm = rng.permutation(len(pool))
        return [[pool[j] for j in perm[start:start + cfg.batch_size]]
                for start in range(0, len(pool), cfg.batch_size)]
    per_unlabeled = cfg.batch_size - cfg.labeled_per_batch
    unl_order = rng.permutation(len(unlabeled))
    lab_order = rng.permutation(len(labeled))
    li = 0
    batches = []
    for start in range(0, len(unl_order), per_unlabeled):
        chunk = [unlabeled[j] for j in unl_order[start:start + per_unlabeled]]
        for _ in range(cfg.labeled_per_batch):
            if li == len(lab_order):
                lab_order = rng.permutation(len(labeled))
                li = 0
            chunk.append(labeled[lab_order[li]])
            li += 1
        batches.append(chunk)
    return batches


def _train_loop(params, config, vocab, tagset, labeled, unlabeled, dev, store, cfg):
    from .model import count_params

    t0 = time.perf_counter()
    labeled_ids = {s.id for s in labeled}
    bundle = ModelBundle(params, config, vocab, tagset)
    opt = AdamState(params.named(), lr=cfg.lr)

    history = []
    best_f1 = -1.0
    best_epoch = 0
    best_arrays = None
    for epoch in range(1, cfg.epochs + 1):
        e0 = time.perf_counter()
        drop_rng = Rng(derive_seed(cfg.seed, "dropout", epoch))
        sums = np.zeros(3)
        n_batches = 0
        for chunk in _epoch_batches(labeled, unlabeled, cfg, epoch):
            params.zero_grad()
            loss, br = batch_loss(params, config, vocab, tagset, chunk,
                                  labeled_ids, store, cfg, train=True, rng=drop_rng)
            loss.backward()
            adam_step(params.named(), opt)
            sums += (br.combined, br.task_term, br.distill_term)
            n_batches += 1
        means = sums / max(n_batches, 1)
        entry = {"epoch": epoch, "loss": float(means[0]), "task": float(means[1]),
                 "distill": float(means[2]), "dev_f1": None,
                 "seconds": time.perf_counter() - e0}
        if dev:
            f1 = evaluate_model(bundle, dev).f1
            entry["dev_f1"] = f1
            if f1 > best_f1:
                best_f1, best_epoch = f1, epoch
                best_arrays = {n: t.data.copy() for n, t in params.named().items()}
        history.append(entry)
    if best_arrays is not None:
        for name, arr in best_arrays.items():
            params.arrays[name].data = arr
    else:
        best_epoch = cfg.epochs
        best_f1 = 0.0
    return bundle, TrainReport(history, best_epoch, best_f1, count_params(params),
                               len(labeled), len(unlabeled),
                               time.perf_counter() - t0)


def train_baseline(labeled, dev, vocab, tagset, config, cfg, pretrained=None):
    """Supervised training on gold tags only. Returns (bundle, report)."""
    if not labeled:
        raise ParameterError("no labeled sentences to train on")
    if cfg.task_weight == 0:
        raise ParameterError("baseline training needs a positive task weight")
    run_cfg = replace(cfg, distill_weight=0.0)
    rng = Rng(derive_seed(cfg.seed, "init"))
    params = init_params(config, rng, pretrained=pretrained)
    return _train_loop(params, config, vocab, tagset, labeled, [], dev, None, run_cfg)


def train_distilled(labeled, unlabeled, dev, store, vocab, tagset, config, cfg,
                    pretrained=None):
    """Teacher-guided training over labeled plus unlabeled sentences.

    The teacher store must cover every unlabeled sentence (pseudo labels)
    and, when the distillation weight is nonzero, every training sentence.
    Returns (bundle, report).
    """
    if not labeled:
        raise ParameterError("no labeled sentences to train on")
    if store is None:
        raise ParameterError("distilled training needs a teacher-logits store")
    store.check_tagset(tagset)
    _check_coverage(store, unlabeled, "unlabeled")
    if cfg.distill_weight != 0.0:
        _check_coverage(store, labeled, "labeled")
    rng = Rng(derive_seed(cfg.seed, "init"))
    params = init_params(config, rng, pretrained=pretrained)
    return _train_loop(params, config, vocab, tagset, labeled, unlabeled, dev, store, cfg)
