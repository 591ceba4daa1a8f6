"""The compact tagger: char CNN + word lookup + BiLSTM + Softmax/CRF head."""

import math
from dataclasses import dataclass, asdict, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .crf import viterbi_decode
from .data import PAD_ID, TagSet, Vocab
from .errors import ParameterError

SOFTMAX = "softmax"
CRF = "crf"


@dataclass(frozen=True)
class TaggerConfig:
    n_words: int
    n_chars: int
    n_tags: int
    word_dim: int = 100
    char_dim: int = 30
    char_filters: int = 30
    char_window: int = 3
    lstm_hidden: int = 200
    classifier: str = SOFTMAX
    dropout_rate: float = 0.5

    def __post_init__(self):
        for name in ("n_words", "n_chars", "n_tags", "word_dim", "char_dim",
                     "char_filters", "char_window", "lstm_hidden"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.char_window % 2 != 1:
            raise ParameterError("char_window must be odd")
        if self.classifier not in (SOFTMAX, CRF):
            raise ParameterError(f"classifier must be {SOFTMAX!r} or {CRF!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError("dropout_rate must be in [0, 1)")

    def teacher_sized(self, lstm_hidden=400):
        """Same topology, wider recurrent state: the in-toolkit stand-in for
        a heavyweight teacher."""
        return replace(self, lstm_hidden=lstm_hidden)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class TaggerParams:
    """Named learnable arrays; iteration order is the checkpoint order."""

    FIELDS = ("word_emb", "char_emb", "conv_w", "conv_b",
              "fw_w_ih", "fw_w_hh", "fw_b", "bw_w_ih", "bw_w_hh", "bw_b",
              "out_w", "out_b", "crf_trans")

    def __init__(self, arrays):
        self.arrays = dict(arrays)

    def __getattr__(self, name):
        try:
            return self.arrays[name]
        except KeyError:
            raise AttributeError(name) from None

    def named(self):
        return {name: self.arrays[name] for name in self.FIELDS if name in self.arrays}

    def zero_grad(self):
        for t in self.arrays.values():
            t.zero_grad()

    @property
    def dtype(self):
        return self.arrays["word_emb"].dtype


def _glorot(rng, fan_in, fan_out, shape, dtype):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, shape, dtype=dtype)


def init_params(config, rng, dtype=np.float32, pretrained=None):
    """Seeded initialization; the draw order is fixed so identical seeds
    give identical parameters. Forget-gate biases start at 1."""
    w, cd, f = config.char_window, config.char_dim, config.char_filters
    h, d = config.lstm_hidden, config.word_dim + config.char_filters
    k = config.n_tags

    if pretrained is not None:
        if pretrained.vectors.shape != (config.n_words, config.word_dim):
            raise ParameterError(
                f"pretrained table {pretrained.vectors.shape} vs vocab "
                f"({config.n_words}, {config.word_dim})")
        word_emb = pretrained.vectors.astype(dtype).copy()
    else:
        word_emb = rng.uniform(-math.sqrt(3.0 / config.word_dim),
                               math.sqrt(3.0 / config.word_dim),
                               (config.n_words, config.word_dim), dtype=dtype)
    word_emb[PAD_ID] = 0.0
    char_emb = rng.uniform(-math.sqrt(3.0 / cd), math.sqrt(3.0 / cd),
                           (config.n_chars, cd), dtype=dtype)
    char_emb[PAD_ID] = 0.0

    arrays = {
        "word_emb": word_emb,
        "char_emb": char_emb,
        "conv_w": _glorot(rng, w * cd, f, (w, cd, f), dtype),
        "conv_b": np.zeros(f, dtype=dtype),
    }
    for prefix in ("fw", "bw"):
        arrays[f"{prefix}_w_ih"] = _glorot(rng, d, 4 * h, (d, 4 * h), dtype)
        arrays[f"{prefix}_w_hh"] = _glorot(rng, h, 4 * h, (h, 4 * h), dtype)
        bias = np.zeros(4 * h, dtype=dtype)
        bias[h:2 * h] = 1.0
        arrays[f"{prefix}_b"] = bias
    arrays["out_w"] = _glorot(rng, 2 * h, k, (2 * h, k), dtype)
    arrays["out_b"] = np.zeros(k, dtype=dtype)
    if config.classifier == CRF:
        arrays["crf_trans"] = rng.uniform(-0.1, 0.1, (k + 2, k + 2), dtype=dtype)

    return TaggerParams({name: Tensor(arr, requires_grad=True) for name, arr in arrays.items()})


def count_params(params):
    return sum(t.data.size for t in params.named().values())


@dataclass
class EncodedBatch:
    word_ids: np.ndarray     # [B, L]
    char_ids: np.ndarray     # [B*L, T]
    char_lengths: np.ndarray  # [B*L]
    mask: np.ndarray         # [B, L] bool
    lengths: np.ndarray      # [B]
    sentence_ids: list


def encode_batch(sentences, vocab, config):
    """Index a batch against the vocab, padding words to the batch max and
    each char sequence symmetrically by (window-1)/2 so the convolution
    covers every character position."""
    b = len(sentences)
    lengths = np.array([len(s) for s in sentences], dtype=np.int64)
    lmax = int(lengths.max())
    w = config.char_window
    halo = w - 1

    word_ids = np.zeros((b, lmax), dtype=np.int64)
    mask = np.zeros((b, lmax), dtype=bool)
    char_lens = np.ones(b * lmax, dtype=np.int64)
    tmax = max(max((len(t) for s in sentences for t in s.tokens), default=1), 1) + halo
    char_ids = np.zeros((b * lmax, tmax), dtype=np.int64)

    for i, sent in enumerate(sentences):
        for t, token in enumerate(sent.tokens):
            word_ids[i, t] = vocab.word_id(token)
            mask[i, t] = True
            row = i * lmax + t
            char_lens[row] = len(token)
            for j, ch in enumerate(token):
                char_ids[row, halo // 2 + j] = vocab.char_id(ch)
    return EncodedBatch(word_ids, char_ids, char_lens, mask, lengths,
                        [s.id for s in sentences])


@dataclass
class EmissionBatch:
    logits: Tensor           # [B, L, K]
    mask: np.ndarray         # [B, L]
    lengths: np.ndarray
    sentence_ids: list


def lstm_cell(x_t, h_prev, c_prev, w_ih, w_hh, b):
    """One LSTM step with (input, forget, candidate, output) gate layout."""
    hdim = h_prev.shape[1]
    gates = ad.add(ad.add(ad.matmul(x_t, w_ih), ad.matmul(h_prev, w_hh)), b)
    i = ad.sigmoid(ad.slice_cols(gates, 0, hdim))
    f = ad.sigmoid(ad.slice_cols(gates, hdim, 2 * hdim))
    g = ad.tanh(ad.slice_cols(gates, 2 * hdim, 3 * hdim))
    o = ad.sigmoid(ad.slice_cols(gates, 3 * hdim, 4 * hdim))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, g))
    h = ad.mul(o, ad.tanh(c))
    return h, c


def _run_direction(x, w_ih, w_hh, b, hidden):
    bsz, steps = x.shape[0], x.shape[1]
    h = Tensor(np.zeros((bsz, hidden), dtype=x.dtype))
    c = Tensor(np.zeros((bsz, hidden), dtype=x.dtype))
    outs = []
    for t in range(steps):
        h, c = lstm_cell(ad.select_time(x, t), h, c, w_ih, w_hh, b)
        outs.append(h)
    return ad.stack_time(outs)


def bilstm(x, lengths, params, hidden):
    """Left-to-right and right-to-left passes concatenated to width 2H.

    The reverse pass runs on per-sentence reversed prefixes, so outputs at
    valid positions never depend on batch padding.
    """
    fwd = _run_direction(x, params.fw_w_ih, params.fw_w_hh, params.fw_b, hidden)
    rev_in = ad.reverse_time(x, lengths)
    bwd = _run_direction(rev_in, params.bw_w_ih, params.bw_w_hh, params.bw_b, hidden)
    bwd = ad.reverse_time(bwd, lengths)
    return ad.concat([fwd, bwd], axis=-1)


def forward(params, config, batch, train=False, rng=None):
    """Emission logits for an encoded batch.

    Per word: char embeddings -> conv -> max pool, concatenated with the
    word embedding, dropout, BiLSTM, dropout, affine map to K logits.
    """
    if train and rng is None:
        raise ParameterError("training forward needs an Rng for dropout")
    b, lmax = batch.word_ids.shape

    chars = ad.embedding_gather(params.char_emb, batch.char_ids)
    chars = ad.conv1d_over_time(chars, params.conv_w, params.conv_b)
    char_feat = ad.max_pool_over_time(chars, batch.char_lengths)
    char_feat = ad.reshape(char_feat, (b, lmax, config.char_filters))

    words = ad.embedding_gather(params.word_emb, batch.word_ids)
    rep = ad.concat([words, char_feat], axis=-1)
    rep = ad.dropout(rep, config.dropout_rate, rng, train)

    hidden = bilstm(rep, batch.lengths, params, config.lstm_hidden)
    hidden = ad.dropout(hidden, config.dropout_rate, rng, train)

    logits = ad.linear(hidden, params.out_w, params.out_b)
    return EmissionBatch(logits, batch.mask, batch.lengths, batch.sentence_ids)


@dataclass
class ModelBundle:
    """A self-contained tagger: everything predict/bench needs."""

    params: TaggerParams
    config: TaggerConfig
    vocab: Vocab
    tagset: TagSet


def predict(bundle, sentences, batch_size=64):
    """Tag sequences for ``sentences``; argmax per token under the Softmax
    head (ties to the lower index), Viterbi under the CRF head."""
    out = []
    label = bundle.tagset.label_of
    with ad.no_grad():
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            batch = encode_batch(chunk, bundle.vocab, bundle.config)
            em = forward(bundle.params, bundle.config, batch, train=False)
            logits = em.logits.data
            if bundle.config.classifier == CRF:
                trans = bundle.params.crf_trans.data
                for i, sent in enumerate(chunk):
                    path = viterbi_decode(logits[i, :len(sent)], trans)
                    out.append([label(t) for t in path])
            else:
                ids = logits.argmax(axis=-1)
                for i, sent in enumerate(chunk):
                    out.append([label(int(x)) for x in ids[i, :len(sent)]])
    return out


def emission_rows(bundle, sentences, batch_size=64):
    """Per-sentence [L, K] emission score arrays (the distillation signal)."""
    rows = []
    with ad.no_grad():
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            batch = encode_batch(chunk, bundle.vocab, bundle.config)
            em = forward(bundle.params, bundle.config, batch, train=False)
            for i, sent in enumerate(chunk):
                rows.append(em.logits.data[i, :len(sent)].copy())
    return rows
