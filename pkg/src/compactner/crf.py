"""Linear-chain CRF: log-partition, NLL, and Viterbi decoding.

The transition matrix is [K+2, K+2] with virtual start state K and stop
state K+1, so the gold-path score and the forward recursion share one
scoring definition:

    score(y) = trans[start, y_1] + sum_t e_t[y_t]
             + sum_t trans[y_t, y_{t+1}] + trans[y_L, stop]

All recursions run in log space with max-subtraction.
"""

import numpy as np

from . import autodiff as ad
from .errors import ContractError


def start_stop_ids(k):
    return k, k + 1


def crf_log_partition(emissions, transitions):
    """Differentiable log of the sum of exp-scores over all tag paths.

    ``emissions`` is a [L, K] tensor, ``transitions`` [K+2, K+2].
    Forward recursion: alpha_1 = start + e_1;
    alpha_{t+1}(j) = logsumexp_i(alpha_t(i) + trans(i, j)) + e_{t+1}(j);
    logZ = logsumexp_j(alpha_L(j) + trans(j, stop)).
    """
    length, k = emissions.shape
    if length == 0:
        raise ContractError("crf_log_partition over an empty sequence")
    start, stop = start_stop_ids(k)

    start_row = ad.reshape(ad.slice2d(transitions, start, start + 1, 0, k), (k,))
    stop_col = ad.reshape(ad.slice2d(transitions, 0, k, stop, stop + 1), (k,))
    block = ad.slice2d(transitions, 0, k, 0, k)

    alpha = ad.add(start_row, ad.reshape(ad.slice2d(emissions, 0, 1, 0, k), (k,)))
    for t in range(1, length):
        scores = ad.add(ad.reshape(alpha, (k, 1)), block)
        e_t = ad.reshape(ad.slice2d(emissions, t, t + 1, 0, k), (k,))
        alpha = ad.add(ad.logsumexp(scores, axis=0), e_t)
    return ad.logsumexp(ad.add(alpha, stop_col), axis=-1)


def crf_path_score(emissions, transitions, tags):
    """Differentiable score of one tag path including start/stop edges."""
    length, k = emissions.shape
    if length == 0:
        raise ContractError("crf_path_score over an empty sequence")
    tags = np.asarray(tags, dtype=np.int64)
    start, stop = start_stop_ids(k)
    em = ad.gather2d(emissions, np.arange(length), tags)
    path = np.concatenate(([start], tags, [stop]))
    tr = ad.gather2d(transitions, path[:-1], path[1:])
    return ad.add(ad.sum_all(em), ad.sum_all(tr))


def crf_nll(emissions, transitions, tags):
    """Negative log-likelihood of the gold path: logZ - score(gold)."""
    logz = crf_log_partition(emissions, transitions)
    return ad.add(logz, ad.scale(crf_path_score(emissions, transitions, tags), -1.0))


def viterbi_decode(emissions, transitions):
    """Highest-scoring tag path; ties break toward the lower tag index at
    every backpointer decision. Pure numpy (no gradient)."""
    em = np.asarray(getattr(emissions, "data", emissions))
    tr = np.asarray(getattr(transitions, "data", transitions))
    length, k = em.shape
    if length == 0:
        raise ContractError("viterbi_decode over an empty sequence")
    start, stop = start_stop_ids(k)

    delta = tr[start, :k] + em[0]
    backs = np.zeros((length, k), dtype=np.int64)
    for t in range(1, length):
        scores = delta[:, None] + tr[:k, :k]
        backs[t] = scores.argmax(axis=0)
        delta = scores.max(axis=0) + em[t]
    final = delta + tr[:k, stop]
    best = int(final.argmax())
    path = [best]
    for t in range(length - 1, 0, -1):
        best = int(backs[t, best])
        path.append(best)
    path.reverse()
    return path
