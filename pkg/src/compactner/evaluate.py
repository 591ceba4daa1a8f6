"""Entity-span extraction and micro-averaged precision/recall/F1.

A span is (type, start, end) with end inclusive. Predicted tag sequences
may be ill-formed (an I-X with no preceding B-X); those are repaired by
treating the stray I-X as if it opened a span, and the repair count is
reported so decoding regressions stay visible.
"""

from dataclasses import dataclass, field


def extract_spans(tags):
    """Return ({(type, start, end)}, repair_count) for one tag sequence."""
    spans = set()
    repairs = 0
    start = None
    etype = None
    for i, tag in enumerate(tags):
        if tag == "O":
            if start is not None:
                spans.add((etype, start, i - 1))
                start = None
            continue
        marker, _, this_type = tag.partition("-")
        if marker == "B":
            if start is not None:
                spans.add((etype, start, i - 1))
            start, etype = i, this_type
        else:  # I-X
            if start is None or this_type != etype:
                # stray continuation: count it and open a span here
                if start is not None:
                    spans.add((etype, start, i - 1))
                repairs += 1
                start, etype = i, this_type
    if start is not None:
        spans.add((etype, start, len(tags) - 1))
    return spans, repairs


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    correct: int
    predicted: int
    gold: int
    repairs: int
    per_type: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "correct": self.correct,
            "predicted": self.predicted,
            "gold": self.gold,
            "repairs": self.repairs,
            "per_type": self.per_type,
        }


def _prf(correct, predicted, gold):
    p = 100.0 * correct / predicted if predicted else 0.0
    r = 100.0 * correct / gold if gold else 0.0
    f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def span_f1(gold_sequences, predicted_sequences):
    """Micro-averaged span scores over a corpus.

    Both arguments are lists of tag-string sequences, paired by position.
    Scores are exact-boundary, exact-type matches, reported on a 0..100
    scale.
    """
    if len(gold_sequences) != len(predicted_sequences):
        raise ValueError(
            f"{len(gold_sequences)} gold sequences vs {len(predicted_sequences)} predicted")
    correct = predicted = gold = repairs = 0
    by_type = {}
    for gold_tags, pred_tags in zip(gold_sequences, predicted_sequences):
        if len(gold_tags) != len(pred_tags):
            raise ValueError(f"length mismatch: {len(gold_tags)} gold tags vs {len(pred_tags)}")
        gold_spans, _ = extract_spans(gold_tags)
        pred_spans, n_rep = extract_spans(pred_tags)
        repairs += n_rep
        matched = gold_spans & pred_spans
        correct += len(matched)
        predicted += len(pred_spans)
        gold += len(gold_spans)
        for etype in {t for t, _, _ in gold_spans} | {t for t, _, _ in pred_spans}:
            cell = by_type.setdefault(etype, [0, 0, 0])
            cell[0] += sum(1 for t, _, _ in matched if t == etype)
            cell[1] += sum(1 for t, _, _ in pred_spans if t == etype)
            cell[2] += sum(1 for t, _, _ in gold_spans if t == etype)
    p, r, f = _prf(correct, predicted, gold)
    per_type = {}
    for etype in sorted(by_type):
        tp, tpred, tgold = by_type[etype]
        tp_, tr_, tf_ = _prf(tp, tpred, tgold)
        per_type[etype] = {
            "precision": tp_, "recall": tr_, "f1": tf_,
            "correct": tp, "predicted": tpred, "gold": tgold,
        }
    return EvalReport(p, r, f, correct, predicted, gold, repairs, per_type)


def evaluate_model(bundle, sentences, batch_size=64):
    """Tag ``sentences`` with the model and score against their gold tags."""
    from .model import predict

    predicted = predict(bundle, sentences, batch_size=batch_size)
    gold = [s.gold_tags for s in sentences]
    return span_f1(gold, predicted)
