"""Fine-tune a pretrained token classifier on the labeled split."""

import random
from dataclasses import dataclass, field

import torch

from .corpus import read_conll, read_manifest, select_split, span_f1, tag_labels
from .errors import ConfigError
from .export import sentence_logits, word_alignment

IGNORE = -100  # loss mask for special tokens and non-first subtokens


@dataclass
class TeacherHandle:
    """A fine-tuned model plus everything export needs around it."""

    model: object
    tokenizer: object
    labels: list
    device: str
    max_length: int
    stitch_overlap: int
    description: str
    hyperparameters: dict = field(default_factory=dict)

    def logits_for(self, tokens, sentence_id):
        return sentence_logits(self.model, self.tokenizer, tokens, sentence_id,
                               self.max_length, self.stitch_overlap, self.device)

    def predict(self, sentences):
        """Per-sentence tag label lists via argmax of the aligned logits."""
        out = []
        for sent in sentences:
            rows = self.logits_for(sent.tokens, sent.id)
            out.append([self.labels[i] for i in rows.argmax(axis=1)])
        return out


def _load_pretrained(config, labels):
    from transformers import AutoModelForTokenClassification, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(config.pretrained)
        model = AutoModelForTokenClassification.from_pretrained(
            config.pretrained,
            num_labels=len(labels),
            id2label=dict(enumerate(labels)),
            label2id={label: i for i, label in enumerate(labels)})
    except (OSError, EnvironmentError, ValueError) as exc:
        raise ConfigError(
            f"pretrained weights unavailable at {config.pretrained!r}: {exc}") from exc
    return tokenizer, model.to(config.device)


def _encode_batch(tokenizer, batch, label_ids, max_length, device):
    # labels sit on first subtokens only; [CLS]/[SEP]/padding and
    # continuation pieces are masked out of the loss
    encoded, labeled = [], []
    for sent in batch:
        pieces, first = word_alignment(tokenizer, sent.tokens, sent.id)
        pieces = pieces[:max_length - 2]
        ids = ([tokenizer.cls_token_id]
               + tokenizer.convert_tokens_to_ids(pieces)
               + [tokenizer.sep_token_id])
        labels = [IGNORE] * len(ids)
        for word, piece_idx in enumerate(first):
            if piece_idx < len(pieces):
                labels[piece_idx + 1] = label_ids[sent.tags[word]]
        encoded.append(ids)
        labeled.append(labels)
    width = max(len(ids) for ids in encoded)
    pad = tokenizer.pad_token_id
    input_ids = [ids + [pad] * (width - len(ids)) for ids in encoded]
    attention = [[1] * len(ids) + [0] * (width - len(ids)) for ids in encoded]
    labels = [row + [IGNORE] * (width - len(row)) for row in labeled]
    return (torch.tensor(input_ids, dtype=torch.long, device=device),
            torch.tensor(attention, dtype=torch.long, device=device),
            torch.tensor(labels, dtype=torch.long, device=device))


def finetune_teacher(config):
    """Train the token-classification head on the manifest's labeled split
    and return a TeacherHandle; prints held-out F1 as a sanity signal."""
    sentences = read_conll(config.corpus)
    labels = tag_labels(sentences)
    if labels == ["O"]:
        raise ConfigError("corpus carries no entity labels to fine-tune on")

    split = select_split(read_manifest(config.manifest),
                         config.split_size, config.split_seed_index)
    by_id = {sent.id: sent for sent in sentences}
    missing = [i for i in split["labeled_ids"] if i not in by_id]
    if missing:
        raise ConfigError(
            f"manifest labeled ids not in the corpus: {missing[:5]}")
    labeled = [by_id[i] for i in split["labeled_ids"]]
    if not labeled:
        raise ConfigError("manifest row has an empty labeled split")
    untagged = [sent.id for sent in labeled if sent.tags is None]
    if untagged:
        raise ConfigError(
            f"labeled split includes untagged sentences: {untagged[:5]}")

    torch.manual_seed(config.seed)
    tokenizer, model = _load_pretrained(config, labels)
    max_length = config.max_length or model.config.max_position_embeddings

    rng = random.Random(config.seed)
    order = list(labeled)
    rng.shuffle(order)
    n_dev = max(1, round(config.dev_fraction * len(order))) if len(order) > 1 else 0
    dev, train = order[:n_dev], order[n_dev:]

    label_ids = {label: i for i, label in enumerate(labels)}
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    model.train()
    for _ in range(config.epochs):
        rng.shuffle(train)
        for start in range(0, len(train), config.batch_size):
            batch = train[start:start + config.batch_size]
            input_ids, attention, target = _encode_batch(
                tokenizer, batch, label_ids, max_length, config.device)
            loss = model(input_ids=input_ids, attention_mask=attention,
                         labels=target).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    model.eval()

    handle = TeacherHandle(
        model=model, tokenizer=tokenizer, labels=labels, device=config.device,
        max_length=max_length, stitch_overlap=config.stitch_overlap,
        description=f"token classifier fine-tuned from {config.pretrained}",
        hyperparameters={
            "pretrained": config.pretrained, "epochs": config.epochs,
            "lr": config.lr, "batch_size": config.batch_size,
            "seed": config.seed, "optimizer": "adamw",
            "max_length": max_length, "device": config.device,
        })
    if dev:
        f1 = span_f1([sent.tags for sent in dev], handle.predict(dev))
        print(f"dev F1 {f1:.2f} on {len(dev)} held-out sentences")
    else:
        print("dev F1 skipped: labeled split too small to hold out")
    return handle
