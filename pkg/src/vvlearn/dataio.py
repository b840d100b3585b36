"""Dataset container, sparse text format, splits, and synthetic data.

The text format is one example per line:

    <labels> <index>:<value> <index>:<value> ...

Feature indices are 1-based on disk and 0-based in memory.  Multiclass
lines carry a single integer class id; multilabel lines carry a
comma-separated list of 1-based component ids that map to a +1/-1 sign
vector.  Lines starting with '#' and blank lines are skipped.  Multiclass
class ids are remapped to a dense [0, c) by first appearance unless they
already are dense (or an explicit c is given and they fit inside it), and
the mapping is retained on the dataset.  Multilabel component ids are
positional and never remapped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import LabeledExample, SparseVector
from .seeding import generator


class ParseError(ValueError):
    """A malformed data file; carries the 1-based line number if known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class Dataset:
    """Examples plus their declared dimensions and task kind.

    ``task`` is "mcc" (multiclass, integer labels) or "mlc" (multilabel,
    sign-vector labels).  ``label_map`` records how file label ids were
    remapped to dense indices; it is bookkeeping, not part of equality.
    """

    examples: list[LabeledExample]
    d: int
    c: int
    task: str
    label_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in ("mcc", "mlc"):
            raise ValueError(f"task must be 'mcc' or 'mlc', got {self.task!r}")
        if self.d < 0 or self.c < 0:
            raise ValueError(f"dimensions must be nonnegative, got d={self.d}, c={self.c}")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def kappa(self) -> float:
        """Largest input norm, recomputed from the current examples."""
        if not self.examples:
            return 0.0
        return max(z.x.norm() for z in self.examples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.d == other.d
            and self.c == other.c
            and self.task == other.task
            and self.examples == other.examples
        )


def _parse_label_field(token: str, task: str, line_no: int) -> list[int]:
    """Raw label ids from the first token; multilabel ids shifted to 0-based."""
    if task == "mcc":
        try:
            return [int(token)]
        except ValueError:
            raise ParseError(f"bad class id {token!r}", line_no) from None
    ids = []
    for part in token.split(","):
        try:
            value = int(part)
        except ValueError:
            raise ParseError(f"bad label id {part!r}", line_no) from None
        if value < 1:
            raise ParseError(f"label ids are 1-based, got {value}", line_no)
        ids.append(value - 1)
    if len(set(ids)) != len(ids):
        raise ParseError(f"duplicate label id in {token!r}", line_no)
    return ids


def _parse_features(tokens: list[str], line_no: int) -> tuple[np.ndarray, np.ndarray]:
    indices, values, seen = [], [], set()
    for token in tokens:
        head, sep, tail = token.partition(":")
        if not sep or not head or not tail:
            raise ParseError(f"bad feature token {token!r}", line_no)
        try:
            idx = int(head)
            val = float(tail)
        except ValueError:
            raise ParseError(f"bad feature token {token!r}", line_no) from None
        if idx < 1:
            raise ParseError(f"feature indices are 1-based, got {idx}", line_no)
        if not np.isfinite(val):
            raise ParseError(f"non-finite feature value in {token!r}", line_no)
        if idx in seen:
            raise ParseError(f"duplicate feature index {idx}", line_no)
        seen.add(idx)
        indices.append(idx - 1)
        values.append(val)
    order = np.argsort(np.asarray(indices, dtype=np.int64), kind="stable")
    return (
        np.asarray(indices, dtype=np.int64)[order],
        np.asarray(values, dtype=np.float64)[order],
    )


def _build_label_map(
    seen_order: list[int], c: int | None, task: str
) -> tuple[dict[int, int], int]:
    """Dense label mapping and the resulting component count.

    Multilabel component ids are positions in the sign vector, so they are
    never remapped: c is the largest id + 1 unless declared larger.
    Multiclass ids are opaque; ids already forming a dense range are kept
    as they are (always when an explicit c admits them), otherwise they
    are remapped by first appearance.
    """
    distinct = set(seen_order)
    if task == "mlc":
        needed = max(distinct) + 1
        if c is not None:
            if needed > c:
                raise ParseError(f"component id {needed} exceeds declared c={c}")
            needed = c
        return {i: i for i in range(needed)}, needed
    if c is not None:
        if all(0 <= i < c for i in distinct):
            return {i: i for i in range(c)}, c
        if len(distinct) > c:
            raise ParseError(f"{len(distinct)} distinct labels exceed declared c={c}")
        return {i: rank for rank, i in enumerate(seen_order)}, c
    if distinct == set(range(len(distinct))):
        return {i: i for i in range(len(distinct))}, len(distinct)
    return {i: rank for rank, i in enumerate(seen_order)}, len(distinct)


def parse_sparse_text(
    source, task: str, d: int | None = None, c: int | None = None
) -> Dataset:
    """Parse the sparse text format into a Dataset.

    ``source`` is a path or a file-like object.  ``d`` and ``c`` override
    the inferred dimension (max feature index) and component count; with
    an explicit bound, out-of-range entries are parse errors.
    """
    if task not in ("mcc", "mlc"):
        raise ValueError(f"task must be 'mcc' or 'mlc', got {task!r}")
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as handle:
            lines = handle.read().splitlines()

    rows = []
    max_index = -1
    seen_order: list[int] = []
    seen: set[int] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        tokens = line.split()
        labels = _parse_label_field(tokens[0], task, line_no)
        indices, values = _parse_features(tokens[1:], line_no)
        if indices.size:
            top = int(indices[-1])
            if d is not None and top >= d:
                raise ParseError(f"feature index {top + 1} exceeds declared d={d}", line_no)
            max_index = max(max_index, top)
        for i in labels:
            if i not in seen:
                seen.add(i)
                seen_order.append(i)
        rows.append((line_no, labels, indices, values))
    if not rows:
        raise ParseError("no examples found")

    dim = d if d is not None else max_index + 1
    label_map, n_components = _build_label_map(seen_order, c, task)

    examples = []
    for line_no, labels, indices, values in rows:
        try:
            x = SparseVector(dim, indices, values)
        except ValueError as err:
            raise ParseError(str(err), line_no) from None
        if task == "mcc":
            examples.append(LabeledExample(x, label_map[labels[0]]))
        else:
            signs = np.full(n_components, -1, dtype=np.int8)
            signs[[label_map[i] for i in labels]] = 1
            examples.append(LabeledExample(x, signs))
    return Dataset(examples, dim, n_components, task, label_map)


def write_sparse_text(dataset: Dataset, destination) -> None:
    """Write a Dataset in the sparse text format (inverse of parsing).

    Labels are written through the inverse of ``label_map`` so a parsed
    file writes back with its original ids; floats use the shortest
    representation that round-trips exactly.
    """
    inverse = {dense: raw for raw, dense in dataset.label_map.items()}
    lines = []
    for z in dataset.examples:
        if z.is_multilabel:
            positive = np.flatnonzero(z.label > 0)
            if positive.size == 0:
                raise ValueError("cannot serialize a sign vector with no +1 entries")
            head = ",".join(str(inverse.get(int(j), int(j)) + 1) for j in positive)
        else:
            head = str(inverse.get(z.label, z.label))
        feats = " ".join(
            f"{int(i) + 1}:{float(v)!r}" for i, v in zip(z.x.indices, z.x.values)
        )
        lines.append(f"{head} {feats}".rstrip())
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w") as handle:
            handle.write(text)


def _unit_values(values: np.ndarray) -> np.ndarray:
    """Rescale so the recomputed Euclidean norm is exactly 1.0.

    Plain division can leave the norm a few ulps off 1.0, so the largest
    entry is then stepped one ulp at a time until the norm lands on 1.0
    exactly.  Near 1.0 the achievable norms are denser than the rounding
    window, so the walk ends after a handful of steps (observed worst case
    is two digits).  Rows that already have unit norm come back unchanged,
    which makes the rescaling idempotent.
    """
    out = values.astype(np.float64, copy=True)
    norm = float(np.linalg.norm(out))
    if norm != 1.0:
        out /= norm
    j = int(np.argmax(np.abs(out)))
    for _ in range(100_000):
        norm = float(np.linalg.norm(out))
        if norm == 1.0:
            return out
        toward = 0.0 if norm > 1.0 else np.copysign(np.inf, out[j])
        out[j] = np.nextafter(out[j], toward)
    raise ArithmeticError("unit rescaling failed to land on norm 1.0")


def normalize_rows(dataset: Dataset) -> Dataset:
    """Scale every nonzero input to unit Euclidean norm; zero rows stay."""
    examples = []
    for z in dataset.examples:
        if z.x.nnz == 0 or z.x.norm() == 0.0:
            examples.append(z)
        else:
            x = SparseVector(z.x.dim, z.x.indices.copy(), _unit_values(z.x.values))
            examples.append(LabeledExample(x, z.label))
    return Dataset(examples, dataset.d, dataset.c, dataset.task, dict(dataset.label_map))


def split(dataset: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffle, then the first floor(fraction * n) rows.

    Both sides inherit d, c, task and the label map.  Fractions that
    leave either side empty are rejected.
    """
    n = len(dataset.examples)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    head = int(fraction * n)
    if head == 0 or head == n:
        raise ValueError(f"fraction {fraction} leaves an empty side for n={n}")
    perm = generator(seed).permutation(n)
    pick = lambda ids: Dataset(
        [dataset.examples[i] for i in ids],
        dataset.d,
        dataset.c,
        dataset.task,
        dict(dataset.label_map),
    )
    return pick(perm[:head]), pick(perm[head:])


def subsample(dataset: Dataset, size: int, seed: int) -> Dataset:
    """A uniform subset of the given size, drawn without replacement."""
    n = len(dataset.examples)
    if not 1 <= size <= n:
        raise ValueError(f"subsample size must lie in [1, {n}], got {size}")
    perm = generator(seed).permutation(n)[:size]
    return Dataset(
        [dataset.examples[i] for i in perm],
        dataset.d,
        dataset.c,
        dataset.task,
        dict(dataset.label_map),
    )


def synth_gen(
    n: int, d: int, c: int, task: str = "mcc", noise: float = 0.0, seed: int = 0
) -> Dataset:
    """Synthetic linearly-structured data from a hidden weight matrix.

    Draws a hidden matrix with unit-norm columns and unit-norm Gaussian
    inputs (so kappa is exactly 1).  Multiclass labels are the argmax
    score; multilabel sign vectors are the score signs, nudged at the
    most extreme component so that both signs occur.  Each label is then
    flipped with probability ``noise`` (multiclass: to a random other
    class), and degenerate sign vectors are nudged again.
    """
    if n < 1 or d < 1 or c < 2:
        raise ValueError(f"need n >= 1, d >= 1, c >= 2, got {(n, d, c)}")
    if task not in ("mcc", "mlc"):
        raise ValueError(f"task must be 'mcc' or 'mlc', got {task!r}")
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must lie in [0, 1], got {noise}")
    rng = generator(seed)
    hidden = rng.standard_normal((d, c))
    hidden /= np.linalg.norm(hidden, axis=0, keepdims=True)
    inputs = np.stack([_unit_values(row) for row in rng.standard_normal((n, d))])
    scores = inputs @ hidden

    if task == "mcc":
        labels = np.argmax(scores, axis=1)
        flip = rng.random(n) < noise
        other = rng.integers(0, c - 1, size=n)
        flipped = other + (other >= labels)
        labels = np.where(flip, flipped, labels)
        examples = [
            LabeledExample(SparseVector(d, np.arange(d), inputs[i]), int(labels[i]))
            for i in range(n)
        ]
    else:
        signs = np.where(scores >= 0.0, 1, -1).astype(np.int8)
        _force_both_signs(signs, scores)
        flip = rng.random((n, c)) < noise
        signs = np.where(flip, -signs, signs).astype(np.int8)
        _force_both_signs(signs, scores)
        examples = [
            LabeledExample(SparseVector(d, np.arange(d), inputs[i]), signs[i])
            for i in range(n)
        ]
    return Dataset(examples, d, c, task, {i: i for i in range(c)})


def _force_both_signs(signs: np.ndarray, scores: np.ndarray) -> None:
    """Flip the most extreme component of single-sign rows, in place."""
    all_pos = np.all(signs > 0, axis=1)
    all_neg = np.all(signs < 0, axis=1)
    for i in np.flatnonzero(all_pos):
        signs[i, np.argmin(scores[i])] = -1
    for i in np.flatnonzero(all_neg):
        signs[i, np.argmax(scores[i])] = 1
