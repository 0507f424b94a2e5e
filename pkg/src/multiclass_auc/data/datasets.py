import logging
import math
import os
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from scipy.special import softmax

from multiclass_auc.data.data_models import ClassIndex, Dataset, OneHot
from multiclass_auc.errors import DatasetFormatError, InvalidArgumentError

logger = logging.getLogger(__name__)


def _parse_label(token: str, row: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(f"label '{token}' is not numeric.", row=row) from None
    if not value.is_integer():
        raise DatasetFormatError(f"label '{token}' is not an integer.", row=row)
    if value < 0:
        raise DatasetFormatError(f"label '{token}' is negative.", row=row)
    return int(value)


def _check_classes(labels: np.ndarray, require_all_classes: bool) -> int:
    n_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=n_classes)
    present = np.count_nonzero(counts)
    if present < 2:
        raise DatasetFormatError(f"At least 2 classes are needed, found {present}.")
    if require_all_classes:
        for i in np.flatnonzero(counts == 0):
            raise DatasetFormatError(f"Labels must be dense: class {i} empty.")
    return n_classes


def load_csv(path: str | os.PathLike, label_column: int = 0, require_all_classes: bool = True) -> Dataset:
    """Load a headerless, comma-separated dataset with one integer label column.

    Args:
        path (str | os.PathLike): The file to read.
        label_column (int): Position of the label column; every other column is a feature.
        require_all_classes (bool): Refuse label sets with gaps instead of remapping them.

    Returns:
        Dataset: The dataset with N_C = 1 + max(label).
    """
    labels: list[int] = []
    rows: list[list[float]] = []
    width: int | None = None
    with open(path) as f:
        for row_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split(",")
            if width is None:
                width = len(fields)
                if width < 2:
                    raise DatasetFormatError("expected a label and at least one feature.", row=row_number)
                if not -width <= label_column < width:
                    raise DatasetFormatError(f"label column {label_column} does not exist.", row=row_number)
            elif len(fields) != width:
                raise DatasetFormatError(f"expected {width} fields, got {len(fields)}.", row=row_number)
            labels.append(_parse_label(fields[label_column].strip(), row_number))
            del fields[label_column]
            try:
                rows.append([float(x) for x in fields])
            except ValueError as e:
                raise DatasetFormatError(f"non-numeric feature. {e}", row=row_number) from None
    if not labels:
        raise DatasetFormatError(f"Dataset file {path} is empty.")
    label_array = np.asarray(labels, dtype=np.int64)
    n_classes = _check_classes(label_array, require_all_classes)
    logger.debug(f"Loaded {len(labels)} rows with {width - 1} features and {n_classes} classes from {path}")
    return Dataset(features=np.asarray(rows, dtype=np.float64), labels=label_array, n_classes=n_classes)


def load_libsvm(path: str | os.PathLike, require_all_classes: bool = True) -> Dataset:
    """Load a LIBSVM text file into a dense dataset.

    Lines have the form ``label idx:val idx:val ...`` with 1-based, strictly ascending indices. Blank
    lines are skipped; the dimension is the largest index seen and missing entries are 0.
    """
    labels: list[int] = []
    entries: list[tuple[list[int], list[float]]] = []
    n_features = 0
    with open(path) as f:
        for row_number, line in enumerate(f, start=1):
            tokens = line.split()
            if not tokens:
                continue
            labels.append(_parse_label(tokens[0], row_number))
            indices: list[int] = []
            values: list[float] = []
            for token in tokens[1:]:
                key, separator, value = token.partition(":")
                if not separator:
                    raise DatasetFormatError(f"malformed entry '{token}', expected idx:val.", row=row_number)
                try:
                    index = int(key)
                except ValueError:
                    raise DatasetFormatError(f"index '{key}' is not an integer.", row=row_number) from None
                if index < 1:
                    raise DatasetFormatError(f"index {index} is not 1-based.", row=row_number)
                if indices and index <= indices[-1]:
                    raise DatasetFormatError(f"index {index} does not ascend after {indices[-1]}.", row=row_number)
                try:
                    values.append(float(value))
                except ValueError:
                    raise DatasetFormatError(f"value '{value}' is not numeric.", row=row_number) from None
                indices.append(index)
            if indices:
                n_features = max(n_features, indices[-1])
            entries.append((indices, values))
    if not labels:
        raise DatasetFormatError(f"Dataset file {path} is empty.")
    if n_features == 0:
        raise DatasetFormatError(f"Dataset file {path} has no feature entries.")
    features = np.zeros((len(labels), n_features), dtype=np.float64)
    for row, (indices, values) in enumerate(entries):
        features[row, np.asarray(indices, dtype=np.int64) - 1] = values
    label_array = np.asarray(labels, dtype=np.int64)
    n_classes = _check_classes(label_array, require_all_classes)
    logger.debug(f"Loaded {len(labels)} LIBSVM rows with {n_features} features and {n_classes} classes from {path}")
    return Dataset(features=features, labels=label_array, n_classes=n_classes)


def write_csv(ds: Dataset, path: str | os.PathLike) -> None:
    """Write a dataset in the format read by `load_csv`, label first, 17 significant digits."""
    with open(path, "w") as f:
        for label, row in zip(ds.labels, ds.features, strict=True):
            f.write(",".join([str(int(label))] + [f"{x:.17g}" for x in row]) + "\n")
    logger.info(f"Wrote {ds.n_samples} samples to {path}")


def index_from_labels(labels: npt.ArrayLike, n_classes: int, allow_empty: bool = False) -> ClassIndex:
    """Build the per-class bookkeeping for a label vector.

    Args:
        labels (npt.ArrayLike): Class ids in [0, n_classes).
        n_classes (int): Number of classes N_C.
        allow_empty (bool): Give empty classes zero counts and zero pair weights instead of failing.

    Returns:
        ClassIndex: Members, counts, proportions and pair weights.
    """
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=n_classes)
    if counts.size != n_classes:
        raise InvalidArgumentError(f"Labels exceed the {n_classes} declared classes.")
    if not allow_empty:
        for i in np.flatnonzero(counts == 0):
            raise DatasetFormatError(f"Every class needs a member: class {i} empty.")
    if np.count_nonzero(counts) < 2:
        raise DatasetFormatError("Pairwise risks need at least 2 nonempty classes.")
    members = tuple(np.flatnonzero(labels == i) for i in range(n_classes))
    sample_counts = counts[labels].astype(np.float64)
    pair_weights = np.zeros((n_classes, labels.size), dtype=np.float64)
    for i in np.flatnonzero(counts):
        pair_weights[i] = 1.0 / (counts[i] * sample_counts)
    return ClassIndex(
        labels=labels,
        members=members,
        counts=counts,
        proportions=counts / labels.size,
        pair_weights=pair_weights,
    )


def build_index(ds: Dataset, allow_empty: bool = False) -> ClassIndex:
    """Build the `ClassIndex` of a dataset; members preserve input order."""
    return index_from_labels(ds.labels, ds.n_classes, allow_empty=allow_empty)


def one_hot(labels: npt.ArrayLike, n_classes: int) -> OneHot:
    """Indicator matrix whose column i is Y^(i)."""
    labels = np.asarray(labels, dtype=np.int64)
    columns = np.zeros((labels.size, n_classes), dtype=np.float64)
    columns[np.arange(labels.size), labels] = 1.0
    return OneHot(columns=columns)


def imbalance_factors(idx: ClassIndex) -> tuple[float, float]:
    """The label-skew factors xi = sqrt(sum 1/rho_i) and chi = sqrt(sum_i sum_{j != i} 1/(rho_i rho_j))."""
    if not np.all(idx.present):
        raise InvalidArgumentError("Imbalance factors are undefined with empty classes.")
    inverse = 1.0 / idx.proportions
    pairs = np.outer(inverse, inverse)
    np.fill_diagonal(pairs, 0.0)
    return math.sqrt(float(inverse.sum())), math.sqrt(float(pairs.sum()))


def rounded_counts(n: int, rho: Sequence[float]) -> np.ndarray:
    """Per-class counts for n samples: floor(rho_i n), remainder one each in descending rho order."""
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 1 or rho.size < 2:
        raise InvalidArgumentError("At least 2 class proportions are needed.")
    if np.any(rho <= 0) or abs(float(rho.sum()) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"Class proportions must be positive and sum to 1, got {rho.tolist()}.")
    counts = np.floor(rho * n + 1e-9).astype(np.int64)
    remainder = n - int(counts.sum())
    # Stable sort keeps lower class ids first among equal proportions.
    order = np.argsort(-rho, kind="stable")
    counts[order[:remainder]] += 1
    for i in np.flatnonzero(counts == 0):
        raise InvalidArgumentError(f"Class {i} would be empty with {n} samples and proportion {rho[i]}.")
    return counts


def _synth_labels(counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.repeat(np.arange(counts.size), counts))


def synth_uniform(n: int, d: int, rho: Sequence[float], seed: int) -> Dataset:
    """Features i.i.d. uniform on [0, 1], class counts from `rounded_counts`, deterministic per seed."""
    if d < 1:
        raise InvalidArgumentError(f"Need at least one feature, got d={d}.")
    counts = rounded_counts(n, rho)
    label_seed, feature_seed = np.random.SeedSequence(seed).spawn(2)
    labels = _synth_labels(counts, np.random.default_rng(label_seed))
    features = np.random.default_rng(feature_seed).random((n, d))
    logger.debug(f"Synthesized {n} uniform samples with class counts {counts.tolist()}")
    return Dataset(features=features, labels=labels, n_classes=counts.size)


def blob_means(n_classes: int, d: int, separation: float) -> np.ndarray:
    """Class means on the coordinate axes at mutual distance `separation`."""
    if d < n_classes:
        raise InvalidArgumentError(f"Placing {n_classes} means on coordinate axes needs d >= {n_classes}, got {d}.")
    means = np.zeros((n_classes, d), dtype=np.float64)
    means[np.arange(n_classes), np.arange(n_classes)] = separation / math.sqrt(2.0)
    return means


def synth_blobs(n: int, d: int, rho: Sequence[float], separation: float, seed: int) -> Dataset:
    """Unit-variance Gaussian classes with means at mutual distance `separation`, deterministic per seed."""
    if separation < 0:
        raise InvalidArgumentError(f"Separation must be nonnegative, got {separation}.")
    counts = rounded_counts(n, rho)
    means = blob_means(counts.size, d, separation)
    label_seed, feature_seed = np.random.SeedSequence(seed).spawn(2)
    labels = _synth_labels(counts, np.random.default_rng(label_seed))
    features = means[labels] + np.random.default_rng(feature_seed).standard_normal((n, d))
    logger.debug(f"Synthesized {n} blob samples, separation {separation}, class counts {counts.tolist()}")
    return Dataset(features=features, labels=labels, n_classes=counts.size)


def blobs_posterior(features: npt.ArrayLike, rho: Sequence[float], separation: float) -> np.ndarray:
    """Exact class posteriors eta_i(x) of the `synth_blobs` mixture with priors `rho`."""
    features = np.asarray(features, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    means = blob_means(rho.size, features.shape[1], separation)
    squared_distances = ((features[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return softmax(np.log(rho)[None, :] - 0.5 * squared_distances, axis=1)


def split_stratified(
    ds: Dataset,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[Dataset, Dataset, Dataset]:
    """Split into train, validation and test sets with per-class proportional allocation.

    Validation and test receive floor(fraction * n_c) members of each class, at least one; the rest
    goes to train. Rows keep their input order within each split.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"Split fractions must be 3 positive numbers summing to 1, got {fractions}.")
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        n_valid = max(1, math.floor(fractions[1] * members.size + 1e-9))
        n_test = max(1, math.floor(fractions[2] * members.size + 1e-9))
        n_train = members.size - n_valid - n_test
        if n_train < 1:
            raise InvalidArgumentError(f"Class {c} has {members.size} member(s), too few to populate all splits.")
        shuffled = rng.permutation(members)
        parts[0].append(shuffled[:n_train])
        parts[1].append(shuffled[n_train : n_train + n_valid])
        parts[2].append(shuffled[n_train + n_valid :])
    train, valid, test = (ds.subset(np.sort(np.concatenate(p))) for p in parts)
    logger.debug(f"Stratified split sizes: {train.n_samples}/{valid.n_samples}/{test.n_samples}")
    return train, valid, test
