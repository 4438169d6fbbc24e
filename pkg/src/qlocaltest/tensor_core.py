"""Labeled dense operators on multi-system Hilbert spaces.

Every operator carries an ordered list of ``(label, dim)`` pairs for its row
space and for its column space. Matrices are stored row-major: the first
system is the most significant index, so ``kron`` order equals system order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations as _all_perms
from typing import Iterable, Sequence

import numpy as np

System = tuple[str, int]


class LabelError(ValueError):
    """Raised for duplicate, unknown or dimension-inconsistent system labels."""


def _normalize_systems(systems: Iterable) -> tuple[System, ...]:
    out = tuple((str(label), int(dim)) for label, dim in systems)
    labels = [label for label, _ in out]
    if len(set(labels)) != len(labels):
        raise LabelError(f"duplicate labels in {labels}")
    for label, dim in out:
        if dim < 1:
            raise LabelError(f"system {label!r} has non-positive dimension {dim}")
    return out


@dataclass(frozen=True)
class LabeledOperator:
    """Dense complex matrix tagged with row and column system layouts.

    ``cols`` defaults to ``rows`` (square operator on one layout).
    """

    matrix: np.ndarray
    rows: tuple[System, ...]
    cols: tuple[System, ...] | None = None

    def __post_init__(self):
        rows = _normalize_systems(self.rows)
        cols = rows if self.cols is None else _normalize_systems(self.cols)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {mat.shape}")
        if mat.shape != (_prod(rows), _prod(cols)):
            raise ValueError(
                f"matrix shape {mat.shape} does not match layout "
                f"{_prod(rows)}x{_prod(cols)}"
            )
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.rows]

    @property
    def is_square_layout(self) -> bool:
        return self.rows == self.cols

    def dims(self) -> dict[str, int]:
        return dict(self.rows)

    def tensor(self) -> np.ndarray:
        """Matrix reshaped to ``row_dims + col_dims``."""
        shape = [d for _, d in self.rows] + [d for _, d in self.cols]
        return self.matrix.reshape(shape)

    def dag(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj().T, self.cols, self.rows)

    def transpose(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.T, self.cols, self.rows)

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        if self.cols != other.rows:
            raise LabelError("column layout of left factor must equal row layout of right")
        return LabeledOperator(self.matrix @ other.matrix, self.rows, other.cols)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = other.reorder([label for label, _ in self.rows])
        if other.cols != self.cols:
            raise LabelError("layouts differ")
        return LabeledOperator(self.matrix + other.matrix, self.rows, self.cols)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "LabeledOperator":
        return LabeledOperator(c * self.matrix, self.rows, self.cols)

    def reorder(self, order: Sequence[str]) -> "LabeledOperator":
        """Permute systems (rows and columns together) into ``order``."""
        if not self.is_square_layout:
            raise LabelError("reorder needs identical row and column layouts")
        labels = self.labels
        if sorted(order) != sorted(labels):
            raise LabelError(f"order {list(order)} is not a permutation of {labels}")
        if list(order) == labels:
            return self
        idx = [labels.index(label) for label in order]
        k = len(labels)
        t = self.tensor().transpose(idx + [k + i for i in idx])
        systems = tuple(self.rows[i] for i in idx)
        return LabeledOperator(t.reshape(self.matrix.shape), systems)

    def relabel(self, mapping: dict[str, str]) -> "LabeledOperator":
        rows = tuple((mapping.get(lab, lab), d) for lab, d in self.rows)
        cols = tuple((mapping.get(lab, lab), d) for lab, d in self.cols)
        return LabeledOperator(self.matrix, rows, cols)

    def split(self, label: str, parts: Sequence[System]) -> "LabeledOperator":
        """Factor one system into consecutive subsystems (pure relabeling)."""
        parts = tuple((str(lab), int(d)) for lab, d in parts)
        if _prod(parts) != dict(self.rows).get(label, dict(self.cols).get(label)):
            raise LabelError(f"parts {parts} do not factor system {label!r}")

        def _sp(systems):
            out = []
            for lab, d in systems:
                out.extend(parts if lab == label else [(lab, d)])
            return tuple(out)

        return LabeledOperator(self.matrix, _sp(self.rows), _sp(self.cols))

    def merge(self, labels: Sequence[str], new_label: str) -> "LabeledOperator":
        """Fuse adjacent systems ``labels`` (in that order) into one system."""
        labels = list(labels)

        def _mg(systems):
            names = [lab for lab, _ in systems]
            if not all(lab in names for lab in labels):
                raise LabelError(f"unknown labels {labels}")
            i = names.index(labels[0])
            if names[i : i + len(labels)] != labels:
                raise LabelError(f"systems {labels} are not adjacent in {names}")
            dim = _prod(systems[i : i + len(labels)])
            return systems[:i] + ((new_label, dim),) + systems[i + len(labels) :]

        return LabeledOperator(self.matrix, _mg(self.rows), _mg(self.cols))


def _prod(systems) -> int:
    return int(np.prod([d for _, d in systems], dtype=np.int64)) if systems else 1


def identity(systems: Sequence[System]) -> LabeledOperator:
    systems = _normalize_systems(systems)
    return LabeledOperator(np.eye(_prod(systems)), systems)


def kron(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Tensor product; systems of ``a`` come first."""
    for la, lb in ((a.rows, b.rows), (a.cols, b.cols)):
        common = {x for x, _ in la} & {x for x, _ in lb}
        if common:
            raise LabelError(f"kron operands share labels {sorted(common)}")
    return LabeledOperator(np.kron(a.matrix, b.matrix), a.rows + b.rows, a.cols + b.cols)


def vec_flatten(x: np.ndarray) -> np.ndarray:
    """Row-major flattening, so that vec(|psi><phi|) = |psi> (x) |phi*>."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {x.shape}")
    return x.reshape(-1).copy()


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise ValueError(f"cannot unflatten vector of size {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols).copy()


def partial_trace(x: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    """Trace out ``labels``; remaining systems keep their relative order."""
    labels = set(labels)
    row_names = [lab for lab, _ in x.rows]
    col_names = [lab for lab, _ in x.cols]
    unknown = labels - set(row_names) - set(col_names)
    if unknown:
        raise LabelError(f"unknown labels {sorted(unknown)}")
    for lab in labels:
        if lab not in row_names or lab not in col_names:
            raise LabelError(f"system {lab!r} must appear in both rows and columns")
        if dict(x.rows)[lab] != dict(x.cols)[lab]:
            raise LabelError(f"system {lab!r} is not square")
    if not labels:
        return x
    nr = len(x.rows)
    t = x.tensor()
    # np.einsum with explicit sublists handles the pairing of traced axes.
    row_idx = list(range(nr))
    col_idx = []
    nxt = nr
    for lab, _ in x.cols:
        if lab in labels:
            col_idx.append(row_names.index(lab))
        else:
            col_idx.append(nxt)
            nxt += 1
    out_idx = [i for i, lab in enumerate(row_names) if lab not in labels] + [
        c for c, (lab, _) in zip(col_idx, x.cols) if lab not in labels
    ]
    res = np.einsum(t, row_idx + col_idx, out_idx)
    rows = tuple(s for s in x.rows if s[0] not in labels)
    cols = tuple(s for s in x.cols if s[0] not in labels)
    return LabeledOperator(res.reshape(_prod(rows), _prod(cols)), rows, cols)


def partial_transpose(x: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    labels = set(labels)
    if not x.is_square_layout:
        raise LabelError("partial transpose needs identical row and column layouts")
    names = x.labels
    unknown = labels - set(names)
    if unknown:
        raise LabelError(f"unknown labels {sorted(unknown)}")
    k = len(names)
    axes = list(range(2 * k))
    for i, lab in enumerate(names):
        if lab in labels:
            axes[i], axes[k + i] = k + i, i
    t = x.tensor().transpose(axes)
    return LabeledOperator(t.reshape(x.matrix.shape), x.rows)


def permutation_operator(
    n: int, d: int, perm: Sequence[int], labels: Sequence[str] | None = None
) -> LabeledOperator:
    """Operator p(pi) with p(pi)|psi_1...psi_n> = |psi_{pi^-1(1)} ... psi_{pi^-1(n)}>.

    ``perm`` is 0-based in image form, ``perm[i] = pi(i)``. With composition
    ``(pi sigma)(i) = pi(sigma(i))`` this is a homomorphism.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of range({n})")
    labels = list(labels) if labels is not None else [f"s{i + 1}" for i in range(n)]
    systems = tuple((lab, d) for lab in labels)
    return LabeledOperator(permutation_matrix(n, d, perm), systems)


def permutation_matrix(n: int, d: int, perm: Sequence[int]) -> np.ndarray:
    """Real dense matrix of p(pi) (see :func:`permutation_operator`)."""
    inv = np.argsort(perm)
    dim = d**n
    idx = np.arange(dim).reshape((d,) * n).transpose(inv).reshape(-1)
    mat = np.zeros((dim, dim))
    mat[np.arange(dim), idx] = 1.0
    return mat


def apply_permutation(vecs: np.ndarray, n: int, d: int, perm: Sequence[int]) -> np.ndarray:
    """Apply p(pi) to the columns of ``vecs`` (shape ``(d**n, ...)``)."""
    inv = [int(i) for i in np.argsort(perm)]
    rest = vecs.shape[1:]
    t = vecs.reshape((d,) * n + rest)
    t = t.transpose(inv + list(range(n, n + len(rest))))
    return t.reshape(vecs.shape)


def compose(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    """(a b)(i) = a(b(i))."""
    return tuple(a[b[i]] for i in range(len(b)))


def all_permutations(n: int) -> list[tuple[int, ...]]:
    return list(_all_perms(range(n)))
