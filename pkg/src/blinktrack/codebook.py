"""Blink-sequence dictionary: cyclic matching, generation and the text file format."""

from __future__ import annotations

import os
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DictionaryError
from .model import TSeries

__all__ = [
    "BlinkDictionary",
    "cyclic_distance",
    "cyclic_zero_run",
    "match_sequence",
    "generate_dictionary",
    "load_dictionary",
    "save_dictionary",
]


def _to_mask(bits: Sequence[int]) -> int:
    mask = 0
    for b in bits:
        mask = (mask << 1) | int(b)
    return mask


def _rotations(mask: int, length: int) -> list[int]:
    full = (1 << length) - 1
    return [((mask << r) | (mask >> (length - r))) & full for r in range(length)]


def cyclic_zero_run(bits: Sequence[int]) -> int:
    """Longest run of zeros when ``bits`` is read as a loop."""
    n = len(bits)
    if not any(bits):
        return n
    longest = run = 0
    for b in list(bits) * 2:
        run = run + 1 if b == 0 else 0
        longest = max(longest, run)
    return min(longest, n)


def cyclic_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Minimum Hamming distance between ``a`` and any rotation of ``b``."""
    if len(a) != len(b):
        raise ValueError("sequences differ in length")
    ma = _to_mask(a)
    return min((ma ^ r).bit_count() for r in _rotations(_to_mask(b), len(b)))


class BlinkDictionary:
    """LED-ID to periodic bit sequence codebook.

    Args:
        entries: mapping of LED-ID to a 0/1 sequence; all sequences share one length.
        errors: Hamming errors tolerated when matching.
        max_zero_bits: if given, no sequence may hold a longer cyclic zero run.
    """

    def __init__(
        self,
        entries: Mapping[int, Sequence[int]],
        errors: int = 0,
        max_zero_bits: int | None = None,
    ) -> None:
        if not entries:
            raise DictionaryError("dictionary is empty")
        self.entries: dict[int, tuple[int, ...]] = {
            int(k): tuple(int(b) for b in v) for k, v in sorted(entries.items())
        }
        self.errors = int(errors)
        lengths = {len(v) for v in self.entries.values()}
        if len(lengths) != 1:
            raise DictionaryError(f"sequences have differing lengths {sorted(lengths)}")
        self.length = lengths.pop()
        if self.length < 2:
            raise DictionaryError("sequence length must be >= 2")
        for led_id, seq in self.entries.items():
            if any(b not in (0, 1) for b in seq):
                raise DictionaryError(f"ID {led_id}: sequence must be binary")
            if not any(seq):
                raise DictionaryError(f"ID {led_id}: sequence has no '1' bits")
            if max_zero_bits is not None and cyclic_zero_run(seq) > max_zero_bits:
                raise DictionaryError(
                    f"ID {led_id}: zero run {cyclic_zero_run(seq)} exceeds b_m0={max_zero_bits}"
                )
        need = 2 * self.errors + 1
        ids = list(self.entries)
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                dist = cyclic_distance(self.entries[a], self.entries[b])
                if dist < need:
                    raise DictionaryError(
                        f"IDs {a} and {b} are {dist} bits apart cyclically; need >= {need}"
                    )

        self._rotations = {k: _rotations(_to_mask(v), self.length) for k, v in self.entries.items()}
        self._exact: dict[int, set[int]] = {}
        for led_id, rots in self._rotations.items():
            for r in rots:
                self._exact.setdefault(r, set()).add(led_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, led_id: object) -> bool:
        return led_id in self.entries

    def __getitem__(self, led_id: int) -> tuple[int, ...]:
        return self.entries[led_id]

    def lookup(self, window: int) -> int | None:
        """ID whose best rotation is within ``errors`` bits of ``window``.

        ``window`` packs the newest ``length`` observed bits oldest-first. More
        than one qualifying ID means the window is ambiguous and yields None.
        """
        if self.errors == 0:
            hit = self._exact.get(window)
            if hit is None or len(hit) != 1:
                return None
            return next(iter(hit))
        found = None
        for led_id, rots in self._rotations.items():
            if min((window ^ r).bit_count() for r in rots) <= self.errors:
                if found is not None:
                    return None
                found = led_id
        return found

    def lookup_bits(self, bits: Sequence[int]) -> int | None:
        if len(bits) != self.length:
            raise ValueError(f"expected {self.length} bits, got {len(bits)}")
        return self.lookup(_to_mask(bits))


def match_sequence(series: TSeries, dictionary: BlinkDictionary) -> int | None:
    """Decode the newest ``L_D`` states of ``series`` against ``dictionary``."""
    if len(series.states) < dictionary.length:
        return None
    return dictionary.lookup(series.window_bits(dictionary.length))


def generate_dictionary(
    n_ids: int,
    length: int,
    max_zero_bits: int,
    errors: int = 0,
    seed: int = 0,
    max_tries: int = 200_000,
) -> BlinkDictionary:
    """Random search for a codebook with ``n_ids`` cyclically separated sequences.

    Raises:
        DictionaryError: infeasible parameters or no codebook within ``max_tries``.
    """
    if n_ids < 1 or length < 2:
        raise DictionaryError("need n_ids >= 1 and length >= 2")
    need = 2 * errors + 1
    if n_ids > 1 and need > length:
        raise DictionaryError(
            f"cyclic distance {need} is impossible for sequences of length {length}"
        )
    rng = np.random.default_rng(seed)
    chosen: list[tuple[int, ...]] = []
    masks: list[list[int]] = []
    for _ in range(max_tries):
        cand = tuple(int(b) for b in rng.integers(0, 2, size=length))
        if not any(cand) or cyclic_zero_run(cand) > max_zero_bits:
            continue
        m = _to_mask(cand)
        if any(min((m ^ r).bit_count() for r in rots) < need for rots in masks):
            continue
        chosen.append(cand)
        masks.append(_rotations(m, length))
        if len(chosen) == n_ids:
            return BlinkDictionary(dict(enumerate(chosen)), errors, max_zero_bits)
    raise DictionaryError(
        f"no codebook with {n_ids} IDs (L_D={length}, b_m0={max_zero_bits}, e={errors}) "
        f"found in {max_tries} draws; found {len(chosen)}"
    )


def load_dictionary(
    path: str | os.PathLike, errors: int = 0, max_zero_bits: int | None = None
) -> BlinkDictionary:
    """Read ``id, bitstring`` records; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DictionaryError(f"cannot read dictionary file {os.fspath(path)}: {exc}") from exc
    return parse_dictionary(lines, errors, max_zero_bits, source=os.fspath(path))


def parse_dictionary(
    lines: Iterable[str], errors: int = 0, max_zero_bits: int | None = None, source: str = "<text>"
) -> BlinkDictionary:
    entries: dict[int, list[int]] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not parts[1] or set(parts[1]) - {"0", "1"}:
            raise DictionaryError(f"{source}:{lineno}: expected 'id, bitstring', got {raw.strip()!r}")
        try:
            led_id = int(parts[0])
        except ValueError:
            raise DictionaryError(f"{source}:{lineno}: bad LED-ID {parts[0]!r}") from None
        if led_id in entries:
            raise DictionaryError(f"{source}:{lineno}: duplicate LED-ID {led_id}")
        entries[led_id] = [int(c) for c in parts[1]]
    try:
        return BlinkDictionary(entries, errors, max_zero_bits)
    except DictionaryError as exc:
        raise DictionaryError(f"{source}: {exc}") from None


def save_dictionary(dictionary: BlinkDictionary, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# L_D={dictionary.length} e={dictionary.errors}\n")
        for led_id, seq in dictionary.entries.items():
            fh.write(f"{led_id}, {''.join(map(str, seq))}\n")
