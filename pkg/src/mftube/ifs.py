"""Self-similar systems and word combinatorics over the code space.

A system is a list of contracting similarities S_i(x) = ratio_i * O_i x + t_i
(O_i orthogonal) together with a probability vector.  The attractor K is the
unique compact set with K = union_i S_i(K); the self-similar measure mu is
the unique probability measure with mu = sum_i p_i mu o S_i^{-1}.

Words are finite strings over {1..N}; each carries the cached products
r_i = prod ratio and p_i = prod prob of its letters, with the empty-word
convention r = p = 1 so that length-1 words have a parent.

All types are immutable after construction and operations are pure given
an explicit RNG, so everything here is safe to call from multiple threads;
Monte Carlo callers should derive independent streams from a master seed
(numpy SeedSequence spawning).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from mftube import _kernels
from mftube.errors import DimensionMismatch, InvalidSystem

ORTHO_TOL = 1e-12
PROB_TOL = 1e-12
DEFAULT_EQ_TOL = 1e-12
DEFAULT_NODE_BUDGET = 2 ** 24


@dataclass(frozen=True)
class SimilarityMap:
    """One contracting similarity x -> ratio * orthogonal @ x + translation."""

    ratio: float
    orthogonal: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "orthogonal",
                           np.asarray(self.orthogonal, dtype=float))
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=float))
        if not 0.0 < self.ratio < 1.0:
            raise InvalidSystem(
                f"contraction ratio must lie in (0,1), got {self.ratio}")
        d = self.translation.shape[0]
        if self.orthogonal.shape != (d, d):
            raise InvalidSystem(
                f"orthogonal part has shape {self.orthogonal.shape}, "
                f"expected ({d}, {d})")
        err = np.max(np.abs(self.orthogonal @ self.orthogonal.T - np.eye(d)))
        if err > ORTHO_TOL:
            raise InvalidSystem(
                f"matrix is not orthogonal (|O O^T - I| = {err:.3e})")

    @property
    def dimension(self) -> int:
        return self.translation.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.ratio * (x @ self.orthogonal.T) + self.translation

    def fixed_point(self) -> np.ndarray:
        d = self.dimension
        return np.linalg.solve(np.eye(d) - self.ratio * self.orthogonal,
                               self.translation)


@dataclass(frozen=True)
class SelfSimilarSystem:
    """Contracting similarities S_1..S_N with a probability vector."""

    dimension: int
    maps: tuple[SimilarityMap, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probabilities",
                           tuple(float(p) for p in self.probabilities))
        if len(self.maps) < 2:
            raise InvalidSystem("a self-similar system needs at least 2 maps")
        if len(self.maps) != len(self.probabilities):
            raise InvalidSystem(
                f"{len(self.maps)} maps but {len(self.probabilities)} "
                "probabilities")
        for m in self.maps:
            if m.dimension != self.dimension:
                raise InvalidSystem(
                    f"map dimension {m.dimension} != system dimension "
                    f"{self.dimension}")
        if any(p <= 0.0 for p in self.probabilities):
            raise InvalidSystem("probabilities must be strictly positive")
        total = sum(self.probabilities)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidSystem(
                f"probabilities sum to {total!r}, expected 1")

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    @cached_property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    @cached_property
    def probs(self) -> np.ndarray:
        return np.array(self.probabilities)

    @property
    def r_min(self) -> float:
        return float(self.ratios.min())

    @property
    def r_max(self) -> float:
        return float(self.ratios.max())

    @cached_property
    def anchor(self) -> np.ndarray:
        """Fixed point of S_1; a cheaply exact point of the attractor."""
        return self.maps[0].fixed_point()

    @cached_property
    def hull_1d(self) -> tuple[float, float]:
        """Convex hull [A, B] of the attractor (d = 1 only).

        The hull is the fixed interval of I -> [min_i S_i(I), max_i S_i(I)];
        iterating from the fixed points converges at rate r_max.
        """
        if self.dimension != 1:
            raise DimensionMismatch("hull_1d requires a 1-D system")
        fixed = [float(m.fixed_point()[0]) for m in self.maps]
        lo, hi = min(fixed), max(fixed)
        for _ in range(400):
            pts = []
            for m in self.maps:
                pts.append(float(m.apply(np.array([lo]))[0]))
                pts.append(float(m.apply(np.array([hi]))[0]))
            new_lo, new_hi = min(pts), max(pts)
            if abs(new_lo - lo) < 1e-16 and abs(new_hi - hi) < 1e-16:
                break
            lo, hi = new_lo, new_hi
        return lo, hi

    @cached_property
    def signed_params_1d(self) -> tuple[np.ndarray, np.ndarray]:
        """(rho, shift) with S_i(x) = rho_i x + shift_i (d = 1 only)."""
        if self.dimension != 1:
            raise DimensionMismatch("signed_params_1d requires a 1-D system")
        rho = np.array([m.ratio * m.orthogonal[0, 0] for m in self.maps])
        shift = np.array([m.translation[0] for m in self.maps])
        return rho, shift

    def word(self, letters: Iterable[int]) -> "Word":
        return Word.build(self, letters)

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "maps": [
                {
                    "ratio": m.ratio,
                    "orthogonal": m.orthogonal.tolist(),
                    "translation": m.translation.tolist(),
                }
                for m in self.maps
            ],
            "probabilities": list(self.probabilities),
        }


def system_from_dict(data: dict) -> SelfSimilarSystem:
    """Build a system from the JSON schema.

    Schema: {"dimension": d, "maps": [{"ratio": x, "orthogonal": [[..]]
    (optional, default identity), "translation": [..]}], "probabilities":
    [..]}.
    """
    try:
        dim = int(data["dimension"])
        raw_maps = data["maps"]
        probabilities = [float(p) for p in data["probabilities"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSystem(f"malformed system description: {exc}") from exc
    maps = []
    for entry in raw_maps:
        try:
            ratio = float(entry["ratio"])
            translation = [float(t) for t in entry["translation"]]
            orthogonal = entry.get("orthogonal")
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSystem(f"malformed map entry: {exc}") from exc
        if orthogonal is None:
            orthogonal = np.eye(dim)
        maps.append(SimilarityMap(ratio=ratio, orthogonal=orthogonal,
                                  translation=translation))
    return SelfSimilarSystem(dimension=dim, maps=tuple(maps),
                             probabilities=tuple(probabilities))


def load_system(path) -> SelfSimilarSystem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSystem(f"system file is not valid JSON: {exc}")
    return system_from_dict(data)


def cantor_system(p1: float = 0.5) -> SelfSimilarSystem:
    """Middle-thirds Cantor system with weights (p1, 1 - p1)."""
    return system_from_dict({
        "dimension": 1,
        "maps": [
            {"ratio": 1 / 3, "translation": [0.0]},
            {"ratio": 1 / 3, "translation": [2 / 3]},
        ],
        "probabilities": [p1, 1.0 - p1],
    })


@dataclass(frozen=True)
class Word:
    """A finite string over {1..N} with cached ratio/probability products."""

    letters: tuple[int, ...]
    ratio_product: float
    prob_product: float

    @classmethod
    def build(cls, system: SelfSimilarSystem, letters: Iterable[int]) -> "Word":
        letters = tuple(int(x) for x in letters)
        rp, pp = 1.0, 1.0
        for a in letters:
            if not 1 <= a <= system.n_maps:
                raise InvalidSystem(
                    f"letter {a} outside alphabet 1..{system.n_maps}")
            rp *= system.maps[a - 1].ratio
            pp *= system.probabilities[a - 1]
        return cls(letters=letters, ratio_product=rp, prob_product=pp)

    @classmethod
    def empty(cls) -> "Word":
        return cls(letters=(), ratio_product=1.0, prob_product=1.0)

    def __len__(self) -> int:
        return len(self.letters)

    def parent(self, system: SelfSimilarSystem) -> "Word":
        if not self.letters:
            raise InvalidSystem("the empty word has no parent")
        return Word.build(system, self.letters[:-1])

    def as_string(self) -> str:
        return "".join(str(a) for a in self.letters)


def word_from_string(system: SelfSimilarSystem, text: str) -> Word:
    if text in ("", "-"):
        return Word.empty()
    return Word.build(system, (int(c) for c in text))


@dataclass
class CutSet:
    """The words crossed by scale r: interior (r_i < r < r_parent) plus
    boundary (r = r_parent within tolerance), in lexicographic order."""

    r: float
    eq_tol: float
    _letters: np.ndarray = field(repr=False)
    _offsets: np.ndarray = field(repr=False)
    _flags: np.ndarray = field(repr=False)
    _rprod: np.ndarray = field(repr=False)
    _pprod: np.ndarray = field(repr=False)

    def _words(self, want_flag: int) -> list[Word]:
        out = []
        for k in range(len(self._flags)):
            if self._flags[k] != want_flag:
                continue
            seg = self._letters[self._offsets[k]:self._offsets[k + 1]]
            out.append(Word(letters=tuple(int(a) for a in seg),
                            ratio_product=float(self._rprod[k]),
                            prob_product=float(self._pprod[k])))
        return out

    @cached_property
    def interior_words(self) -> list[Word]:
        return self._words(0)

    @cached_property
    def boundary_words(self) -> list[Word]:
        return self._words(1)

    @property
    def interior_ratio_products(self) -> np.ndarray:
        return self._rprod[self._flags == 0]

    @property
    def interior_prob_products(self) -> np.ndarray:
        return self._pprod[self._flags == 0]

    @property
    def boundary_ratio_products(self) -> np.ndarray:
        return self._rprod[self._flags == 1]

    @property
    def boundary_prob_products(self) -> np.ndarray:
        return self._pprod[self._flags == 1]

    @property
    def size(self) -> int:
        return int(len(self._flags))


def cut_set(system: SelfSimilarSystem, r: float,
            eq_tol: float = DEFAULT_EQ_TOL,
            node_budget: int = DEFAULT_NODE_BUDGET) -> CutSet:
    """Enumerate the scale-r cut set by depth-first search from the empty
    word, descending while the ratio product stays at or above r.

    Raises BudgetExceeded when the DFS would expand more than
    ``node_budget`` nodes (r too small for direct enumeration).
    """
    if not 0.0 < r < 1.0:
        raise InvalidSystem(f"cut-set scale must lie in (0,1), got {r}")
    letters, offsets, flags, rprod, pprod = _kernels.cut_set_arrays(
        system.ratios, system.probs, float(r), float(eq_tol),
        int(node_budget))
    return CutSet(r=r, eq_tol=eq_tol, _letters=letters, _offsets=offsets,
                  _flags=flags, _rprod=rprod, _pprod=pprod)


def sample_point(system: SelfSimilarSystem, depth: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw one point S_{i_1} o ... o S_{i_depth}(anchor) with letters drawn
    from the probability vector; approximates mu within r_max^depth * diam."""
    if depth < 1:
        raise InvalidSystem("sampling depth must be >= 1")
    letters = rng.choice(system.n_maps, size=depth, p=system.probs)
    x = system.anchor.copy()
    for a in letters[::-1]:
        x = system.maps[a].apply(x)
    return x


def sample_cloud(system: SelfSimilarSystem, n: int, depth: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Vectorized address sampling: n points at the given depth, one row
    per point."""
    letters = rng.choice(system.n_maps, size=(n, depth), p=system.probs)
    x = np.tile(system.anchor, (n, 1))
    for j in range(depth - 1, -1, -1):
        col = letters[:, j]
        for i, m in enumerate(system.maps):
            mask = col == i
            if mask.any():
                x[mask] = m.apply(x[mask])
    return x


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    errors: tuple[str, ...]
    ssc_heuristic: bool | None
    min_image_gap: float | None

    def __bool__(self) -> bool:
        return self.valid


def validate_system(system, samples_per_map: int = 200, depth: int = 30,
                    rng: np.random.Generator | None = None,
                    margin: float = 1e-6) -> ValidationReport:
    """Check type invariants and report a sampled strong-separation
    heuristic.

    Accepts either a SelfSimilarSystem or a raw JSON-style dict.  The SSC
    check samples ``samples_per_map`` points per first-level image via
    random addresses of the given depth and reports the minimum pairwise
    distance between distinct image clouds; it is evidence, not proof.
    """
    if isinstance(system, dict):
        try:
            system = system_from_dict(system)
        except InvalidSystem as exc:
            return ValidationReport(valid=False, errors=(str(exc),),
                                    ssc_heuristic=None, min_image_gap=None)
    if rng is None:
        rng = np.random.default_rng(0)
    clouds = []
    base = sample_cloud(system, samples_per_map, max(depth, 30), rng)
    for m in system.maps:
        clouds.append(m.apply(base))
    min_gap = np.inf
    for i in range(len(clouds)):
        for j in range(i + 1, len(clouds)):
            diff = clouds[i][:, None, :] - clouds[j][None, :, :]
            gap = float(np.sqrt((diff ** 2).sum(axis=-1)).min())
            min_gap = min(min_gap, gap)
    return ValidationReport(valid=True, errors=(),
                            ssc_heuristic=bool(min_gap > margin),
                            min_image_gap=min_gap)


def first_level_gaps_1d(system: SelfSimilarSystem) -> np.ndarray:
    """Gap lengths between consecutive first-level hull images (d = 1).

    Negative overlaps are clamped to zero; the exact tube machinery assumes
    non-overlapping images.
    """
    lo, hi = system.hull_1d
    ends = []
    for m in system.maps:
        x = float(m.apply(np.array([lo]))[0])
        y = float(m.apply(np.array([hi]))[0])
        ends.append((min(x, y), max(x, y)))
    ends.sort()
    gaps = []
    for (a_lo, a_hi), (b_lo, _) in zip(ends, ends[1:]):
        gaps.append(max(0.0, b_lo - a_hi))
    return np.array([g for g in gaps if g > 0.0])
