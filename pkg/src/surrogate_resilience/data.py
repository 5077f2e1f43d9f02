"""Study-level containers."""

from dataclasses import dataclass

import numpy as np

__all__ = ["StudyData", "NewStudySurrogates", "group_arrays"]


def _vec(x, name):
    a = np.array(x, dtype=float).ravel()
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StudyData:
    """Surrogate and outcome vectors of one completed study, split by arm."""

    study_id: str
    s0: np.ndarray
    y0: np.ndarray
    s1: np.ndarray
    y1: np.ndarray

    def __post_init__(self):
        for name in ("s0", "y0", "s1", "y1"):
            object.__setattr__(self, name, _vec(getattr(self, name), name))
        object.__setattr__(self, "study_id", str(self.study_id))
        for g in (0, 1):
            s, y = self.group(g)
            if s.shape != y.shape:
                raise ValueError(f"study {self.study_id}: s{g} and y{g} differ in length")
            if s.size < 1:
                raise ValueError(f"study {self.study_id}: group {g} is empty")

    def group(self, g):
        """``(s, y)`` for arm ``g``."""
        if g == 0:
            return self.s0, self.y0
        if g == 1:
            return self.s1, self.y1
        raise ValueError(f"group must be 0 or 1, got {g!r}")

    @property
    def n(self):
        return self.s0.size + self.s1.size


@dataclass(frozen=True, eq=False)
class NewStudySurrogates:
    """Surrogates observed in the new study, where outcomes are unavailable."""

    s0: np.ndarray
    s1: np.ndarray

    def __post_init__(self):
        for name in ("s0", "s1"):
            v = _vec(getattr(self, name), name)
            if v.size < 1:
                raise ValueError(f"new study group {name[-1]} is empty")
            object.__setattr__(self, name, v)

    def group(self, g):
        if g not in (0, 1):
            raise ValueError(f"group must be 0 or 1, got {g!r}")
        return self.s1 if g else self.s0


def group_arrays(studies, g):
    """Pooled ``(s, y)`` over all studies for arm ``g``."""
    pairs = [st.group(g) for st in studies]
    return (np.concatenate([p[0] for p in pairs]),
            np.concatenate([p[1] for p in pairs]))
