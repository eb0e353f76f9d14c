"""Counter-based random streams.

Every draw is addressed by ``(master_seed, trial, kind, step)`` so a chain's
trajectory does not depend on how trials are scheduled across threads.

The contract, reproducible by any Philox4x64-10 implementation:

* key = ``(master_seed mod 2**64, trial * 16 + kind)``
* a draw of ``m`` 64-bit words per step occupies ``nb = ceil(m / 4)`` blocks;
  step ``s`` uses block counters ``s*nb + 1, ..., s*nb + nb`` (low word of
  the 256-bit counter, upper words zero)
* word ``w`` maps to the open-interval uniform ``((w >> 11) + 0.5) * 2**-53``
* normals come from consecutive uniform pairs ``(u1, u2)`` via Box-Muller:
  ``sqrt(-2 log u1) * (cos(2 pi u2), sin(2 pi u2))``
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = ["DrawKind", "RandomStream"]

_U64 = 2**64
_INV_2_53 = 2.0**-53


class DrawKind(enum.IntEnum):
    START = 0
    NOISE = 1
    ACCEPT = 2
    AUX = 3
    SAMPLER = 4


def _uniform_from_words(words: np.ndarray) -> np.ndarray:
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


class RandomStream:
    """Splittable stream for one trial under a master seed."""

    def __init__(self, master_seed: int = 0, trial: int = 0):
        if trial < 0 or trial >= 2**60:
            raise ValueError(f"trial index out of range: {trial}")
        self.master_seed = int(master_seed) % _U64
        self.trial = int(trial)

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, trial={self.trial})"

    def spawn(self, trial: int) -> "RandomStream":
        return RandomStream(self.master_seed, trial)

    def _key(self, kind: int) -> list[int]:
        return [self.master_seed, (self.trial * 16 + int(kind)) % _U64]

    def words(self, kind: int, step: int, per_step: int, n_steps: int = 1) -> np.ndarray:
        """Raw 64-bit words, shape ``(n_steps, per_step)``, starting at ``step``."""
        if step < 0:
            raise ValueError("step must be nonnegative")
        nb = -(-per_step // 4)
        bg = np.random.Philox(key=self._key(kind), counter=[step * nb, 0, 0, 0])
        raw = bg.random_raw(n_steps * nb * 4).reshape(n_steps, nb * 4)
        return raw[:, :per_step]

    def uniforms(self, kind: int, step: int, size: int = 1, n_steps: int = 1) -> np.ndarray:
        """Uniforms on (0, 1), shape ``(n_steps, size)``."""
        return _uniform_from_words(self.words(kind, step, size, n_steps))

    def normals(self, kind: int, step: int, size: int, n_steps: int = 1) -> np.ndarray:
        """Standard normals, shape ``(n_steps, size)``."""
        pairs = -(-size // 2)
        u = self.uniforms(kind, step, 2 * pairs, n_steps)
        r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
        theta = 2.0 * np.pi * u[:, 1::2]
        z = np.empty((n_steps, 2 * pairs))
        z[:, 0::2] = r * np.cos(theta)
        z[:, 1::2] = r * np.sin(theta)
        return z[:, :size]

    def generator(self, kind: int = DrawKind.SAMPLER) -> np.random.Generator:
        """Sequential generator for variable-count work such as rejection sampling."""
        return np.random.Generator(np.random.Philox(key=self._key(kind)))
