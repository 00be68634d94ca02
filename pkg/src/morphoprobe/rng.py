"""Deterministic random number generation.

All data-side sampling (task construction, perturbation draws, coalition
schedules) goes through a self-contained xoshiro256** generator so that a
given (seed, purpose) pair produces the same stream on every platform and
Python version.  Neural-net code uses numpy's Generator instead (see
morphoprobe.nn); the two worlds never share a stream.

Seed derivation is hierarchical: ``derive_seed(root, "sampler", lang, ...)``
hashes the label path into a fresh 64-bit seed, so adding a new consumer
never shifts the draws of an existing one.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    """One step of splitmix64; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256:
    """xoshiro256** with splitmix64 state expansion from a 64-bit seed."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        s = []
        for _ in range(4):
            state, out = _splitmix64(state)
            s.append(out)
        # All-zero state is the one invalid configuration.
        if not any(s):
            s[0] = 1
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via unbiased rejection sampling."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # Largest multiple of n that fits in 64 bits; draws past it retry.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: list, k: int) -> list:
        """k items drawn uniformly without replacement (order randomized)."""
        if k > len(items):
            raise ValueError(f"cannot sample {k} from {len(items)} items")
        pool = list(items)
        out = []
        for i in range(k):
            j = self.randrange(len(pool) - i) + i
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out

    def choice(self, items: list):
        if not items:
            raise ValueError("choice from empty sequence")
        return items[self.randrange(len(items))]


def derive_seed(root_seed: int, *labels: object) -> int:
    """Map (root seed, label path) to a stable 64-bit stream seed.

    Labels are joined into a canonical byte string and hashed with SHA-256;
    the root seed is mixed in as a prefix.  Purely a namespacing device: two
    distinct label paths collide with negligible probability.
    """
    h = hashlib.sha256()
    h.update(int(root_seed & _MASK64).to_bytes(8, "little"))
    for label in labels:
        part = str(label).encode("utf-8")
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    return int.from_bytes(h.digest()[:8], "little")
