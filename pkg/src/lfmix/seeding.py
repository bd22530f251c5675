"""Counter-based deterministic random draws.

Every random quantity in the package is a pure function of a 64-bit seed and
a tuple of integer counters (agent id, time step, coordinate, sweep point).
Draws therefore do not depend on evaluation order, thread count, or on how
many other draws exist: resizing a system or reordering a sweep leaves all
unrelated values untouched.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    # splitmix64 finalizer; bijective on 64-bit integers
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *counters: int) -> int:
    """Fold integer counters into a seed; one mixing round per counter."""
    z = _finalize(int(seed) ^ _GOLDEN)
    for c in counters:
        z = _finalize(z ^ _finalize((int(c) + 1) * _GOLDEN))
    return z


def unit_uniform(seed: int, *counters: int) -> float:
    """Uniform draw in [0, 1) keyed by (seed, *counters). Pure and stateless."""
    return (derive_key(seed, *counters) >> 11) * (1.0 / (1 << 53))
