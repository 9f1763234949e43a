"""Deterministic 64-bit seed derivation (SplitMix64 finaliser)."""

MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit seed; order matters."""
    h = 0
    for p in parts:
        h = splitmix64(h ^ (int(p) & MASK))
    return h
