import numpy as np

from parsinggait.gps.types import GaitParsingSequence


def random_sequence(rng, n=None, h=None, w=None, k=12, **meta):
    n = n or int(rng.integers(1, 6))
    h = h or int(rng.integers(1, 12))
    w = w or int(rng.integers(1, 12))
    # blocky maps so runs have realistic lengths
    base = rng.integers(0, k, size=(n, h, max(1, w // 3) + 1))
    arr = np.repeat(base, 3, axis=2)[:, :, :w].astype(np.uint8)
    return GaitParsingSequence.from_array(arr, num_classes=k, **meta)


# criterion number -> (name, passed, detail); printed by the terminal summary hook
ACCEPTANCE = {}


class criterion:
    """Records one acceptance criterion as PASS when the block completes, FAIL otherwise."""

    def __init__(self, number, name):
        self.number, self.name, self.detail = number, name, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            ACCEPTANCE[self.number] = (self.name, True, self.detail)
        else:
            msg = str(exc).strip().splitlines()[0] if str(exc).strip() else exc_type.__name__
            ACCEPTANCE[self.number] = (self.name, False, f"{self.detail} {msg}".strip())
        return False
