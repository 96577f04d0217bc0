"""Bundled large-scale sweep results, for orientation only.

The numbers come from 124M-parameter language-model runs that are far
outside what this toolkit's desk-scale harness can reproduce; they document
where each optimizer's stable learning-rate region sat at that scale.
Nothing here feeds the algorithms.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .errors import ConfigError


@lru_cache(maxsize=1)
def published_sweeps() -> dict:
    """The bundled sweep tables, parsed once."""
    text = resources.files("specopt.data").joinpath("reference_sweeps.json").read_text("ascii")
    return json.loads(text)


def published_best(optimizer_token: str) -> tuple[float, float]:
    """(learning rate, val loss) of the best published trial for a token."""
    sweeps = published_sweeps()["sweeps"]
    key = optimizer_token.strip().lower()
    if key == "muon":
        key = "msgdz"
    if key not in sweeps:
        raise ConfigError(
            f"no published sweep for {optimizer_token!r}; have: {', '.join(sorted(sweeps))}"
        )
    best = sweeps[key]["best"]
    return float(best["lr"]), float(best["val_loss"])
