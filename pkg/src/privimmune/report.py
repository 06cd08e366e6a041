"""Per-run privacy reports: the accounted guarantee plus every derived parameter."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple


@dataclass(frozen=True)
class PrivacyReport:
    mechanism: str
    # accounted (epsilon, delta) of each stage, kept separate; no combined total is asserted
    guarantee: Dict[str, float]
    parameters: Dict[str, float] = field(default_factory=dict)
    caveats: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "guarantee": {k: _num(v) for k, v in self.guarantee.items()},
            "parameters": {k: _num(v) for k, v in self.parameters.items()},
            "caveats": list(self.caveats),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


DATA_DEPENDENT_MAX_DEGREE = (
    "the max degree used to rescale the privacy parameters is read from the private graph "
    "and is not itself released privately"
)
TWO_STAGE = "selection and stop-rule costs are reported per stage; their composition is not restated"
