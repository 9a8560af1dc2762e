"""Replayable certificates.

Each certificate stores the constants that enter its final inequality and the
verdict drawn from them.  :func:`replay` recomputes the verdict from the
stored constants alone, so a certificate file can be re-checked without
touching spectrum data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

KINDS = (
    "locus",
    "count_upper",
    "count_lower",
    "window_bound",
    "tail_bound",
    "exclusion",
    "sign",
    "transversality",
    "spectral_largeness",
    "crossing",
    "piercing",
)


@dataclass
class Certificate:
    kind: str
    verdict: Any
    constants: dict = field(default_factory=dict)
    intervals: list = field(default_factory=list)
    rule: str = ""
    provenance: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")

    @property
    def ok(self) -> bool:
        """Whether the certificate establishes its statement."""
        if self.kind in ("sign",):
            return self.verdict in (-1, 1)
        if self.kind in ("count_upper", "window_bound", "tail_bound", "locus"):
            return True
        return bool(self.verdict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["children"] = [c.to_json() if isinstance(c, Certificate) else c for c in self.children]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Certificate":
        kids = [cls.from_json(c) for c in d.get("children", [])]
        return cls(
            kind=d["kind"],
            verdict=d["verdict"],
            constants=dict(d.get("constants", {})),
            intervals=list(d.get("intervals", [])),
            rule=d.get("rule", ""),
            provenance=dict(d.get("provenance", {})),
            children=kids,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


# --------------------------------------------------------------------------
# replay rules: constants -> verdict
# --------------------------------------------------------------------------

def _count(c: dict) -> int:
    return int(math.floor(2.0 * (c["gamma_sup"] + c["budget"]) / c["profile_min"]))


def _lower(c: dict) -> bool:
    return c["gamma_inf"] - c["budget"] > 0.0


def _tail(c: dict) -> float:
    total = math.fsum(e * n for e, n in c["windows"]) + c["remainder"]
    return total


def _exclusion(c: dict) -> bool:
    # worst cell: q at its node minus the tau, s and rounding margins must exceed 1
    return c["worst_node_q"] - c["tau_margin"] - c["s_margin"] - c["rounding_margin"] > 1.0


def _sign(c: dict) -> int:
    if c["tail"] < 2.0 * abs(c["gamma"]) - 2.0 * c["budget"] and c["gap"] <= c["sign_range"]:
        # profile_sign is the sign of the odd profile on (0, sign_range)
        return int(math.copysign(1, c["gamma"])) * int(c["profile_sign"])
    return 0


def _transversality(c: dict) -> bool:
    return (
        c["tail"] * c["two_pi_cy"] < 2.0 * c["gamma_tilde_min_abs"] - 2.0 * c["budget"]
        and c["profile_deriv_sup_on_band"] < 0.0
    )


def _locus(c: dict):
    return c["max_step_variation"] < c["continuity_tol"]


def _crossing(c: dict):
    return bool(c["all_children_ok"])


def _piercing(c: dict):
    return sum(c["signs"]) == 0 and bool(c["all_children_ok"])


RULES: dict[str, Callable[[dict], Any]] = {
    "count_upper": _count,
    "window_bound": _count,
    "count_lower": _lower,
    "tail_bound": _tail,
    "exclusion": _exclusion,
    "spectral_largeness": _exclusion,
    "sign": _sign,
    "transversality": _transversality,
}


def replay(cert: Certificate) -> bool:
    """Re-derive ``cert.verdict`` from its constants; children are replayed too."""
    if not all(replay(ch) for ch in cert.children):
        return False
    c = cert.constants
    if cert.kind == "locus":
        return bool(_locus(c))
    if cert.kind in ("crossing", "piercing"):
        ok = all(ch.ok for ch in cert.children) == bool(c["all_children_ok"])
        rule = _crossing if cert.kind == "crossing" else _piercing
        return ok and bool(rule(c)) == bool(cert.verdict)
    got = RULES[cert.kind](c)
    if cert.kind == "tail_bound":
        return got <= cert.verdict * (1 + 1e-12) + 1e-300
    return got == cert.verdict


def replay_file(path) -> bool:
    with open(path) as fh:
        doc = json.load(fh)
    certs = doc if isinstance(doc, list) else doc.get("certificates", [doc])
    return all(replay(Certificate.from_json(c)) for c in certs)
