"""Deterministic serialization for specs and results.

Floats are written with 17 significant digits (``%.17g``), which
round-trips IEEE doubles exactly, so re-parsing an emitted document
reproduces the in-memory values bit for bit and repeated runs with the
same inputs produce byte-identical files.  Result documents embed a hash
of the semantically relevant configuration plus the seed for provenance.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from typing import Any

import numpy as np

from .chains import Bernoulli, ChainSpec, Constant, DiscreteFinite, RewardDist, Uniform


def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite float {x!r} in output document")
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with deterministic float formatting (insertion order kept)."""

    def emit(o: Any, depth: int) -> str:
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
        if o is None:
            return "null"
        if o is True:
            return "true"
        if o is False:
            return "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            items = [emit(v, depth + 1) for v in o]
            return "[\n" + ",\n".join(pad_in + s for s in items) + "\n" + pad + "]"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{json.dumps(str(k))}: {emit(v, depth + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(pad_in + s for s in items) + "\n" + pad + "}"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return emit(obj, 0) + "\n"


def dumps_compact(obj: Any) -> str:
    """Single-line variant for embedding inside CSV cells."""
    text = dumps(obj, indent=0)
    return " ".join(line.strip() for line in text.splitlines())


def config_hash(config: dict) -> str:
    """sha256 over the canonical (sorted-key, 17g-float) form of ``config``."""
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _plain(o: Any) -> Any:
    if isinstance(o, np.ndarray):
        return [_plain(v) for v in o.tolist()]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return format(float(o), ".17g")
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if dataclasses.is_dataclass(o) and not isinstance(o, type):
        return _plain(dataclasses.asdict(o))
    return o


# ---------------------------------------------------------------------------
# Spec documents


def dist_to_dict(dist: RewardDist) -> dict:
    if isinstance(dist, Constant):
        return {"type": "constant", "value": dist.value}
    if isinstance(dist, Bernoulli):
        return {"type": "bernoulli", "p": dist.p}
    if isinstance(dist, Uniform):
        return {"type": "uniform", "a": dist.lo, "b": dist.hi}
    if isinstance(dist, DiscreteFinite):
        return {"type": "discrete", "values": list(dist.values), "probs": list(dist.probs)}
    raise TypeError(f"unknown distribution {type(dist).__name__}")


def spec_to_dict(spec: ChainSpec) -> dict:
    chains = []
    for ell in (1, 2):
        rewards = [
            {"x": x, "y": y, "dist": dist_to_dict(d)}
            for (l, x, y), d in sorted(spec.rewards.items())
            if l == ell
        ]
        chains.append({"P": spec.P(ell).tolist(), "rewards": rewards})
    return {
        "n_states": spec.n_states,
        "chains": chains,
        "chain_names": list(spec.chain_names),
        "state_names": list(spec.state_names),
        "note": spec.note,
    }


# ---------------------------------------------------------------------------
# Result documents


def to_jsonable(obj: Any) -> Any:
    """Dataclasses/arrays to plain JSON-ready structures (floats untouched)."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def checkpoint_csv(checkpoints: list) -> str:
    """Checkpoint series as CSV: comma-separated, '.' decimal, LF endings,
    header ``n,alpha_hat_mle,alpha_hat_sae,gamma_hat_json``."""
    lines = ["n,alpha_hat_mle,alpha_hat_sae,gamma_hat_json"]
    for row in checkpoints:
        n_k, a_mle, a_sae, gamma = row
        cell = dumps_compact(to_jsonable(gamma))
        lines.append(f"{n_k},{_fmt_float(float(a_mle))},{_fmt_float(float(a_sae))},\"{cell}\"")
    return "\n".join(lines) + "\n"
