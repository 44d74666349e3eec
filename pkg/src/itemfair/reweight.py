"""Sample reweighting from the gap between history and target group shares."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence as Seq

from .dataset import Sequence
from .grouping import GroupScheme
from .metrics import gh

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightTable:
    scheme: str
    group_weights: dict
    sample_weights: dict
    gh_tr: dict
    gh_ta: dict
    warnings: tuple = field(default=())

    def __getitem__(self, ref: str) -> float:
        return self.sample_weights[ref]


def split_tr_ta(sequences: Seq[Sequence]) -> tuple[list[tuple], list[tuple]]:
    """Index-aligned histories and singleton targets of training sequences."""
    if not sequences:
        raise ValueError("no sequences")
    bad = [s.ref for s in sequences if s.split != "train"]
    if bad:
        raise ValueError(f"{len(bad)} non-train sequences, first: {bad[0]}")
    return [tuple(s.history) for s in sequences], [(s.target,) for s in sequences]


def group_weights(gh_tr: Mapping[str, float], gh_ta: Mapping[str, float],
                  warnings: list | None = None) -> dict[str, float]:
    """Ratio of history share to target share per group.

    Groups with no target share get weight 1; no sample ever uses it.
    Groups with targets but no history share get weight 0, with a warning.
    """
    if set(gh_tr) != set(gh_ta):
        raise ValueError("history and target shares cover different groups")
    out = {}
    for g in gh_tr:
        if gh_ta[g] < 0:
            raise ValueError(f"negative target share for group {g}")
        if gh_ta[g] == 0:
            msg = f"group {g} has no targets; weight set to 1"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            out[g] = 1.0
        else:
            out[g] = gh_tr[g] / gh_ta[g]
            if out[g] == 0:
                msg = f"group {g} has targets but no history share; weight is 0"
                log.warning(msg)
                if warnings is not None:
                    warnings.append(msg)
    return out


def sample_weights(targets: Mapping[str, str], scheme: GroupScheme, weights: Mapping[str, float],
                   warnings: list | None = None) -> dict[str, float]:
    """Per-sample weight: mean group weight over the target item's groups.

    ``targets`` maps sequence ref to target item. Ungrouped targets get 1.
    """
    out = {}
    ungrouped = 0
    for ref, item in targets.items():
        groups = scheme.groups_of(item)
        if groups:
            out[ref] = math.fsum(weights[g] for g in groups) / len(groups)
        else:
            ungrouped += 1
            out[ref] = 1.0
    if ungrouped:
        msg = f"{ungrouped} targets belong to no group; weight set to 1"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
    return out


def build_weight_table(sequences: Seq[Sequence], scheme: GroupScheme) -> WeightTable:
    notes: list[str] = []
    histories, targets = split_tr_ta(sequences)
    gh_tr = gh(histories, scheme)
    gh_ta = gh(targets, scheme)
    gw = group_weights(gh_tr, gh_ta, notes)
    sw = sample_weights({s.ref: s.target for s in sequences}, scheme, gw, notes)
    return WeightTable(scheme.name, gw, sw, gh_tr, gh_ta, tuple(notes))


def weighted_loss(per_sample_losses: Mapping[str, float], weights: WeightTable | Mapping[str, float]) -> float:
    """Sum of weight times loss. Divide by the sample count for a mean."""
    table = weights.sample_weights if isinstance(weights, WeightTable) else weights
    missing = [ref for ref in per_sample_losses if ref not in table]
    if missing:
        raise KeyError(f"no weight for sample {missing[0]!r}")
    return math.fsum(table[ref] * loss for ref, loss in per_sample_losses.items())


def save_weights(table: WeightTable, path, seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# scheme: {table.scheme}\n")
        fh.write(f"# seed: {'' if seed is None else seed}\n")
        fh.write("# loss: sum_i weight_i * loss_i; divide by number of samples for a mean\n")
        for g, w in table.group_weights.items():
            fh.write(f"# group_weight\t{g}\t{w!r}\n")
        fh.write("sequence_ref\tweight\n")
        for ref, w in table.sample_weights.items():
            fh.write(f"{ref}\t{w!r}\n")


def load_weights(path) -> dict[str, float]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("sequence_ref\t") or not line.strip():
                continue
            ref, w = line.rstrip("\n").split("\t")
            out[ref] = float(w)
    return out
