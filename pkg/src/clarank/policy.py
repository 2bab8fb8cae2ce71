"""Answer-type driven selection of which clarification parts join the query.

Three rules cover all eight (polarity, length) cells: multi-word negative
answers keep only the answer, positive and multi-word "other" answers keep
question and answer, everything else falls back to the initial query alone.
"""

import json
from pathlib import Path

from .conversations import LENGTHS, POLARITIES, AnswerType
from .errors import ConfigError
from .ranker import MODES, CompositionSpec

PolicyTable = dict[tuple[str, str], CompositionSpec]


def default_policy() -> PolicyTable:
    table: PolicyTable = {
        (polarity, length): CompositionSpec()
        for polarity in POLARITIES
        for length in LENGTHS
    }
    table[("N", "multi")] = CompositionSpec(use_answer=True)
    table[("P", "single")] = CompositionSpec(use_question=True, use_answer=True)
    table[("P", "multi")] = CompositionSpec(use_question=True, use_answer=True)
    table[("O", "multi")] = CompositionSpec(use_question=True, use_answer=True)
    return table


DEFAULT_POLICY: PolicyTable = default_policy()


def select_composition(atype: AnswerType, policy: PolicyTable | None = None) -> CompositionSpec:
    """Map an answer type to its composition; total over all eight cells."""
    table = DEFAULT_POLICY if policy is None else policy
    try:
        return table[(atype.polarity, atype.length)]
    except KeyError:
        raise ConfigError(
            f"policy table has no entry for ({atype.polarity}, {atype.length})"
        ) from None


def load_policy(path: str | Path) -> PolicyTable:
    """Load a policy override file: JSON {"polarity,length": mode}.

    Cells absent from the file keep the built-in rule.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read policy file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"policy file {path} is not valid JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError(f"policy file {path} must contain a JSON object")
    table = default_policy()
    for cell, mode in overrides.items():
        parts = [p.strip() for p in cell.split(",")]
        if len(parts) != 2 or parts[0] not in POLARITIES or parts[1] not in LENGTHS:
            raise ConfigError(f"policy file {path}: bad cell key {cell!r}")
        if mode not in MODES:
            raise ConfigError(f"policy file {path}: bad mode {mode!r} for cell {cell!r}")
        table[(parts[0], parts[1])] = CompositionSpec.from_mode(mode)
    return table
