"""JSON encodings shared by the CLI and the tests.

Rationals are strings ``"p/q"``.  Submeasure tables are
``{"atoms": k, "values": {"[1,3]": "p/q", ...}}`` keyed by sorted atom lists;
the key for ``0`` may be omitted.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .algebra import CylinderSet, CylinderSpace, Element, FiniteAlgebra, atoms_of, cylinder_from_prefix
from .errors import FormatError
from .submeasure import Submeasure, validate


def q(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_q(s) -> Fraction:
    if isinstance(s, bool):
        raise FormatError(f"not a rational: {s!r}")
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        try:
            return Fraction(s.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"not a rational: {s!r}") from exc
    raise FormatError(f"rationals must be strings 'p/q' or integers, got {s!r}")


def atom_key(a: Element) -> str:
    return "[" + ",".join(str(i) for i in atoms_of(a)) + "]"


def parse_atom_key(key: str, n_atoms: int) -> Element:
    s = key.strip()
    if s in ("0", "", "[]"):
        return 0
    s = s.strip("[]{}")
    m = 0
    try:
        for part in s.split(","):
            i = int(part)
            if not 1 <= i <= n_atoms:
                raise FormatError(f"atom {i} outside [1, {n_atoms}]")
            m |= 1 << (i - 1)
    except ValueError as exc:
        raise FormatError(f"bad atom list {key!r}") from exc
    return m


def parse_element(obj, n_atoms: int) -> Element:
    if isinstance(obj, str):
        return parse_atom_key(obj, n_atoms)
    if isinstance(obj, list):
        return parse_atom_key(",".join(str(int(i)) for i in obj) or "0", n_atoms)
    raise FormatError(f"elements are atom lists, got {obj!r}")


def table_from_json(obj: Mapping) -> tuple[FiniteAlgebra, list[Fraction]]:
    """Raw ``(algebra, values)``; no axiom checks, negatives allowed."""
    if not isinstance(obj, Mapping) or "atoms" not in obj or "values" not in obj:
        raise FormatError("submeasure JSON needs 'atoms' and 'values'")
    try:
        alg = FiniteAlgebra(int(obj["atoms"]))
    except (TypeError, ValueError) as exc:
        raise FormatError("'atoms' must be a positive integer") from exc
    raw = obj["values"]
    if not isinstance(raw, Mapping):
        raise FormatError("'values' must be an object")
    table: dict[Element, Fraction] = {}
    for k, v in raw.items():
        e = parse_atom_key(k, alg.n_atoms)
        if e in table:
            raise FormatError(f"duplicate key for {atom_key(e)}")
        table[e] = parse_q(v)
    vals = []
    for a in alg.elements():
        if a in table:
            vals.append(table[a])
        elif a == 0:
            vals.append(Fraction(0))
        else:
            raise FormatError(f"value missing for element {atom_key(a)}")
    return alg, vals


def submeasure_from_json(obj: Mapping) -> Submeasure:
    alg, vals = table_from_json(obj)
    return validate(alg, vals)


def submeasure_to_json(mu: Submeasure) -> dict:
    return {"atoms": mu.n_atoms, "values": {atom_key(a): q(v) for a, v in enumerate(mu.values)}}


def prefix_from_json(obj) -> dict[int, int]:
    """``{"1": 2, "3": 1}`` (coordinate -> value) or a list of values on ``[m]``."""
    if isinstance(obj, list):
        return {i + 1: int(v) for i, v in enumerate(obj)}
    if isinstance(obj, Mapping):
        try:
            return {int(k): int(v) for k, v in obj.items()}
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad prefix {obj!r}") from exc
    raise FormatError(f"bad prefix {obj!r}")


def cylinder_from_json(obj, space: CylinderSpace, depth: int) -> CylinderSet:
    """``"full"``, ``"empty"``, a prefix, or ``{"union": [prefix, ...]}``."""
    if obj == "full":
        return _full(space, depth)
    if obj == "empty":
        return _full(space, depth).complement()
    if isinstance(obj, Mapping) and "union" in obj:
        out = _full(space, depth).complement()
        for p in obj["union"]:
            out = out | cylinder_from_prefix(space, prefix_from_json(p), depth)
        return out
    if isinstance(obj, Mapping) and "prefix" in obj:
        obj = obj["prefix"]
    return cylinder_from_prefix(space, prefix_from_json(obj), depth)


def _full(space: CylinderSpace, depth: int) -> CylinderSet:
    return CylinderSet(space, depth, np.ones(space.shape(depth), dtype=bool))


def load_json(text_or_path: str) -> Any:
    """Inline JSON text, or the contents of the named file."""
    s = text_or_path.strip()
    try:
        if s[:1] in "[{\"" or s in ("full", "empty"):
            return json.loads(s) if s not in ("full", "empty") else s
        with open(text_or_path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise FormatError(f"cannot read {text_or_path!r}: {exc.strerror}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
