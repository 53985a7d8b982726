"""MPS export for external MILP solvers and import of their solutions.

Columns follow the fixed MPS layout with the name fields widened to the longest
variable/row name, so every field starts at the same column on every line.  All
variables are declared binary in BOUNDS (``BV``).  Row names carry the
constraint family: ``CL`` coverage-link, ``SC`` server-count, ``OK`` one-k,
``FL`` fleet-limit, ``CP`` capacity, ``SL`` site-link, ``EPS`` epsilon, ``FX``
fixed.  Since MPS minimizes by default, an ``OBJSENSE MAX`` section is written.

Solution files hold one ``name value`` pair per line; blank lines and lines
starting with ``#`` or ``*`` are ignored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .._numbers import terminating_decimal
from ..formulation import ModelSpec, VarId
from .solution import FEASIBLE, Solution, audit

ROW_PREFIX = {
    "coverage-link": "CL",
    "server-count": "SC",
    "one-k": "OK",
    "fleet-limit": "FL",
    "capacity": "CP",
    "site-link": "SL",
    "epsilon": "EPS",
    "fixed": "FX",
}
PREFIX_TAG = {v: k for k, v in ROW_PREFIX.items()}
REL_CODE = {"<=": "L", ">=": "G", "=": "E"}


class SolutionParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MpsParseError(ValueError):
    pass


def mps_number(value) -> str:
    """Exact decimal when the rational terminates, else the nearest double."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    text = terminating_decimal(value)
    return text if text is not None else repr(float(value))


def row_names(model: ModelSpec) -> list[str]:
    counters: dict[str, int] = {}
    names = []
    for con in model.constraints:
        prefix = ROW_PREFIX.get(con.tag, "R")
        n = counters.get(prefix, 0)
        counters[prefix] = n + 1
        names.append(f"{prefix}{n}")
    return names


def write_mps(model: ModelSpec, fh) -> None:
    rows = row_names(model)
    columns: dict[VarId, list[tuple[str, Fraction]]] = {v: [] for v in model.variables}
    for v, coef in model.objective:
        if coef != 0:
            columns[v].append(("OBJ", coef))
    for name, con in zip(rows, model.constraints):
        for v, coef in con.terms:
            if coef != 0:
                columns[v].append((name, coef))
    width = max([8, *(len(r) for r in rows), *(len(v.name) for v in model.variables)])

    def line(f1: str, f2: str, f3: str = "", f4: str = "") -> str:
        text = f" {f1:<2} {f2:<{width}}"
        if f3:
            text += f"  {f3:<{width}}  {f4}"
        return text.rstrip() + "\n"

    name = model.name.replace(" ", "_")
    fh.write(f"NAME          {name}\n")
    fh.write("OBJSENSE\n    MAX\n")
    fh.write("ROWS\n")
    fh.write(line("N", "OBJ"))
    for rname, con in zip(rows, model.constraints):
        fh.write(line(REL_CODE[con.relation], rname))
    fh.write("COLUMNS\n")
    for v in model.variables:
        entries = columns[v] or [("OBJ", 0)]
        for rname, coef in entries:
            fh.write(line("", v.name, rname, mps_number(coef)))
    fh.write("RHS\n")
    for rname, con in zip(rows, model.constraints):
        if con.rhs != 0:
            fh.write(line("", "RHS", rname, mps_number(con.rhs)))
    fh.write("BOUNDS\n")
    for v in model.variables:
        fh.write(line("BV", "BND", v.name))
    fh.write("ENDATA\n")


def export_mps(model: ModelSpec, path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        write_mps(model, fh)


@dataclass
class MpsModel:
    name: str = ""
    sense: str = "MIN"
    objective_row: str = ""
    rows: dict[str, str] = field(default_factory=dict)  # row name -> N/L/G/E
    columns: dict[str, dict[str, Fraction]] = field(default_factory=dict)
    rhs: dict[str, Fraction] = field(default_factory=dict)
    bounds: dict[str, str] = field(default_factory=dict)

    def tag_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for rname, kind in self.rows.items():
            if kind == "N":
                continue
            prefix = rname.rstrip("0123456789")
            tag = PREFIX_TAG.get(prefix, prefix)
            out[tag] = out.get(tag, 0) + 1
        return out


def read_mps(path: str | Path) -> MpsModel:
    """Whitespace-tokenizing MPS reader (the subset written by :func:`write_mps`)."""
    out = MpsModel()
    section = None
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.startswith("*"):
                continue
            tokens = raw.split()
            if not raw[0].isspace():
                section = tokens[0]
                if section == "NAME":
                    out.name = tokens[1] if len(tokens) > 1 else ""
                elif section == "ENDATA":
                    break
                continue
            try:
                if section == "OBJSENSE":
                    out.sense = tokens[0]
                elif section == "ROWS":
                    kind, rname = tokens
                    out.rows[rname] = kind
                    if kind == "N" and not out.objective_row:
                        out.objective_row = rname
                elif section == "COLUMNS":
                    var, pairs = tokens[0], tokens[1:]
                    col = out.columns.setdefault(var, {})
                    for k in range(0, len(pairs), 2):
                        if pairs[k] not in out.rows:
                            raise MpsParseError(f"line {lineno}: unknown row {pairs[k]!r}")
                        col[pairs[k]] = Fraction(pairs[k + 1])
                elif section == "RHS":
                    pairs = tokens[1:]
                    for k in range(0, len(pairs), 2):
                        out.rhs[pairs[k]] = Fraction(pairs[k + 1])
                elif section == "BOUNDS":
                    kind, _, var = tokens[:3]
                    out.bounds[var] = kind
                else:
                    raise MpsParseError(f"line {lineno}: data outside a known section")
            except (ValueError, IndexError) as exc:
                if isinstance(exc, MpsParseError):
                    raise
                raise MpsParseError(f"line {lineno}: cannot parse {raw.strip()!r}") from exc
    return out


def import_solution(path: str | Path, model: ModelSpec, tolerance: float = 1e-6) -> Solution:
    """Read an external solver's ``name value`` file and audit it against ``model``.

    Values within ``tolerance`` of 0 or 1 are rounded.  Unknown names are skipped
    with a warning; variables not mentioned are 0.  Raises SolutionParseError for
    malformed lines and AuditError (naming the violated family) for infeasible
    assignments.
    """
    known = {v.name: v for v in model.variables}
    assignment: dict[VarId, int] = {v: 0 for v in model.variables}
    unknown = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text[0] in "#*":
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise SolutionParseError(lineno, f"expected 'name value', got {text!r}")
            name, val_text = tokens
            try:
                value = Fraction(val_text)
            except (ValueError, ZeroDivisionError) as exc:
                raise SolutionParseError(lineno, f"value {val_text!r} is not a number") from exc
            if name not in known:
                unknown.append(name)
                continue
            nearest = round(value)
            if abs(value - nearest) <= tolerance:
                value = Fraction(nearest)
            assignment[known[name]] = int(value) if value.denominator == 1 else value
    if unknown:
        shown = ", ".join(unknown[:5]) + (" ..." if len(unknown) > 5 else "")
        warnings.warn(f"ignored {len(unknown)} unknown variable name(s): {shown}", stacklevel=2)
    objective = audit(model, assignment)
    return Solution(assignment, objective, FEASIBLE, None, {"method": "import", "source": str(path)})
