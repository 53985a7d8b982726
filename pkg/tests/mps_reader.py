"""Minimal MPS parser used only by the tests, independent of the package's reader."""

from fractions import Fraction


def parse_mps(text: str) -> dict:
    rows, cols, rhs, bounds = {}, {}, {}, {}
    obj_row, sense, section = None, "MIN", None
    for line in text.splitlines():
        if not line.strip() or line.startswith("*"):
            continue
        if not line[0].isspace():
            section = line.split()[0]
            continue
        tok = line.split()
        if section == "OBJSENSE":
            sense = tok[0]
        elif section == "ROWS":
            rows[tok[1]] = tok[0]
            if tok[0] == "N" and obj_row is None:
                obj_row = tok[1]
        elif section == "COLUMNS":
            col = cols.setdefault(tok[0], {})
            for r, v in zip(tok[1::2], tok[2::2]):
                col[r] = v
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                rhs[r] = v
        elif section == "BOUNDS":
            bounds[tok[2]] = tok[0]
    return {"rows": rows, "cols": cols, "rhs": rhs, "bounds": bounds, "obj": obj_row, "sense": sense}


def same_number(text: str, value) -> bool:
    """Exact for terminating decimals, float-exact otherwise."""
    value = Fraction(value)
    parsed = Fraction(text)
    if parsed == value:
        return True
    return float(text) == float(value)
