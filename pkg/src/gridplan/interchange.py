"""Text interchange for mixed-binary programs in the LP file dialect.

Writer and reader for the common ``Minimize / Subject To / Bounds /
Binaries / End`` layout understood by industrial solvers, so any model
assembled here can be cross-checked externally and read back for
round-trip validation. Row names carry the constraint-family tags used
throughout the package (for example ``e24_s1``), which keeps exported rows
matchable to their origin.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .lp import LinearProgram, make_lp


class InterchangeError(ValueError):
    pass


def _fmt(value: float) -> str:
    """Shortest exact decimal form of a float."""
    return format(float(value), ".17g")


def _expr_terms(coefs, names):
    parts = []
    for coef, name in zip(coefs, names):
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    if not parts:
        return "0"
    first = parts[0]
    first = first[2:] if first.startswith("+ ") else "-" + first[2:]
    return " ".join([first] + parts[1:])


def _wrap(text: str, indent: str = "   ", width: int = 78) -> str:
    words = text.split(" ")
    lines, cur = [], indent
    for word in words:
        if len(cur) + len(word) + 1 > width and cur.strip():
            lines.append(cur)
            cur = indent + " " + word
        else:
            cur = f"{cur} {word}"
    lines.append(cur)
    return "\n".join(lines)


def _default_names(prefix, count, given):
    if given and len(given) == count:
        return list(given)
    return [f"{prefix}{i}" for i in range(count)]


def write_lp_format(lp: LinearProgram, path, comments=()) -> None:
    """Write ``lp`` as LP-format text: objective, rows, bounds, binaries."""
    cols = _default_names("x", lp.n_cols, lp.col_names)
    eq_names = _default_names("eq", lp.a_eq.shape[0], lp.eq_names)
    ge_names = _default_names("ge", lp.a_ge.shape[0], lp.ge_names)
    out = [f"\\ {line}" for line in comments]

    obj = _expr_terms(lp.c, cols)
    if lp.objective_offset:
        obj += f" + {_fmt(lp.objective_offset)}"
    out.append("Minimize")
    out.append(_wrap(f"obj: {obj}", indent="  "))
    out.append("Subject To")
    a_eq = lp.a_eq.tocsr()
    a_ge = lp.a_ge.tocsr()
    for i, name in enumerate(eq_names):
        row = a_eq.getrow(i)
        terms = _expr_terms(row.data, [cols[j] for j in row.indices])
        out.append(_wrap(f"{name}: {terms} = {_fmt(lp.b_eq[i])}", indent="  "))
    for i, name in enumerate(ge_names):
        row = a_ge.getrow(i)
        terms = _expr_terms(row.data, [cols[j] for j in row.indices])
        out.append(_wrap(f"{name}: {terms} >= {_fmt(lp.b_ge[i])}", indent="  "))

    binary = set(int(j) for j in lp.binary_cols)
    out.append("Bounds")
    for j, name in enumerate(cols):
        lo, hi = lp.lb[j], lp.ub[j]
        if j in binary:
            if lo > 0.0 or hi < 1.0:        # node-style restriction survives
                out.append(f"  {_fmt(max(lo, 0.0))} <= {name} <= {_fmt(min(hi, 1.0))}")
            continue
        if lo == 0.0 and not np.isfinite(hi):
            continue                        # the format's default bound
        if not np.isfinite(lo) and not np.isfinite(hi):
            out.append(f"  {name} free")
        else:
            lo_t = "-inf" if not np.isfinite(lo) else _fmt(lo)
            hi_t = "+inf" if not np.isfinite(hi) else _fmt(hi)
            out.append(f"  {lo_t} <= {name} <= {hi_t}")
    if binary:
        out.append("Binaries")
        out.append(_wrap(" ".join(cols[j] for j in sorted(binary)), indent="  "))
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")


_TOKEN = re.compile(
    r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"   # number
    r"|[A-Za-z_][A-Za-z0-9_.#]*"              # identifier
    r"|<=|>=|=|\+|-|:")
_NUM = re.compile(r"^(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")

_HEADERS = {"minimize": "objective", "minimise": "objective", "min": "objective",
            "maximize": "maximize", "maximise": "maximize", "max": "maximize",
            "subject to": "rows", "st": "rows", "s.t.": "rows",
            "such that": "rows", "bounds": "bounds", "bound": "bounds",
            "binaries": "binaries", "binary": "binaries", "bin": "binaries",
            "generals": "binaries", "general": "binaries", "end": "end"}


def _sections(text: str) -> dict[str, list[str]]:
    """Split LP text into header-keyed lists of content lines."""
    chunks: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\")[0].rstrip()
        if not line.strip():
            continue
        kind = _HEADERS.get(line.strip().lower())
        if kind is not None:
            if kind == "maximize":
                raise InterchangeError("only minimization models are supported")
            current = kind
            chunks.setdefault(current, [])
            continue
        if current is None:
            raise InterchangeError(f"content before any section header: {line!r}")
        chunks[current].append(line)
    return chunks


def _parse_expr(tokens, i):
    """Linear expression starting at ``tokens[i]``; returns (coeffs, const, i).

    Stops at a relational operator or a new row label (identifier followed
    by ':').
    """
    coeffs: dict[str, float] = {}
    const = 0.0
    sign = 1.0
    pending: float | None = None
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok in ("<=", ">=", "="):
            break
        if tok == "+":
            i += 1
            continue
        if tok == "-":
            sign = -sign
            i += 1
            continue
        if _NUM.match(tok):
            value = sign * float(tok)
            if pending is not None:
                const += pending
            pending = value
            sign = 1.0
            i += 1
            continue
        # identifier: may begin the next row ("name :")
        if i + 1 < n and tokens[i + 1] == ":":
            break
        coef = 1.0 if pending is None else pending
        coeffs[tok] = coeffs.get(tok, 0.0) + sign * coef
        pending = None
        sign = 1.0
        i += 1
    if pending is not None:
        const += pending
    return coeffs, const, i


def _parse_rows(lines: list[str]):
    tokens = []
    for line in lines:
        tokens.extend(_TOKEN.findall(line))
    rows = []
    i = 0
    while i < len(tokens):
        if i + 1 >= len(tokens) or tokens[i + 1] != ":":
            raise InterchangeError(f"expected a row label, found {tokens[i]!r}")
        name = tokens[i]
        coeffs, shift, i = _parse_expr(tokens, i + 2)
        if i >= len(tokens) or tokens[i] not in ("<=", ">=", "="):
            raise InterchangeError(f"row {name}: missing relational operator")
        sense = tokens[i]
        rhs_coeffs, rhs_const, i = _parse_expr(tokens, i + 1)
        if rhs_coeffs:
            raise InterchangeError(f"row {name}: variables on the right side")
        rows.append((name, coeffs, sense, rhs_const - shift))
    return rows


def read_lp_format(source) -> LinearProgram:
    """Parse LP-format text back into a LinearProgram.

    Accepts the subset the writer produces plus ``<=`` rows, which fold into
    the ``>=`` block with flipped signs.
    """
    text = Path(source).read_text()
    chunks = _sections(text)
    if "objective" not in chunks:
        raise InterchangeError("no objective section")

    obj_tokens = []
    for line in chunks["objective"]:
        obj_tokens.extend(_TOKEN.findall(line))
    i = 0
    if len(obj_tokens) >= 2 and obj_tokens[1] == ":":
        i = 2
    objective, obj_const, i = _parse_expr(obj_tokens, i)
    if i != len(obj_tokens):
        raise InterchangeError("objective does not parse as one expression")

    rows = _parse_rows(chunks.get("rows", []))

    bounds: dict[str, list] = {}
    free_vars: set[str] = set()
    for line in chunks.get("bounds", []):
        toks = _TOKEN.findall(line)
        if not toks:
            continue
        if toks[-1].lower() == "free":
            free_vars.add(toks[0])
            continue
        _apply_bound(bounds, toks)

    binaries: list[str] = []
    for line in chunks.get("binaries", []):
        binaries.extend(_TOKEN.findall(line))

    return _assemble(objective, obj_const, rows, bounds, binaries, free_vars)


def _apply_bound(bounds: dict, terms: list) -> None:
    def num(tok_sign, tok):
        s = -1.0 if tok_sign == "-" else 1.0
        if tok.lower() == "inf":
            return s * np.inf
        return s * float(tok)

    # normalize sign tokens into the numbers
    flat = []
    j = 0
    while j < len(terms):
        if terms[j] in ("-", "+") and j + 1 < len(terms):
            flat.append(num(terms[j], terms[j + 1]))
            j += 2
        elif _NUM.match(terms[j]) or terms[j].lower() == "inf":
            flat.append(num("+", terms[j]))
            j += 1
        else:
            flat.append(terms[j])
            j += 1

    def slot(name):
        return bounds.setdefault(name, [0.0, np.inf])

    if len(flat) == 5 and flat[1] == "<=" and flat[3] == "<=":
        slot(flat[2])[0] = flat[0]
        slot(flat[2])[1] = flat[4]
    elif len(flat) == 3 and isinstance(flat[0], str):
        lo_hi = slot(flat[0])
        if flat[1] == "<=":
            lo_hi[1] = flat[2]
        elif flat[1] == ">=":
            lo_hi[0] = flat[2]
        else:
            lo_hi[0] = lo_hi[1] = flat[2]
    elif len(flat) == 3 and isinstance(flat[2], str):
        lo_hi = slot(flat[2])
        if flat[1] == "<=":
            lo_hi[0] = flat[0]
        else:
            lo_hi[1] = flat[0]
    elif flat:
        raise InterchangeError(f"unrecognized bound line near {flat!r}")


def _assemble(objective, obj_const, rows, bounds, binaries, free_vars):
    order: dict[str, int] = {}
    for name in objective:
        order.setdefault(name, len(order))
    for _, coeffs, _, _ in rows:
        for name in coeffs:
            order.setdefault(name, len(order))
    for name in list(bounds) + list(binaries) + list(free_vars):
        order.setdefault(name, len(order))
    names = list(order)
    n = len(names)

    c = np.zeros(n)
    for name, coef in objective.items():
        c[order[name]] = coef

    eq_rows, ge_rows = [], []
    for name, coeffs, sense, rhs in rows:
        dense = np.zeros(n)
        for var, coef in coeffs.items():
            dense[order[var]] = coef
        if sense == "=":
            eq_rows.append((name, dense, rhs))
        elif sense == ">=":
            ge_rows.append((name, dense, rhs))
        else:
            ge_rows.append((name, -dense, -rhs))

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for name in free_vars:
        lb[order[name]] = -np.inf
    for name, (lo, hi) in bounds.items():
        lb[order[name]] = lo
        ub[order[name]] = hi
    bin_idx = []
    for name in binaries:
        j = order[name]
        bin_idx.append(j)
        lb[j] = max(lb[j], 0.0)
        ub[j] = min(ub[j], 1.0) if np.isfinite(ub[j]) else 1.0

    return make_lp(
        c,
        a_eq=np.array([r[1] for r in eq_rows]) if eq_rows else None,
        b_eq=np.array([r[2] for r in eq_rows]) if eq_rows else None,
        a_ge=np.array([r[1] for r in ge_rows]) if ge_rows else None,
        b_ge=np.array([r[2] for r in ge_rows]) if ge_rows else None,
        lb=lb, ub=ub, binary_cols=sorted(bin_idx),
        objective_offset=obj_const,
        col_names=names,
        eq_names=[r[0] for r in eq_rows],
        ge_names=[r[0] for r in ge_rows])
