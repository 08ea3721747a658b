"""Plain-text scheme / protocol definitions.

::

    [meta]
    name = xor2
    n = 2
    t = 1            # view bits per party

    [secrets]
    0 1

    [randomness]
    0: 1/2
    1: 1/2

    [views]          # party secret randomness -> bits
    0 0 0 -> 0
    ...

Optional ``[inputs]`` (``i s -> value``, ``_`` for no input) and
``[outputs]`` (``i s -> bits``) turn the file into a protocol whose joint
inputs are the ``[secrets]`` labels. Bit strings are read first character
= lowest bit; ``-`` is the empty string. Every cell must be present.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .schemes import BOT, ProtocolSpec, SharingScheme

SECTIONS = ("meta", "secrets", "randomness", "views", "inputs", "outputs")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _token(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def _bits(text: str, width: int | None, line: int) -> tuple[int, int]:
    text = text.strip()
    if text in ("-", ""):
        text = ""
    if any(ch not in "01" for ch in text):
        raise ParseError(f"not a bit string: {text!r}", line)
    if width is not None and len(text) != width:
        raise ParseError(f"expected {width} bits, got {len(text)}", line)
    return sum(int(ch) << j for j, ch in enumerate(text)), len(text)


def _fraction(text: str, line: int) -> Fraction:
    try:
        w = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad probability {text!r}", line) from None
    if w < 0:
        raise ParseError("negative probability", line)
    return w


def parse_definition(text: str, name: str | None = None):
    """Parse a definition document into a SharingScheme or ProtocolSpec."""
    sections: dict = {}
    header_line: dict = {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in SECTIONS:
                raise ParseError(f"unknown section [{current}]", no)
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", no)
            sections[current] = []
            header_line[current] = no
            continue
        if current is None:
            raise ParseError("content before the first section", no)
        sections[current].append((no, line))
    for req in ("meta", "secrets", "randomness", "views"):
        if req not in sections:
            raise ParseError(f"missing section [{req}]")

    meta = {}
    for no, line in sections["meta"]:
        key, eq, val = line.partition("=")
        if not eq:
            raise ParseError("expected key = value", no)
        meta[key.strip().lower()] = (val.strip(), no)
    for req in ("n", "t"):
        if req not in meta:
            raise ParseError(f"[meta] needs {req}", header_line["meta"])
    try:
        n = int(meta["n"][0])
        t = int(meta["t"][0])
    except ValueError:
        raise ParseError("n and t must be integers", header_line["meta"]) from None
    if n < 1 or t < 0:
        raise ParseError("need n >= 1 and t >= 0", header_line["meta"])
    label = meta.get("name", (name or "unnamed", 0))[0]

    secrets = [_token(tok) for _, line in sections["secrets"] for tok in line.split()]
    if not secrets:
        raise ParseError("no secrets listed", header_line["secrets"])
    if len(set(secrets)) != len(secrets):
        raise ParseError("duplicate secret label", header_line["secrets"])
    s_idx = {s: i for i, s in enumerate(secrets)}

    rand, weights = [], []
    for no, line in sections["randomness"]:
        val, colon, w = line.partition(":")
        if not colon:
            raise ParseError("expected value: weight", no)
        rand.append(_token(val.strip()))
        weights.append(_fraction(w, no))
    if not rand:
        raise ParseError("no randomness values listed", header_line["randomness"])
    if len(set(rand)) != len(rand):
        raise ParseError("duplicate randomness value", header_line["randomness"])
    if sum(weights) != 1:
        raise ParseError(f"probabilities sum to {sum(weights)}", header_line["randomness"])
    r_idx = {r: i for i, r in enumerate(rand)}

    def cell(no, lhs, arity):
        parts = lhs.split()
        if len(parts) != arity:
            raise ParseError(f"expected {arity} fields before '->'", no)
        try:
            i = int(parts[0])
        except ValueError:
            raise ParseError(f"bad party index {parts[0]!r}", no) from None
        if not 0 <= i < n:
            raise ParseError(f"party {i} out of range 0..{n - 1}", no)
        s = _token(parts[1])
        if s not in s_idx:
            raise ParseError(f"unknown secret {parts[1]!r}", no)
        out = [i, s_idx[s]]
        if arity == 3:
            r = _token(parts[2])
            if r not in r_idx:
                raise ParseError(f"unknown randomness value {parts[2]!r}", no)
            out.append(r_idx[r])
        return tuple(out)

    views: dict = {}
    for no, line in sections["views"]:
        lhs, arrow, rhs = line.partition("->")
        if not arrow:
            raise ParseError("expected '->'", no)
        key = cell(no, lhs, 3)
        if key in views:
            raise ParseError("duplicate view cell", no)
        views[key] = _bits(rhs, t, no)[0]
    for s in range(len(secrets)):
        for r in range(len(rand)):
            for i in range(n):
                if (i, s, r) not in views:
                    raise ParseError(f"missing view for party {i}, secret {secrets[s]!r}, randomness {rand[r]!r}",
                                     header_line["views"])
    table = tuple(tuple(tuple(views[(i, s, r)] for i in range(n)) for r in range(len(rand))) for s in range(len(secrets)))

    if "inputs" not in sections and "outputs" not in sections:
        return SharingScheme(label, n, tuple(secrets), tuple(rand), tuple(weights), t, table)

    inputs: dict = {}
    for no, line in sections.get("inputs", []):
        lhs, arrow, rhs = line.partition("->")
        if not arrow:
            raise ParseError("expected '->'", no)
        key = cell(no, lhs, 2)
        if key in inputs:
            raise ParseError("duplicate input cell", no)
        val = rhs.strip()
        inputs[key] = BOT if val == "_" else _token(val)
    if "inputs" in sections:
        for s in range(len(secrets)):
            for i in range(n):
                if (i, s) not in inputs:
                    raise ParseError(f"missing input for party {i}, joint input {secrets[s]!r}", header_line["inputs"])

    out_bits = int(meta["out_bits"][0]) if "out_bits" in meta else None
    outputs: dict = {}
    for no, line in sections.get("outputs", []):
        lhs, arrow, rhs = line.partition("->")
        if not arrow:
            raise ParseError("expected '->'", no)
        key = cell(no, lhs, 2)
        if key in outputs:
            raise ParseError("duplicate output cell", no)
        val, width = _bits(rhs, out_bits, no)
        out_bits = width if out_bits is None else out_bits
        outputs[key] = val
    if "outputs" in sections:
        for s in range(len(secrets)):
            for i in range(n):
                if (i, s) not in outputs:
                    raise ParseError(f"missing output for party {i}, joint input {secrets[s]!r}", header_line["outputs"])

    party_inputs = tuple(tuple(inputs.get((i, s), BOT) for i in range(n)) for s in range(len(secrets)))
    out_table = tuple(tuple(outputs.get((i, s), 0) for i in range(n)) for s in range(len(secrets)))
    return ProtocolSpec(label, n, tuple(secrets), party_inputs, tuple(rand), tuple(weights), t, table,
                        out_bits or 0, out_table)


def load_definition(path: str | Path):
    p = Path(path)
    return parse_definition(p.read_text(), name=p.stem)


def _bitstr(value: int, width: int) -> str:
    return "".join(str((value >> j) & 1) for j in range(width)) or "-"


def dump_definition(obj) -> str:
    """Serialize a scheme or protocol back to the text format."""
    is_protocol = isinstance(obj, ProtocolSpec)
    labels = obj.inputs if is_protocol else obj.secrets
    lines = ["[meta]", f"name = {obj.name}", f"n = {obj.n}", f"t = {obj.view_bits}"]
    if is_protocol:
        lines.append(f"out_bits = {obj.output_bits}")
    lines += ["", "[secrets]", " ".join(str(s) for s in labels), "", "[randomness]"]
    # randomness labels may be tuples; indices keep the file parseable
    lines += [f"{r}: {w}" for r, w in enumerate(obj.weights)]
    lines += ["", "[views]"]
    for s, sl in enumerate(labels):
        for r in range(len(obj.randomness)):
            for i in range(obj.n):
                lines.append(f"{i} {sl} {r} -> {_bitstr(obj.views[s][r][i], obj.view_bits)}")
    if is_protocol:
        lines += ["", "[inputs]"]
        for s, sl in enumerate(labels):
            for i in range(obj.n):
                v = obj.party_inputs[s][i]
                lines.append(f"{i} {sl} -> {'_' if v is BOT else v}")
        lines += ["", "[outputs]"]
        for s, sl in enumerate(labels):
            for i in range(obj.n):
                lines.append(f"{i} {sl} -> {_bitstr(obj.outputs[s][i], obj.output_bits)}")
    return "\n".join(lines) + "\n"
