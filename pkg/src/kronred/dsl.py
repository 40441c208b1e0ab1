"""Line-oriented network description language and its JSON mirror.

Grammar (``#`` starts a comment)::

    species X1, X2, X3
    reaction r1: X1 + 2 X2 <-> X3 ; massaction kf=1 kr=0.5
    reaction r2: X3 -> X4 ; mm kf=2 Km(X3)=0.1 Km(X4)=3
    reaction r3: A <-> B ; mm kf=1 kr=1 [Km(A)=1 Km(I)=2] [Km(B)=1]
    boundary X3: constant 0.2
    boundary X4: linear X4 -0.5

Without explicit ``[...]`` groups a Michaelis-Menten denominator gets one
group for substrate species, one for product species and one for any other
species named in ``Km(...)``.  A term's coefficient is ``multiplicity / Km``
where the multiplicity is the species' coefficient in the substrate complex,
else in the product complex, else 1.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .errors import NetworkError, ParseError
from .laws import (
    CONSTANT,
    LINEAR,
    MASS_ACTION,
    MICHAELIS_MENTEN,
    BoundaryFlux,
    DenominatorSpec,
    DenominatorTerm,
    RateLaw,
)
from .network import MAX_COEFFICIENT, Complex, Network, Reaction, Species

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow><->|->)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[:;+,=()\[\]\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(text: str, lineno: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise ParseError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        kind = mt.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, mt.group(), pos + 1))
        pos = mt.end()
    return toks


class _Line:
    def __init__(self, toks: list[_Tok], lineno: int, length: int):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno
        self.end_col = length + 1

    def error(self, msg: str, tok: _Tok | None = None) -> ParseError:
        if tok is None:
            tok = self.peek()
        col = tok.col if tok is not None else self.end_col
        return ParseError(msg, self.lineno, col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.error(f"expected {what}, found end of line")
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> _Tok:
        tok = self.peek()
        label = what or (repr(text) if text else kind)
        if tok is None:
            raise self.error(f"expected {label}, found end of line")
        if tok.kind != kind or (text is not None and tok.text != text):
            raise self.error(f"expected {label}, found {tok.text!r}", tok)
        self.pos += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> _Tok | None:
        tok = self.peek()
        if tok is not None and tok.kind == kind and (text is None or tok.text == text):
            self.pos += 1
            return tok
        return None

    def number(self, what: str = "number") -> tuple[float, _Tok]:
        neg = self.accept("sym", "-")
        tok = self.expect("number", what=what)
        value = float(tok.text)
        return (-value if neg else value), tok


class _Builder:
    def __init__(self, strict: bool):
        self.strict = strict
        self.species: dict[str, int] = {}
        self.declared = False
        self.complexes: dict[tuple[tuple[int, int], ...], int] = {}
        self.reactions: list[Reaction] = []
        self.pending_boundary: list[tuple[tuple, BoundaryFlux, int, int]] = []

    def species_ref(self, line: _Line, tok: _Tok) -> int:
        name = tok.text
        if name in self.species:
            return self.species[name]
        if self.strict:
            raise line.error(f"undeclared species {name!r}", tok)
        self.species[name] = len(self.species)
        return self.species[name]

    def complex_key(self, comp: dict[int, int]) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(comp.items()))

    def complex_index(self, comp: dict[int, int]) -> int:
        key = self.complex_key(comp)
        if key not in self.complexes:
            self.complexes[key] = len(self.complexes)
        return self.complexes[key]


def _parse_complex(line: _Line, b: _Builder) -> dict[int, int]:
    comp: dict[int, int] = {}
    while True:
        tok = line.peek()
        coeff = 1
        if tok is not None and tok.kind == "number":
            line.pos += 1
            if not tok.text.isdigit():
                raise line.error(f"stoichiometric coefficient must be an integer, got {tok.text!r}", tok)
            coeff = int(tok.text)
            if not 1 <= coeff <= MAX_COEFFICIENT:
                raise line.error(f"stoichiometric coefficient {coeff} outside [1, {MAX_COEFFICIENT}]", tok)
        name = line.expect("name", what="species name")
        idx = b.species_ref(line, name)
        comp[idx] = comp.get(idx, 0) + coeff
        if comp[idx] > MAX_COEFFICIENT:
            raise line.error(f"stoichiometric coefficient exceeds {MAX_COEFFICIENT}", name)
        if not line.accept("sym", "+"):
            return comp


def _parse_km(line: _Line, b: _Builder) -> tuple[int, float, _Tok]:
    kw = line.expect("name", "Km")
    line.expect("sym", "(")
    sp = b.species_ref(line, line.expect("name", what="species name"))
    line.expect("sym", ")")
    line.expect("sym", "=")
    value, tok = line.number("Michaelis constant")
    if not (value > 0 and math.isfinite(value)):
        raise line.error("non-positive rate parameter Km", tok)
    return sp, value, kw


def _parse_law(line: _Line, b: _Builder, sub: dict[int, int], prod: dict[int, int], reversible: bool) -> RateLaw:
    kind_tok = line.expect("name", what="rate law ('massaction' or 'mm')")
    kind = kind_tok.text
    if kind not in (MASS_ACTION, MICHAELIS_MENTEN):
        raise line.error(f"unknown rate law {kind!r}", kind_tok)
    params: dict[str, float] = {}
    flat: list[tuple[int, float]] = []
    groups: list[list[tuple[int, float]]] = []
    seen_km: set[int] = set()

    def add_km(target: list[tuple[int, float]]) -> None:
        sp, value, tok = _parse_km(line, b)
        if kind == MASS_ACTION:
            raise line.error("Km parameters are not allowed for massaction", tok)
        if sp in seen_km:
            raise line.error("duplicate Km for the same species", tok)
        seen_km.add(sp)
        target.append((sp, value))

    while not line.at_end():
        tok = line.peek()
        if tok.kind == "sym" and tok.text == "[":
            line.pos += 1
            group: list[tuple[int, float]] = []
            while not line.accept("sym", "]"):
                if line.at_end():
                    raise line.error("unterminated denominator group")
                add_km(group)
            if not group:
                raise line.error("empty denominator group", tok)
            groups.append(group)
        elif tok.kind == "name" and tok.text in ("kf", "kr"):
            line.pos += 1
            if tok.text in params:
                raise line.error(f"duplicate parameter {tok.text}", tok)
            line.expect("sym", "=")
            value, vtok = line.number()
            if not (value > 0 and math.isfinite(value)):
                raise line.error(f"non-positive rate parameter {tok.text}", vtok)
            params[tok.text] = value
        elif tok.kind == "name" and tok.text == "Km":
            add_km(flat)
        else:
            raise line.error(f"unexpected {tok.text!r} in rate law", tok)

    if "kf" not in params:
        raise line.error("missing kf", kind_tok)
    if reversible and "kr" not in params:
        raise line.error("reversible reaction needs kr", kind_tok)
    if not reversible and "kr" in params:
        raise line.error("kr given for an irreversible reaction", kind_tok)
    if flat and groups:
        raise line.error("mixing bracketed and bare Km parameters", kind_tok)

    def term(sp: int, km: float) -> DenominatorTerm:
        mult = sub.get(sp) or prod.get(sp) or 1
        return DenominatorTerm(sp, mult, km)

    if flat:
        by_side: list[list[tuple[int, float]]] = [[], [], []]
        for sp, km in flat:
            by_side[0 if sp in sub else 1 if sp in prod else 2].append((sp, km))
        groups = [g for g in by_side if g]
    denom = DenominatorSpec(tuple(tuple(term(sp, km) for sp, km in g) for g in groups))
    return RateLaw(kind, params["kf"], params.get("kr", 0.0), denom)


def parse_network(source: str, strict: bool = False) -> Network:
    """Parse DSL text into a validated :class:`Network`.

    With ``strict=True`` every species must appear in a ``species`` line
    before it is used.
    """
    b = _Builder(strict)
    ids: set[str] = set()
    boundary_complexes: set[tuple] = set()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        toks = _tokenize(text, lineno)
        if not toks:
            continue
        line = _Line(toks, lineno, len(text.rstrip()))
        head = line.expect("name", what="statement keyword")
        if head.text == "species":
            while True:
                tok = line.expect("name", what="species name")
                if tok.text in b.species:
                    raise line.error(f"duplicate species declaration {tok.text!r}", tok)
                b.species[tok.text] = len(b.species)
                if not line.accept("sym", ","):
                    break
            b.declared = True
        elif head.text == "reaction":
            rid = line.expect("name", what="reaction id")
            if rid.text in ids:
                raise line.error(f"duplicate reaction id {rid.text!r}", rid)
            ids.add(rid.text)
            line.expect("sym", ":")
            sub = _parse_complex(line, b)
            arrow = line.expect("arrow", what="'->' or '<->'")
            prod = _parse_complex(line, b)
            if b.complex_key(sub) == b.complex_key(prod):
                raise line.error("substrate equals product", arrow)
            line.expect("sym", ";")
            law = _parse_law(line, b, sub, prod, arrow.text == "<->")
            s_idx, p_idx = b.complex_index(sub), b.complex_index(prod)
            b.reactions.append(Reaction(rid.text, s_idx, p_idx, law, arrow.text == "<->"))
        elif head.text == "boundary":
            start = line.peek()
            comp = _parse_complex(line, b)
            line.expect("sym", ":")
            form = line.expect("name", what="'constant' or 'linear'")
            if form.text == CONSTANT:
                value, _ = line.number()
                sp = None
            elif form.text == LINEAR:
                sp = b.species_ref(line, line.expect("name", what="species name"))
                value, _ = line.number()
            else:
                raise line.error(f"unknown boundary form {form.text!r}", form)
            key = b.complex_key(comp)
            if key in boundary_complexes:
                raise line.error("more than one boundary flux on this complex", start)
            boundary_complexes.add(key)
            b.pending_boundary.append((key, BoundaryFlux(-1, form.text, value, sp), lineno, start.col))
        else:
            raise line.error(f"unknown statement {head.text!r}", head)
        if not line.at_end():
            raise line.error(f"unexpected trailing {line.peek().text!r}")

    if not b.reactions:
        raise ParseError("no reactions")
    boundary = []
    for key, flux, lineno, col in b.pending_boundary:
        if key not in b.complexes:
            raise ParseError("boundary flux on a complex that appears in no reaction", lineno, col)
        boundary.append(BoundaryFlux(b.complexes[key], flux.form, flux.value, flux.species))
    boundary.sort(key=lambda f: f.complex)
    try:
        return Network(
            species=tuple(Species(n, i) for n, i in b.species.items()),
            complexes=tuple(Complex(k, i) for k, i in b.complexes.items()),
            reactions=tuple(b.reactions),
            boundary=tuple(boundary),
        )
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


def load_network(path, strict: bool = False) -> Network:
    """Read a network from a ``.json`` file or a DSL file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return network_from_json(text)
    return parse_network(text, strict=strict)


def _fmt(value: float) -> str:
    return repr(float(value))


def format_complex(network: Network, index: int, sep: str = " + ") -> str:
    parts = []
    for i, coeff in network.complexes[index].composition:
        name = network.species[i].name
        parts.append(name if coeff == 1 else f"{coeff} {name}")
    return sep.join(parts)


def dump_network(network: Network) -> str:
    """Serialize to DSL text that parses back to an identical network."""
    names = network.species_names
    lines = ["species " + ", ".join(names)]
    for rxn in network.reactions:
        arrow = "<->" if rxn.reversible else "->"
        law = rxn.law
        params = f"kf={_fmt(law.k_forward)}"
        if rxn.reversible:
            params += f" kr={_fmt(law.k_reverse)}"
        for group in law.denominator.groups:
            terms = " ".join(f"Km({names[t.species]})={_fmt(t.km)}" for t in group)
            params += f" [{terms}]"
        lines.append(
            f"reaction {rxn.id}: {format_complex(network, rxn.substrate)} {arrow} "
            f"{format_complex(network, rxn.product)} ; {law.kind} {params}"
        )
    for flux in network.boundary:
        target = format_complex(network, flux.complex)
        if flux.form == CONSTANT:
            lines.append(f"boundary {target}: constant {_fmt(flux.value)}")
        else:
            lines.append(f"boundary {target}: linear {names[flux.species]} {_fmt(flux.value)}")
    return "\n".join(lines) + "\n"


def network_to_dict(network: Network) -> dict:
    names = network.species_names
    return {
        "species": names,
        "complexes": [{names[i]: k for i, k in cx.composition} for cx in network.complexes],
        "reactions": [
            {
                "id": r.id,
                "substrate": r.substrate,
                "product": r.product,
                "reversible": r.reversible,
                "law": {
                    "kind": r.law.kind,
                    "kf": r.law.k_forward,
                    "kr": r.law.k_reverse,
                    "groups": [
                        [{"species": names[t.species], "multiplicity": t.multiplicity, "Km": t.km} for t in g]
                        for g in r.law.denominator.groups
                    ],
                },
            }
            for r in network.reactions
        ],
        "boundary": [
            {
                "complex": f.complex,
                "form": f.form,
                "value": f.value,
                **({"species": names[f.species]} if f.species is not None else {}),
            }
            for f in network.boundary
        ],
    }


def network_from_dict(data: dict) -> Network:
    try:
        names = list(data["species"])
        index = {n: i for i, n in enumerate(names)}
        complexes = tuple(
            Complex(tuple(sorted((index[n], int(k)) for n, k in comp.items())), i)
            for i, comp in enumerate(data["complexes"])
        )
        reactions = []
        for r in data["reactions"]:
            law = r["law"]
            groups = tuple(
                tuple(DenominatorTerm(index[t["species"]], int(t["multiplicity"]), float(t["Km"])) for t in g)
                for g in law.get("groups", [])
            )
            reactions.append(
                Reaction(
                    r["id"],
                    int(r["substrate"]),
                    int(r["product"]),
                    RateLaw(law["kind"], float(law["kf"]), float(law.get("kr", 0.0)), DenominatorSpec(groups)),
                    bool(r["reversible"]),
                )
            )
        boundary = tuple(
            BoundaryFlux(int(f["complex"]), f["form"], float(f["value"]), index[f["species"]] if "species" in f else None)
            for f in data.get("boundary", [])
        )
        return Network(
            species=tuple(Species(n, i) for i, n in enumerate(names)),
            complexes=complexes,
            reactions=tuple(reactions),
            boundary=boundary,
        )
    except (KeyError, TypeError, ValueError, NetworkError) as exc:
        raise ParseError(f"invalid network record: {exc}") from exc


def network_to_json(network: Network) -> str:
    return json.dumps(network_to_dict(network), indent=2)


def network_from_json(text: str) -> Network:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    return network_from_dict(data)


def parse_complex_label(network: Network, label: str) -> int:
    """Resolve a composition string such as ``"X1 + 2 X2"`` to a complex index.

    Term order and spacing do not matter.
    """
    comp: dict[int, int] = {}
    for part in label.split("+"):
        mt = re.fullmatch(r"\s*(\d+)?\s*([A-Za-z_][A-Za-z0-9_]*)\s*", part)
        if mt is None:
            raise KeyError(label)
        name = mt.group(2)
        if name not in network.species_names:
            raise KeyError(label)
        idx = network.species_index(name)
        comp[idx] = comp.get(idx, 0) + int(mt.group(1) or 1)
    return network.find_complex(comp)
