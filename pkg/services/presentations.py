"""
presentations.py
Finite Presentations
Presentation families, the Tietze-chain substitutions relating them, and the
presentation file format
"""

from typing import Dict, List, Optional, Sequence, Tuple
import logging

import pyparsing as pp

from services.words import GENERATOR_NAME, Substitution, Word, relation

logger = logging.getLogger(__name__)


class PresentationSyntaxError(ValueError):
    """Malformed presentation or word text, with 1-based position"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class Presentation:
    """Generators plus relator words over them"""

    def __init__(self, generators: Sequence[str], relators: Sequence[Word], name: str = ""):
        self.generators = tuple(generators)
        self.relators = tuple(relators)
        self.name = name

        if len(set(self.generators)) != len(self.generators):
            raise ValueError(f"duplicate generator names in {self.generators}")
        for gen in self.generators:
            if not GENERATOR_NAME.match(gen):
                raise ValueError(f"invalid generator name {gen!r}")
        known = set(self.generators)
        for rel in self.relators:
            unknown = rel.generators() - known
            if unknown:
                raise ValueError(f"relator {rel} uses unknown generators {sorted(unknown)}")

    @property
    def deficiency(self) -> int:
        return len(self.generators) - len(self.relators)

    def with_relators(self, extra: Sequence[Word], name: Optional[str] = None) -> "Presentation":
        return Presentation(self.generators, self.relators + tuple(extra),
                            name if name is not None else self.name)

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "generators": list(self.generators),
            "relator_lengths": [rel.length for rel in self.relators],
            "deficiency": self.deficiency,
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, Presentation):
            return NotImplemented
        return self.generators == other.generators and self.relators == other.relators

    def __hash__(self) -> int:
        return hash((self.generators, self.relators))

    def __repr__(self) -> str:
        gens = ", ".join(self.generators)
        rels = ", ".join(str(r) for r in self.relators)
        return f"<{gens} | {rels}>"


# ============================================================================
# PRESENTATION FAMILIES
# ============================================================================

def make_hm(m: int) -> Presentation:
    """<x, y | x^m y x^m = y x^m y, y^m x y^m = x y^m x, (x^2 y^m)^4 = 1>"""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"H_m needs m >= 1, got {m!r}")
    x, y = Word.generator("x"), Word.generator("y")
    relators = [
        relation(x ** m * y * x ** m, y * x ** m * y),
        relation(y ** m * x * y ** m, x * y ** m * x),
        (x ** 2 * y ** m) ** 4,
    ]
    return Presentation(("x", "y"), relators, name=f"H_{m}")


def make_serre_behr_mennicke() -> Presentation:
    """<a, b, u | b^4, b^2 = (bu)^2 = (ba)^3 = (bua^2)^3, u^-1 a u = a^4>"""
    a, b, u = (Word.generator(g) for g in "abu")
    b2 = b ** 2
    relators = [
        b ** 4,
        relation(b2, (b * u) ** 2),
        relation(b2, (b * a) ** 3),
        relation(b2, (b * u * a ** 2) ** 3),
        relation(u.inverse() * a * u, a ** 4),
    ]
    return Presentation(("a", "b", "u"), relators, name="SBM")


def make_corollary(r: int) -> Presentation:
    """H_2 with the extra relator x^r; presents SL_2(Z/rZ) for odd r"""
    if not isinstance(r, int) or r < 3 or r % 2 == 0:
        raise ValueError(f"the corollary presentation needs odd r >= 3, got {r!r}")
    base = make_hm(2)
    return base.with_relators([Word.generator("x", r)], name=f"SL2(Z/{r})")


def make_free(generators: Sequence[str]) -> Presentation:
    return Presentation(generators, [], name=f"F_{len(generators)}")


# ============================================================================
# TIETZE CHAIN: SBM <-> H_2
# ============================================================================

def tietze_substitutions() -> Dict[str, Substitution]:
    """
    Maps of the Tietze chain between the SBM presentation on {a, b, u} and
    H_2 written over {a, q}

    eliminate:    a -> a, b -> a^-1 q^-2 a^-1, u -> b^-1 q^-1 a^-2 q^-1 with b expanded
    introduce_q:  x -> a, y -> b u a^2 u^-1 b^-1
    rename:       a -> x, q -> y
    """
    a, b, u, q = (Word.generator(g) for g in "abuq")
    b_image = a.inverse() * q ** -2 * a.inverse()
    u_over_abq = b.inverse() * q.inverse() * a ** -2 * q.inverse()
    u_image = u_over_abq.substitute({"a": a, "b": b_image, "q": q})
    return {
        "eliminate": Substitution({"a": a, "b": b_image, "u": u_image}, ("a", "b", "u")),
        "introduce_q": Substitution(
            {"x": a, "y": b * u * a ** 2 * u.inverse() * b.inverse()}, ("x", "y")),
        "rename": Substitution({"a": Word.generator("x"), "q": Word.generator("y")}, ("a", "q")),
    }


def rewritten_tietze_relators() -> List[Tuple[str, Word]]:
    """
    Relators over {a, q}: the three relators the chain produces and every SBM
    relator pushed through the elimination of b and u
    """
    a, b, u, q = (Word.generator(g) for g in "abuq")
    eliminate = tietze_substitutions()["eliminate"]
    sbm = make_serre_behr_mennicke()
    labels = ["b^4", "b^2=(bu)^2", "b^2=(ba)^3", "b^2=(bua^2)^3", "u^-1au=a^4"]

    relators = [
        ("a^2qa^2=qa^2q", relation(a ** 2 * q * a ** 2, q * a ** 2 * q)),
        ("q^2aq^2=aq^2a", relation(q ** 2 * a * q ** 2, a * q ** 2 * a)),
        ("(a^2q^2)^4", (a ** 2 * q ** 2) ** 4),
        ("q=bua^2u^-1b^-1",
         relation(q, eliminate(b * u * a ** 2 * u.inverse() * b.inverse()))),
    ]
    relators.extend((f"rewritten {label}", eliminate(rel))
                    for label, rel in zip(labels, sbm.relators))
    return relators


# ============================================================================
# FILE FORMAT
# ============================================================================

def _word_grammar(generators: Sequence[str]) -> pp.ParserElement:
    known = set(generators)

    def generator_action(s, loc, toks):
        name = toks[0]
        if name not in known:
            raise pp.ParseFatalException(s, loc, f"unknown generator {name!r}")
        return Word.generator(name)

    def term_action(toks):
        base = toks[0]
        return base ** int(toks[1]) if len(toks) > 1 else base

    def word_action(toks):
        result = Word()
        for term in toks:
            result = result * term
        return result

    word = pp.Forward()
    gen = pp.Word(pp.alphas, pp.alphanums + "_").set_parse_action(generator_action)
    one = pp.Literal("1").set_parse_action(lambda: Word())
    group = pp.Suppress("(") + word + pp.Suppress(")")
    exponent = pp.Suppress("^") - pp.Regex(r"[+-]?\d+").set_name("integer exponent")
    term = ((gen | group | one) + pp.Optional(exponent)).set_parse_action(term_action)
    word <<= (term + pp.ZeroOrMore(pp.Suppress("*") - term)).set_parse_action(word_action)
    return word


def _relator_grammar(generators: Sequence[str]) -> pp.ParserElement:
    word = _word_grammar(generators)
    equation = word + pp.Optional(pp.Suppress("=") - word) + pp.StringEnd()
    return equation.set_parse_action(
        lambda toks: relation(toks[0], toks[1]) if len(toks) > 1 else toks[0])


def _parse_with(grammar: pp.ParserElement, text: str, line: Optional[int], offset: int):
    try:
        return grammar.parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as e:
        raise PresentationSyntaxError(e.msg, line=line, column=offset + e.col)


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse a word in the `term (* term)*` grammar; empty text is the identity"""
    if not text.strip():
        return Word()
    grammar = _word_grammar(generators) + pp.StringEnd()
    return _parse_with(grammar, text, None, 0)


def parse_presentation(text: str, name: str = "") -> Presentation:
    """
    Parse the presentation file format:

        gens: x y
        rel: x^2*y*x^2 = y*x^2*y   # equations become relators L*R^-1
        rel: (x^2*y^2)^4
    """
    generators: Optional[List[str]] = None
    relators: List[Word] = []
    grammar: Optional[pp.ParserElement] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        key, sep, body = content.partition(":")
        key = key.strip()
        if not sep:
            raise PresentationSyntaxError("expected `gens:` or `rel:`", line=lineno, column=1)
        body_offset = content.index(":") + 1

        if key == "gens":
            if generators is not None:
                raise PresentationSyntaxError("duplicate `gens:` line", line=lineno, column=1)
            generators = body.split()
            if not generators:
                raise PresentationSyntaxError("empty generator list", line=lineno,
                                              column=body_offset + 1)
            for gen in generators:
                if not GENERATOR_NAME.match(gen):
                    raise PresentationSyntaxError(f"invalid generator name {gen!r}",
                                                  line=lineno,
                                                  column=body_offset + body.index(gen) + 1)
            if len(set(generators)) != len(generators):
                raise PresentationSyntaxError("duplicate generator names", line=lineno,
                                              column=body_offset + 1)
            grammar = _relator_grammar(generators)
        elif key == "rel":
            if grammar is None:
                raise PresentationSyntaxError("`rel:` before `gens:`", line=lineno, column=1)
            relator = _parse_with(grammar, body, lineno, body_offset)
            if relator.is_identity():
                logger.warning(f"Line {lineno}: relator reduces to the empty word")
                raise PresentationSyntaxError("relator reduces to the empty word",
                                              line=lineno, column=body_offset + 1)
            relators.append(relator)
        else:
            raise PresentationSyntaxError(f"unknown line kind {key!r}", line=lineno, column=1)

    if generators is None:
        raise PresentationSyntaxError("missing `gens:` line")
    return Presentation(generators, relators, name=name)


def format_presentation(presentation: Presentation) -> str:
    """Inverse of parse_presentation"""
    lines = []
    if presentation.name:
        lines.append(f"# {presentation.name}")
    lines.append("gens: " + " ".join(presentation.generators))
    lines.extend(f"rel: {rel}" for rel in presentation.relators)
    return "\n".join(lines) + "\n"
