"""Context-free grammar core: lexicon, tree sampling, classification.

The grammar lives in a versioned data file (``data/grammar_v1.txt``) and
defines two sentence families over one 72-token inventory:

* ``S_Q`` -- do-support declaratives ("my unicorn does move ."), used by
  question formation and declaration copying;
* ``S_T`` -- past-tense declaratives ("my zebra behind the peacock
  smiled ."), used by tense inflection and past copying.

Sampling happens in two stages. A *skeleton* (a leaf-stripped
``TreeShape``) is drawn uniformly from the enumerated set of structures
valid for a (task family, branching constraint, degree) triple; the
skeleton is then *lexicalized* by drawing words, with number agreement
enforced by construction inside every noun phrase and between every
subject and its own auxiliary/verb.

Degree bounds: at degree 1 (the default) a clause holds at most one
relative clause and one prepositional phrase, relative-clause interiors
are bare, and relative clauses never nest. At degree 2 every main- or
RC-level noun phrase may carry one postmodifier (PP or RC), giving one
extra level of nesting; NPs two levels down are bare. PP-internal NPs
are always bare.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import (
    ConstraintUnsatisfiable,
    GrammarFormatError,
    MalformedTree,
    ParseError,
)

VOCAB_SIZE = 72
PAD_TOKEN = "<pad>"

SG, PL = "sg", "pl"
NUMBERS = (SG, PL)


class TaskKind(Enum):
    QUESTION_FORMATION = "quest"
    DECLARATION_COPY = "decl"
    TENSE_INFLECTION = "PRESENT"
    PAST_COPY = "PAST"

    @property
    def marker(self) -> str:
        return self.value

    @property
    def family(self) -> str:
        """Sentence family feeding this task: "qf" or "ti"."""
        if self in (TaskKind.QUESTION_FORMATION, TaskKind.DECLARATION_COPY):
            return "qf"
        return "ti"

    @property
    def is_copy(self) -> bool:
        return self in (TaskKind.DECLARATION_COPY, TaskKind.PAST_COPY)


class Branching(Enum):
    """Branching class of a sentence.

    A sentence is center-embedded iff a relative clause attaches to the
    main-clause subject; the subtype records whether the subject head
    acts as subject or object inside that clause. Everything else
    (including subjects modified by a prepositional phrase) is
    right-branching.
    """

    RIGHT_BRANCHING = "right_branching"
    CE_SUBJECT = "ce_subject"
    CE_OBJECT = "ce_object"

    @property
    def center_embedded(self) -> bool:
        return self is not Branching.RIGHT_BRANCHING


#: constraint values accepted by sample_tree / enumerate_structures
ANY = "any"
CENTER_EMBEDDED = "center_embedded"

_ROOT = {"qf": "S_Q", "ti": "S_T"}
_NP = {"qf": "NP_Q", "ti": "NP_T"}
_VP = {"qf": "VP_Q", "ti": "VP_T"}
_RC = {"qf": "RC_Q", "ti": "RC_T"}
_FAMILY_OF_ROOT = {v: k for k, v in _ROOT.items()}


@dataclass(frozen=True)
class SyntaxTree:
    label: str
    children: tuple["SyntaxTree", ...] = ()
    word: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()


@dataclass(frozen=True)
class TreeShape:
    label: str
    children: tuple["TreeShape", ...] = ()

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def sentence(tree: SyntaxTree) -> tuple[str, ...]:
    """Leaf words read left to right."""
    return tuple(leaf.word for leaf in tree.leaves())


def shape_of(tree: SyntaxTree) -> TreeShape:
    """Leaf-word-stripped skeleton; equal for vocabulary variants."""
    if tree.is_leaf:
        return TreeShape(tree.label)
    return TreeShape(tree.label, tuple(shape_of(c) for c in tree.children))


def shape_sexpr(shape: TreeShape) -> str:
    if not shape.children:
        return shape.label
    return "(%s %s)" % (shape.label, " ".join(shape_sexpr(c) for c in shape.children))


def parse_shape_sexpr(text: str) -> TreeShape:
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def parse() -> TreeShape:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of shape expression")
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            label = tokens[pos]
            pos += 1
            children = []
            while tokens[pos] != ")":
                children.append(parse())
            pos += 1
            return TreeShape(label, tuple(children))
        if tok == ")":
            raise ParseError("unbalanced ')' in shape expression")
        pos += 1
        return TreeShape(tok)

    shape = parse()
    if pos != len(tokens):
        raise ParseError("trailing tokens in shape expression")
    return shape


def shape_id(shape: TreeShape) -> str:
    """Stable 12-hex identifier of a TreeShape."""
    return hashlib.sha1(shape_sexpr(shape).encode()).hexdigest()[:12]


def tree_sexpr(tree: SyntaxTree) -> str:
    if tree.is_leaf:
        return "(%s %s)" % (tree.label, tree.word)
    return "(%s %s)" % (tree.label, " ".join(tree_sexpr(c) for c in tree.children))


@dataclass(frozen=True)
class VerbLexeme:
    stem: str          # also the present-plural form
    present_sg: str
    past: str

    def present(self, number: str) -> str:
        return self.present_sg if number == SG else self.stem


class Grammar:
    """Productions plus a feature-annotated lexicon (see module docs)."""

    def __init__(self, version, productions, lexicon, verb_classes, specials, markers):
        self.version = version
        self.productions = {nt: tuple(tuple(r) for r in rhs) for nt, rhs in productions.items()}
        self.lexicon = {cls: tuple(entries) for cls, entries in lexicon.items()}
        self.verb_classes = {cls: tuple(v) for cls, v in verb_classes.items()}
        self.specials = tuple(specials)
        self.markers = tuple(markers)

        self.det_words = tuple(w for w, _ in self.lexicon.get("DET", ()))
        self.rel_words = tuple(w for w, _ in self.lexicon.get("REL", ()))
        self.prep_words = tuple(w for w, _ in self.lexicon.get("PREP", ()))
        self.nouns_by_number = {n: tuple(w for w, f in self.lexicon.get("NOUN", ()) if f == n)
                                for n in NUMBERS}
        self._noun_number = {w: f for w, f in self.lexicon.get("NOUN", ())}
        self.aux_by_number = {n: tuple(w for w, f in self.lexicon.get("AUX", ()) if f == n)
                              for n in NUMBERS}
        self._aux_number = {w: f for w, f in self.lexicon.get("AUX", ())}

        # token -> (class, lexeme, form); form in {"stem", "present_sg", "past"}
        self._verb_form: dict[str, tuple[str, VerbLexeme, str]] = {}
        for cls, lexemes in self.verb_classes.items():
            for lx in lexemes:
                for form, token in (("stem", lx.stem), ("present_sg", lx.present_sg), ("past", lx.past)):
                    self._verb_form.setdefault(token, (cls, lx, form))
        self._verb_lemmas = {cls: {lx.stem for lx in lexemes}
                             for cls, lexemes in self.verb_classes.items()}

        self._structures: dict[tuple, tuple[TreeShape, ...]] = {}
        self._validate()

    # ------------------------------------------------------------------ lookups

    def is_noun(self, token) -> bool:
        return token in self._noun_number

    def noun_number(self, token) -> str:
        return self._noun_number[token]

    def is_aux(self, token) -> bool:
        return token in self._aux_number

    def aux_number(self, token) -> str:
        return self._aux_number[token]

    def other_aux(self, token) -> str:
        """The same-number auxiliary of opposite polarity."""
        number = self._aux_number[token]
        others = [w for w in self.aux_by_number[number] if w != token]
        return others[0]

    def is_verb(self, token) -> bool:
        return token in self._verb_form

    def is_past_verb(self, token) -> bool:
        info = self._verb_form.get(token)
        return info is not None and info[2] == "past"

    def verb_lexeme(self, token) -> VerbLexeme:
        return self._verb_form[token][1]

    def verb_form(self, token) -> str:
        return self._verb_form[token][2]

    def lemma_in_class(self, token, cls) -> bool:
        info = self._verb_form.get(token)
        return info is not None and info[1].stem in self._verb_lemmas.get(cls, ())

    def words(self) -> set[str]:
        out = set()
        for entries in self.lexicon.values():
            out.update(w for w, _ in entries)
        for lexemes in self.verb_classes.values():
            for lx in lexemes:
                out.update((lx.stem, lx.present_sg, lx.past))
        return out

    def vocab(self) -> list[str]:
        """Canonical 72-token inventory: pad first, rest in codepoint order."""
        rest = self.words() | set(self.specials) | set(self.markers)
        rest.discard(PAD_TOKEN)
        return [PAD_TOKEN] + sorted(rest)

    # ------------------------------------------------------------------ validation

    def _validate(self):
        for root in _ROOT.values():
            if root not in self.productions:
                raise GrammarFormatError(f"missing start symbol {root}")
        terminals = set(self.lexicon) | set(self.verb_classes)
        for nt, alts in self.productions.items():
            for rhs in alts:
                for sym in rhs:
                    if sym not in self.productions and sym not in terminals:
                        raise GrammarFormatError(f"symbol {sym!r} in {nt} has no production or lexicon")
        for cls, entries in self.lexicon.items():
            if not entries:
                raise GrammarFormatError(f"empty lexicon for {cls}")
        for n in NUMBERS:
            if not self.nouns_by_number[n]:
                raise GrammarFormatError(f"no {n} nouns")
            if len(self.aux_by_number[n]) != 2:
                raise GrammarFormatError(f"expected exactly two {n} auxiliaries")
        size = len(self.vocab())
        if size != VOCAB_SIZE:
            raise GrammarFormatError(f"token inventory has {size} types, expected {VOCAB_SIZE}")

    # ------------------------------------------------------------------ structures

    def structures(self, task, constraint=ANY, degree=1) -> tuple[TreeShape, ...]:
        """All valid sentence skeletons for (task family, constraint, degree)."""
        family = task.family if isinstance(task, TaskKind) else str(task)
        if degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {degree}")
        key = (family, _constraint_key(constraint), degree)
        if key not in self._structures:
            allshapes = self._enumerate_sentences(family, degree)
            wanted = key[1]
            if wanted == ANY:
                keep = allshapes
            elif wanted == CENTER_EMBEDDED:
                keep = [s for s in allshapes if classify_shape(s).center_embedded]
            else:
                keep = [s for s in allshapes if classify_shape(s).value == wanted]
            self._structures[key] = tuple(sorted(keep, key=shape_sexpr))
        if not self._structures[key]:
            raise ConstraintUnsatisfiable(f"no {family} structures satisfy {constraint!r} at degree {degree}")
        return self._structures[key]

    def _enumerate_sentences(self, family, degree):
        root, np, vp, end = _ROOT[family], _NP[family], _VP[family], "END"
        nps = self._np_variants(family, level=0, degree=degree)
        vps = []
        if family == "qf":
            vps.append(TreeShape(vp, (TreeShape("AUX"), TreeShape("V_I"))))
            for obj in nps:
                vps.append(TreeShape(vp, (TreeShape("AUX"), TreeShape("V_T"), obj)))
        else:
            vps.append(TreeShape(vp, (TreeShape("V_I"),)))
            for obj in nps:
                vps.append(TreeShape(vp, (TreeShape("V_T"), obj)))
        out = []
        for subj, verb_phrase in itertools.product(nps, vps):
            s = TreeShape(root, (subj, verb_phrase, TreeShape(end)))
            if degree == 1 and not _degree1_budget_ok(s):
                continue
            out.append(s)
        return out

    def _np_variants(self, family, level, degree):
        np, rc = _NP[family], _RC[family]
        det, noun = TreeShape("DET"), TreeShape("NOUN")
        pp = TreeShape("PP", (TreeShape("PREP"), TreeShape("NP_B", (det, noun))))
        out = [TreeShape(np, (det, noun))]
        if level == 0 or (degree >= 2 and level == 1):
            out.append(TreeShape(np, (det, noun, pp)))
        if level < degree:
            for rc_shape in self._rc_variants(family, level + 1, degree):
                out.append(TreeShape(np, (det, noun, rc_shape)))
        return out

    def _rc_variants(self, family, level, degree):
        rc = _RC[family]
        rel, aux = TreeShape("REL"), TreeShape("AUX")
        vi, vt = TreeShape("V_I"), TreeShape("V_T")
        inner = self._np_variants(family, level, degree)
        out = []
        if family == "qf":
            out.append(TreeShape(rc, (rel, aux, vi)))
            out.extend(TreeShape(rc, (rel, aux, vt, obj)) for obj in inner)
            out.extend(TreeShape(rc, (rel, subj, aux, vt)) for subj in inner)
        else:
            out.append(TreeShape(rc, (rel, vi)))
            out.extend(TreeShape(rc, (rel, vt, obj)) for obj in inner)
            out.extend(TreeShape(rc, (rel, subj, vt)) for subj in inner)
        return out

    # ------------------------------------------------------------------ sampling

    def sample_tree(self, constraint, rng, task=TaskKind.QUESTION_FORMATION, degree=1) -> SyntaxTree:
        """Complete tree matching the constraint; leaves drawn uniformly."""
        skeletons = self.structures(task, constraint, degree)
        skeleton = skeletons[int(rng.integers(len(skeletons)))]
        return self.lexicalize(skeleton, rng)

    def lexicalize(self, skeleton: TreeShape, rng) -> SyntaxTree:
        """Draw leaf words for a skeleton with agreement enforced."""
        family = _FAMILY_OF_ROOT.get(skeleton.label)
        if family is None:
            raise MalformedTree(f"unknown root label {skeleton.label!r}")

        def pick(seq):
            return seq[int(rng.integers(len(seq)))]

        def leaf(label, word):
            return SyntaxTree(label, (), word)

        def verb_leaf(label):
            lx = pick(self.verb_classes[label])
            return leaf(label, lx.stem if family == "qf" else lx.past)

        def do_np(shape):
            number = pick(NUMBERS)
            kids = [leaf("DET", pick(self.det_words)),
                    leaf("NOUN", pick(self.nouns_by_number[number]))]
            for post in shape.children[2:]:
                if post.label == "PP":
                    kids.append(do_pp(post))
                else:
                    kids.append(do_rc(post, number))
            return SyntaxTree(shape.label, tuple(kids)), number

        def do_pp(shape):
            inner, _ = do_np(shape.children[1])
            return SyntaxTree("PP", (leaf("PREP", pick(self.prep_words)), inner))

        def do_rc(shape, head_number):
            kids = [leaf("REL", pick(self.rel_words))]
            rest = shape.children[1:]
            if rest[0].label.startswith("NP"):           # object gap: REL NP [AUX] V
                inner, inner_number = do_np(rest[0])
                kids.append(inner)
                governed = inner_number
                rest = rest[1:]
            else:                                        # subject gap: REL [AUX] V [NP]
                governed = head_number
            for sub in rest:
                if sub.label == "AUX":
                    kids.append(leaf("AUX", pick(self.aux_by_number[governed])))
                elif sub.label in self.verb_classes:
                    kids.append(verb_leaf(sub.label))
                else:
                    inner, _ = do_np(sub)
                    kids.append(inner)
            return SyntaxTree(shape.label, tuple(kids))

        subj, subj_number = do_np(skeleton.children[0])
        vp_shape = skeleton.children[1]
        vp_kids = []
        for sub in vp_shape.children:
            if sub.label == "AUX":
                vp_kids.append(leaf("AUX", pick(self.aux_by_number[subj_number])))
            elif sub.label in self.verb_classes:
                vp_kids.append(verb_leaf(sub.label))
            else:
                inner, _ = do_np(sub)
                vp_kids.append(inner)
        vp = SyntaxTree(vp_shape.label, tuple(vp_kids))
        return SyntaxTree(skeleton.label, (subj, vp, leaf("END", ".")))

    def resample_leaves(self, tree: SyntaxTree, rng) -> SyntaxTree:
        """Re-draw leaf words on the same skeleton, agreement preserved."""
        return self.lexicalize(shape_of(tree), rng)

    # ------------------------------------------------------------------ classification

    def classify(self, tree) -> Branching:
        self._check_tree(tree)
        return classify_shape(tree)

    def _check_tree(self, tree):
        if tree.label not in _FAMILY_OF_ROOT:
            raise MalformedTree(f"root label {tree.label!r} is not a sentence symbol")
        terminals = set(self.lexicon) | set(self.verb_classes)
        known = set(self.productions) | terminals
        for node in _iter_nodes(tree):
            if node.label not in known:
                raise MalformedTree(f"unknown label {node.label!r}")
            if getattr(node, "word", None) is not None:
                if node.label in self.verb_classes:
                    if not self.lemma_in_class(node.word, node.label):
                        raise MalformedTree(f"word {node.word!r} not in class {node.label}")
                elif node.label in self.lexicon:
                    if node.word not in {w for w, _ in self.lexicon[node.label]}:
                        raise MalformedTree(f"word {node.word!r} not in class {node.label}")

    # ------------------------------------------------------------------ parsing

    def parse_sentence(self, tokens, task) -> SyntaxTree:
        """Parse a sentence of this grammar back into its tree.

        Recognizes exactly the two sentence families defined by the
        grammar file (this is not a general English parser).
        """
        family = task.family if isinstance(task, TaskKind) else str(task)
        toks = list(tokens)
        pos = 0

        def peek():
            return toks[pos] if pos < len(toks) else None

        def take():
            nonlocal pos
            if pos >= len(toks):
                raise ParseError("unexpected end of sentence")
            pos += 1
            return toks[pos - 1]

        def leaf(label, word):
            return SyntaxTree(label, (), word)

        def parse_np(label):
            det = take()
            if det not in self.det_words:
                raise ParseError(f"expected determiner, got {det!r}")
            noun = take()
            if not self.is_noun(noun):
                raise ParseError(f"expected noun, got {noun!r}")
            kids = [leaf("DET", det), leaf("NOUN", noun)]
            nxt = peek()
            if nxt in self.prep_words:
                kids.append(parse_pp())
            elif nxt in self.rel_words:
                kids.append(parse_rc(self.noun_number(noun)))
            return SyntaxTree(label, tuple(kids))

        def parse_pp():
            prep = take()
            det = take()
            noun = take()
            if det not in self.det_words or not self.is_noun(noun):
                raise ParseError("malformed prepositional phrase")
            inner = SyntaxTree("NP_B", (leaf("DET", det), leaf("NOUN", noun)))
            return SyntaxTree("PP", (leaf("PREP", prep), inner))

        def parse_verb(transitive):
            word = take()
            cls = "V_T" if transitive else "V_I"
            wanted = "stem" if family == "qf" else "past"
            if not self.lemma_in_class(word, cls) or self.verb_form(word) != wanted:
                raise ParseError(f"expected {wanted} {cls} verb, got {word!r}")
            return leaf(cls, word)

        def parse_rc(head_number):
            rel = take()
            kids = [leaf("REL", rel)]
            if family == "qf":
                if self.is_aux(peek()):
                    aux = take()
                    if self.aux_number(aux) != head_number:
                        raise ParseError(f"auxiliary {aux!r} disagrees with its subject")
                    transitive = _looks_transitive(toks, pos + 1, self)
                    kids += [leaf("AUX", aux), parse_verb(transitive)]
                    if transitive:
                        kids.append(parse_np(_NP[family]))
                elif peek() in self.det_words:
                    inner = parse_np(_NP[family])
                    aux = take()
                    inner_number = self.noun_number(inner.children[1].word)
                    if not self.is_aux(aux) or self.aux_number(aux) != inner_number:
                        raise ParseError("object-gap clause auxiliary disagrees")
                    kids += [inner, parse_verb(transitive=True)]
                else:
                    raise ParseError(f"cannot parse relative clause at {peek()!r}")
            else:
                if self.is_past_verb(peek()):
                    transitive = _looks_transitive(toks, pos + 1, self)
                    kids.append(parse_verb(transitive))
                    if transitive:
                        kids.append(parse_np(_NP[family]))
                elif peek() in self.det_words:
                    kids += [parse_np(_NP[family]), parse_verb(transitive=True)]
                else:
                    raise ParseError(f"cannot parse relative clause at {peek()!r}")
            return SyntaxTree(_RC[family], tuple(kids))

        subj = parse_np(_NP[family])
        subj_number = self.noun_number(subj.children[1].word)
        vp_kids = []
        if family == "qf":
            aux = take()
            if not self.is_aux(aux) or self.aux_number(aux) != subj_number:
                raise ParseError(f"main auxiliary {aux!r} disagrees with subject")
            vp_kids.append(leaf("AUX", aux))
        transitive = _looks_transitive(toks, pos + 1, self)
        vp_kids.append(parse_verb(transitive))
        if transitive:
            vp_kids.append(parse_np(_NP[family]))
        vp = SyntaxTree(_VP[family], tuple(vp_kids))
        if take() != ".":
            raise ParseError("sentence must end with '.'")
        if pos != len(toks):
            raise ParseError(f"trailing tokens at position {pos}")
        return SyntaxTree(_ROOT[family], (subj, vp, leaf("END", ".")))

    # ------------------------------------------------------------------ dump

    def dump(self) -> str:
        lines = [f"version {self.version}", ""]
        for nt in sorted(self.productions):
            alts = " | ".join(" ".join(r) for r in self.productions[nt])
            lines.append(f"{nt} -> {alts}")
        lines.append("")
        for cls in sorted(self.lexicon):
            entries = " ".join(w if f is None else f"{w}:{f}" for w, f in self.lexicon[cls])
            lines.append(f"{cls}: {entries}")
        for cls in sorted(self.verb_classes):
            for lx in self.verb_classes[cls]:
                lines.append(f"{cls}: {lx.stem}/{lx.present_sg}/{lx.past}")
        lines.append("")
        lines.append(f"markers: {' '.join(self.markers)}")
        vocab = self.vocab()
        lines.append(f"inventory ({len(vocab)} tokens):")
        lines.extend(f"  {i:2d} {tok}" for i, tok in enumerate(vocab))
        return "\n".join(lines) + "\n"


def _looks_transitive(toks, next_pos, grammar) -> bool:
    # a verb is parsed as transitive iff a determiner follows it
    return next_pos < len(toks) and toks[next_pos] in grammar.det_words


def _iter_nodes(tree):
    yield tree
    for child in tree.children:
        yield from _iter_nodes(child)


def _degree1_budget_ok(s: TreeShape) -> bool:
    subj, vp = s.children[0], s.children[1]
    obj = next((c for c in vp.children if c.label.startswith("NP")), None)
    rc_count = _has_post(subj, "RC") + (_has_post(obj, "RC") if obj is not None else 0)
    pp_count = _has_post(subj, "PP") + (_has_post(obj, "PP") if obj is not None else 0)
    return rc_count <= 1 and pp_count <= 1


def _has_post(np: TreeShape, kind: str) -> bool:
    return any(c.label.startswith(kind) for c in np.children[2:])


def classify_shape(node) -> Branching:
    """Branching class from structure alone (works on trees and shapes)."""
    subject = node.children[0]
    rc = next((c for c in subject.children[2:] if c.label.startswith("RC")), None)
    if rc is None:
        return Branching.RIGHT_BRANCHING
    if rc.children[1].label.startswith("NP"):
        return Branching.CE_OBJECT
    return Branching.CE_SUBJECT


def subject_has_distractor(shape: TreeShape) -> bool:
    """True if a noun other than the subject head precedes the main verb."""
    subject = shape.children[0]
    return any(_contains_label(post, "NOUN") for post in subject.children[2:])


def _contains_label(shape, label) -> bool:
    if shape.label == label:
        return True
    return any(_contains_label(c, label) for c in shape.children)


def _constraint_key(constraint):
    if isinstance(constraint, Branching):
        return constraint.value
    if constraint in (ANY, CENTER_EMBEDDED):
        return constraint
    raise ValueError(f"unknown constraint {constraint!r}")


# ---------------------------------------------------------------------- loading

def load_grammar(path=None) -> Grammar:
    if path is None:
        text = resources.files("grammarlab.data").joinpath("grammar_v1.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_grammar_text(text)


def parse_grammar_text(text: str) -> Grammar:
    version = None
    productions: dict[str, list] = {}
    lexicon: dict[str, list] = {}
    verb_classes: dict[str, list] = {}
    specials: list[str] = []
    markers: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "version":
                version = int(fields[1])
            elif kind == "special":
                specials.append(fields[1])
            elif kind == "marker":
                markers.append(fields[1])
            elif kind == "lex":
                cls = fields[1]
                entries = lexicon.setdefault(cls, [])
                for item in fields[2:]:
                    word, _, feature = item.partition(":")
                    entries.append((word, feature or None))
            elif kind == "verb":
                cls = fields[1]
                stem, present_sg, past = fields[2:5]
                verb_classes.setdefault(cls, []).append(VerbLexeme(stem, present_sg, past))
            elif kind == "prod":
                nt = fields[1]
                if fields[2] != "->":
                    raise GrammarFormatError(f"line {lineno}: expected '->'")
                rhs_text = " ".join(fields[3:])
                alts = [alt.split() for alt in rhs_text.split("|")]
                productions.setdefault(nt, []).extend(alts)
            else:
                raise GrammarFormatError(f"line {lineno}: unknown directive {kind!r}")
        except (IndexError, ValueError) as exc:
            raise GrammarFormatError(f"line {lineno}: {exc}") from exc
    if version is None:
        raise GrammarFormatError("grammar file missing version")
    return Grammar(version, productions, lexicon, verb_classes, specials, markers)


_DEFAULT: Grammar | None = None


def default_grammar() -> Grammar:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_grammar()
    return _DEFAULT


# ---------------------------------------------------------------------- spec surface

def sample_tree(grammar: Grammar, constraint, rng, task=TaskKind.QUESTION_FORMATION, degree=1):
    return grammar.sample_tree(constraint, rng, task=task, degree=degree)


def classify(tree, grammar: Grammar | None = None) -> Branching:
    return (grammar or default_grammar()).classify(tree)


def resample_leaves(tree, rng, grammar: Grammar | None = None) -> SyntaxTree:
    return (grammar or default_grammar()).resample_leaves(tree, rng)
