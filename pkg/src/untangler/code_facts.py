"""Parse method source (a Smalltalk-like subset) and extract voter facts.

The grammar covers unary/binary/keyword sends with standard precedence,
cascades, blocks with arguments and temporaries, assignments ``:=``, returns
``^``, literals (integers, floats, single-quoted strings, symbols, characters,
``true``/``false``/``nil``, literal arrays) and double-quoted comments.

Parsing discards all whitespace and comments, so two sources that differ only
cosmetically produce equal ASTs. ``canonical_print`` renders an AST back to
grammar-valid source; reparsing the canonical form is a fixpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

PSEUDO_VARIABLES = frozenset({"self", "super", "thisContext"})

_BINARY_CHARS = set("+-*/\\~<>=&|@%,?!")
_ID_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_ID_CHARS = _ID_START | set("0123456789")


class ParseError(ValueError):
    """Syntax error with the character offset where it was detected."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    """Tagged literal: int, float, string, symbol, char, bool, nil, array."""

    tag: str
    value: object


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Assignment:
    target: str
    value: "Expr"


@dataclass(frozen=True)
class Send:
    receiver: "Expr"
    selector: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Cascade:
    """Messages after the first are all sent to the first message's receiver."""

    receiver: "Expr"
    messages: tuple[tuple[str, tuple["Expr", ...]], ...]


@dataclass(frozen=True)
class Block:
    params: tuple[str, ...]
    temps: tuple[str, ...]
    body: tuple["Statement", ...]


@dataclass(frozen=True)
class Return:
    expr: "Expr"


Expr = Union[Literal, Variable, Assignment, Send, Cascade, Block]
Statement = Union[Return, Expr]


@dataclass(frozen=True)
class MethodAst:
    """A parsed method: selector pattern, parameters, temps, and body."""

    selector: str
    params: tuple[str, ...]
    temps: tuple[str, ...]
    body: tuple[Statement, ...]


@dataclass(frozen=True)
class MethodFacts:
    """What a method does, reduced to what the voters need."""

    selector: str
    sends: frozenset[str]
    accesses: frozenset[str]
    canonical_form: str


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

# Token types
_NUMBER, _STRING, _SYMBOL, _CHAR, _ID, _KEYWORD, _BINOP = (
    "number", "string", "symbol", "char", "id", "keyword", "binop")
_ASSIGN, _COLON, _CARET, _PERIOD, _SEMI = ":=", ":", "^", ".", ";"
_LPAREN, _RPAREN, _LBRACKET, _RBRACKET, _ARRAY = "(", ")", "[", "]", "#("
_EOF = "eof"

# Token types after which a '-' starts a binary send rather than a negative
# number (something just ended that can be a receiver or operand).
_VALUE_ENDINGS = frozenset({_NUMBER, _STRING, _SYMBOL, _CHAR, _ID, _RPAREN, _RBRACKET})


@dataclass(frozen=True)
class _Token:
    type: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(source)
    array_depth = 0  # inside #( ... ) a '-' glued to a digit is always a sign

    def prev_type() -> str | None:
        return tokens[-1].type if tokens else None

    while i < n:
        ch = source[i]
        if ch in " \t\r\n\f":
            i += 1
            continue
        if ch == '"':  # comment; "" is an escaped double quote
            j = i + 1
            while j < n:
                if source[j] == '"':
                    if j + 1 < n and source[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise ParseError("unterminated comment", i)
            i = j + 1
            continue
        start = i
        if ch in _ID_START:
            j = i + 1
            while j < n and source[j] in _ID_CHARS:
                j += 1
            word = source[i:j]
            if j < n and source[j] == ":" and (j + 1 >= n or source[j + 1] != "="):
                tokens.append(_Token(_KEYWORD, word + ":", start))
                i = j + 1
            else:
                tokens.append(_Token(_ID, word, start))
                i = j
            continue
        if ch.isdigit() or (
            ch == "-"
            and i + 1 < n
            and source[i + 1].isdigit()
            and (array_depth > 0 or prev_type() not in _VALUE_ENDINGS)
        ):
            i, text = _scan_number(source, i)
            tokens.append(_Token(_NUMBER, text, start))
            continue
        if ch == "'":
            i, text = _scan_string(source, i)
            tokens.append(_Token(_STRING, text, start))
            continue
        if ch == "#":
            if i + 1 < n and source[i + 1] == "(":
                tokens.append(_Token(_ARRAY, "#(", start))
                array_depth += 1
                i += 2
                continue
            i, name = _scan_symbol(source, i)
            tokens.append(_Token(_SYMBOL, name, start))
            continue
        if ch == "$":
            if i + 1 >= n:
                raise ParseError("character literal at end of input", i)
            tokens.append(_Token(_CHAR, source[i + 1], start))
            i += 2
            continue
        if ch == ":":
            if i + 1 < n and source[i + 1] == "=":
                tokens.append(_Token(_ASSIGN, ":=", start))
                i += 2
            else:
                tokens.append(_Token(_COLON, ":", start))
                i += 1
            continue
        if ch in "^.;()[]":
            if ch == "(" and array_depth > 0:
                array_depth += 1  # nested literal array
            elif ch == ")" and array_depth > 0:
                array_depth -= 1
            tokens.append(_Token(ch, ch, start))
            i += 1
            continue
        if ch in _BINARY_CHARS:
            j = i + 1
            while j < n and source[j] in _BINARY_CHARS:
                j += 1
            tokens.append(_Token(_BINOP, source[i:j], start))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token(_EOF, "", n))
    return tokens


def _scan_number(source: str, i: int) -> tuple[int, str]:
    n = len(source)
    j = i + 1 if source[i] == "-" else i
    while j < n and source[j].isdigit():
        j += 1
    if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
        j += 1
        while j < n and source[j].isdigit():
            j += 1
    if j < n and source[j] in "eE":
        k = j + 1
        if k < n and source[k] in "+-":
            k += 1
        if k < n and source[k].isdigit():
            j = k
            while j < n and source[j].isdigit():
                j += 1
    return j, source[i:j]


def _scan_string(source: str, i: int) -> tuple[int, str]:
    # '' inside a string is an escaped quote
    n = len(source)
    j = i + 1
    out: list[str] = []
    while j < n:
        if source[j] == "'":
            if j + 1 < n and source[j + 1] == "'":
                out.append("'")
                j += 2
                continue
            return j + 1, "".join(out)
        out.append(source[j])
        j += 1
    raise ParseError("unterminated string", i)


def _scan_symbol(source: str, i: int) -> tuple[int, str]:
    n = len(source)
    j = i + 1
    if j >= n:
        raise ParseError("dangling '#'", i)
    ch = source[j]
    if ch == "'":
        end, text = _scan_string(source, j)
        return end, text
    if ch in _ID_START:
        parts: list[str] = []
        while j < n and source[j] in _ID_START:
            k = j
            while k < n and source[k] in _ID_CHARS:
                k += 1
            if k < n and source[k] == ":":
                parts.append(source[j:k] + ":")
                j = k + 1
            else:
                if parts:  # keyword symbol must not end in a bare identifier
                    break
                parts.append(source[j:k])
                j = k
                break
        return j, "".join(parts)
    if ch in _BINARY_CHARS:
        k = j
        while k < n and source[k] in _BINARY_CHARS:
            k += 1
        return k, source[j:k]
    if ch == "[":
        raise ParseError("byte arrays are not supported", i)
    raise ParseError(f"malformed symbol starting with {ch!r}", i)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, token_type: str, what: str) -> _Token:
        tok = self.current
        if tok.type != token_type:
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def fail(self, message: str) -> ParseError:
        return ParseError(message, self.current.pos)

    # -- method -------------------------------------------------------------

    def parse_method(self) -> MethodAst:
        selector, params = self.parse_pattern()
        temps = self.parse_temps()
        body = self.parse_statements(terminators=(_EOF,))
        self.expect(_EOF, "end of method")
        return MethodAst(selector, params, temps, tuple(body))

    def parse_pattern(self) -> tuple[str, tuple[str, ...]]:
        tok = self.current
        if tok.type == _KEYWORD:
            parts: list[str] = []
            params: list[str] = []
            while self.current.type == _KEYWORD:
                parts.append(self.advance().text)
                params.append(self.expect(_ID, "argument name").text)
            return "".join(parts), tuple(params)
        if tok.type == _BINOP:
            self.advance()
            param = self.expect(_ID, "argument name").text
            return tok.text, (param,)
        if tok.type == _ID:
            self.advance()
            return tok.text, ()
        raise self.fail("expected a method selector pattern")

    def parse_temps(self) -> tuple[str, ...]:
        if self.current.type == _BINOP and self.current.text == "|":
            self.advance()
            names: list[str] = []
            while self.current.type == _ID:
                names.append(self.advance().text)
            tok = self.current
            if not (tok.type == _BINOP and tok.text == "|"):
                raise self.fail("expected '|' closing the temporaries")
            self.advance()
            return tuple(names)
        return ()

    # -- statements -----------------------------------------------------------

    def parse_statements(self, terminators: tuple[str, ...]) -> list[Statement]:
        statements: list[Statement] = []
        while self.current.type not in terminators:
            statements.append(self.parse_statement())
            if self.current.type == _PERIOD:
                self.advance()
            else:
                break
        if self.current.type not in terminators:
            raise self.fail("expected '.' or end of statements")
        return statements

    def parse_statement(self) -> Statement:
        if self.current.type == _CARET:
            self.advance()
            return Return(self.parse_expr())
        return self.parse_expr()

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> Expr:
        if self.current.type == _ID and self.tokens[self.index + 1].type == _ASSIGN:
            target = self.advance().text
            self.advance()  # :=
            return Assignment(target, self.parse_expr())
        return self.parse_cascade()

    def parse_cascade(self) -> Expr:
        head = self.parse_keyword_expr()
        if self.current.type != _SEMI:
            return head
        if not isinstance(head, Send):
            raise self.fail("cascade requires a message send before ';'")
        messages = [(head.selector, head.args)]
        while self.current.type == _SEMI:
            self.advance()
            messages.append(self.parse_cascade_message())
        return Cascade(head.receiver, tuple(messages))

    def parse_cascade_message(self) -> tuple[str, tuple[Expr, ...]]:
        tok = self.current
        if tok.type == _KEYWORD:
            parts: list[str] = []
            args: list[Expr] = []
            while self.current.type == _KEYWORD:
                parts.append(self.advance().text)
                args.append(self.parse_binary_expr())
            return "".join(parts), tuple(args)
        if tok.type == _BINOP:
            self.advance()
            return tok.text, (self.parse_unary_expr(),)
        if tok.type == _ID:
            self.advance()
            return tok.text, ()
        raise self.fail("expected a message after ';'")

    def parse_keyword_expr(self) -> Expr:
        receiver = self.parse_binary_expr()
        if self.current.type != _KEYWORD:
            return receiver
        parts: list[str] = []
        args: list[Expr] = []
        while self.current.type == _KEYWORD:
            parts.append(self.advance().text)
            args.append(self.parse_binary_expr())
        return Send(receiver, "".join(parts), tuple(args))

    def parse_binary_expr(self) -> Expr:
        node = self.parse_unary_expr()
        while self.current.type == _BINOP:
            op = self.advance().text
            arg = self.parse_unary_expr()
            node = Send(node, op, (arg,))
        return node

    def parse_unary_expr(self) -> Expr:
        node = self.parse_primary()
        while self.current.type == _ID:
            node = Send(node, self.advance().text)
        return node

    def parse_primary(self) -> Expr:
        tok = self.current
        if tok.type == _BINOP and tok.text == "-":
            # a '-' glued to a number is a sign wherever a primary is required
            following = self.tokens[self.index + 1]
            if following.type == _NUMBER and following.pos == tok.pos + 1:
                self.advance()
                self.advance()
                positive = _number_literal(following.text)
                return Literal(positive.tag, -positive.value)
        if tok.type == _NUMBER:
            self.advance()
            return _number_literal(tok.text)
        if tok.type == _STRING:
            self.advance()
            return Literal("string", tok.text)
        if tok.type == _SYMBOL:
            self.advance()
            return Literal("symbol", tok.text)
        if tok.type == _CHAR:
            self.advance()
            return Literal("char", tok.text)
        if tok.type == _ID:
            self.advance()
            if tok.text == "true":
                return Literal("bool", True)
            if tok.text == "false":
                return Literal("bool", False)
            if tok.text == "nil":
                return Literal("nil", None)
            return Variable(tok.text)
        if tok.type == _LPAREN:
            self.advance()
            inner = self.parse_expr()
            self.expect(_RPAREN, "')'")
            return inner
        if tok.type == _LBRACKET:
            return self.parse_block()
        if tok.type == _ARRAY:
            self.advance()
            return self.parse_literal_array()
        raise self.fail(f"expected an expression, found {tok.text or 'end of input'!r}")

    def parse_block(self) -> Block:
        self.expect(_LBRACKET, "'['")
        params: list[str] = []
        while self.current.type == _COLON:
            self.advance()
            params.append(self.expect(_ID, "block argument name").text)
        if params:
            tok = self.current
            if not (tok.type == _BINOP and tok.text == "|"):
                raise self.fail("expected '|' after block arguments")
            self.advance()
        temps = self.parse_temps()
        body = self.parse_statements(terminators=(_RBRACKET,))
        self.expect(_RBRACKET, "']'")
        return Block(tuple(params), temps, tuple(body))

    def parse_literal_array(self) -> Literal:
        elements: list[Literal] = []
        while True:
            tok = self.current
            if tok.type == _RPAREN:
                self.advance()
                return Literal("array", tuple(elements))
            elements.append(self.parse_array_element())

    def parse_array_element(self) -> Literal:
        tok = self.advance()
        if tok.type == _NUMBER:
            return _number_literal(tok.text)
        if tok.type == _STRING:
            return Literal("string", tok.text)
        if tok.type == _SYMBOL:
            return Literal("symbol", tok.text)
        if tok.type == _CHAR:
            return Literal("char", tok.text)
        if tok.type == _ID:
            if tok.text == "true":
                return Literal("bool", True)
            if tok.text == "false":
                return Literal("bool", False)
            if tok.text == "nil":
                return Literal("nil", None)
            return Literal("symbol", tok.text)
        if tok.type == _KEYWORD:
            # adjacent keyword tokens form one keyword symbol, e.g. at:put:
            parts = [tok.text]
            while self.current.type == _KEYWORD:
                parts.append(self.advance().text)
            return Literal("symbol", "".join(parts))
        if tok.type == _BINOP:
            return Literal("symbol", tok.text)
        if tok.type in (_LPAREN, _ARRAY):
            return self.parse_literal_array()
        raise ParseError(f"unexpected {tok.text!r} in literal array", tok.pos)


def _number_literal(text: str) -> Literal:
    if "." in text or "e" in text or "E" in text:
        return Literal("float", float(text))
    return Literal("int", int(text))


def parse_method(source: str) -> MethodAst:
    """Parse method source into an AST, discarding comments and whitespace."""
    if not source.strip():
        raise ParseError("empty method source", 0)
    return _Parser(_tokenize(source)).parse_method()


# ---------------------------------------------------------------------------
# Canonical printing
# ---------------------------------------------------------------------------

# Precedence levels: 4 primary, 3 unary, 2 binary, 1 keyword, 0 assignment/cascade
def _send_kind(selector: str) -> str:
    if ":" in selector:
        return "keyword"
    if selector[0] in _BINARY_CHARS:
        return "binary"
    return "unary"


def _level(node: Expr) -> int:
    if isinstance(node, (Literal, Variable, Block)):
        return 4
    if isinstance(node, Send):
        return {"unary": 3, "binary": 2, "keyword": 1}[_send_kind(node.selector)]
    return 0  # Assignment, Cascade


def _print_expr(node: Expr, min_level: int) -> str:
    text = _print_raw(node)
    if _level(node) < min_level:
        return f"({text})"
    return text


def _print_message(selector: str, args: tuple[Expr, ...]) -> str:
    kind = _send_kind(selector)
    if kind == "unary":
        return selector
    if kind == "binary":
        return f"{selector} {_print_expr(args[0], 3)}"
    parts = selector.split(":")[:-1]
    return " ".join(f"{part}: {_print_expr(arg, 2)}" for part, arg in zip(parts, args))


def _print_raw(node: Expr) -> str:
    if isinstance(node, Literal):
        return _print_literal(node)
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Assignment):
        return f"{node.target} := {_print_expr(node.value, 0)}"
    if isinstance(node, Send):
        receiver_level = 3 if _send_kind(node.selector) == "unary" else 2
        return f"{_print_expr(node.receiver, receiver_level)} " \
               f"{_print_message(node.selector, node.args)}"
    if isinstance(node, Cascade):
        first_sel, first_args = node.messages[0]
        receiver_level = 3 if _send_kind(first_sel) == "unary" else 2
        head = f"{_print_expr(node.receiver, receiver_level)} " \
               f"{_print_message(first_sel, first_args)}"
        tails = [_print_message(sel, args) for sel, args in node.messages[1:]]
        return "; ".join([head] + tails)
    if isinstance(node, Block):
        pieces: list[str] = []
        if node.params:
            pieces.append(" ".join(f":{p}" for p in node.params) + " |")
        if node.temps:
            pieces.append("| " + " ".join(node.temps) + " |")
        body = _print_statements(node.body)
        if body:
            pieces.append(body)
        return "[" + " ".join(pieces) + "]"
    raise TypeError(f"not an expression node: {node!r}")


def _print_statement(stmt: Statement) -> str:
    if isinstance(stmt, Return):
        return f"^ {_print_expr(stmt.expr, 0)}"
    return _print_expr(stmt, 0)


def _print_statements(body: tuple[Statement, ...]) -> str:
    return ". ".join(_print_statement(s) for s in body)


def _print_literal(lit: Literal) -> str:
    tag, value = lit.tag, lit.value
    if tag == "int":
        return str(value)
    if tag == "float":
        return repr(value)
    if tag == "string":
        return "'" + str(value).replace("'", "''") + "'"
    if tag == "symbol":
        return "#" + _print_symbol_name(str(value))
    if tag == "char":
        return "$" + str(value)
    if tag == "bool":
        return "true" if value else "false"
    if tag == "nil":
        return "nil"
    if tag == "array":
        return "#(" + " ".join(_print_array_element(e) for e in value) + ")"
    raise TypeError(f"unknown literal tag {tag!r}")


def _is_plain_symbol(name: str) -> bool:
    if not name:
        return False
    if all(c in _BINARY_CHARS for c in name):
        return True
    for part in name.split(":") if name.endswith(":") else [name]:
        if name.endswith(":") and part == "":
            continue
        if not part or part[0] not in _ID_START or not all(c in _ID_CHARS for c in part):
            return False
    return True


def _print_symbol_name(name: str) -> str:
    if _is_plain_symbol(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def _print_array_element(lit: Literal) -> str:
    if lit.tag == "symbol" and _is_plain_symbol(str(lit.value)) \
            and str(lit.value) not in ("true", "false", "nil"):
        return str(lit.value)
    if lit.tag == "array":
        return "(" + " ".join(_print_array_element(e) for e in lit.value) + ")"
    return _print_literal(lit)


def canonical_print(method: MethodAst) -> str:
    """Render an AST as minimal, deterministic, reparseable source."""
    kind = _send_kind(method.selector)
    if kind == "unary":
        header = method.selector
    elif kind == "binary":
        header = f"{method.selector} {method.params[0]}"
    else:
        parts = method.selector.split(":")[:-1]
        header = " ".join(f"{part}: {param}" for part, param in zip(parts, method.params))
    pieces = [header]
    if method.temps:
        pieces.append("| " + " ".join(method.temps) + " |")
    body = _print_statements(method.body)
    if body:
        pieces.append(body)
    return " ".join(pieces)


# ---------------------------------------------------------------------------
# Fact extraction
# ---------------------------------------------------------------------------

def _walk(node: Statement, sends: set[str], reads: set[str], declared: set[str]) -> None:
    if isinstance(node, Return):
        _walk(node.expr, sends, reads, declared)
    elif isinstance(node, Variable):
        reads.add(node.name)
    elif isinstance(node, Assignment):
        reads.add(node.target)
        _walk(node.value, sends, reads, declared)
    elif isinstance(node, Send):
        sends.add(node.selector)
        _walk(node.receiver, sends, reads, declared)
        for arg in node.args:
            _walk(arg, sends, reads, declared)
    elif isinstance(node, Cascade):
        _walk(node.receiver, sends, reads, declared)
        for selector, args in node.messages:
            sends.add(selector)
            for arg in args:
                _walk(arg, sends, reads, declared)
    elif isinstance(node, Block):
        declared.update(node.params)
        declared.update(node.temps)
        for stmt in node.body:
            _walk(stmt, sends, reads, declared)
    # Literals carry no sends or accesses.


def declared_locals(source: str) -> frozenset[str]:
    """All names declared as method args, block args, or temporaries."""
    method = parse_method(source)
    sends: set[str] = set()
    reads: set[str] = set()
    declared: set[str] = set(method.params) | set(method.temps)
    for stmt in method.body:
        _walk(stmt, sends, reads, declared)
    return frozenset(declared)


def extract_facts(source: str) -> MethodFacts:
    """Sent selectors, accessed variables, and the canonical form of a method.

    Accesses are undeclared identifiers used as variables (reads plus
    assignment targets); method args, block args, temporaries, and the
    pseudo-variables are excluded.
    """
    method = parse_method(source)
    sends: set[str] = set()
    reads: set[str] = set()
    declared: set[str] = set(method.params) | set(method.temps)
    for stmt in method.body:
        _walk(stmt, sends, reads, declared)
    accesses = reads - declared - PSEUDO_VARIABLES
    return MethodFacts(
        selector=method.selector,
        sends=frozenset(sends),
        accesses=frozenset(accesses),
        canonical_form=canonical_print(method),
    )


def ast_equal(a: str, b: str) -> bool:
    """True iff the two sources parse to the same canonical form."""
    return extract_facts(a).canonical_form == extract_facts(b).canonical_form


_EMPTY = frozenset()


def fact_delta(before: str, after: str) -> tuple[frozenset[str], frozenset[str]]:
    """Symmetric differences of sends and accesses between two versions.

    An empty input contributes empty fact sets, which covers added and
    removed methods.
    """
    before_facts = extract_facts(before) if before.strip() else None
    after_facts = extract_facts(after) if after.strip() else None
    sends_before = before_facts.sends if before_facts else _EMPTY
    sends_after = after_facts.sends if after_facts else _EMPTY
    accesses_before = before_facts.accesses if before_facts else _EMPTY
    accesses_after = after_facts.accesses if after_facts else _EMPTY
    return (
        frozenset(sends_before ^ sends_after),
        frozenset(accesses_before ^ accesses_after),
    )
