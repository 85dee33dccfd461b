"""Recursive-descent parser for FaaSChal choreographies.

Grammar::

    choreography = preamble { import } "def" "main" "(" [ params ] ")" stmts "end" EOF
    preamble     = [ "stateful" ":" [ IDENT { "," IDENT } ] ]
                   [ "stateless" ":" [ fn { "," fn } ] ]
                   [ "services" ":" [ svc { "," svc } ] ]          (at least one line)
    fn           = IDENT "{" medium { "," medium } "}"
    medium       = IDENT [ ":" STRING ]
    svc          = IDENT "{" IDENT { "," IDENT } "}"
    import       = "import" IDENT "::" IDENT "as" IDENT "@" IDENT
    params       = located { "," located }
    located      = IDENT "@" IDENT

    stmt   = "for" located "in" expr "do" stmts "end"
           | "if" expr "then" stmts [ "else" stmts ] "end"
           | expr "<-" IDENT "->" IDENT "do" [ "|" located "|" ] stmts "end" [ "with" expr ]
           | expr "<->" IDENT ":" IDENT { FWD step }
           | expr FWD step { FWD step }
    step   = located | IDENT | "-" IDENT "->" IDENT | "->" IDENT ":" IDENT
    expr   = primary { "." IDENT }
    primary = located | IDENT "(" expr { "," expr } ")" | (STRING | NUMBER) "@" IDENT

FWD is either ``▶`` or ``|>``.  Newlines are insignificant.
"""

from __future__ import annotations

from .lexer import Token, tokenize
from .syntax import (
    BindVar,
    Call,
    Chain,
    ChorSyntaxError,
    Choreography,
    Expr,
    FieldAccess,
    ForEach,
    If,
    Import,
    Literal,
    LocalCall,
    Medium,
    OneWayService,
    OneWayTrigger,
    RoleDecl,
    RoleKind,
    RRTrigger,
    ServiceRR,
    Stmt,
    VarRef,
)

_DESCRIBE = {
    "IDENT": "identifier",
    "STRING": "string literal",
    "NUMBER": "number",
    "EOF": "end of input",
    "FWD": "'▶'",
}


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "IDENT":
        return f"identifier {tok.text!r}"
    return repr(tok.text)


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str) -> bool:
        return self.tok.kind == kind

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ChorSyntaxError:
        tok = tok or self.tok
        return ChorSyntaxError(message, tok.span)

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            wanted = what or _DESCRIBE.get(kind, repr(kind))
            raise self.error(f"expected {wanted}, found {_describe(self.tok)}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        return self.expect("IDENT", what)

    # -- preamble ----------------------------------------------------------

    def choreography(self) -> Choreography:
        start = self.tok.span
        if self.tok.kind not in ("stateful", "stateless", "services"):
            raise self.error("missing preamble")
        roles: list[RoleDecl] = []
        if self.at("stateful"):
            self.advance()
            self.expect("COLON", "':'")
            for tok in self.ident_list():
                roles.append(RoleDecl(tok.text, RoleKind.STATEFUL, span=tok.span))
        if self.at("stateless"):
            self.advance()
            self.expect("COLON", "':'")
            if self.at("IDENT"):
                roles.append(self.function_decl())
                while self.at("COMMA"):
                    self.advance()
                    roles.append(self.function_decl())
        if self.at("services"):
            self.advance()
            self.expect("COLON", "':'")
            if self.at("IDENT"):
                roles.append(self.service_decl())
                while self.at("COMMA"):
                    self.advance()
                    roles.append(self.service_decl())
        if self.tok.kind in ("stateful", "stateless", "services"):
            raise self.error(f"preamble line '{self.tok.text}:' is repeated or out of order")

        imports = []
        while self.at("import"):
            imports.append(self.import_decl())

        self.expect("def", "'def main'")
        name = self.ident("'main'")
        if name.text != "main":
            raise self.error("the choreography entry point must be named 'main'", name)
        self.expect("LPAREN", "'('")
        params: list[VarRef] = []
        if not self.at("RPAREN"):
            params.append(self.located())
            while self.at("COMMA"):
                self.advance()
                params.append(self.located())
        self.expect("RPAREN", "')'")
        body = self.stmts()
        self.expect("end", "'end'")
        if not self.at("EOF"):
            raise self.error(f"unexpected {_describe(self.tok)} after end of main")
        return Choreography(tuple(roles), tuple(imports), tuple(params), body, span=start)

    def ident_list(self) -> list[Token]:
        out = []
        if self.at("IDENT"):
            out.append(self.advance())
            while self.at("COMMA"):
                self.advance()
                out.append(self.ident())
        return out

    def function_decl(self) -> RoleDecl:
        name = self.ident("function name")
        self.expect("LBRACE", "'{'")
        if self.at("RBRACE"):
            raise self.error(f"stateless function {name.text!r} needs at least one medium")
        media = [self.medium()]
        while self.at("COMMA"):
            self.advance()
            media.append(self.medium())
        self.expect("RBRACE", "'}'")
        return RoleDecl(name.text, RoleKind.STATELESS, media=tuple(media), span=name.span)

    def medium(self) -> Medium:
        name = self.ident("medium name")
        endpoint = None
        if self.at("COLON"):
            self.advance()
            endpoint = self.expect("STRING").value
        return Medium(name.text, endpoint, span=name.span)

    def service_decl(self) -> RoleDecl:
        name = self.ident("service name")
        self.expect("LBRACE", "'{'")
        if self.at("RBRACE"):
            raise self.error(f"service {name.text!r} needs at least one operation")
        ops = [self.ident("operation name").text]
        while self.at("COMMA"):
            self.advance()
            ops.append(self.ident("operation name").text)
        self.expect("RBRACE", "'}'")
        return RoleDecl(name.text, RoleKind.SERVICE, operations=tuple(ops), span=name.span)

    def import_decl(self) -> Import:
        kw = self.advance()
        module = self.ident("module name")
        self.expect("DCOLON", "'::'")
        op = self.ident("operation name")
        self.expect("as", "'as'")
        alias = self.ident("alias")
        self.expect("AT", "'@'")
        target = self.ident("role name")
        return Import(module.text, op.text, alias.text, target.text, span=kw.span)

    # -- statements --------------------------------------------------------

    def stmts(self) -> tuple[Stmt, ...]:
        out = []
        while self.tok.kind not in ("end", "else", "EOF"):
            out.append(self.stmt())
        return tuple(out)

    def block_end(self, what: str) -> None:
        if not self.at("end"):
            raise self.error(f"expected 'end' closing {what}, found {_describe(self.tok)}")
        self.advance()
        if self.at("with"):
            raise self.error("a 'with' clause is only allowed on request-response triggers")

    def stmt(self) -> Stmt:
        tok = self.tok
        if tok.kind == "for":
            self.advance()
            var = self.located()
            self.expect("in", "'in'")
            iterable = self.expr()
            self.expect("do", "'do'")
            body = self.stmts()
            self.block_end("'for'")
            return ForEach(var.name, var.role, iterable, body, span=tok.span)
        if tok.kind == "if":
            self.advance()
            guard = self.expr()
            self.expect("then", "'then'")
            then = self.stmts()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.stmts()
            self.block_end("'if'")
            return If(guard, then, orelse, span=tok.span)
        if tok.kind == "with":
            raise self.error("a 'with' clause is only allowed on request-response triggers")

        head = self.expr()
        if self.at("LARROW"):
            self.advance()
            medium = self.ident("medium name")
            self.expect("RARROW", "'->'")
            target = self.ident("function name")
            self.expect("do", "'do'")
            bound = None
            if self.at("BAR"):
                self.advance()
                bound = self.located()
                self.expect("BAR", "'|'")
            body = self.stmts()
            if not self.at("end"):
                raise self.error(f"expected 'end' closing the trigger block, found {_describe(self.tok)}")
            self.advance()
            result = None
            if self.at("with"):
                self.advance()
                result = self.expr()
            return RRTrigger(head, medium.text, target.text, bound, body, result, span=tok.span)

        if self.at("RR"):
            rr = self.advance()
            service = self.ident("service name")
            self.expect("COLON", "':'")
            op = self.ident("operation name")
            head = ServiceRR(head, service.text, op.text, span=rr.span)
        elif not self.at("FWD"):
            raise self.error(
                f"expected '<-', '<->' or '▶' after expression, found {_describe(self.tok)}"
            )
        steps = []
        while self.at("FWD"):
            self.advance()
            steps.append(self.step())
        return Chain(head, tuple(steps), span=tok.span)

    def step(self):
        tok = self.tok
        if tok.kind == "IDENT":
            if self.peek().kind == "AT":
                var = self.located()
                return BindVar(var.name, var.role, span=var.span)
            self.advance()
            return LocalCall(tok.text, span=tok.span)
        if tok.kind == "DASH":
            self.advance()
            medium = self.ident("medium name")
            self.expect("RARROW", "'->'")
            target = self.ident("function name")
            return OneWayTrigger(medium.text, target.text, span=tok.span)
        if tok.kind == "RARROW":
            self.advance()
            service = self.ident("service name")
            self.expect("COLON", "':'")
            op = self.ident("operation name")
            return OneWayService(service.text, op.text, span=tok.span)
        raise self.error(f"bad chain step: {_describe(tok)}")

    # -- expressions -------------------------------------------------------

    def located(self) -> VarRef:
        name = self.ident()
        self.expect("AT", "'@'")
        role = self.ident("role name")
        return VarRef(name.text, role.text, span=name.span)

    def expr(self) -> Expr:
        node = self.primary()
        while self.at("DOT"):
            self.advance()
            label = self.ident("field label")
            node = FieldAccess(node, label.text, span=label.span)
        return node

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind in ("STRING", "NUMBER"):
            self.advance()
            self.expect("AT", "'@' after literal")
            role = self.ident("role name")
            return Literal(tok.value, role.text, span=tok.span)
        if tok.kind == "IDENT":
            if self.peek().kind == "LPAREN":
                self.advance()
                self.advance()
                args = [self.expr()]
                while self.at("COMMA"):
                    self.advance()
                    args.append(self.expr())
                self.expect("RPAREN", "')'")
                return Call(tok.text, tuple(args), span=tok.span)
            return self.located()
        raise self.error(f"expected expression, found {_describe(tok)}")


def parse(source: str) -> Choreography:
    """Parse choreography source text.

    Raises ``ChorSyntaxError`` (carrying a ``Syntax`` diagnostic positioned at
    the first failing token) for any malformed input; never raises anything
    else.
    """
    tokens = tokenize(source)
    parser = _Parser(tokens)
    try:
        return parser.choreography()
    except RecursionError:
        raise parser.error("nesting too deep") from None
