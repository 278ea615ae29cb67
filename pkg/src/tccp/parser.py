"""Lexer and recursive-descent parser for the concrete tccp syntax.

See docs/grammar.md for the grammar. Parsing is two-phase: build the AST,
then check scope (declaration bodies may only use formals and exists-bound
variables) and call sites (known procedure, matching arity).
"""

from fractions import Fraction

from .ast import (
    Anon, Atom, Call, Choice, Cons, CTrue, Decl, Exists, LinExpr, Linear,
    Now, Num, Parallel, Program, Skip, StreamEq, Tell, Var,
)
from .errors import (
    ArityError, DuplicateDeclarationError, TccpSyntaxError,
    UnboundVariableError, UnknownProcedureError,
)

KEYWORDS = {"skip", "tell", "ask", "now", "then", "else", "exists", "true"}

_PUNCT = ["||", ":-", "->", "<=", ">=", "(", ")", "[", "]", "|", ",", ".",
          "+", "-", "*", "=", "<", ">", "_"]


class Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind!r}, {self.value!r})"


def tokenize(text):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = None
        for p in _PUNCT:
            if text.startswith(p, i):
                # `_` only stands alone; `_x` is not an identifier form we accept
                if p == "_" and i + 1 < n and (text[i + 1].isalnum() or text[i + 1] == "_"):
                    raise TccpSyntaxError(line, col, "a bare `_`", text[i:i + 2])
                matched = p
                break
        if matched:
            toks.append(Token(matched, matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("NUM", Fraction(int(text[i:j])), line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            while j < n and text[j] == "'":
                j += 1
            word = text[i:j]
            if ch.isupper():
                toks.append(Token("VAR", word, line, col))
            elif word in KEYWORDS:
                if "'" in word:
                    raise TccpSyntaxError(line, col, "identifier", word)
                toks.append(Token(word, word, line, col))
            else:
                if "'" in word:
                    raise TccpSyntaxError(line, col, "primes only on variables", word)
                toks.append(Token("ATOM", word, line, col))
            col += j - i
            i = j
            continue
        raise TccpSyntaxError(line, col, "a token", ch)
    toks.append(Token("EOF", None, line, col))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.pos = 0

    def peek(self, ahead=0):
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind):
        t = self.peek()
        if t.kind != kind:
            raise TccpSyntaxError(t.line, t.col, kind, t.value)
        return self.next()

    def error(self, expected):
        t = self.peek()
        raise TccpSyntaxError(t.line, t.col, expected, t.value)

    # -------------------------------------------------------- programs

    def program(self):
        decls = []
        while self.peek().kind != "EOF":
            decls.append(self.declaration())
        return tuple(decls)

    def declaration(self):
        name = self.expect("ATOM").value
        formals = []
        if self.peek().kind == "(":
            self.next()
            formals.append(self.expect("VAR").value)
            while self.peek().kind == ",":
                self.next()
                formals.append(self.expect("VAR").value)
            self.expect(")")
        if len(set(formals)) != len(formals):
            raise TccpSyntaxError(self.peek().line, self.peek().col,
                                  "distinct formal parameters", name)
        self.expect(":-")
        body = self.agent()
        self.expect(".")
        return Decl(name, tuple(formals), body)

    # ---------------------------------------------------------- agents

    def agent(self):
        first = self.choice_level()
        if self.peek().kind != "||":
            return first
        agents = [first]
        while self.peek().kind == "||":
            self.next()
            agents.append(self.choice_level())
        return Parallel(tuple(agents))

    def choice_level(self):
        if self.peek().kind == "ask":
            branches = [self.branch()]
            while self.peek().kind == "+":
                self.next()
                branches.append(self.branch())
            return Choice(tuple(branches))
        a = self.prefix()
        if self.peek().kind == "+":
            t = self.peek()
            raise TccpSyntaxError(t.line, t.col, "every choice branch to be ask-guarded", "+")
        return a

    def branch(self):
        self.expect("ask")
        self.expect("(")
        guard = self.constraint()
        self.expect(")")
        self.expect("->")
        body = self.prefix()
        return (guard, body)

    def prefix(self):
        t = self.peek()
        if t.kind == "skip":
            self.next()
            return Skip()
        if t.kind == "tell":
            self.next()
            self.expect("(")
            c = self.constraint()
            self.expect(")")
            return Tell(c)
        if t.kind == "now":
            return self.now_agent()
        if t.kind == "exists":
            return self.exists_agent()
        if t.kind == "ATOM":
            return self.call_agent()
        if t.kind == "(":
            self.next()
            a = self.agent()
            self.expect(")")
            return a
        self.error("an agent")

    def now_agent(self):
        self.expect("now")
        if self.peek().kind == "(":
            self.next()
            cond = self.constraint()
            self.expect(")")
        else:
            cond = self.constraint()
        self.expect("then")
        then_agent = self.prefix()
        else_agent = Skip()
        if self.peek().kind == "else":
            self.next()
            else_agent = self.prefix()
        return Now(cond, then_agent, else_agent)

    def exists_agent(self):
        self.expect("exists")
        names = [self.expect("VAR").value]
        while self.peek().kind == ",":
            self.next()
            names.append(self.expect("VAR").value)
        if len(set(names)) != len(names):
            t = self.peek()
            raise TccpSyntaxError(t.line, t.col, "distinct local variables", names)
        self.expect("(")
        body = self.agent()
        self.expect(")")
        return Exists(tuple(names), body)

    def call_agent(self):
        name = self.expect("ATOM").value
        actuals = []
        if self.peek().kind == "(":
            self.next()
            actuals.append(self.actual())
            while self.peek().kind == ",":
                self.next()
                actuals.append(self.actual())
            self.expect(")")
        return Call(name, tuple(actuals))

    def actual(self):
        t = self.peek()
        if t.kind == "ATOM":
            self.next()
            return Atom(t.value)
        if t.kind == "VAR" and self.peek(1).kind in (",", ")"):
            self.next()
            return Var(t.value)
        e = self.linexpr()
        if not e.coeffs:
            return Num(e.const)
        return e

    # ------------------------------------------------------ constraints

    def constraint(self):
        t = self.peek()
        if t.kind == "true":
            self.next()
            return CTrue()
        if t.kind == "VAR" and self.peek(1).kind == "=":
            rhs_start = self.peek(2)
            if rhs_start.kind in ("[", "ATOM", "_"):
                name = self.next().value
                self.next()
                return StreamEq(name, self.term())
            if rhs_start.kind == "VAR" and self.peek(3).kind not in ("+", "-", "*"):
                name = self.next().value
                self.next()
                return StreamEq(name, Var(self.next().value))
        lhs = self.linexpr()
        t = self.peek()
        if t.kind not in ("=", "<", ">", "<=", ">="):
            self.error("a comparison operator")
        self.next()
        rhs = self.linexpr()
        return Linear(lhs, t.kind, rhs)

    def term(self):
        t = self.peek()
        if t.kind == "ATOM":
            self.next()
            return Atom(t.value)
        if t.kind == "VAR":
            self.next()
            return Var(t.value)
        if t.kind == "NUM":
            self.next()
            return Num(t.value)
        if t.kind == "-":
            self.next()
            return Num(-self.expect("NUM").value)
        if t.kind == "_":
            self.next()
            return Anon()
        if t.kind == "[":
            self.next()
            head = self.term()
            self.expect("|")
            tail = self.term()
            self.expect("]")
            return Cons(head, tail)
        self.error("a term")

    # ------------------------------------------------ linear expressions

    def linexpr(self):
        e = self.lin_term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.lin_term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def lin_term(self):
        e = self.lin_factor()
        while self.peek().kind == "*":
            t = self.next()
            rhs = self.lin_factor()
            if e.coeffs and rhs.coeffs:
                raise TccpSyntaxError(t.line, t.col, "a linear product", "*")
            if rhs.coeffs:
                e, rhs = rhs, e
            e = e.scaled(rhs.const)
        return e

    def lin_factor(self):
        t = self.peek()
        if t.kind == "-":
            self.next()
            return self.lin_factor().scaled(-1)
        if t.kind == "NUM":
            self.next()
            return LinExpr.of_num(t.value)
        if t.kind == "VAR":
            self.next()
            return LinExpr.of_var(t.value)
        self.error("a number or variable")


# ------------------------------------------------------------- validation

def _check_agent_scope(agent, bound, decl_name):
    from .ast import agent_free_vars
    free = agent_free_vars(agent) - bound
    if free:
        raise UnboundVariableError(sorted(free)[0], decl_name)


def _walk_calls(agent, fn):
    if isinstance(agent, Call):
        fn(agent)
    elif isinstance(agent, Parallel):
        for x in agent.agents:
            _walk_calls(x, fn)
    elif isinstance(agent, Choice):
        for _, b in agent.branches:
            _walk_calls(b, fn)
    elif isinstance(agent, Now):
        _walk_calls(agent.then_agent, fn)
        _walk_calls(agent.else_agent, fn)
    elif isinstance(agent, Exists):
        _walk_calls(agent.body, fn)


def _entry_var_order(agent, bound, out):
    """Free variables of the entry agent in first-occurrence order."""
    from .ast import constraint_vars

    def note(names):
        for name in names:
            if name not in bound and name not in out:
                out.append(name)

    if isinstance(agent, Tell):
        note(_cvars_ordered(agent.constraint))
    elif isinstance(agent, Parallel):
        for x in agent.agents:
            _entry_var_order(x, bound, out)
    elif isinstance(agent, Choice):
        for g, b in agent.branches:
            note(_cvars_ordered(g))
            _entry_var_order(b, bound, out)
    elif isinstance(agent, Now):
        note(_cvars_ordered(agent.cond))
        _entry_var_order(agent.then_agent, bound, out)
        _entry_var_order(agent.else_agent, bound, out)
    elif isinstance(agent, Exists):
        _entry_var_order(agent.body, bound | set(agent.vars), out)
    elif isinstance(agent, Call):
        for a in agent.actuals:
            if isinstance(a, Var):
                note([a.name])
            elif isinstance(a, LinExpr):
                note(a.variables())


def _cvars_ordered(c):
    if isinstance(c, CTrue):
        return []
    if isinstance(c, StreamEq):
        return [c.var] + _tvars_ordered(c.rhs)
    if isinstance(c, Linear):
        return list(c.lhs.variables()) + list(c.rhs.variables())
    return []


def _tvars_ordered(t):
    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, Cons):
        return _tvars_ordered(t.head) + _tvars_ordered(t.tail)
    return []


def validate(program):
    seen = set()
    for d in program.decls:
        if d.name in seen:
            raise DuplicateDeclarationError(d.name)
        seen.add(d.name)

    arity = {d.name: len(d.formals) for d in program.decls}

    def check_call(call):
        if call.name not in arity:
            raise UnknownProcedureError(call.name)
        if arity[call.name] != len(call.actuals):
            raise ArityError(call.name, arity[call.name], len(call.actuals))

    for d in program.decls:
        _check_agent_scope(d.body, set(d.formals), d.name)
        _walk_calls(d.body, check_call)
    if program.entry is not None:
        _walk_calls(program.entry, check_call)
    return program


# ------------------------------------------------------------- public API

def parse_agent(text):
    p = _Parser(text)
    a = p.agent()
    p.expect("EOF")
    return a


def parse_constraint(text):
    p = _Parser(text)
    c = p.constraint()
    p.expect("EOF")
    return c


def parse_program(text, entry=None):
    """Parse declarations (and an optional entry agent) into a validated Program.

    Free variables of the entry agent are recorded in first-occurrence order;
    the interpreter gives them cells in an implicit root scope.
    """
    p = _Parser(text)
    decls = p.program()
    entry_agent = None
    entry_vars = ()
    if entry is not None:
        entry_agent = parse_agent(entry)
        order = []
        _entry_var_order(entry_agent, set(), order)
        entry_vars = tuple(order)
    return validate(Program(decls, entry_agent, entry_vars))
