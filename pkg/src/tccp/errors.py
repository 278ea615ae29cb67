"""Exception types shared across the package."""


class TccpError(Exception):
    pass


class TccpSyntaxError(TccpError):
    """Lexical or grammatical error in program text."""

    def __init__(self, line, col, expected, found=None):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        what = f"expected {expected}" if found is None else f"expected {expected}, found {found!r}"
        super().__init__(f"{line}:{col}: {what}")


class UnboundVariableError(TccpError):
    """A declaration body uses a variable that is neither a formal nor exists-bound."""

    def __init__(self, name, decl, line=0, col=0):
        self.name = name
        self.decl = decl
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: unbound variable {name} in declaration {decl}")


class ArityError(TccpError):
    def __init__(self, name, expected, got):
        self.name = name
        self.expected = expected
        self.got = got
        super().__init__(f"procedure {name} expects {expected} argument(s), got {got}")


class UnknownProcedureError(TccpError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown procedure {name}")


class DuplicateDeclarationError(TccpError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"duplicate declaration {name}")


class UnknownSymbolError(TccpError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"symbol {name} not visible in scope")


class DuplicateInScopeError(TccpError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"symbol {name} already declared in this scope node")


class UnallocatedDimensionError(TccpError):
    def __init__(self, dim, dims):
        self.dim = dim
        self.dims = dims
        super().__init__(f"dimension {dim} not allocated (store has {dims})")


class DimensionMismatchError(TccpError):
    def __init__(self, a, b):
        super().__init__(f"stores disagree on dimension space: {a} vs {b}")


class UnboundActualError(TccpError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"actual parameter {name} not resolvable in caller scope")
