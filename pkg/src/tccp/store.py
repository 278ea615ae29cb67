"""Global constraint store: a scope tree over a register array plus a
linear store.

Scope nodes are created by `exists` agents and procedure calls and form a
tree; symbol lookup walks from a node toward the root but stops at the
first procedure-call node after checking it, so a called body sees its
formals and locals only. Registers hold stream structure: an unbound cell
is rewritten in place to a functor when first told a cons cell, with its
head and tail freshly allocated at adjacent positions. Numeric variables
become DiscreteVar cells pointing at linear-store dimensions; dimensions
are allocated lazily, on first use in a linear constraint.

Stores are stepped through snapshots: each thread of one time instant
executes on its own branch, all branches sharing one allocator so that
register, node and dimension indices stay disjoint and survive the merge
verbatim. Merging replays each branch's write log onto the base through
unification; a clash (atom vs number, structure vs numeric, occurs cycle)
latches the whole store inconsistent.
"""

from fractions import Fraction

from . import ast
from .errors import (
    DuplicateInScopeError, UnboundActualError, UnknownSymbolError,
)
from .linear import ls_add, ls_entails, ls_grow, ls_is_empty, ls_meet, ls_new, row

UNBOUND = ("unbound",)

ROOT, EXISTS, PROC_CALL = "root", "exists", "proc_call"


def const_cell(value):
    return ("const", value)


def ref_cell(target):
    return ("ref", target)


def dvar_cell(dim):
    return ("dvar", dim)


def functor_cell(head):
    # tail lives at head + 1
    return ("functor", head)


class Allocator:
    """Run-global counters; shared by every snapshot of one computation."""

    __slots__ = ("next_cell", "next_node", "next_dim")

    def __init__(self):
        self.next_cell = 0
        self.next_node = 0
        self.next_dim = 0


class ScopeNode:
    __slots__ = ("id", "parent", "kind", "label", "symbols")

    def __init__(self, id, parent, kind, label=""):
        self.id = id
        self.parent = parent
        self.kind = kind
        self.label = label
        self.symbols = {}


class Store:
    """One value of the store; snapshots are branches sharing the allocator."""

    __slots__ = ("alloc", "scopes", "memory", "lin", "step_false",
                 "write_log", "new_nodes")

    def __init__(self, alloc=None):
        self.alloc = alloc or Allocator()
        self.scopes = []
        self.memory = []
        self.lin = ls_new()
        self.step_false = False
        self.write_log = {}
        self.new_nodes = []

    @staticmethod
    def new():
        s = Store()
        s.add_scope(ROOT, None)
        return s

    # ------------------------------------------------------------ branches

    def branch(self):
        """Snapshot for one thread/agent of the current instant."""
        s = Store(self.alloc)
        s.scopes = list(self.scopes)
        s.memory = list(self.memory)
        s.lin = self.lin
        s.step_false = self.step_false
        return s

    def seal(self):
        """Forget per-instant bookkeeping after a commit."""
        self.write_log = {}
        self.new_nodes = []
        return self

    # ----------------------------------------------------------- low level

    def _set(self, idx, cell):
        if idx >= len(self.memory):
            self.memory.extend([None] * (idx + 1 - len(self.memory)))
        self.memory[idx] = cell
        self.write_log[idx] = cell

    def _alloc_cell(self, cell):
        idx = self.alloc.next_cell
        self.alloc.next_cell += 1
        self._set(idx, cell)
        return idx

    def _alloc_dim(self):
        d = self.alloc.next_dim
        self.alloc.next_dim += 1
        self.lin = ls_grow(self.lin, d + 1)
        return d

    def _add_row(self, r):
        self.lin = ls_add(ls_grow(self.lin, self.alloc.next_dim), r)

    def deref(self, idx):
        cell = self.memory[idx]
        while cell is not None and cell[0] == "ref":
            idx = cell[1]
            cell = self.memory[idx]
        return idx

    def _reaches(self, start, target):
        """Does the structure rooted at `start` contain cell `target`?"""
        seen = set()
        stack = [start]
        while stack:
            i = stack.pop()
            if i == target:
                return True
            if i in seen:
                continue
            seen.add(i)
            cell = self.memory[i]
            if cell is None:
                continue
            if cell[0] == "ref":
                stack.append(cell[1])
            elif cell[0] == "functor":
                stack.append(cell[1])
                stack.append(cell[1] + 1)
        return False

    # ------------------------------------------------------------- scopes

    def add_scope(self, kind, parent, label=""):
        nid = self.alloc.next_node
        self.alloc.next_node += 1
        node = ScopeNode(nid, parent, kind, label)
        if nid >= len(self.scopes):
            self.scopes.extend([None] * (nid + 1 - len(self.scopes)))
        self.scopes[nid] = node
        self.new_nodes.append(nid)
        return nid

    def add_variable(self, scope_id, name):
        node = self.scopes[scope_id]
        if name in node.symbols:
            raise DuplicateInScopeError(name)
        idx = self._alloc_cell(UNBOUND)
        node.symbols[name] = idx
        return idx

    def lookup(self, scope_id, name):
        nid = scope_id
        while nid is not None:
            node = self.scopes[nid]
            if name in node.symbols:
                return node.symbols[name]
            if node.kind == PROC_CALL:
                break  # call boundary: formals and locals only
            nid = node.parent
        raise UnknownSymbolError(name)

    def add_parameter(self, scope_id, formal, actual, caller_scope):
        """Link one formal of a fresh call node to its actual."""
        node = self.scopes[scope_id]
        if formal in node.symbols:
            raise DuplicateInScopeError(formal)
        if isinstance(actual, ast.Var):
            try:
                node.symbols[formal] = self.lookup(caller_scope, actual.name)
            except UnknownSymbolError:
                raise UnboundActualError(actual.name)
        elif isinstance(actual, ast.Atom):
            node.symbols[formal] = self._alloc_cell(const_cell(actual.name))
        elif isinstance(actual, ast.Num):
            node.symbols[formal] = self._alloc_cell(const_cell(actual.value))
        elif isinstance(actual, ast.LinExpr):
            resolved = self._resolve_linexpr(actual, caller_scope, allocate=True)
            d = self._alloc_dim()
            node.symbols[formal] = self._alloc_cell(dvar_cell(d))
            if resolved is None:
                self.step_false = True
            else:
                coeffs, const = resolved
                coeffs[d] = coeffs.get(d, Fraction(0)) - 1
                self._add_row(row("=", coeffs, const))
        else:
            raise TypeError(f"bad actual: {actual!r}")
        return node.symbols[formal]

    # -------------------------------------------------------- consistency

    def is_consistent(self):
        return not self.step_false and not ls_is_empty(self.lin)

    # ------------------------------------------------------- unification

    def _clash(self):
        self.step_false = True

    def _unify_cells(self, i, j, seen=None):
        a, b = self.deref(i), self.deref(j)
        if a == b:
            return
        ca, cb = self.memory[a], self.memory[b]
        if ca == UNBOUND and cb == UNBOUND:
            hi, lo = (a, b) if a > b else (b, a)
            self._set(hi, ref_cell(lo))
            return
        if ca == UNBOUND:
            if self._reaches(b, a):
                self._clash()
            else:
                self._set(a, ref_cell(b))
            return
        if cb == UNBOUND:
            if self._reaches(a, b):
                self._clash()
            else:
                self._set(b, ref_cell(a))
            return
        ka, kb = ca[0], cb[0]
        if ka == "const" and kb == "const":
            if ca[1] != cb[1] or isinstance(ca[1], str) != isinstance(cb[1], str):
                self._clash()
            return
        if ka == "dvar" and kb == "dvar":
            self._add_row(row("=", {ca[1]: 1, cb[1]: -1}, 0))
            return
        if ka == "dvar" and kb == "const" or ka == "const" and kb == "dvar":
            dim = ca[1] if ka == "dvar" else cb[1]
            val = cb[1] if ka == "dvar" else ca[1]
            if isinstance(val, str):
                self._clash()
            else:
                self._add_row(row("=", {dim: 1}, -val))
            return
        if ka == "functor" and kb == "functor":
            seen = seen or set()
            key = (a, b) if a < b else (b, a)
            if key in seen:
                return
            seen.add(key)
            self._unify_cells(ca[1], cb[1], seen)
            self._unify_cells(ca[1] + 1, cb[1] + 1, seen)
            return
        self._clash()

    def _unify_value(self, idx, cell, seen=None):
        """Unify the cell at idx with a cell value (merge replay)."""
        if cell[0] == "ref":
            self._unify_cells(idx, cell[1], seen)
            return
        i = self.deref(idx)
        cur = self.memory[i]
        if cur == UNBOUND:
            if cell[0] == "functor" and (self._reaches(cell[1], i)
                                         or self._reaches(cell[1] + 1, i)):
                self._clash()
            else:
                self._set(i, cell)
            return
        if cur == cell:
            return
        if cell[0] == "functor" and cur[0] == "functor":
            seen = seen or set()
            key = (i, cell[1])
            if key in seen:
                return
            seen.add(key)
            self._unify_cells(cur[1], cell[1], seen)
            self._unify_cells(cur[1] + 1, cell[1] + 1, seen)
            return
        if cell[0] == "unbound":
            return
        ka, kb = cur[0], cell[0]
        if ka == "const" and kb == "const":
            if cur[1] != cell[1] or isinstance(cur[1], str) != isinstance(cell[1], str):
                self._clash()
        elif ka == "dvar" and kb == "dvar":
            self._add_row(row("=", {cur[1]: 1, cell[1]: -1}, 0))
        elif {ka, kb} == {"dvar", "const"}:
            dim = cur[1] if ka == "dvar" else cell[1]
            val = cell[1] if ka == "dvar" else cur[1]
            if isinstance(val, str):
                self._clash()
            else:
                self._add_row(row("=", {dim: 1}, -val))
        else:
            self._clash()

    def _bind_term(self, idx, term, scope_id):
        """Tell-mode: unify the cell at idx with a syntactic term."""
        if isinstance(term, ast.Anon):
            return  # an anonymous position constrains nothing
        if isinstance(term, ast.Var):
            self._unify_cells(idx, self.lookup(scope_id, term.name))
            return
        i = self.deref(idx)
        cur = self.memory[i]
        if isinstance(term, (ast.Atom, ast.Num)):
            val = term.name if isinstance(term, ast.Atom) else term.value
            if cur == UNBOUND:
                self._set(i, const_cell(val))
            elif cur[0] == "const":
                if cur[1] != val or isinstance(cur[1], str) != isinstance(val, str):
                    self._clash()
            elif cur[0] == "dvar" and isinstance(val, Fraction):
                self._add_row(row("=", {cur[1]: 1}, -val))
            else:
                self._clash()
            return
        if isinstance(term, ast.Cons):
            if cur == UNBOUND:
                if self._term_reaches(term, i, scope_id):
                    self._clash()
                    return
                head = self._alloc_cell(UNBOUND)
                self._alloc_cell(UNBOUND)  # tail at head + 1
                self._set(i, functor_cell(head))
                self._bind_term(head, term.head, scope_id)
                self._bind_term(head + 1, term.tail, scope_id)
            elif cur[0] == "functor":
                self._bind_term(cur[1], term.head, scope_id)
                self._bind_term(cur[1] + 1, term.tail, scope_id)
            else:
                self._clash()
            return
        raise TypeError(f"bad term: {term!r}")

    def _term_reaches(self, term, target, scope_id):
        if isinstance(term, ast.Var):
            return self._reaches(self.lookup(scope_id, term.name), target)
        if isinstance(term, ast.Cons):
            return (self._term_reaches(term.head, target, scope_id)
                    or self._term_reaches(term.tail, target, scope_id))
        return False

    # ----------------------------------------------------- linear support

    def _resolve_linexpr(self, e, scope_id, allocate):
        """Map variable names to dimensions/values. Returns ({dim: coef}, const)
        or None when a variable carries no numeric information (or clashes)."""
        coeffs = {}
        const = Fraction(e.const)
        for name, c in e.coeffs:
            idx = self.deref(self.lookup(scope_id, name))
            cell = self.memory[idx]
            if cell == UNBOUND:
                if not allocate:
                    return None
                d = self._alloc_dim()
                self._set(idx, dvar_cell(d))
                coeffs[d] = coeffs.get(d, Fraction(0)) + c
            elif cell[0] == "dvar":
                coeffs[cell[1]] = coeffs.get(cell[1], Fraction(0)) + c
            elif cell[0] == "const" and isinstance(cell[1], Fraction):
                const += c * cell[1]
            else:
                return None
        return coeffs, const

    # ------------------------------------------------------- instructions

    def add_constraint(self, scope_id, c):
        """Tell-mode: meet the store with a constraint, resolving in scope."""
        if isinstance(c, ast.CTrue):
            return
        if isinstance(c, ast.StreamEq):
            self._bind_term(self.lookup(scope_id, c.var), c.rhs, scope_id)
            return
        if isinstance(c, ast.Linear):
            resolved = self._resolve_linexpr(c.lhs - c.rhs, scope_id, allocate=True)
            if resolved is None:
                self._clash()
                return
            coeffs, const = resolved
            self._add_row(row(c.op, coeffs, const))
            return
        raise TypeError(f"bad constraint: {c!r}")

    def entails(self, scope_id, c):
        """Ask-mode: is the constraint entailed? Pure - never allocates."""
        if not self.is_consistent():
            return True
        if isinstance(c, ast.CTrue):
            return True
        if isinstance(c, ast.Linear):
            resolved = self._resolve_linexpr(c.lhs - c.rhs, scope_id, allocate=False)
            if resolved is None:
                return False
            coeffs, const = resolved
            return ls_entails(self.lin, row(c.op, coeffs, const))
        if isinstance(c, ast.StreamEq):
            return self._match(self.lookup(scope_id, c.var), c.rhs, scope_id, set())
        raise TypeError(f"bad constraint: {c!r}")

    def _match(self, idx, term, scope_id, seen):
        """One-way match of a pattern term against the structure at idx."""
        if isinstance(term, ast.Anon):
            return True
        if isinstance(term, ast.Var):
            return self._cells_equal(idx, self.lookup(scope_id, term.name), seen)
        i = self.deref(idx)
        cell = self.memory[i]
        if isinstance(term, (ast.Atom, ast.Num)):
            val = term.name if isinstance(term, ast.Atom) else term.value
            if cell[0] == "const":
                return cell[1] == val and isinstance(cell[1], str) == isinstance(val, str)
            if cell[0] == "dvar" and isinstance(val, Fraction):
                return ls_entails(self.lin, row("=", {cell[1]: 1}, -val))
            return False
        if isinstance(term, ast.Cons):
            if cell[0] != "functor":
                return False
            key = (i, id(term))
            if key in seen:
                return True
            seen.add(key)
            return (self._match(cell[1], term.head, scope_id, seen)
                    and self._match(cell[1] + 1, term.tail, scope_id, seen))
        raise TypeError(f"bad term: {term!r}")

    def _cells_equal(self, i, j, seen):
        """Does the store entail equality of the structures at i and j?"""
        a, b = self.deref(i), self.deref(j)
        if a == b:
            return True
        ca, cb = self.memory[a], self.memory[b]
        if ca == UNBOUND or cb == UNBOUND:
            return False
        ka, kb = ca[0], cb[0]
        if ka == "const" and kb == "const":
            return ca[1] == cb[1] and isinstance(ca[1], str) == isinstance(cb[1], str)
        if ka == "dvar" and kb == "dvar":
            return ls_entails(self.lin, row("=", {ca[1]: 1, cb[1]: -1}, 0))
        if {ka, kb} == {"dvar", "const"}:
            dim = ca[1] if ka == "dvar" else cb[1]
            val = cb[1] if ka == "dvar" else ca[1]
            if isinstance(val, str):
                return False
            return ls_entails(self.lin, row("=", {dim: 1}, -val))
        if ka == "functor" and kb == "functor":
            key = (a, b) if a < b else (b, a)
            if key in seen:
                return True
            seen.add(key)
            return (self._cells_equal(ca[1], cb[1], seen)
                    and self._cells_equal(ca[1] + 1, cb[1] + 1, seen))
        return False

    # -------------------------------------------------------------- merge

    @staticmethod
    def merge(base, locals_):
        """Commit sibling snapshots of one instant onto their base.

        Scope-tree growth survives even when a sibling's constraints clash;
        constraint content is the least upper bound, with stream clashes
        latching inconsistency.
        """
        out = base.branch()
        out.write_log = dict(base.write_log)
        out.new_nodes = list(base.new_nodes)
        base_len = len(base.memory)
        for snap in locals_:
            out.step_false = out.step_false or snap.step_false
            out.lin = ls_meet(out.lin, snap.lin)
            for nid in snap.new_nodes:
                node = snap.scopes[nid]
                if nid >= len(out.scopes):
                    out.scopes.extend([None] * (nid + 1 - len(out.scopes)))
                out.scopes[nid] = node
                out.new_nodes.append(nid)
        for snap in locals_:  # creations first: indices are disjoint by allocator
            for idx in sorted(snap.write_log):
                if idx >= base_len:
                    out._set(idx, snap.write_log[idx])
        for snap in locals_:
            for idx in sorted(snap.write_log):
                if idx < base_len:
                    out._unify_value(idx, snap.write_log[idx])
        return out

    # --------------------------------------------------------------- dump

    def counts(self):
        return {"nodes": len(self.scopes), "registers": len(self.memory),
                "dims": self.lin.dims}

    def dump(self):
        from .linear import dump_lin
        scopes = []
        for node in self.scopes:
            scopes.append({
                "id": node.id,
                "parent": node.parent,
                "kind": node.kind,
                "label": node.label,
                "symbols": {k: v for k, v in node.symbols.items()},
            })
        memory = []
        for cell in self.memory:
            kind = cell[0]
            if kind == "unbound":
                memory.append({"kind": "unbound"})
            elif kind == "const":
                v = cell[1]
                memory.append({"kind": "const",
                               "value": v if isinstance(v, str) else _num_str(v)})
            elif kind == "dvar":
                memory.append({"kind": "dvar", "dim": cell[1]})
            elif kind == "ref":
                memory.append({"kind": "ref", "to": cell[1]})
            else:
                memory.append({"kind": "functor", "head": cell[1]})
        return {
            "consistent": self.is_consistent(),
            "nodes": len(self.scopes),
            "registers": len(self.memory),
            "dims": self.lin.dims,
            "scopes": scopes,
            "memory": memory,
            "lin": dump_lin(self.lin),
        }


def _num_str(v):
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"
