"""Object language: simple types, terms and formulas, parsing, printing,
type inference and capture-avoiding substitution.

The term language is ``x | Z | S t`` and the formula language is

    phi ::= s = t | phi \\/ phi | phi /\\ phi | x | \\x:A. phi
          | phi psi | phi t | mu x:T. phi | nu x:T. phi

Both layers share one expression datatype; the two application typing rules
are disambiguated by type inference, not by a stored tag.  Alpha-equivalence
(not syntactic equality) is the notion of identity every other module uses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Union

# ---------------------------------------------------------------------------
# Simple types
# ---------------------------------------------------------------------------


class SimpleType:
    """Base class for the simple types N, O and A -> T."""

    __slots__ = ()

    def __str__(self) -> str:
        return type_to_str(self)


@dataclass(frozen=True)
class NatType(SimpleType):
    __slots__ = ()


@dataclass(frozen=True)
class PropType(SimpleType):
    __slots__ = ()


@dataclass(frozen=True)
class Arrow(SimpleType):
    __slots__ = ("arg", "result")
    arg: SimpleType
    result: SimpleType

    def __post_init__(self) -> None:
        if isinstance(self.result, NatType):
            raise HflTypeError("arrow result must be a proposition type, not N")


NAT = NatType()
PROP = PropType()


def arrow(*types: SimpleType) -> SimpleType:
    """Right-associated arrow: arrow(A, B, C) = A -> (B -> C)."""
    if not types:
        raise ValueError("arrow needs at least one type")
    result = types[-1]
    for arg in reversed(types[:-1]):
        result = Arrow(arg, result)
    return result


def argument_types(ty: SimpleType) -> tuple[SimpleType, ...]:
    """The list of argument types of a (curried) proposition type."""
    args: list[SimpleType] = []
    while isinstance(ty, Arrow):
        args.append(ty.arg)
        ty = ty.result
    return tuple(args)


def type_to_str(ty: SimpleType) -> str:
    if isinstance(ty, NatType):
        return "N"
    if isinstance(ty, PropType):
        return "O"
    if isinstance(ty, Arrow):
        left = type_to_str(ty.arg)
        if isinstance(ty.arg, Arrow):
            left = f"({left})"
        return f"{left} -> {type_to_str(ty.result)}"
    return "?"  # inference metavariable


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class HflError(Exception):
    """Base class for all object-language errors."""


class HflSyntaxError(HflError):
    def __init__(self, message: str, text: str = "", pos: int = -1):
        if pos >= 0:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.pos = pos


class HflTypeError(HflError):
    pass


class UnboundVariable(HflTypeError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable: {name}")
        self.name = name


class IllTyped(HflTypeError):
    def __init__(self, subject, expected: str, found: str):
        super().__init__(f"ill-typed {to_str(subject)!r}: expected {expected}, found {found}")
        self.subject = subject
        self.expected = expected
        self.found = found


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


class Expr:
    """Base class of terms and formulas (immutable, structurally hashable)."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True)
class Var(Expr):
    __slots__ = ("name",)
    name: str


@dataclass(frozen=True)
class Zero(Expr):
    __slots__ = ()


@dataclass(frozen=True)
class Succ(Expr):
    __slots__ = ("arg",)
    arg: Expr


@dataclass(frozen=True)
class Eq(Expr):
    __slots__ = ("lhs", "rhs")
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Or(Expr):
    __slots__ = ("lhs", "rhs")
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class And(Expr):
    __slots__ = ("lhs", "rhs")
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Lam(Expr):
    __slots__ = ("var", "var_type", "body")
    var: str
    var_type: SimpleType
    body: Expr


@dataclass(frozen=True)
class App(Expr):
    __slots__ = ("fn", "arg")
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Mu(Expr):
    __slots__ = ("var", "var_type", "body")
    var: str
    var_type: SimpleType
    body: Expr

    def __post_init__(self) -> None:
        if isinstance(self.var_type, NatType):
            raise HflTypeError("fixed-point binder cannot have type N")


@dataclass(frozen=True)
class Nu(Expr):
    __slots__ = ("var", "var_type", "body")
    var: str
    var_type: SimpleType
    body: Expr

    def __post_init__(self) -> None:
        if isinstance(self.var_type, NatType):
            raise HflTypeError("fixed-point binder cannot have type N")


FIXPOINTS = (Mu, Nu)
BINDERS = (Lam, Mu, Nu)

Path = tuple[int, ...]


def children(e: Expr) -> tuple[Expr, ...]:
    """Subexpressions in canonical child order (defines path indices)."""
    if isinstance(e, (Var, Zero)):
        return ()
    if isinstance(e, Succ):
        return (e.arg,)
    if isinstance(e, (Eq, Or, And)):
        return (e.lhs, e.rhs)
    if isinstance(e, BINDERS):
        return (e.body,)
    if isinstance(e, App):
        return (e.fn, e.arg)
    raise TypeError(f"not an expression: {e!r}")


def rebuild(e: Expr, kids: tuple[Expr, ...]) -> Expr:
    """Rebuild a node of the same shape with new children."""
    if isinstance(e, (Var, Zero)):
        return e
    if isinstance(e, Succ):
        return Succ(*kids)
    if isinstance(e, (Eq, Or, And, App)):
        return type(e)(*kids)
    if isinstance(e, BINDERS):
        return type(e)(e.var, e.var_type, kids[0])
    raise TypeError(f"not an expression: {e!r}")


def subexpr_at(e: Expr, path: Path) -> Expr:
    for i in path:
        e = children(e)[i]
    return e


def replace_at(e: Expr, path: Path, sub: Expr) -> Expr:
    if not path:
        return sub
    kids = list(children(e))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], sub)
    return rebuild(e, tuple(kids))


def iter_subexprs(e: Expr, path: Path = ()) -> Iterator[tuple[Path, Expr]]:
    """All (path, subexpression) pairs in preorder."""
    yield path, e
    for i, kid in enumerate(children(e)):
        yield from iter_subexprs(kid, path + (i,))


def sigma_paths(e: Expr) -> tuple[Path, ...]:
    """Paths of every fixed-point operator in preorder."""
    return tuple(p for p, sub in iter_subexprs(e) if isinstance(sub, FIXPOINTS))


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, BINDERS):
        return free_vars(e.body) - {e.var}
    out: frozenset[str] = frozenset()
    for kid in children(e):
        out |= free_vars(kid)
    return out


def is_term_shaped(e: Expr) -> bool:
    """True for expressions built only from Var, Z and S (term candidates)."""
    if isinstance(e, Var):
        return True
    if isinstance(e, Zero):
        return True
    if isinstance(e, Succ):
        return is_term_shaped(e.arg)
    return False


def numeral(n: int) -> Expr:
    """The closed term S^n Z."""
    if n < 0:
        raise ValueError("numerals are non-negative")
    e: Expr = Zero()
    for _ in range(n):
        e = Succ(e)
    return e


def numeral_value(e: Expr) -> Optional[int]:
    """n when e is S^n Z, else None."""
    n = 0
    while isinstance(e, Succ):
        n += 1
        e = e.arg
    return n if isinstance(e, Zero) else None


def app_spine(e: Expr) -> tuple[Expr, tuple[Expr, ...]]:
    """Unroll an application chain: app_spine(f a b) = (f, (a, b))."""
    args: list[Expr] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    return e, tuple(reversed(args))


def make_app(fn: Expr, *args: Expr) -> Expr:
    for a in args:
        fn = App(fn, a)
    return fn


# ---------------------------------------------------------------------------
# Alpha-equivalence
# ---------------------------------------------------------------------------

# Canonical bound names use a character the lexer rejects, so they can never
# collide with user-written free variables.
_CANON = "\x00"


def canonical(e: Expr) -> Expr:
    """Rename bound variables to a canonical scheme (de Bruijn levels).

    The result has the same tree structure as the input (paths are stable),
    and two expressions are alpha-equivalent iff their canonical forms are
    structurally equal.  Free variables are left untouched.
    """

    def go(e: Expr, env: Mapping[str, str], depth: int) -> Expr:
        if isinstance(e, Var):
            return Var(env.get(e.name, e.name))
        if isinstance(e, BINDERS):
            fresh = _CANON + str(depth)
            body = go(e.body, {**env, e.var: fresh}, depth + 1)
            return type(e)(fresh, e.var_type, body)
        kids = tuple(go(k, env, depth) for k in children(e))
        return rebuild(e, kids)

    return go(e, {}, 0)


@lru_cache(maxsize=65536)
def _canonical_cached(e: Expr) -> Expr:
    return canonical(e)


def alpha_key(e: Expr) -> Expr:
    """A hashable canonical representative of e's alpha-class."""
    return _canonical_cached(e)


def alpha_eq(a: Expr, b: Expr) -> bool:
    return a is b or alpha_key(a) == alpha_key(b)


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


def _fresh_variant(name: str, avoid: frozenset[str]) -> str:
    """`name` itself when available, else the smallest unused numeric suffix."""
    if name not in avoid:
        return name
    base = re.sub(r"_\d+$", "", name) or "v"
    k = 2
    while f"{base}_{k}" in avoid:
        k += 1
    return f"{base}_{k}"


def substitute(e: Expr, subst: Mapping[str, Expr]) -> Expr:
    """Simultaneous capture-avoiding substitution e[subst].

    Binders are renamed (deterministically) only when they would capture a
    free variable of a live replacement.
    """

    def go(e: Expr, sub: Mapping[str, Expr]) -> Expr:
        live = {x: r for x, r in sub.items() if x in free_vars(e)}
        if not live:
            return e
        if isinstance(e, Var):
            return live.get(e.name, e)
        if isinstance(e, BINDERS):
            inner = {x: r for x, r in live.items() if x != e.var}
            if not inner:
                return e
            repl_fvs: frozenset[str] = frozenset()
            for repl in inner.values():
                repl_fvs |= free_vars(repl)
            var, body = e.var, e.body
            if var in repl_fvs:
                avoid = repl_fvs | free_vars(body) | frozenset(inner)
                new = _fresh_variant(var, avoid | {var})
                body = go(body, {var: Var(new)})
                var = new
            return type(e)(var, e.var_type, go(body, inner))
        return rebuild(e, tuple(go(k, live) for k in children(e)))

    return go(e, dict(subst)) if subst else e


# --- traced substitution -----------------------------------------------------
#
# The trace/gtc machinery needs to know, for every fixed-point operator of
# e[subst], whether it comes from the skeleton of e or sits inside the j-th
# substituted copy of some replacement (occurrences numbered per variable in
# preorder).  Capture-avoiding renaming preserves tree structure, so origins
# are exact path correspondences.


@dataclass(frozen=True)
class FromSkeleton:
    """Operator in the result corresponds to the one at `src` in the source."""

    src: Path


@dataclass(frozen=True)
class FromCopy:
    """Operator inside the copy-th inserted replacement for `var`, at `src`
    relative to the replacement's root."""

    var: str
    copy: int
    src: Path


SigmaOrigin = Union[FromSkeleton, FromCopy]


def substitute_traced(e: Expr, subst: Mapping[str, Expr]) -> tuple[Expr, dict[Path, SigmaOrigin]]:
    """Like substitute, but also reports an origin for each fixed-point
    operator position of the result.  The result expression is structurally
    identical to substitute(e, subst)."""
    origins: dict[Path, SigmaOrigin] = {}
    counters: dict[str, int] = {}

    def go(e: Expr, sub: Mapping[str, Expr], path: Path, src: Path) -> Expr:
        live = {x: r for x, r in sub.items() if x in free_vars(e)}
        if not live:
            for p in sigma_paths(e):
                origins[path + p] = FromSkeleton(src + p)
            return e
        if isinstance(e, Var):  # e.name is a live key
            repl = live[e.name]
            copy = counters.get(e.name, 0)
            counters[e.name] = copy + 1
            for p in sigma_paths(repl):
                origins[path + p] = FromCopy(e.name, copy, p)
            return repl
        if isinstance(e, BINDERS):
            inner = {x: r for x, r in live.items() if x != e.var}
            # inner is nonempty: some live key is free in e, hence under the binder
            repl_fvs: frozenset[str] = frozenset()
            for repl in inner.values():
                repl_fvs |= free_vars(repl)
            var, body = e.var, e.body
            if var in repl_fvs:
                avoid = repl_fvs | free_vars(body) | frozenset(inner)
                new = _fresh_variant(var, avoid | {var})
                body = substitute(body, {var: Var(new)})
                var = new
            if isinstance(e, FIXPOINTS):
                origins[path] = FromSkeleton(src)
            return type(e)(var, e.var_type, go(body, inner, path + (0,), src + (0,)))
        if isinstance(e, FIXPOINTS):
            origins[path] = FromSkeleton(src)
        kids = tuple(
            go(k, live, path + (i,), src + (i,)) for i, k in enumerate(children(e))
        )
        return rebuild(e, kids)

    result = go(e, dict(subst), (), ()) if subst else e
    if not subst:
        for p in sigma_paths(e):
            origins[p] = FromSkeleton(p)
    return result, origins


def count_occurrences(e: Expr, x: str) -> int:
    """Number of free occurrences of x in e (the Mono premise count)."""
    if isinstance(e, Var):
        return 1 if e.name == x else 0
    if isinstance(e, BINDERS):
        return 0 if e.var == x else count_occurrences(e.body, x)
    return sum(count_occurrences(k, x) for k in children(e))


# --- head reduction steps ---------------------------------------------------


def beta_head(e: Expr) -> Expr:
    """One beta step on the head redex: (\\x. phi) psi psi_vec -> phi[psi/x] psi_vec."""
    head, args = app_spine(e)
    if not isinstance(head, Lam) or not args:
        raise HflError(f"no head beta-redex in {to_str(e)!r}")
    return make_app(substitute(head.body, {head.var: args[0]}), *args[1:])


def unfold(e: Expr) -> Expr:
    """Unfold a fixed-point head: (sigma x. phi) psi_vec -> phi[sigma x. phi/x] psi_vec."""
    head, args = app_spine(e)
    if not isinstance(head, FIXPOINTS):
        raise HflError(f"head of {to_str(e)!r} is not a fixed-point")
    return make_app(substitute(head.body, {head.var: head}), *args)


@dataclass(frozen=True)
class HeadStep:
    """A head reduction step together with the induced correspondence of
    fixed-point operator positions.

    sources maps every sigma-path of `result` to the sigma-path of the source
    expression it descends from.  For an unfold, the consumed operator sits at
    `head_path` in the source; its descendants in the result are exactly the
    roots of the substituted copies, listed in `copy_roots`.  For a beta step
    head_path is None and copy_roots is empty: every result operator has a
    unique source and no operator is consumed or duplicated at the root.
    """

    result: Expr
    sources: dict[Path, Path]
    head_path: Optional[Path]
    copy_roots: tuple[Path, ...]


def _spine_arg_sources(e: Expr, kept_args: int, sources: dict[Path, Path]) -> None:
    """Record identity sources for operators inside shared spine arguments.

    The outermost kept_args applied arguments occupy identical paths in the
    source and the result spine (the i-th argument from the outside sits at
    (0,)*(i-1) + (1,) in both), so their operators map by the identity.
    """
    p: Path = ()
    for _ in range(kept_args):
        arg_path = p + (1,)
        for q in sigma_paths(subexpr_at(e, arg_path)):
            sources[arg_path + q] = arg_path + q
        p = p + (0,)


def beta_head_traced(e: Expr) -> HeadStep:
    """beta_head together with the sigma-position correspondence."""
    head, args = app_spine(e)
    if not isinstance(head, Lam) or not args:
        raise HflError(f"no head beta-redex in {to_str(e)!r}")
    core, origins = substitute_traced(head.body, {head.var: args[0]})
    rest = args[1:]
    result = make_app(core, *rest)
    sources: dict[Path, Path] = {}
    _spine_arg_sources(e, len(rest), sources)
    core_prefix = (0,) * len(rest)
    lam_body_prefix = (0,) * len(args) + (0,)       # head at (0,)*len(args), body below
    arg0_prefix = (0,) * (len(args) - 1) + (1,)      # innermost applied argument
    for p, origin in origins.items():
        if isinstance(origin, FromSkeleton):
            sources[core_prefix + p] = lam_body_prefix + origin.src
        else:
            sources[core_prefix + p] = arg0_prefix + origin.src
    return HeadStep(result, sources, None, ())


def unfold_traced(e: Expr) -> HeadStep:
    """unfold together with the sigma-position correspondence.

    Every operator inside the consumed head's body appears once in the result
    skeleton and once inside each substituted copy; the head itself descends
    exactly to the copy roots.
    """
    head, args = app_spine(e)
    if not isinstance(head, FIXPOINTS):
        raise HflError(f"head of {to_str(e)!r} is not a fixed-point")
    core, origins = substitute_traced(head.body, {head.var: head})
    result = make_app(core, *args)
    sources: dict[Path, Path] = {}
    _spine_arg_sources(e, len(args), sources)
    core_prefix = (0,) * len(args)
    head_path = (0,) * len(args)
    copy_roots: list[Path] = []
    for p, origin in origins.items():
        rp = core_prefix + p
        if isinstance(origin, FromSkeleton):
            sources[rp] = head_path + (0,) + origin.src
        else:
            # origin.src is a sigma-path of the head itself: () is its root
            sources[rp] = head_path + origin.src
            if origin.src == ():
                copy_roots.append(rp)
    return HeadStep(result, sources, head_path, tuple(sorted(copy_roots)))


# ---------------------------------------------------------------------------
# Type inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _TMeta(SimpleType):
    """Type metavariable used only inside inference."""

    __slots__ = ("id",)
    id: int


class _Unifier:
    def __init__(self) -> None:
        self.sol: dict[int, SimpleType] = {}
        self._next = 0

    def fresh(self) -> _TMeta:
        self._next += 1
        return _TMeta(self._next)

    def resolve(self, ty: SimpleType) -> SimpleType:
        while isinstance(ty, _TMeta) and ty.id in self.sol:
            ty = self.sol[ty.id]
        if isinstance(ty, Arrow):
            return Arrow(self.resolve(ty.arg), self.resolve(ty.result))
        return ty

    def unify(self, a: SimpleType, b: SimpleType, where: Expr) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if isinstance(a, _TMeta):
            self.sol[a.id] = b
            return
        if isinstance(b, _TMeta):
            self.sol[b.id] = a
            return
        if isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify(a.arg, b.arg, where)
            self.unify(a.result, b.result, where)
            return
        raise IllTyped(where, type_to_str(a), type_to_str(b))


def _infer(e: Expr, env: dict[str, SimpleType], uni: Optional[_Unifier]) -> SimpleType:
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Zero):
        return NAT
    if isinstance(e, Succ):
        _expect(e.arg, _infer(e.arg, env, uni), NAT, uni)
        return NAT
    if isinstance(e, Eq):
        _expect(e.lhs, _infer(e.lhs, env, uni), NAT, uni)
        _expect(e.rhs, _infer(e.rhs, env, uni), NAT, uni)
        return PROP
    if isinstance(e, (Or, And)):
        _expect(e.lhs, _infer(e.lhs, env, uni), PROP, uni)
        _expect(e.rhs, _infer(e.rhs, env, uni), PROP, uni)
        return PROP
    if isinstance(e, Lam):
        inner = dict(env)
        inner[e.var] = e.var_type
        body_ty = _infer(e.body, inner, uni)
        resolved = uni.resolve(body_ty) if uni else body_ty
        if isinstance(resolved, NatType):
            raise HflTypeError(f"abstraction body {to_str(e.body)!r} has type N")
        return Arrow(e.var_type, body_ty)
    if isinstance(e, FIXPOINTS):
        inner = dict(env)
        inner[e.var] = e.var_type
        body_ty = _infer(e.body, inner, uni)
        _expect(e.body, body_ty, e.var_type, uni)
        return e.var_type
    if isinstance(e, App):
        fn_ty = _infer(e.fn, env, uni)
        arg_ty = _infer(e.arg, env, uni)
        if uni:
            result = uni.fresh()
            uni.unify(fn_ty, Arrow(arg_ty, result), e)
            return result
        if not isinstance(fn_ty, Arrow):
            raise IllTyped(e.fn, "an arrow type", type_to_str(fn_ty))
        if fn_ty.arg != arg_ty:
            raise IllTyped(e.arg, type_to_str(fn_ty.arg), type_to_str(arg_ty))
        return fn_ty.result
    raise TypeError(f"not an expression: {e!r}")


def _expect(where: Expr, found: SimpleType, want: SimpleType, uni: Optional[_Unifier]) -> None:
    if uni:
        uni.unify(found, want, where)
    elif found != want:
        raise IllTyped(where, type_to_str(want), type_to_str(found))


def infer_type(env: Mapping[str, SimpleType], e: Expr) -> SimpleType:
    """The unique type of e under env (syntax-directed; raises on failure)."""
    return _infer(e, dict(env), None)


def infer_env(formulas, env: Optional[Mapping[str, SimpleType]] = None) -> dict[str, SimpleType]:
    """Infer types for the free variables of the given Omega-formulas.

    Known types may be supplied in env; the result extends it.  Raises
    HflTypeError when a free variable's type is not fully determined.
    """
    uni = _Unifier()
    full: dict[str, SimpleType] = dict(env or {})
    metas: dict[str, _TMeta] = {}
    for phi in formulas:
        for name in free_vars(phi):
            if name not in full and name not in metas:
                metas[name] = uni.fresh()
    scope = {**full, **metas}
    for phi in formulas:
        _expect(phi, _infer(phi, scope, uni), PROP, uni)
    for name, meta in metas.items():
        ty = uni.resolve(meta)
        if any(isinstance(t, _TMeta) for _, t in _iter_types(ty)) or isinstance(ty, _TMeta):
            raise HflTypeError(f"cannot determine the type of free variable {name!r}")
        full[name] = ty
    return full


def _iter_types(ty: SimpleType):
    yield (), ty
    if isinstance(ty, Arrow):
        yield from _iter_types(ty.arg)
        yield from _iter_types(ty.result)


# ---------------------------------------------------------------------------
# Sequents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sequent:
    """A pair of ordered formula lists Gamma |- Delta."""

    left: tuple[Expr, ...]
    right: tuple[Expr, ...]

    def __str__(self) -> str:
        return sequent_to_str(self)

    def formulas(self) -> Iterator[tuple[str, int, Expr]]:
        for i, phi in enumerate(self.left):
            yield "L", i, phi
        for i, phi in enumerate(self.right):
            yield "R", i, phi

    def get(self, side: str, index: int) -> Expr:
        return (self.left if side == "L" else self.right)[index]

    def free_vars(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for phi in self.left + self.right:
            out |= free_vars(phi)
        return out


def sequent(left=(), right=()) -> Sequent:
    return Sequent(tuple(left), tuple(right))


def sequent_alpha_key(seq: Sequent):
    return (tuple(alpha_key(f) for f in seq.left), tuple(alpha_key(f) for f in seq.right))


def sequent_alpha_eq(a: Sequent, b: Sequent) -> bool:
    return sequent_alpha_key(a) == sequent_alpha_key(b)


def check_sequent(seq: Sequent, env: Optional[Mapping[str, SimpleType]] = None) -> dict[str, SimpleType]:
    """Type-check every member formula at type O; returns the inferred env."""
    return infer_env(seq.left + seq.right, env)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<arrow>->)
    | (?P<orop>\\/)
    | (?P<andop>/\\)
    | (?P<lam>\\)
    | (?P<turnstile>\|-|⊢)
    | (?P<num>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<punct>[().:,=])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"mu", "nu", "Z", "S"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise HflSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup or ""
        if kind != "ws":
            tok_text = m.group()
            if kind == "ident" and tok_text in _KEYWORDS:
                kind = tok_text
            toks.append(_Tok(kind, tok_text, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- helpers --
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str = "") -> _Tok:
        tok = self.next()
        if tok.kind != kind and tok.text != kind:
            raise HflSyntaxError(
                f"expected {what or kind!r}, found {tok.text or 'end of input'!r}",
                self.text, tok.pos)
        return tok

    def fail(self, message: str):
        raise HflSyntaxError(message, self.text, self.peek().pos)

    # -- types --
    def type_atom(self) -> SimpleType:
        tok = self.next()
        if tok.text == "(":
            ty = self.type_expr()
            self.expect(")", ")")
            return ty
        if tok.kind == "ident" and tok.text == "N":
            return NAT
        if tok.kind == "ident" and tok.text == "O":
            return PROP
        raise HflSyntaxError(f"expected a type, found {tok.text!r}", self.text, tok.pos)

    def type_expr(self) -> SimpleType:
        left = self.type_atom()
        if self.peek().kind == "arrow":
            tok = self.next()
            try:
                return Arrow(left, self.type_expr())
            except HflTypeError as exc:
                raise HflSyntaxError(str(exc), self.text, tok.pos) from None
        return left

    # -- expressions --
    def expr(self) -> Expr:
        tok = self.peek()
        if tok.kind == "lam":
            self.next()
            name = self.expect("ident", "a variable").text
            self.expect(":", ":")
            ty = self.type_expr()
            self.expect(".", ".")
            return Lam(name, ty, self.expr())
        if tok.kind in ("mu", "nu"):
            self.next()
            name = self.expect("ident", "a variable").text
            self.expect(":", ":")
            ty = self.type_expr()
            self.expect(".", ".")
            body = self.expr()
            try:
                return (Mu if tok.kind == "mu" else Nu)(name, ty, body)
            except HflTypeError as exc:
                raise HflSyntaxError(str(exc), self.text, tok.pos) from None
        return self.or_expr()

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.peek().kind == "orop":
            self.next()
            if self.peek().kind in ("lam", "mu", "nu"):
                return Or(left, self.expr())  # binder body extends maximally
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.eq_expr()
        while self.peek().kind == "andop":
            self.next()
            if self.peek().kind in ("lam", "mu", "nu"):
                return And(left, self.expr())
            left = And(left, self.eq_expr())
        return left

    def eq_expr(self) -> Expr:
        left = self.app_expr()
        if self.peek().text == "=":
            self.next()
            return Eq(left, self.app_expr())
        return left

    def app_expr(self) -> Expr:
        head = self.atom()
        while True:
            tok = self.peek()
            if tok.kind in ("ident", "num", "Z", "S") or tok.text == "(":
                head = App(head, self.atom())
            else:
                break
        return head

    def atom(self) -> Expr:
        tok = self.next()
        if tok.text == "(":
            e = self.expr()
            self.expect(")", ")")
            return e
        if tok.kind == "Z":
            return Zero()
        if tok.kind == "S":
            # S binds to the immediately following atom: S x, S (f y), S S x.
            return Succ(self.atom())
        if tok.kind == "num":
            return numeral(int(tok.text))
        if tok.kind == "ident":
            return Var(tok.text)
        raise HflSyntaxError(f"expected an expression, found {tok.text or 'end of input'!r}",
                             self.text, tok.pos)

    # -- sequents --
    def formula_list(self, stop_kinds: tuple[str, ...]) -> tuple[Expr, ...]:
        if self.peek().kind in stop_kinds:
            return ()
        items = [self.expr()]
        while self.peek().text == ",":
            self.next()
            items.append(self.expr())
        return tuple(items)

    def sequent(self) -> Sequent:
        left = self.formula_list(("turnstile",))
        self.expect("turnstile", "|-")
        right = self.formula_list(("eof",))
        return Sequent(left, right)


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    if p.peek().kind != "eof":
        p.fail(f"unexpected trailing input {p.peek().text!r}")
    return e


def parse_sequent(text: str) -> Sequent:
    p = _Parser(text)
    seq = p.sequent()
    if p.peek().kind != "eof":
        p.fail(f"unexpected trailing input {p.peek().text!r}")
    return seq


def parse_type(text: str) -> SimpleType:
    p = _Parser(text)
    ty = p.type_expr()
    if p.peek().kind != "eof":
        p.fail(f"unexpected trailing input {p.peek().text!r}")
    return ty


def parse(text: str) -> Union[Expr, Sequent]:
    """Parse a formula, a term, or (when a turnstile is present) a sequent."""
    if any(t.kind == "turnstile" for t in _tokenize(text)):
        return parse_sequent(text)
    return parse_expr(text)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

# Precedence levels: binder bodies 0, \/ 1, /\ 2, = 3, application 4, atoms 5.


def to_str(e: Expr) -> str:
    return _print(e, 0)


def _print(e: Expr, level: int) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Zero):
        return "Z"
    if isinstance(e, Succ):
        n = numeral_value(e)
        if n is not None:
            return str(n)
        return _wrap(f"S {_print(e.arg, 5)}", 4, level)
    if isinstance(e, Eq):
        return _wrap(f"{_print(e.lhs, 4)} = {_print(e.rhs, 4)}", 3, level)
    if isinstance(e, Or):
        return _wrap(f"{_print(e.lhs, 1)} \\/ {_print(e.rhs, 2)}", 1, level)
    if isinstance(e, And):
        return _wrap(f"{_print(e.lhs, 2)} /\\ {_print(e.rhs, 3)}", 2, level)
    if isinstance(e, Lam):
        return _wrap(f"\\{e.var}:{type_to_str(e.var_type)}. {_print(e.body, 0)}", 0, level)
    if isinstance(e, Mu):
        return _wrap(f"mu {e.var}:{type_to_str(e.var_type)}. {_print(e.body, 0)}", 0, level)
    if isinstance(e, Nu):
        return _wrap(f"nu {e.var}:{type_to_str(e.var_type)}. {_print(e.body, 0)}", 0, level)
    if isinstance(e, App):
        return _wrap(f"{_print(e.fn, 4)} {_print(e.arg, 5)}", 4, level)
    raise TypeError(f"not an expression: {e!r}")


def _wrap(s: str, prec: int, level: int) -> str:
    return s if prec >= level else f"({s})"


def sequent_to_str(seq: Sequent) -> str:
    left = ", ".join(to_str(f) for f in seq.left)
    right = ", ".join(to_str(f) for f in seq.right)
    if left:
        return f"{left} |- {right}" if right else f"{left} |-"
    return f"|- {right}" if right else "|-"


# ---------------------------------------------------------------------------
# Derived encodings
# ---------------------------------------------------------------------------


def top_prop() -> Expr:
    return Nu("t", PROP, Var("t"))


def bot_prop() -> Expr:
    return Mu("b", PROP, Var("b"))


def top_ty(ty: SimpleType) -> Expr:
    """The greatest element of type ty, as the formula nu x:ty. x."""
    return Nu("t", ty, Var("t"))


def bot_ty(ty: SimpleType) -> Expr:
    return Mu("b", ty, Var("b"))


def exists_nat(x: str, phi: Expr) -> Expr:
    """exists x:N. phi  :=  (mu E:N->O. \\y:N. phi[y/x] \\/ E (S y)) Z."""
    avoid = free_vars(phi) - {x}
    y = _fresh_variant(x, avoid)
    e = _fresh_variant("E", avoid | {y})
    body = substitute(phi, {x: Var(y)})
    return App(Mu(e, arrow(NAT, PROP), Lam(y, NAT, Or(body, App(Var(e), Succ(Var(y)))))), Zero())


def forall_nat(x: str, phi: Expr) -> Expr:
    """forall x:N. phi  :=  (nu A:N->O. \\y:N. phi[y/x] /\\ A (S y)) Z."""
    avoid = free_vars(phi) - {x}
    y = _fresh_variant(x, avoid)
    a = _fresh_variant("A", avoid | {y})
    body = substitute(phi, {x: Var(y)})
    return App(Nu(a, arrow(NAT, PROP), Lam(y, NAT, And(body, App(Var(a), Succ(Var(y)))))), Zero())


def exists_ty(x: str, ty: SimpleType, phi: Expr) -> Expr:
    """exists x:T. phi  :=  (\\x:T. phi) top_T (by monotonicity)."""
    return App(Lam(x, ty, phi), top_ty(ty))


def forall_ty(x: str, ty: SimpleType, phi: Expr) -> Expr:
    return App(Lam(x, ty, phi), bot_ty(ty))


def forall_combinator() -> Expr:
    """nu X. \\p:N->O. \\x:N. p x /\\ X p (S x)."""
    pno = arrow(NAT, PROP)
    return Nu("X", arrow(pno, NAT, PROP),
              Lam("p", pno, Lam("x", NAT,
                  And(App(Var("p"), Var("x")),
                      make_app(Var("X"), Var("p"), Succ(Var("x")))))))


def nat_pred() -> Expr:
    """N := mu X. \\x:N. (x = Z) \\/ exists x'. (x = S x' /\\ X x')."""
    step = exists_nat("x'", And(Eq(Var("x"), Succ(Var("x'"))), App(Var("X"), Var("x'"))))
    return Mu("X", arrow(NAT, PROP),
              Lam("x", NAT, Or(Eq(Var("x"), Zero()), step)))


def sum_pred() -> Expr:
    """sum x y z  <=>  x + y = z, by the standard inductive definition."""
    rec = exists_nat("x'", exists_nat("z'", And(
        Eq(Var("x"), Succ(Var("x'"))),
        And(make_app(Var("sum"), Var("x'"), Var("y"), Var("z'")),
            Eq(Var("z"), Succ(Var("z'")))))))
    return Mu("sum", arrow(NAT, NAT, NAT, PROP),
              Lam("x", NAT, Lam("y", NAT, Lam("z", NAT,
                  Or(And(Eq(Var("x"), Zero()), Eq(Var("y"), Var("z"))), rec)))))


def lt(s: Expr, t: Expr) -> Expr:
    """s < t  :=  (mu X. \\y:N. (S y = t) \\/ X (S y)) s."""
    avoid = free_vars(s) | free_vars(t)
    y = _fresh_variant("y", avoid)
    x = _fresh_variant("X", avoid | {y})
    return App(Mu(x, arrow(NAT, PROP),
                  Lam(y, NAT, Or(Eq(Succ(Var(y)), t), App(Var(x), Succ(Var(y)))))), s)


def neq(s: Expr, t: Expr) -> Expr:
    return Or(lt(s, t), lt(t, s))


def leq_pred() -> Expr:
    """leq := mu Y. \\n:N. \\m:N. (n = m) \\/ Y (S n) m."""
    return Mu("Y", arrow(NAT, NAT, PROP),
              Lam("n", NAT, Lam("m", NAT,
                  Or(Eq(Var("n"), Var("m")),
                     make_app(Var("Y"), Succ(Var("n")), Var("m"))))))


def leq(s: Expr, t: Expr) -> Expr:
    return make_app(leq_pred(), s, t)


def derived_encodings() -> dict[str, object]:
    """The standard encodings, closed formulas directly and families as callables."""
    return {
        "top": top_prop(),
        "bot": bot_prop(),
        "top_T": top_ty,
        "bot_T": bot_ty,
        "forall": forall_combinator(),
        "exists": exists_nat,
        "exists_T": exists_ty,
        "forall_nat": forall_nat,
        "forall_T": forall_ty,
        "nat": nat_pred(),
        "sum": sum_pred(),
        "lt": lt,
        "neq": neq,
        "leq": leq_pred(),
    }
