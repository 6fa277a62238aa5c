"""Nondeterministic Büchi automata with transition-based acceptance.

A run is accepting when it takes accepting *transitions* infinitely often
(rather than visiting accepting states).  The module provides lasso-word
membership, emptiness with witness extraction, intersection, complementation
and containment, plus an exhaustive lasso-membership survey used as a
brute-force oracle by the test suite.

States and alphabet symbols are opaque hashable values; textual dumps relabel
states with stable integer ids.

Two independent complementation engines are provided.  The default is
rank-based: it tracks the reachable-state set, nondeterministically switches
to guessing a tight level ranking per step, and verifies with a breakpoint
set that every thread of the rejected word stabilises at an odd rank.  The
second engine is Ramsey-based: it tracks the three-valued transition matrix
of the word read so far (no path / path / path through an accepting
transition), guesses a decomposition u·v1·v2·… whose blocks all share one
idempotent matrix, and accepts when that matrix pair admits no accepting run.
Both constructions can blow up (the ranking one as O((0.76·n)^n), the Ramsey
one as the matrix semigroup, worst case 3^(n^2)), so every entry point that
builds a complement takes a state cap and raises :class:`SizeGuard` instead
of diverging.
"""

from __future__ import annotations

import itertools

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Optional

from .syntax import HflError

State = Hashable
Symbol = Hashable
Transition = tuple[State, Symbol, State]


class BuchiError(HflError):
    """Malformed automaton, alphabet mismatch, or bad lasso word."""


class SizeGuard(BuchiError):
    """A construction exceeded its configured state cap."""


# ---------------------------------------------------------------------------
# automata and lasso words
# ---------------------------------------------------------------------------


def _key(x: object) -> tuple[str, str]:
    return (type(x).__name__, repr(x))


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word ``u · v^omega``."""

    u: tuple[Symbol, ...]
    v: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.u, tuple) or not isinstance(self.v, tuple):
            raise BuchiError("lasso parts must be tuples")
        if not self.v:
            raise BuchiError("lasso period must be nonempty")

    @property
    def spine(self) -> tuple[Symbol, ...]:
        return self.u + self.v

    def symbol_at(self, i: int) -> Symbol:
        """Symbol at position i of the infinite word."""
        if i < len(self.u):
            return self.u[i]
        return self.v[(i - len(self.u)) % len(self.v)]


@dataclass(frozen=True)
class BuchiAutomaton:
    states: frozenset[State]
    alphabet: frozenset[Symbol]
    transitions: frozenset[Transition]
    initial: frozenset[State]
    accepting: frozenset[Transition]

    def __post_init__(self) -> None:
        if not self.initial <= self.states:
            raise BuchiError("initial states must be states")
        if not self.accepting <= self.transitions:
            raise BuchiError("accepting transitions must be transitions")
        for src, sym, dst in self.transitions:
            if src not in self.states or dst not in self.states:
                raise BuchiError("transition endpoint is not a state")
            if sym not in self.alphabet:
                raise BuchiError("transition symbol is not in the alphabet")

    # -- derived lookup tables (cached; they do not take part in equality) --

    @cached_property
    def _sorted_states(self) -> tuple[State, ...]:
        return tuple(sorted(self.states, key=_key))

    @cached_property
    def _by_source(self) -> Mapping[State, tuple[tuple[Symbol, State, bool], ...]]:
        table: dict[State, list[tuple[Symbol, State, bool]]] = {q: [] for q in self.states}
        for t in sorted(self.transitions, key=_key):
            src, sym, dst = t
            table[src].append((sym, dst, t in self.accepting))
        return {q: tuple(v) for q, v in table.items()}

    @cached_property
    def _by_source_symbol(self) -> Mapping[tuple[State, Symbol], tuple[tuple[State, bool], ...]]:
        table: dict[tuple[State, Symbol], list[tuple[State, bool]]] = {}
        for src, entries in self._by_source.items():
            for sym, dst, acc in entries:
                table.setdefault((src, sym), []).append((dst, acc))
        return {k: tuple(v) for k, v in table.items()}

    def moves(self, state: State, symbol: Symbol) -> tuple[tuple[State, bool], ...]:
        """(destination, accepting?) pairs for one state and symbol."""
        return self._by_source_symbol.get((state, symbol), ())


def make_automaton(
    states: Iterable[State],
    alphabet: Iterable[Symbol],
    transitions: Iterable[Transition],
    initial: Iterable[State],
    accepting: Iterable[Transition],
) -> BuchiAutomaton:
    return BuchiAutomaton(
        frozenset(states),
        frozenset(alphabet),
        frozenset(tuple(t) for t in transitions),
        frozenset(initial),
        frozenset(tuple(t) for t in accepting),
    )


# ---------------------------------------------------------------------------
# strongly connected components (iterative Tarjan)
# ---------------------------------------------------------------------------


def _scc_ids(nodes: list, succs: Mapping) -> dict:
    """Map each node to its SCC id.  ``succs[n]`` is an iterable of nodes."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comp: dict = {}
    counter = 0
    next_index = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succs.get(root, ())))]
        index[root] = low[root] = next_index
        next_index += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = next_index
                    next_index += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succs.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp[member] = counter
                    if member == node:
                        break
                counter += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return comp


# ---------------------------------------------------------------------------
# membership and emptiness
# ---------------------------------------------------------------------------


def accepts_lasso(a: BuchiAutomaton, w: LassoWord) -> bool:
    """Does the automaton accept ``u · v^omega``?

    Decided on the finite product of the automaton with the lasso positions,
    looking for a reachable cycle that contains an accepting transition.
    """
    for sym in w.spine:
        if sym not in a.alphabet:
            raise BuchiError(f"lasso symbol {sym!r} is not in the alphabet")
    total = len(w.spine)

    def succ_pos(i: int) -> int:
        return i + 1 if i + 1 < total else len(w.u)

    # reachable product nodes
    start = [(q, 0) for q in a._sorted_states if q in a.initial]
    seen = set(start)
    queue = deque(start)
    edges: dict[tuple[State, int], list[tuple[State, int]]] = {}
    accepting_edges: list[tuple[tuple[State, int], tuple[State, int]]] = []
    while queue:
        q, i = queue.popleft()
        sym = w.spine[i]
        nxt_i = succ_pos(i)
        outs = edges.setdefault((q, i), [])
        for dst, acc in a.moves(q, sym):
            node = (dst, nxt_i)
            outs.append(node)
            if acc:
                accepting_edges.append(((q, i), node))
            if node not in seen:
                seen.add(node)
                queue.append(node)
    if not accepting_edges:
        return False
    comp = _scc_ids(sorted(seen, key=_key), edges)
    return any(comp[x] == comp[y] for x, y in accepting_edges)


def _bfs_path(
    a: BuchiAutomaton,
    sources: Iterable[State],
    target: State,
    allowed: Optional[set[State]] = None,
) -> Optional[tuple[Symbol, ...]]:
    """Symbols of a shortest path from any source to the target."""
    parents: dict[State, Optional[tuple[State, Symbol]]] = {}
    queue = deque()
    for s in sorted(set(sources), key=_key):
        if allowed is not None and s not in allowed:
            continue
        parents[s] = None
        queue.append(s)
    while queue:
        q = queue.popleft()
        if q == target:
            word: list[Symbol] = []
            cur = q
            while parents[cur] is not None:
                prev, sym = parents[cur]  # type: ignore[misc]
                word.append(sym)
                cur = prev
            return tuple(reversed(word))
        for sym, dst, _acc in a._by_source.get(q, ()):
            if allowed is not None and dst not in allowed:
                continue
            if dst not in parents:
                parents[dst] = (q, sym)
                queue.append(dst)
    return None


def is_empty(a: BuchiAutomaton) -> tuple[bool, Optional[LassoWord]]:
    """Emptiness, with an accepted lasso as witness when nonempty.

    The language is nonempty exactly when some accepting transition lies on a
    cycle reachable from an initial state.
    """
    reach: set[State] = set()
    queue = deque(q for q in a._sorted_states if q in a.initial)
    reach.update(queue)
    while queue:
        q = queue.popleft()
        for _sym, dst, _acc in a._by_source.get(q, ()):
            if dst not in reach:
                reach.add(dst)
                queue.append(dst)
    if not reach:
        return True, None
    succs = {
        q: [dst for _s, dst, _a in a._by_source.get(q, ()) if dst in reach]
        for q in reach
    }
    comp = _scc_ids(sorted(reach, key=_key), succs)
    for t in sorted(a.accepting, key=_key):
        src, sym, dst = t
        if src in reach and dst in reach and comp[src] == comp[dst]:
            scc = {q for q in reach if comp[q] == comp[src]}
            prefix = _bfs_path(a, a.initial, src)
            back = _bfs_path(a, [dst], src, allowed=scc)
            assert prefix is not None and back is not None
            return False, LassoWord(prefix, (sym,) + back)
    return True, None


# ---------------------------------------------------------------------------
# intersection (two-phase product)
# ---------------------------------------------------------------------------


def intersect(a: BuchiAutomaton, b: BuchiAutomaton) -> BuchiAutomaton:
    """Product automaton accepting the intersection of the two languages.

    Phase 0 waits for an accepting transition of the first automaton, phase 1
    for one of the second; the transition completing phase 1 is accepting, so
    it is taken infinitely often exactly when both automata accept.
    """
    if a.alphabet != b.alphabet:
        raise BuchiError("intersection requires identical alphabets")
    initial = [
        (p, q, 0)
        for p in sorted(a.initial, key=_key)
        for q in sorted(b.initial, key=_key)
    ]
    seen = set(initial)
    queue = deque(initial)
    transitions: set[Transition] = set()
    accepting: set[Transition] = set()
    while queue:
        p, q, phase = queue.popleft()
        for sym, p2, acc_a in a._by_source.get(p, ()):
            for q2, acc_b in b.moves(q, sym):
                if phase == 0:
                    nxt = (p2, q2, 1 if acc_a else 0)
                    mark = False
                else:
                    nxt = (p2, q2, 0 if acc_b else 1)
                    mark = acc_b
                t = ((p, q, phase), sym, nxt)
                transitions.add(t)
                if mark:
                    accepting.add(t)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return BuchiAutomaton(
        frozenset(seen), a.alphabet, frozenset(transitions),
        frozenset(initial), frozenset(accepting))


# ---------------------------------------------------------------------------
# three-valued transition matrices (for complementation and the survey)
# ---------------------------------------------------------------------------
#
# A matrix entry over a fixed state order says, for a finite word w:
#   0 - no w-labelled path between the states,
#   1 - a path exists,
#   2 - a path through an accepting transition exists.
# Rows are stored as two bit masks: ``p1`` (entry >= 1) and ``p2`` (entry = 2),
# with p2 row-wise contained in p1.


class _Mat(NamedTuple):
    p1: tuple[int, ...]
    p2: tuple[int, ...]


def _mat_identity(n: int) -> _Mat:
    return _Mat(tuple(1 << i for i in range(n)), (0,) * n)


def _mat_mul(a: _Mat, b: _Mat) -> _Mat:
    p1 = []
    p2 = []
    for r1, r2 in zip(a.p1, a.p2):
        o1 = 0
        o2 = 0
        x = r1
        while x:
            j = (x & -x).bit_length() - 1
            x &= x - 1
            o1 |= b.p1[j]
            o2 |= b.p2[j]
        x = r2
        while x:
            j = (x & -x).bit_length() - 1
            x &= x - 1
            o2 |= b.p1[j]
        p1.append(o1)
        p2.append(o2)
    return _Mat(tuple(p1), tuple(p2))


def _symbol_matrices(a: BuchiAutomaton) -> tuple[tuple[State, ...], dict[Symbol, _Mat]]:
    order = a._sorted_states
    pos = {q: i for i, q in enumerate(order)}
    n = len(order)
    mats = {}
    for sym in sorted(a.alphabet, key=_key):
        p1 = [0] * n
        p2 = [0] * n
        for (src, s, dst) in a.transitions:
            if s != sym:
                continue
            i, j = pos[src], pos[dst]
            p1[i] |= 1 << j
            if (src, s, dst) in a.accepting:
                p2[i] |= 1 << j
        mats[sym] = _Mat(tuple(p1), tuple(p2))
    return order, mats


def _semigroup(generators: Mapping[Symbol, _Mat], cap: int) -> list[_Mat]:
    """All products of one or more generators, in discovery order."""
    seen: dict[_Mat, None] = {}
    queue = deque()
    for sym in sorted(generators, key=_key):
        m = generators[sym]
        if m not in seen:
            seen[m] = None
            queue.append(m)
    gens = [generators[sym] for sym in sorted(generators, key=_key)]
    while queue:
        m = queue.popleft()
        for g in gens:
            prod = _mat_mul(m, g)
            if prod not in seen:
                if len(seen) >= cap:
                    raise SizeGuard(
                        f"transition-matrix semigroup exceeds {cap} elements")
                seen[prod] = None
                queue.append(prod)
    return list(seen)


def _pair_accepts(initial_mask: int, prefix: _Mat, loop: _Mat) -> bool:
    """Does some word in prefix-class · (loop-class)^omega have an accepting run?

    True iff an initial state reaches, via the prefix matrix, a state that can
    reach (in at most one loop step, which suffices for idempotent loops) a
    state with a self entry of value 2.
    """
    n = len(loop.p1)
    d2 = 0
    for s in range(n):
        if (loop.p2[s] >> s) & 1:
            d2 |= 1 << s
    if not d2:
        return False
    qmask = 0
    for q in range(n):
        if loop.p1[q] & d2:
            qmask |= 1 << q
    x = initial_mask
    while x:
        j = (x & -x).bit_length() - 1
        x &= x - 1
        if prefix.p1[j] & qmask:
            return True
    return False


# ---------------------------------------------------------------------------
# trimming (language-preserving removal of useless states)
# ---------------------------------------------------------------------------


def trim(a: BuchiAutomaton) -> BuchiAutomaton:
    """Keep only states that lie on some accepting run.

    A state is useful when it is reachable from an initial state and can reach
    an accepting transition whose endpoints share a strongly connected
    component.  Removing the rest preserves the language.
    """
    reach: set[State] = set()
    queue = deque(q for q in a._sorted_states if q in a.initial)
    reach.update(queue)
    while queue:
        q = queue.popleft()
        for _sym, dst, _acc in a._by_source.get(q, ()):
            if dst not in reach:
                reach.add(dst)
                queue.append(dst)
    succs = {
        q: [dst for _s, dst, _a in a._by_source.get(q, ()) if dst in reach]
        for q in reach
    }
    comp = _scc_ids(sorted(reach, key=_key), succs)
    core = {
        src
        for (src, _sym, dst) in a.accepting
        if src in reach and dst in reach and comp[src] == comp[dst]
    }
    if not core:
        return BuchiAutomaton(
            frozenset(), a.alphabet, frozenset(), frozenset(), frozenset())
    # backward closure to the accepting cores
    preds: dict[State, list[State]] = {q: [] for q in reach}
    for q in reach:
        for dst in succs[q]:
            preds[dst].append(q)
    useful = set(core)
    queue = deque(sorted(core, key=_key))
    while queue:
        q = queue.popleft()
        for p in preds[q]:
            if p not in useful:
                useful.add(p)
                queue.append(p)
    transitions = frozenset(
        t for t in a.transitions if t[0] in useful and t[2] in useful)
    return BuchiAutomaton(
        frozenset(useful), a.alphabet, transitions,
        frozenset(q for q in a.initial if q in useful),
        frozenset(t for t in a.accepting if t[0] in useful and t[2] in useful))


def bisim_quotient(a: BuchiAutomaton) -> BuchiAutomaton:
    """Quotient by strong bisimulation (acceptance-aware); language-preserving.

    Two states are merged when they have, recursively, the same set of
    (symbol, accepting?, successor-class) moves.  Classes are numbered in a
    stable order so the result is deterministic.
    """
    order = a._sorted_states
    cls: dict[State, int] = {q: 0 for q in order}
    while True:
        sigs: dict[State, frozenset] = {
            q: frozenset(
                (sym, acc, cls[dst]) for sym, dst, acc in a._by_source.get(q, ()))
            for q in order
        }
        renum: dict[tuple[int, frozenset], int] = {}
        nxt: dict[State, int] = {}
        for q in order:
            key = (cls[q], sigs[q])
            if key not in renum:
                renum[key] = len(renum)
            nxt[q] = renum[key]
        if nxt == cls:
            break
        cls = nxt
    transitions: set[Transition] = set()
    accepting: set[Transition] = set()
    for q in order:
        for sym, acc, dcls in sigs[q]:
            t = (cls[q], sym, dcls)
            if acc:
                accepting.add(t)
            transitions.add(t)
    # a class can carry both an accepting and a plain edge between the same
    # endpoints; the accepting variant subsumes the other
    return BuchiAutomaton(
        frozenset(cls.values()), a.alphabet, frozenset(transitions),
        frozenset(cls[q] for q in a.initial), frozenset(accepting))


# ---------------------------------------------------------------------------
# complementation
# ---------------------------------------------------------------------------


def complement_ramsey(a: BuchiAutomaton, *, max_states: int = 50_000) -> BuchiAutomaton:
    """Ramsey-based complement (used as a cross-check for the default engine).

    Every infinite word factors as u·v1·v2·… where all blocks share one
    idempotent transition matrix R; with P the matrix of u, the original
    automaton accepts either every word with such a factorization or none of
    them, decided by :func:`_pair_accepts`.  The complement guesses the
    factorization for a rejecting pair (P, R) and emits an accepting
    transition at every block boundary.

    State bound: |S|+1 prefix states plus |E|·(|S|+1) block states, where S is
    the matrix semigroup of the alphabet (worst case 3^(n^2)) and E its
    idempotents; the ``max_states`` cap raises :class:`SizeGuard` before the
    construction explodes.
    """
    order, gens = _symbol_matrices(a)
    pos = {q: i for i, q in enumerate(order)}
    initial_mask = 0
    for q in a.initial:
        initial_mask |= 1 << pos[q]
    semigroup = _semigroup(gens, max_states)
    idempotents = [m for m in semigroup if _mat_mul(m, m) == m]
    identity = _mat_identity(len(order))
    syms = sorted(a.alphabet, key=_key)
    gen_list = [gens[s] for s in syms]

    rejecting_cache: dict[_Mat, tuple[_Mat, ...]] = {}

    def rejecting_loops(prefix: _Mat) -> tuple[_Mat, ...]:
        # Switches are restricted to linked pairs (prefix·loop == prefix):
        # postponing the switch by one block turns any rejecting pair into a
        # linked rejecting pair, so this loses no words.
        got = rejecting_cache.get(prefix)
        if got is None:
            got = tuple(
                r for r in idempotents
                if _mat_mul(prefix, r) == prefix
                and not _pair_accepts(initial_mask, prefix, r))
            rejecting_cache[prefix] = got
        return got

    # Right-Cayley predecessor table over the semigroup, for pruning block
    # states whose loop matrix has become unreachable (such runs can never
    # take another accepting transition, so dropping them keeps the language).
    sg_index = {m: i for i, m in enumerate(semigroup)}
    preds: list[list[int]] = [[] for _ in semigroup]
    for i, m in enumerate(semigroup):
        for g in gen_list:
            preds[sg_index[_mat_mul(m, g)]].append(i)
    backreach_cache: dict[_Mat, frozenset[_Mat]] = {}

    def can_still_complete(loop: _Mat) -> frozenset[_Mat]:
        got = backreach_cache.get(loop)
        if got is None:
            seen = {sg_index[loop]}
            queue = deque(seen)
            while queue:
                x = queue.popleft()
                for p in preds[x]:
                    if p not in seen:
                        seen.add(p)
                        queue.append(p)
            got = frozenset(semigroup[i] for i in seen) | {identity}
            backreach_cache[loop] = got
        return got

    start: State = ("prefix", identity)
    seen: set[State] = {start}
    queue: deque[State] = deque([start])
    transitions: set[Transition] = set()
    accepting: set[Transition] = set()

    def emit(src: State, sym: Symbol, dst: State, acc: bool) -> None:
        t = (src, sym, dst)
        transitions.add(t)
        if acc:
            accepting.add(t)
        if dst not in seen:
            if len(seen) >= max_states:
                raise SizeGuard(f"complement exceeds {max_states} states")
            seen.add(dst)
            queue.append(dst)

    while queue:
        st = queue.popleft()
        if st[0] == "prefix":
            prefix = st[1]
            for sym in syms:
                step = gens[sym]
                emit(st, sym, ("prefix", _mat_mul(prefix, step)), False)
                for loop in rejecting_loops(prefix):
                    # the symbol starts the first block; after the switch the
                    # guessed prefix matrix no longer matters, so block states
                    # only carry (loop, current block matrix)
                    if step in can_still_complete(loop):
                        emit(st, sym, ("block", loop, step), False)
                    if step == loop:
                        # ... and may already complete it
                        emit(st, sym, ("block", loop, identity), True)
        else:
            _tag, loop, cur = st
            for sym in syms:
                nxt = _mat_mul(cur, gens[sym])
                if nxt in can_still_complete(loop):
                    emit(st, sym, ("block", loop, nxt), False)
                if nxt == loop:
                    emit(st, sym, ("block", loop, identity), True)

    raw = BuchiAutomaton(
        frozenset(seen), a.alphabet, frozenset(transitions),
        frozenset([start]), frozenset(accepting))
    return bisim_quotient(trim(raw))


@lru_cache(maxsize=None)
def _tight_vectors(bounds: tuple[tuple[int, int], ...]) -> tuple[tuple[int, ...], ...]:
    """All tight rank vectors within per-slot parity bounds.

    ``bounds[i] = (even_cap, odd_cap)``: slot i may hold any even value up to
    ``even_cap`` or any odd value up to ``odd_cap``.  A vector is tight when
    its maximum is odd and every odd value below the maximum also occurs; the
    empty vector is vacuously tight.
    """
    choices = []
    for even_cap, odd_cap in bounds:
        vals = list(range(0, even_cap + 1, 2)) + list(range(1, odd_cap + 1, 2))
        if not vals:
            return ()
        choices.append(sorted(vals))
    out = []
    for vec in itertools.product(*choices):
        if vec:
            top = max(vec)
            if top % 2 == 0:
                continue
            present = set(vec)
            if any(r not in present for r in range(1, top, 2)):
                continue
        out.append(vec)
    return tuple(out)


def _subset_successor(
        a: BuchiAutomaton, group: tuple[State, ...], sym: Symbol,
) -> tuple[State, ...]:
    """Image of a simultaneous-state set under one symbol, in stable order."""
    out: set[State] = set()
    for q in group:
        for dst, _acc in a.moves(q, sym):
            out.add(dst)
    return tuple(sorted(out, key=_key))


def _rank_transitions(
        a: BuchiAutomaton, state: State, sym: Symbol, max_rank: int,
) -> list[tuple[State, bool]]:
    """One-symbol successors of a lazy rank-complement state.

    States are either ``("set", group)`` — tracking every run of ``a`` — or
    ``("rank", ((q, rank), ...), breakpoint_bits)`` after the guessed switch.
    Returns ``(destination, accepting)`` pairs.
    """
    out: list[tuple[State, bool]] = []
    if state[0] == "set":
        nxt = _subset_successor(a, state[1], sym)
        out.append((("set", nxt), False))
        # switch into the ranking phase with any tight first guess
        caps = ((max_rank, max_rank - 1),) * len(nxt)
        for vec in _tight_vectors(caps):
            out.append((("rank", tuple(zip(nxt, vec)), (0,) * len(nxt)), False))
        return out
    _tag, ranked, obits = state
    rank = dict(ranked)
    breakpoint_set = {q for (q, _), bit in zip(ranked, obits) if bit}
    per: dict[State, tuple[int, int]] = {}
    from_breakpoint: set[State] = set()
    for q in rank:
        for q2, acc in a.moves(q, sym):
            even_cap, odd_cap = per.get(q2, (max_rank, max_rank - 1))
            even_cap = min(even_cap, rank[q])
            odd_cap = min(odd_cap, rank[q] - 1 if acc else rank[q])
            per[q2] = (even_cap, odd_cap)
            if q in breakpoint_set:
                from_breakpoint.add(q2)
    nxt = tuple(sorted(per, key=_key))
    reset = not breakpoint_set
    for vec in _tight_vectors(tuple(per[q2] for q2 in nxt)):
        if reset:
            bits = tuple(int(v % 2 == 0) for v in vec)
        else:
            bits = tuple(
                int(v % 2 == 0 and q2 in from_breakpoint)
                for q2, v in zip(nxt, vec))
        out.append((("rank", tuple(zip(nxt, vec)), bits), reset))
    return out


def complement_rank(a: BuchiAutomaton, *, max_states: int = 50_000) -> BuchiAutomaton:
    """Rank-based complement (the default engine).

    If the automaton rejects a word, its run dag admits a ranking by
    {0,…,2n} in which every edge weakly decreases the rank, every accepting
    edge either decreases it strictly or lands on an even rank, and every
    infinite path eventually stabilises at an odd rank; conversely such a
    ranking rules out accepting runs, because a path that has stabilised at an
    odd rank can take no further accepting edges.  Moreover the level
    rankings of a rejected word are eventually *tight*: the maximum rank is
    odd and every odd rank below it is used.

    The complement therefore runs a subset construction, nondeterministically
    switches to guessing one tight level ranking per step (each successor's
    rank bounded by its predecessors' ranks, strictly or to an even value
    across accepting edges), and checks odd stabilisation with a breakpoint
    set holding the even-ranked states not yet shown to go odd; transitions
    out of an empty breakpoint set are accepting.  Worst case O((0.76·n)^n)
    states; the ``max_states`` cap raises :class:`SizeGuard` beyond that.

    Ranks are bounded by twice the *width* (the largest reachable
    simultaneous-state set) rather than twice the state count: the peeling
    that produces the ranking removes at least one state per level and round,
    so it finishes within `width` rounds.  This keeps the construction small
    on large-but-narrow automata.
    """
    syms = sorted(a.alphabet, key=_key)
    start: State = ("set", tuple(sorted(a.initial, key=_key)))

    # deterministic subset flow, explored first to learn the width
    groups: set[tuple[State, ...]] = {start[1]}
    gqueue: deque[tuple[State, ...]] = deque([start[1]])
    while gqueue:
        g = gqueue.popleft()
        for sym in syms:
            nxt = _subset_successor(a, g, sym)
            if nxt not in groups:
                if len(groups) >= max_states:
                    raise SizeGuard(f"complement exceeds {max_states} states")
                groups.add(nxt)
                gqueue.append(nxt)
    max_rank = 2 * max(len(g) for g in groups)

    seen: set[State] = {start}
    queue: deque[State] = deque([start])
    transitions: set[Transition] = set()
    accepting: set[Transition] = set()

    while queue:
        st = queue.popleft()
        for sym in syms:
            for dst, acc in _rank_transitions(a, st, sym, max_rank):
                t = (st, sym, dst)
                transitions.add(t)
                if acc:
                    accepting.add(t)
                if dst not in seen:
                    if len(seen) >= max_states:
                        raise SizeGuard(
                            f"complement exceeds {max_states} states")
                    seen.add(dst)
                    queue.append(dst)

    raw = BuchiAutomaton(
        frozenset(seen), a.alphabet, frozenset(transitions),
        frozenset([start]), frozenset(accepting))
    return bisim_quotient(trim(raw))


def complement(
    a: BuchiAutomaton,
    *,
    max_states: int = 50_000,
    method: str = "rank",
) -> BuchiAutomaton:
    """An automaton for the complement language over the same alphabet.

    ``method`` selects the engine: ``"rank"`` (default, scales with the
    number of tight rankings) or ``"ramsey"`` (scales with the transition
    matrix semigroup; kept as an independent cross-check).
    """
    if method == "rank":
        return complement_rank(a, max_states=max_states)
    if method == "ramsey":
        return complement_ramsey(a, max_states=max_states)
    raise BuchiError(f"unknown complement method: {method!r}")


def _product_rank_complement(
    a: BuchiAutomaton, b: BuchiAutomaton, *, max_states: int = 50_000,
) -> BuchiAutomaton:
    """Rank-based complement of ``b``, built only where ``a`` can drive it.

    Explores complement states in lockstep with ``a``, expanding a
    ``(complement state, symbol)`` pair only when some product-reachable
    state of ``a`` enables that symbol.  Every transition of the full product
    a ∩ complement(b) touches an expanded pair, so intersecting ``a`` with
    the result is equivalent to intersecting with the full complement — while
    skipping the (often vast) part of the complement reachable only via
    symbol sequences ``a`` never produces.
    """
    start: State = ("set", tuple(sorted(b.initial, key=_key)))

    def a_moves_by_symbol(qa: State) -> dict[Symbol, list[State]]:
        by_sym: dict[Symbol, list[State]] = {}
        for sym, dst, _acc in a._by_source.get(qa, ()):
            by_sym.setdefault(sym, []).append(dst)
        return by_sym

    # pass 1: subset flow restricted to the product, to learn the width
    pairs: set[tuple[State, tuple[State, ...]]] = set()
    pqueue: deque[tuple[State, tuple[State, ...]]] = deque()
    for qa in sorted(a.initial, key=_key):
        pairs.add((qa, start[1]))
        pqueue.append((qa, start[1]))
    width = len(start[1])
    flow: dict[tuple[tuple[State, ...], Symbol], tuple[State, ...]] = {}
    while pqueue:
        qa, g = pqueue.popleft()
        for sym, dsts in a_moves_by_symbol(qa).items():
            key = (g, sym)
            nxt = flow.get(key)
            if nxt is None:
                nxt = flow[key] = _subset_successor(b, g, sym)
            for qa2 in dsts:
                pair = (qa2, nxt)
                if pair not in pairs:
                    if len(pairs) >= max_states:
                        raise SizeGuard(
                            f"complement exceeds {max_states} states")
                    pairs.add(pair)
                    width = max(width, len(nxt))
                    pqueue.append(pair)
    max_rank = 2 * width

    # pass 2: the same product walk, now over full complement states
    comp_states: set[State] = {start}
    comp_trans: set[Transition] = set()
    comp_acc: set[Transition] = set()
    comp_succ: dict[tuple[State, Symbol], list[State]] = {}
    seen: set[tuple[State, State]] = set()
    queue: deque[tuple[State, State]] = deque()
    for qa in sorted(a.initial, key=_key):
        seen.add((qa, start))
        queue.append((qa, start))
    while queue:
        qa, c = queue.popleft()
        for sym, dsts in a_moves_by_symbol(qa).items():
            key = (c, sym)
            succs = comp_succ.get(key)
            if succs is None:
                succs = comp_succ[key] = []
                for c2, acc in _rank_transitions(b, c, sym, max_rank):
                    t = (c, sym, c2)
                    comp_trans.add(t)
                    if acc:
                        comp_acc.add(t)
                    succs.append(c2)
                    if c2 not in comp_states:
                        if len(comp_states) >= max_states:
                            raise SizeGuard(
                                f"complement exceeds {max_states} states")
                        comp_states.add(c2)
            for qa2 in dsts:
                for c2 in succs:
                    pair = (qa2, c2)
                    if pair not in seen:
                        seen.add(pair)
                        queue.append(pair)
    return BuchiAutomaton(
        frozenset(comp_states), a.alphabet, frozenset(comp_trans),
        frozenset([start]), frozenset(comp_acc))


def contains(
    a: BuchiAutomaton,
    b: BuchiAutomaton,
    *,
    max_states: int = 50_000,
    method: str = "rank",
) -> tuple[bool, Optional[LassoWord]]:
    """Language containment L(a) ⊆ L(b), with a counterexample lasso if not.

    Decided as emptiness of a ∩ complement(b); the counterexample is accepted
    by ``a`` and rejected by ``b``.  ``method`` picks the complementation
    engine (see :func:`complement`); the rank engine builds the complement
    lazily, restricted to the part of it that ``a`` can reach.
    """
    if a.alphabet != b.alphabet:
        raise BuchiError("containment requires identical alphabets")
    if method == "rank":
        comp = _product_rank_complement(a, b, max_states=max_states)
    else:
        comp = complement(b, max_states=max_states, method=method)
    gap = intersect(a, comp)
    empty, witness = is_empty(gap)
    return empty, witness


# ---------------------------------------------------------------------------
# state-based acceptance view
# ---------------------------------------------------------------------------


def with_state_acceptance(
    a: BuchiAutomaton,
) -> tuple[BuchiAutomaton, frozenset[State]]:
    """Equivalent automaton whose acceptance is a set of states.

    Each state is paired with a flag recording whether the transition that
    entered it was accepting; a run visits flagged states infinitely often
    exactly when the original run takes accepting transitions infinitely
    often.  The returned automaton re-encodes the flagged states as accepting
    transitions (all transitions into them), so it is directly usable with
    :func:`accepts_lasso`; the flagged state set is returned alongside.
    """
    states = {(q, False) for q in a.states} | {(q, True) for q in a.states}
    transitions: set[Transition] = set()
    accepting: set[Transition] = set()
    for (src, sym, dst) in a.transitions:
        flag = (src, sym, dst) in a.accepting
        for b in (False, True):
            t = ((src, b), sym, (dst, flag))
            transitions.add(t)
            if flag:
                accepting.add(t)
    flagged = frozenset((q, True) for q in a.states)
    auto = BuchiAutomaton(
        frozenset(states), a.alphabet, frozenset(transitions),
        frozenset((q, False) for q in a.initial), frozenset(accepting))
    return auto, flagged


# ---------------------------------------------------------------------------
# exhaustive lasso survey (brute-force membership oracle)
# ---------------------------------------------------------------------------


def enumerate_lassos(
    alphabet: Iterable[Symbol], max_u: int, max_v: int
) -> Iterator[LassoWord]:
    """All lassos with |u| ≤ max_u and 1 ≤ |v| ≤ max_v, in a stable order."""
    syms = sorted(set(alphabet), key=_key)

    def words(limit: int, min_len: int) -> Iterator[tuple[Symbol, ...]]:
        layer: list[tuple[Symbol, ...]] = [()]
        for size in range(limit + 1):
            if size >= min_len:
                yield from layer
            if size == limit:
                break
            layer = [w + (s,) for w in layer for s in syms]

    for u in words(max_u, 0):
        for v in words(max_v, 1):
            yield LassoWord(u, v)


@dataclass(frozen=True)
class LassoSurvey:
    """Membership of every lasso in a rectangle of word lengths.

    ``accepts(u, v)`` answers in O(1) from two precomputed tables: for each
    prefix u, the set of states reachable from the initial states; for each
    period v, the set of states from which some number of whole-v jumps
    reaches a state lying on a v-cycle through an accepting transition.
    """

    alphabet: tuple[Symbol, ...]
    max_u: int
    max_v: int
    _prefix_reach: Mapping[tuple[Symbol, ...], int] = field(repr=False)
    _period_trap: Mapping[tuple[Symbol, ...], int] = field(repr=False)

    def accepts(self, w: LassoWord) -> bool:
        try:
            reach = self._prefix_reach[w.u]
            trap = self._period_trap[w.v]
        except KeyError:
            raise BuchiError("lasso outside the surveyed rectangle") from None
        return bool(reach & trap)

    def prefixes(self) -> Iterator[tuple[Symbol, ...]]:
        return iter(self._prefix_reach)

    def periods(self) -> Iterator[tuple[Symbol, ...]]:
        return iter(self._period_trap)

    def lassos(self) -> Iterator[LassoWord]:
        for u in self._prefix_reach:
            for v in self._period_trap:
                yield LassoWord(u, v)


def _trap_mask(mat: _Mat) -> int:
    """States from which repeated whole-word jumps reach an accepting cycle.

    Treating the matrix as the one-step graph, a state is in the trap when it
    reaches (in ≥ 0 steps) a strongly connected component containing an
    internal edge of value 2.
    """
    n = len(mat.p1)
    nodes = list(range(n))
    succs = {
        i: [j for j in range(n) if (mat.p1[i] >> j) & 1] for i in nodes
    }
    comp = _scc_ids(nodes, succs)
    groups: dict[int, int] = {}
    for i in nodes:
        groups[comp[i]] = groups.get(comp[i], 0) | (1 << i)
    seed = 0
    for mask in groups.values():
        x = mask
        good = False
        while x and not good:
            i = (x & -x).bit_length() - 1
            x &= x - 1
            if mat.p2[i] & mask:
                good = True
        if good:
            seed |= mask
    if not seed:
        return 0
    trap = seed
    changed = True
    while changed:
        changed = False
        for i in nodes:
            bit = 1 << i
            if not (trap & bit) and (mat.p1[i] & trap):
                trap |= bit
                changed = True
    return trap


def survey_lassos(a: BuchiAutomaton, max_u: int, max_v: int) -> LassoSurvey:
    """Exhaustive lasso membership for all |u| ≤ max_u, 1 ≤ |v| ≤ max_v."""
    order, gens = _symbol_matrices(a)
    pos = {q: i for i, q in enumerate(order)}
    syms = sorted(a.alphabet, key=_key)
    initial_mask = 0
    for q in a.initial:
        initial_mask |= 1 << pos[q]

    # prefix table: reachable-state masks along the prefix trie
    prefix_reach: dict[tuple[Symbol, ...], int] = {(): initial_mask}
    layer: list[tuple[tuple[Symbol, ...], int]] = [((), initial_mask)]
    for _ in range(max_u):
        nxt: list[tuple[tuple[Symbol, ...], int]] = []
        for word, mask in layer:
            for sym in syms:
                rows = gens[sym].p1
                out = 0
                x = mask
                while x:
                    j = (x & -x).bit_length() - 1
                    x &= x - 1
                    out |= rows[j]
                key = word + (sym,)
                prefix_reach[key] = out
                nxt.append((key, out))
        layer = nxt

    # period table: matrices along the period trie, memoized per matrix
    mats: dict[_Mat, int] = {}
    mat_list: list[_Mat] = []

    def mat_id(m: _Mat) -> int:
        got = mats.get(m)
        if got is None:
            got = len(mat_list)
            mats[m] = got
            mat_list.append(m)
        return got

    product_memo: dict[tuple[int, Symbol], int] = {}
    trap_memo: dict[int, int] = {}

    def trap_of(mid: int) -> int:
        got = trap_memo.get(mid)
        if got is None:
            got = _trap_mask(mat_list[mid])
            trap_memo[mid] = got
        return got

    period_trap: dict[tuple[Symbol, ...], int] = {}
    mlayer: list[tuple[tuple[Symbol, ...], int]] = [((), mat_id(_mat_identity(len(order))))]
    for _ in range(max_v):
        nxt_layer: list[tuple[tuple[Symbol, ...], int]] = []
        for word, mid in mlayer:
            for sym in syms:
                key = (mid, sym)
                child = product_memo.get(key)
                if child is None:
                    child = mat_id(_mat_mul(mat_list[mid], gens[sym]))
                    product_memo[key] = child
                vword = word + (sym,)
                period_trap[vword] = trap_of(child)
                nxt_layer.append((vword, child))
        mlayer = nxt_layer

    return LassoSurvey(tuple(syms), max_u, max_v, prefix_reach, period_trap)


# ---------------------------------------------------------------------------
# textual dumps
# ---------------------------------------------------------------------------


def _state_ids(a: BuchiAutomaton) -> Mapping[State, int]:
    return {q: i for i, q in enumerate(a._sorted_states)}


def dump_automaton(a: BuchiAutomaton) -> str:
    """Line-based dump: states, initial, transitions; ``*`` marks accepting."""
    ids = _state_ids(a)
    lines = [f"states: {len(ids)}"]
    lines.append("alphabet: " + " ".join(str(s) for s in sorted(a.alphabet, key=_key)))
    lines.append("initial: " + " ".join(str(ids[q]) for q in sorted(a.initial, key=_key)))
    for t in sorted(a.transitions, key=lambda t: (_key(t[0]), _key(t[1]), _key(t[2]))):
        src, sym, dst = t
        star = " *" if t in a.accepting else ""
        lines.append(f"trans: {ids[src]} {sym} {ids[dst]}{star}")
    return "".join(line + "\n" for line in lines)


def to_dot(a: BuchiAutomaton) -> str:
    """Graph description for visualization tools (accepting edges bold)."""
    ids = _state_ids(a)
    lines = ["digraph buchi {", "  rankdir=LR;"]
    for q in a._sorted_states:
        shape = "doublecircle" if q in a.initial else "circle"
        lines.append(f'  n{ids[q]} [label="{ids[q]}", shape={shape}];')
    for t in sorted(a.transitions, key=lambda t: (_key(t[0]), _key(t[1]), _key(t[2]))):
        src, sym, dst = t
        style = ', style=bold, color="#b03030"' if t in a.accepting else ""
        lines.append(f'  n{ids[src]} -> n{ids[dst]} [label="{sym}"{style}];')
    lines.append("}")
    return "".join(line + "\n" for line in lines)
