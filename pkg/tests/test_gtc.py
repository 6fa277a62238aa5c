"""Path/trace automata and the decision of the global trace condition."""

from pathlib import Path

import pytest

from hflcyc.buchi import LassoWord, accepts_lasso, is_empty, trim
from hflcyc.gtc import (
    STAR,
    Accepted,
    GtcError,
    GtcUnknown,
    MarkedFormula,
    Rejected,
    Star,
    StateExplosionGuard,
    Tracked,
    build_gtc_automaton,
    build_path_automaton,
    check_cyclic_proof,
    check_gtc,
    counterexample_report,
    marked_formula,
    render_lasso,
)
from hflcyc.kernel import (
    RIGHT,
    Axiom,
    DerivTree,
    ExR,
    OccurrenceRef,
    PreProof,
    validate_preproof,
)
from hflcyc.proofio import load_preproof
from hflcyc.syntax import parse_expr, sigma_paths
from hflcyc.trace import (
    Lasso,
    enumerate_simple_lassos,
    gtc_bruteforce,
    lasso_good,
)

from test_kernel import ps
from test_trace import (
    branching_loop_proof,
    figure_eight_proof,
    leaf,
    left_mu_loop_proof,
    node,
    self_loop_proof,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

GOLDEN_CYCLE = ("n0", "n1", "n2", "n3", "n4")


@pytest.fixture(scope="module")
def golden() -> PreProof:
    pp = load_preproof(CORPUS / "higher_order_loop.hflp")
    assert validate_preproof(pp) == []
    return pp


def sigma_free_loop_proof() -> PreProof:
    """A structurally valid cycle that never unfolds a fixed point."""
    s = "|- 0 = 0, S 0 = S 0"
    swapped = "|- S 0 = S 0, 0 = 0"
    tree = node("r", s, ExR(0), node("m", swapped, ExR(0), leaf("b", s)))
    return PreProof(tree, {"b": "r"})


def closed_proof() -> PreProof:
    """No open leaves, hence no infinite paths at all."""
    tree = DerivTree("a0", ps("nu t:O. t |- nu t:O. t"), Axiom(), ())
    return PreProof(tree, {})


def all_fixtures():
    return [
        ("golden", load_preproof(CORPUS / "higher_order_loop.hflp")),
        ("nu_loop", self_loop_proof("nu")),
        ("mu_loop", self_loop_proof("mu")),
        ("left_mu", left_mu_loop_proof()),
        ("branching", branching_loop_proof()),
        ("sigma_free", sigma_free_loop_proof()),
        ("figure_eight", figure_eight_proof()),
    ]


FIXTURES = all_fixtures()
FIXTURE_IDS = [name for name, _ in FIXTURES]


# ---------------------------------------------------------------------------
# states and marked formulas
# ---------------------------------------------------------------------------


class TestStates:
    def test_star_is_a_singleton_value(self):
        assert Star() == STAR
        assert repr(STAR) == "Star"

    def test_tracked_requires_a_mark(self):
        with pytest.raises(GtcError, match="at least one mark"):
            Tracked(OccurrenceRef("n0", RIGHT, 0), frozenset())

    def test_tracked_repr_lists_marks(self):
        t = Tracked(OccurrenceRef("n0", RIGHT, 0), frozenset({(0,), ()}))
        assert repr(t) == "Tracked(n0,right,0,[e;0])"

    def test_marks_must_be_operator_positions(self):
        f = parse_expr("mu t:O. t")
        assert MarkedFormula(f, frozenset({()})).strip() == f
        with pytest.raises(GtcError, match="not operator positions"):
            MarkedFormula(f, frozenset({(1, 2)}))

    def test_describe_mentions_every_mark(self):
        f = parse_expr("mu t:O. t")
        d = MarkedFormula(f, frozenset({()})).describe()
        assert "mu t:O. t" in d and "<root>" in d

    def test_marked_formula_of_a_state(self):
        pp = self_loop_proof("nu")
        mf = marked_formula(pp, Tracked(OccurrenceRef("n0", RIGHT, 0),
                                        frozenset({()})))
        assert mf.strip() == parse_expr("nu t:O. t")

    def test_marked_formula_rejects_bad_index(self):
        pp = self_loop_proof("nu")
        with pytest.raises(GtcError, match="no occurrence"):
            marked_formula(pp, Tracked(OccurrenceRef("n0", RIGHT, 3),
                                       frozenset({()})))


# ---------------------------------------------------------------------------
# the path automaton
# ---------------------------------------------------------------------------


class TestPathAutomaton:
    def test_golden_shape(self, golden):
        a = build_path_automaton(golden)
        assert len(a.states) == 5
        assert a.alphabet == frozenset(GOLDEN_CYCLE)
        assert a.initial == frozenset({"n0"})
        assert a.accepting == a.transitions

    def test_golden_accepts_exactly_the_loop(self, golden):
        a = build_path_automaton(golden)
        assert accepts_lasso(a, LassoWord((), GOLDEN_CYCLE))
        assert not accepts_lasso(a, LassoWord((), ("n0", "n0")))
        assert not accepts_lasso(a, LassoWord((), ("n1", "n0", "n2", "n3", "n4")))

    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_every_simple_lasso_is_in_the_language(self, name, pp):
        a = build_path_automaton(pp)
        lassos = list(enumerate_simple_lassos(pp))
        assert lassos
        for lasso in lassos:
            assert accepts_lasso(a, LassoWord(lasso.prefix, lasso.cycle))

    def test_closed_proof_has_empty_path_language(self):
        a = build_path_automaton(closed_proof())
        empty, witness = is_empty(a)
        assert empty and witness is None

    def test_figure_eight_accepts_the_composite_alternation(self):
        pp = figure_eight_proof()
        a = build_path_automaton(pp)
        loop_a = ("r", "u1", "u2", "u3", "u4", "u5", "u6", "u7")
        loop_b = ("r", "v1", "v2", "v3", "v4", "v5", "v6", "v7")
        assert accepts_lasso(a, LassoWord((), loop_a))
        assert accepts_lasso(a, LassoWord((), loop_b))
        assert accepts_lasso(a, LassoWord((), loop_a + loop_b))


# ---------------------------------------------------------------------------
# the trace automaton
# ---------------------------------------------------------------------------


def reachable_state_bound(pp: PreProof) -> int:
    total = 1
    for nid in pp.nodes:
        seq = pp.node(nid).seq
        for f in (*seq.left, *seq.right):
            total += 2 ** len(sigma_paths(f))
    return total


class TestTraceAutomaton:
    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_state_count_within_bound(self, name, pp):
        a = build_gtc_automaton(pp)
        assert len(a.states) <= reachable_state_bound(pp)

    def test_golden_size_is_stable(self, golden):
        a = build_gtc_automaton(golden)
        assert len(a.states) == 13
        assert len(a.accepting) == 1

    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_star_ignores_every_symbol(self, name, pp):
        a = build_gtc_automaton(pp)
        assert a.initial == frozenset({STAR})
        for n in pp.nodes:
            assert (STAR, n, STAR) in a.transitions
            assert (STAR, n, STAR) not in a.accepting

    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_entries_carry_exactly_one_mark(self, name, pp):
        a = build_gtc_automaton(pp)
        for (src, _sym, dst) in a.transitions:
            if src == STAR and isinstance(dst, Tracked):
                assert len(dst.marks) == 1

    def test_accepting_transitions_by_fixture(self):
        # only left-mu / right-nu track-heads accept: the right-mu loop has
        # none, its nu twin and the left-mu loop exactly one each
        assert len(build_gtc_automaton(self_loop_proof("mu")).accepting) == 0
        assert len(build_gtc_automaton(self_loop_proof("nu")).accepting) == 1
        assert len(build_gtc_automaton(left_mu_loop_proof()).accepting) == 1

    def test_sigma_free_proof_has_no_tracked_states(self):
        a = build_gtc_automaton(sigma_free_loop_proof())
        assert a.states == frozenset({STAR})
        assert not a.accepting

    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_tracked_states_are_well_formed(self, name, pp):
        for q in build_gtc_automaton(pp).states:
            if isinstance(q, Tracked):
                marked_formula(pp, q)  # validates index and mark positions

    def test_explosion_guard(self, golden):
        with pytest.raises(StateExplosionGuard):
            build_gtc_automaton(golden, max_states=4)


# ---------------------------------------------------------------------------
# the bridge to the brute-force oracle
# ---------------------------------------------------------------------------


class TestBridge:
    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_simple_lassos_agree_with_classification(self, name, pp):
        a = build_gtc_automaton(pp)
        for lasso in enumerate_simple_lassos(pp):
            got = accepts_lasso(a, LassoWord(lasso.prefix, lasso.cycle))
            assert got == lasso_good(pp, lasso), lasso

    @pytest.mark.parametrize("name,pp", FIXTURES, ids=FIXTURE_IDS)
    def test_verdict_agrees_with_brute_force(self, name, pp):
        ok, _lasso = check_gtc(pp)
        assert ok == gtc_bruteforce(pp)


# ---------------------------------------------------------------------------
# the decision procedure
# ---------------------------------------------------------------------------


class TestCheckGtc:
    def test_good_proofs(self, golden):
        for pp in (golden, self_loop_proof("nu"), left_mu_loop_proof(),
                   branching_loop_proof()):
            assert check_gtc(pp) == (True, None)

    def test_right_mu_loop_rejected_with_tight_witness(self):
        ok, lasso = check_gtc(self_loop_proof("mu"))
        assert not ok
        assert lasso == Lasso((), ("n0", "n1"))

    def test_sigma_free_loop_rejected(self):
        pp = sigma_free_loop_proof()
        ok, lasso = check_gtc(pp)
        assert not ok
        assert set(lasso.cycle) == {"r", "m", "b"}
        assert not lasso_good(pp, lasso)

    def test_figure_eight_witness_alternates_good_cycles(self):
        pp = figure_eight_proof()
        ok, lasso = check_gtc(pp)
        assert not ok
        # the witness must weave both loops: each on its own is good
        assert any(n.startswith("u") for n in lasso.cycle)
        assert any(n.startswith("v") for n in lasso.cycle)
        assert not lasso_good(pp, lasso)
        for simple in enumerate_simple_lassos(pp):
            assert lasso_good(pp, simple)

    @pytest.mark.parametrize(
        "pp", [self_loop_proof("mu"), sigma_free_loop_proof(),
               figure_eight_proof()],
        ids=["mu_loop", "sigma_free", "figure_eight"])
    def test_witness_prefix_carries_no_redundant_lap(self, pp):
        _ok, lasso = check_gtc(pp)
        k = len(lasso.cycle)
        assert not (len(lasso.prefix) >= k and lasso.prefix[-k:] == lasso.cycle)

    def test_unknown_on_tiny_state_cap(self, golden):
        with pytest.raises(GtcUnknown, match="state cap"):
            check_gtc(golden, max_states=4)


class TestCheckCyclicProof:
    def test_golden_accepted(self, golden):
        assert check_cyclic_proof(golden) == Accepted()

    def test_missing_back_edge_is_structural(self, golden):
        broken = PreProof(golden.tree, {})
        res = check_cyclic_proof(broken)
        assert isinstance(res, Rejected)
        assert res.kind == "structural"
        assert res.issues and res.lasso is None

    def test_bad_trace_is_reported_with_lasso(self):
        res = check_cyclic_proof(self_loop_proof("mu"))
        assert isinstance(res, Rejected)
        assert res.kind == "trace"
        assert res.issues == ()
        assert res.lasso == Lasso((), ("n0", "n1"))
        assert "(n0 n1)^ω" in res.detail

    def test_structural_check_runs_first(self):
        # an invalid proof with a bad trace still reports the structural issue
        pp = self_loop_proof("mu")
        broken = PreProof(pp.tree, {})
        res = check_cyclic_proof(broken)
        assert isinstance(res, Rejected) and res.kind == "structural"


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


class TestReporting:
    def test_render_lasso(self):
        assert render_lasso(Lasso((), ("a", "b"))) == "(a b)^ω"
        assert render_lasso(Lasso(("r",), ("a", "b"))) == "r (a b)^ω"

    def test_counterexample_report_replays_the_thread(self):
        pp = self_loop_proof("mu")
        _ok, lasso = check_gtc(pp)
        report = counterexample_report(pp, lasso)
        lines = report.splitlines()
        assert lines[0] == "counterexample path: (n0 n1)^ω"
        assert "thread from n0 right:0:" in lines
        assert any("mu{0} t:O. t" in ln for ln in lines)

    def test_counterexample_report_marks_dead_threads(self):
        pp = sigma_free_loop_proof()
        _ok, lasso = check_gtc(pp)
        report = counterexample_report(pp, lasso)
        assert "counterexample path:" in report
