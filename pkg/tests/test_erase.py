"""Type erasure, the erased evaluator, and lockstep execution."""

import random

import pytest

from remora.check import EMPTY_ENV, elaborate
from remora.erase import (
    EArray,
    EBase,
    EBox,
    EFrame,
    EIApp,
    EILam,
    ELam,
    EVar,
    bisim_run,
    erase_term,
    erase_type,
    erased_alpha_equal,
    erased_evaluate,
    esubst_idx,
    esubst_term,
    is_evalue,
    print_erased,
)
from remora.eval import evaluate, is_value
from remora.gen import GenConfig, generate_programs
from remora.names import (
    free_term_vars,
    subst_idx_in_term,
    subst_term,
    subst_ty_in_term,
)
from remora.parser import parse_term, parse_type
from remora.printer import print_term
from remora.prims import SIGNATURE
from remora.syntax import IdxVar, NatLit, NUM, ShapeLit


def elab(src: str):
    t, _ = elaborate(EMPTY_ENV, SIGNATURE, parse_term(src))
    return t


class TestEraseType:
    def test_array_keeps_shape(self):
        assert erase_type(parse_type("(Arr Num (Shp 3))")) == ShapeLit((NatLit(3),))

    def test_function_becomes_scalar_shape(self):
        assert erase_type(parse_type("(-> ((Arr Num (Shp))) (Arr Num (Shp)))")) == ShapeLit(())

    def test_quantifiers_and_bases_become_scalar_shape(self):
        for src in ["Num", "(Forall ((t Atom)) (Arr t (Shp)))", "(Pi ((n Dim)) (Arr Num (Shp n)))",
                    "(Sigma ((n Dim)) (Arr Num (Shp n)))"]:
            assert erase_type(parse_type(src)) == ShapeLit(())

    def test_type_variable_becomes_index_variable(self):
        assert erase_type(parse_type("t")) == IdxVar("t")

    def test_shape_extraction_from_symbolic_array(self):
        got = erase_type(parse_type("(Arr t s)"))
        assert got == IdxVar("s")


class TestEraseTerm:
    def test_literals_unchanged(self):
        got = erase_term(elab("(array (2) 1 2)"))
        assert got == EArray((2,), (EBase("Num", 1.0), EBase("Num", 2.0)))

    def test_lambda_loses_parameter_types(self):
        got = erase_term(elab("(array () (lam ((x (Arr Num (Shp)))) x))"))
        assert got.atoms[0] == ELam(("x",), EVar("x"))

    def test_tlam_becomes_index_lambda(self):
        got = erase_term(elab("(array () (tlam ((t Atom)) (array () 1)))"))
        assert isinstance(got.atoms[0], EILam)

    def test_tapp_becomes_index_application_with_result_tag(self):
        got = erase_term(elab("(t-app (array () (tlam ((t Atom)) (array () 1))) Num)"))
        assert isinstance(got, EIApp)
        assert got.idx_args == (ShapeLit(()),)
        assert got.out_shape == ShapeLit(())

    def test_application_tagged_with_cell_and_result_shapes(self):
        got = erase_term(
            elab("((array () +) (array (2) 10 20) (array (2 3) 1 2 3 4 5 6))")
        )
        assert got.arg_shapes == (ShapeLit(()), ShapeLit(()))
        assert got.out_shape == ShapeLit((NatLit(2), NatLit(3)))

    def test_box_drops_annotation(self):
        got = erase_term(
            elab("(array () (box 2 (array (2) 1 2) (Sigma ((n Dim)) (Arr Num (Shp n)))))")
        )
        assert got.atoms[0] == EBox((NatLit(2),), EArray((2,), (EBase("Num", 1.0), EBase("Num", 2.0))))

    def test_erasure_is_a_function(self):
        t = elab("((array () +) (array () 1) (array () 2))")
        assert erase_term(t) == erase_term(t)


class TestSubstitutionCommutes:
    def _programs(self, n, seed):
        return generate_programs(n, seed=seed)

    def test_term_substitution(self):
        rng = random.Random(61)
        payloads = [elab("(array () 7)"), elab("(array (2) 1 2)")]
        for prog in self._programs(60, 62):
            t, _ = elaborate(EMPTY_ENV, SIGNATURE, prog)
            fvs = sorted(free_term_vars(t)) or ["zz"]
            x = rng.choice(fvs)
            v = rng.choice(payloads)
            lhs = erase_term(subst_term(t, {x: v}))
            rhs = esubst_term(erase_term(t), {x: erase_term(v)})
            assert erased_alpha_equal(lhs, rhs), print_term(prog)

    def test_index_substitution(self):
        rng = random.Random(63)
        for prog in self._programs(60, 64):
            t, _ = elaborate(EMPTY_ENV, SIGNATURE, prog)
            # substitute for a fresh variable too (no-op) and for any free one
            for x, payload in [("n", NatLit(rng.randint(0, 3)))]:
                lhs = erase_term(subst_idx_in_term(t, {x: payload}))
                rhs = esubst_idx(erase_term(t), {x: payload})
                assert erased_alpha_equal(lhs, rhs)

    def test_index_substitution_in_open_terms(self):
        open_srcs = [
            "(array () (lam ((x (Arr Num (Shp n)))) x))",
            "(frame () (array () (lam ((x (Arr Num (++ (Shp n) (Shp 2))))) x)))",
        ]
        from remora.check import Env
        from remora.syntax import Sort

        env = EMPTY_ENV.with_sorts([("n", Sort.DIM)])
        for src in open_srcs:
            t, _ = elaborate(env, SIGNATURE, parse_term(src))
            for k in (0, 2):
                lhs = erase_term(subst_idx_in_term(t, {"n": NatLit(k)}))
                rhs = esubst_idx(erase_term(t), {"n": NatLit(k)})
                assert erased_alpha_equal(lhs, rhs)

    def test_type_substitution(self):
        # type variables erase to index variables, type payloads to shapes
        from remora.check import Env
        from remora.syntax import Kind

        env = EMPTY_ENV.with_kinds([("t", Kind.ATOM)])
        srcs = [
            "(array () (lam ((x (Arr t (Shp)))) x))",
            "(frame () (array () (lam ((x (Arr t (Shp 2)))) x)))",
        ]
        for src in srcs:
            t, _ = elaborate(env, SIGNATURE, parse_term(src))
            for payload in (NUM, parse_type("Bool")):
                lhs = erase_term(subst_ty_in_term(t, {"t": payload}))
                rhs = esubst_idx(erase_term(t), {"t": erase_type(payload)})
                assert erased_alpha_equal(lhs, rhs)


class TestValuesEraseToValues:
    def test_on_generated_final_values(self):
        for prog in generate_programs(50, seed=65):
            t, _ = elaborate(EMPTY_ENV, SIGNATURE, prog)
            r = evaluate(t, fuel=4000)
            if r.outcome != "value":
                continue
            assert is_value(r.term)
            assert is_evalue(erase_term(r.term))

    def test_nonvalues_erase_to_nonvalues(self):
        for src in [
            "((array () +) (array () 1) (array () 2))",
            "(frame (1) ((array () +) (array () 1) (array () 2)))",
        ]:
            t = elab(src)
            assert not is_value(t)
            assert not is_evalue(erase_term(t))


class TestErasedEvaluator:
    def test_column_program(self):
        t = elab("((t-app (i-app (array () head) 1 (Shp)) Num) (array (3 2) 0 1 2 3 4 5))")
        r = erased_evaluate(erase_term(t))
        assert r.outcome == "value"
        assert print_erased(r.term) == "(array (3) 0 2 4)"

    def test_empty_frame_collapse_reads_tag(self):
        t = elab("(empty-frame (Arr Num (Shp 3)) (0))")
        r = erased_evaluate(erase_term(t))
        assert r.outcome == "value"
        assert r.term == EArray((0, 3), ())

    def test_division_by_zero_sticks(self):
        t = elab("((array () /) (array () 1) (array () 0))")
        r = erased_evaluate(erase_term(t))
        assert r.outcome == "stuck" and r.stuck.op == "/"

    def test_step_counts_match_typed_machine(self):
        t = elab("((t-app (i-app (array () head) 1 (Shp)) Num) (array (3 2) 0 1 2 3 4 5))")
        typed = evaluate(t)
        erased = erased_evaluate(erase_term(t))
        assert typed.steps == erased.steps == 10


class TestBisim:
    def test_column_program_lockstep(self):
        t = elab("((t-app (i-app (array () head) 1 (Shp)) Num) (array (3 2) 0 1 2 3 4 5))")
        rep = bisim_run(t, fuel=1000, trace=True)
        assert rep.outcome == "both-value"
        # tbeta on the typed side shows up as ibeta on the erased side
        rules = dict(rep.trace)
        assert rules.get("tbeta") == "ibeta"

    def test_stuck_program(self):
        t = elab("((array () /) (array () 1) (array () 0))")
        rep = bisim_run(t, fuel=100)
        assert rep.outcome == "both-stuck"

    def test_value_input(self):
        t = elab("(array (2) 1 2)")
        rep = bisim_run(t, fuel=100)
        assert rep.outcome == "both-value" and rep.steps == 0

    def test_generated_programs_never_mismatch(self):
        for prog in generate_programs(80, seed=71, config=GenConfig(stuck_rate=0.08)):
            t, _ = elaborate(EMPTY_ENV, SIGNATURE, prog)
            rep = bisim_run(t, fuel=10_000)
            assert rep.outcome in ("both-value", "both-stuck"), print_term(prog)


def _context_positions(t, under_binder=False):
    """Expression positions reachable without crossing a binder (the shape of
    evaluation contexts), as (replace-fn, subexpr) pairs."""
    from dataclasses import replace as dc_replace

    from remora.syntax import App, ArrayLit, Box, Frame, IApp, TApp, Unbox

    out = []
    if isinstance(t, ArrayLit):
        for i, a in enumerate(t.atoms):
            if isinstance(a, Box):
                for plug, sub in _context_positions(a.payload):
                    out.append(
                        (
                            lambda h, i=i, a=a, plug=plug: dc_replace(
                                t,
                                atoms=t.atoms[:i]
                                + (dc_replace(a, payload=plug(h)),)
                                + t.atoms[i + 1 :],
                            ),
                            sub,
                        )
                    )
    elif isinstance(t, Frame):
        for i, c in enumerate(t.cells):
            out.append(
                (
                    lambda h, i=i: dc_replace(
                        t, cells=t.cells[:i] + (h,) + t.cells[i + 1 :]
                    ),
                    c,
                )
            )
            for plug, sub in _context_positions(c):
                out.append((lambda h, i=i, plug=plug: dc_replace(t, cells=t.cells[:i] + (plug(h),) + t.cells[i + 1 :]), sub))
    elif isinstance(t, App):
        out.append((lambda h: dc_replace(t, fn=h), t.fn))
        for plug, sub in _context_positions(t.fn):
            out.append((lambda h, plug=plug: dc_replace(t, fn=plug(h)), sub))
        for i, a in enumerate(t.args):
            out.append((lambda h, i=i: dc_replace(t, args=t.args[:i] + (h,) + t.args[i + 1 :]), a))
            for plug, sub in _context_positions(a):
                out.append((lambda h, i=i, plug=plug: dc_replace(t, args=t.args[:i] + (plug(h),) + t.args[i + 1 :]), sub))
    elif isinstance(t, (TApp, IApp)):
        out.append((lambda h: dc_replace(t, fn=h), t.fn))
        for plug, sub in _context_positions(t.fn):
            out.append((lambda h, plug=plug: dc_replace(t, fn=plug(h)), sub))
    elif isinstance(t, Unbox):
        out.append((lambda h: dc_replace(t, box=h), t.box))
        for plug, sub in _context_positions(t.box):
            out.append((lambda h, plug=plug: dc_replace(t, box=plug(h)), sub))
    return out


class TestErasureInContext:
    def test_erasure_commutes_with_context_filling(self):
        # erase(E[e]) equals erase(E) filled with erase(e); holes are plugged
        # by substituting for a variable that stands in for the hole, which
        # evaluation-context positions make capture-free.
        from remora.syntax import Var

        rng = random.Random(81)
        checked = 0
        for prog in generate_programs(60, seed=82):
            t, _ = elaborate(EMPTY_ENV, SIGNATURE, prog)
            positions = _context_positions(t)
            if not positions:
                continue
            plug, sub = rng.choice(positions)
            # the hole keeps the focused expression's annotation, as context
            # erasure reads residual tags off the context itself
            ctx = plug(Var("#hole", annot=sub.annot))
            lhs = erase_term(t)
            rhs = esubst_term(erase_term(ctx), {"#hole": erase_term(sub)})
            assert erased_alpha_equal(lhs, rhs), print_term(prog)
            checked += 1
        assert checked >= 30


class TestErasedAlpha:
    def test_binder_renaming(self):
        a = ELam(("x",), EVar("x"))
        b = ELam(("y",), EVar("y"))
        assert erased_alpha_equal(a, b)

    def test_tag_spellings_identified_up_to_canonical_form(self):
        a = EFrame(ShapeLit((NatLit(2),)), (EArray((), (EBase("Num", 1.0),)), EArray((), (EBase("Num", 2.0),))))
        from remora.syntax import IdxAppend

        b = EFrame(
            IdxAppend((ShapeLit(()), ShapeLit((NatLit(2),)))),
            (EArray((), (EBase("Num", 1.0),)), EArray((), (EBase("Num", 2.0),))),
        )
        assert erased_alpha_equal(a, b)

    def test_distinguishes_different_tags(self):
        a = EFrame(ShapeLit((NatLit(2),)), ())
        b = EFrame(ShapeLit((NatLit(3),)), ())
        assert not erased_alpha_equal(a, b)
