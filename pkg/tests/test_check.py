"""Static semantics: sorting, kinding, equivalence, elaboration goldens from
real programs, metatheory properties at test scale, and the ill-typed
program suite with its designated error kinds."""

import random

import pytest

from remora.check import (
    EMPTY_ENV,
    ErrorKind,
    TypeCheckError,
    check_env,
    elaborate,
    kind_of,
    sort_of,
    types_equal,
)
from remora.gen import generate_programs
from remora.names import freshen, freshen_type, subst_idx_in_term, subst_idx_in_type
from remora.parser import parse_index, parse_term, parse_type
from remora.printer import print_type
from remora.prims import SIGNATURE
from remora.syntax import Kind, NatLit, NUM, Sort

from .util import random_type


def sort_src(env, text):
    return sort_of(env, parse_index(text))


def kind_src(env, text):
    return kind_of(env, parse_type(text))


class TestSorting:
    def test_shape_literal(self):
        assert sort_src(EMPTY_ENV, "(Shp 3 4)") is Sort.SHAPE

    def test_plus_over_bound_dim(self):
        env = EMPTY_ENV.with_sorts([("n", Sort.DIM)])
        assert sort_src(env, "(+ 1 n)") is Sort.DIM

    def test_plus_over_shape_is_sort_error(self):
        env = EMPTY_ENV.with_sorts([("s", Sort.SHAPE)])
        with pytest.raises(TypeCheckError) as e:
            sort_src(env, "(+ s 1)")
        assert e.value.kind is ErrorKind.SORT_MISMATCH

    def test_unbound_variable(self):
        with pytest.raises(TypeCheckError) as e:
            sort_src(EMPTY_ENV, "(+ 1 n)")
        assert e.value.kind is ErrorKind.UNBOUND_VAR

    def test_uniqueness_of_sorting(self):
        env = EMPTY_ENV.with_sorts([("n", Sort.DIM), ("s", Sort.SHAPE)])
        for text in ["3", "n", "(+ n 2)", "(Shp n)", "(++ s (Shp 1))", "s"]:
            assert sort_of(env, parse_index(text)) is sort_of(env, parse_index(text))


class TestKinding:
    def test_array_over_base(self):
        assert kind_src(EMPTY_ENV, "(Arr Num (Shp 3))") is Kind.ARRAY

    def test_vector_mean_type_is_atom(self):
        src = "(Pi ((n Dim)) (Arr (-> ((Arr Num (Shp n))) (Arr Num (Shp))) (Shp)))"
        assert kind_src(EMPTY_ENV, src) is Kind.ATOM

    def test_nested_array_elem_rejected(self):
        with pytest.raises(TypeCheckError) as e:
            kind_src(EMPTY_ENV, "(Arr (Arr Num (Shp)) (Shp))")
        assert e.value.kind is ErrorKind.KIND_MISMATCH

    def test_pi_body_must_be_array(self):
        with pytest.raises(TypeCheckError) as e:
            kind_src(EMPTY_ENV, "(Pi ((n Dim)) (-> ((Arr Num (Shp n))) (Arr Num (Shp))))")
        assert e.value.kind is ErrorKind.KIND_MISMATCH

    def test_signature_entries_kind_at_atom(self):
        for name, ty in SIGNATURE.items():
            assert kind_of(EMPTY_ENV, ty) is Kind.ATOM, name


class TestTypesEqual:
    def test_index_identity(self):
        assert types_equal(
            parse_type("(Arr Num (Shp 6))"), parse_type("(Arr Num (++ (Shp) (Shp 6)))")
        )

    def test_appended_vs_flat_shape(self):
        assert types_equal(
            parse_type("(Arr Num (++ (Shp 3) (Shp 4)))"), parse_type("(Arr Num (Shp 3 4))")
        )

    def test_alpha_equivalent_pi(self):
        assert types_equal(
            parse_type("(Pi ((m Dim)) (Arr Num (Shp m)))"),
            parse_type("(Pi ((k Dim)) (Arr Num (Shp k)))"),
        )

    def test_distinguishes_different_shapes(self):
        assert not types_equal(parse_type("(Arr Num (Shp 2))"), parse_type("(Arr Num (Shp 3))"))

    def test_equivalence_relation_on_random_types(self):
        rng = random.Random(3)
        types = [random_type(rng, depth=4) for _ in range(40)]
        types += [freshen_type(t, salt="v") for t in types[:10]]
        for a in types:
            assert types_equal(a, a)
        for a in types:
            for b in types:
                assert types_equal(a, b) == types_equal(b, a)
        eq = [(a, b) for a in types for b in types if types_equal(a, b)]
        for a, b in eq:
            for c in types:
                if types_equal(b, c):
                    assert types_equal(a, c)

    def test_equivalence_respects_kinds(self):
        rng = random.Random(4)
        env = EMPTY_ENV
        for _ in range(150):
            t = random_type(rng, depth=3)
            t2 = freshen_type(t, salt="w")
            assert types_equal(t, t2)
            assert kind_of(env, t) is kind_of(env, t2)


class TestCheckEnv:
    def test_ok(self):
        check_env(EMPTY_ENV.with_types([("x", parse_type("(Arr Num (Shp))"))]))

    def test_atom_binding_rejected(self):
        with pytest.raises(TypeCheckError) as e:
            check_env(EMPTY_ENV.with_types([("x", NUM)]))
        assert e.value.kind is ErrorKind.KIND_MISMATCH

    def test_free_index_var_rejected(self):
        with pytest.raises(TypeCheckError) as e:
            check_env(EMPTY_ENV.with_types([("x", parse_type("(Arr Num (Shp n))"))]))
        assert e.value.kind is ErrorKind.UNBOUND_VAR


MTX = "(array (3 2) 0 1 2 3 4 5)"


def type_of_src(src: str) -> str:
    _, ty = elaborate(EMPTY_ENV, SIGNATURE, parse_term(src))
    return print_type(ty, canonical=True)


class TestElaborate:
    def test_array_literal(self):
        assert type_of_src("(array (3 2) 0 1 2 3 4 5)") == "(Arr Num (Shp 3 2))"

    def test_head_row(self):
        src = f"((t-app (i-app (array () head) 2 (Shp 2)) Num) {MTX})"
        assert type_of_src(src) == "(Arr Num (Shp 2))"

    def test_head_column_lifts(self):
        src = f"((t-app (i-app (array () head) 1 (Shp)) Num) {MTX})"
        _, ty = elaborate(EMPTY_ENV, SIGNATURE, parse_term(src))
        # the raw type appends an empty cell shape onto the principal frame
        assert types_equal(ty, parse_type("(Arr Num (++ (Shp 3) (Shp)))"))
        assert print_type(ty, canonical=True) == "(Arr Num (Shp 3))"

    def test_every_node_annotated(self):
        src = f"((t-app (i-app (array () head) 1 (Shp)) Num) {MTX})"
        t, _ = elaborate(EMPTY_ENV, SIGNATURE, parse_term(src))

        def walk(node):
            assert node.annot is not None, node
            for name in ("fn", "box", "body", "payload"):
                child = getattr(node, name, None)
                if child is not None and hasattr(child, "annot"):
                    walk(child)
            for name in ("args", "atoms", "cells"):
                for child in getattr(node, name, ()) or ():
                    walk(child)

        walk(t)

    def test_empty_forms_rewritten(self):
        from remora.syntax import ArrayLit, Frame

        t, ty = elaborate(EMPTY_ENV, SIGNATURE, parse_term("(empty-array Num (0 3))"))
        assert isinstance(t, ArrayLit) and t.atoms == () and t.annot is not None
        assert print_type(ty, canonical=True) == "(Arr Num (Shp 0 3))"
        t, ty = elaborate(
            EMPTY_ENV, SIGNATURE, parse_term("(empty-frame (Arr Num (Shp 3)) (0))")
        )
        assert isinstance(t, Frame) and t.cells == ()
        assert print_type(ty, canonical=True) == "(Arr Num (Shp 0 3))"

    def test_open_term_under_env(self):
        env = EMPTY_ENV.with_sorts([("n", Sort.DIM)]).with_types(
            [("v", parse_type("(Arr Num (Shp n))"))]
        )
        _, ty = elaborate(env, SIGNATURE, parse_term("v"))
        assert types_equal(ty, parse_type("(Arr Num (Shp n))"))


ILL_TYPED = [
    # (source, expected kind)
    (f"((array () +) (array (2) 1 2) (array (6) 1 2 3 4 5 6))", ErrorKind.FRAME_INCOMPATIBLE),
    # a 2-frame function array against a 6-framed argument
    (
        "((array (2) (lam ((x (Arr Num (Shp)))) x) (lam ((x (Arr Num (Shp)))) x))"
        " (array (6) 1 2 3 4 5 6))",
        ErrorKind.FRAME_INCOMPATIBLE,
    ),
    ("(array (2 2) 1 2 3)", ErrorKind.LENGTH_MISMATCH),
    ("(frame (2) (array () 1))", ErrorKind.LENGTH_MISMATCH),
    ("(empty-array Num (2 3))", ErrorKind.LENGTH_MISMATCH),
    # unbox body type leaks the hidden length
    (
        "(unbox (len v ((array () iota/v) (array () 3))) v)",
        ErrorKind.ESCAPING_INDEX_VAR,
    ),
    # box annotation disagrees with the payload shape
    (
        "(array () (box 2 (array (3) 1 2 3) (Sigma ((n Dim)) (Arr Num (Shp n)))))",
        ErrorKind.ANNOTATION_MISMATCH,
    ),
    # lam parameter type has an Atom where an Array is required
    ("(array () (lam ((x Num)) x))", ErrorKind.KIND_MISMATCH),
    # kind error inside a parameter type: Arr element must be an Atom
    ("(array () (lam ((x (Arr (Arr Num (Shp)) (Shp)))) x))", ErrorKind.KIND_MISMATCH),
    # i-app argument with the wrong sort
    (f"((t-app (i-app (array () head) (Shp 2) (Shp)) Num) {MTX})", ErrorKind.SORT_MISMATCH),
    ("y", ErrorKind.UNBOUND_VAR),
    ("(array () unknown-op)", ErrorKind.UNBOUND_VAR),
    # applying an array of numbers
    ("((array () 5) (array () 6))", ErrorKind.NOT_A_FUNCTION),
    # t-app of something with no universal type
    ("(t-app (array () 5) Num)", ErrorKind.NOT_A_FUNCTION),
    # unboxing a number array
    ("(unbox (n v (array () 5)) v)", ErrorKind.NOT_A_BOX),
    # argument atom type mismatch: + over booleans
    ("((array () +) (array () #t) (array () #f))", ErrorKind.CELL_MISMATCH),
    # argument shape does not end with the declared cell shape
    (
        f"((t-app (i-app (array () head) 2 (Shp 2)) Num) (array (4) 1 2 3 4))",
        ErrorKind.CELL_MISMATCH,
    ),
    # t-app with a type argument of the wrong kind
    (
        "(t-app (array () (tlam ((t Atom)) (array () 5))) (Arr Num (Shp)))",
        ErrorKind.KIND_MISMATCH,
    ),
    # mixed atom types in one literal
    ("(array (2) 1 #t)", ErrorKind.CELL_MISMATCH),
]


class TestNegativeSuite:
    @pytest.mark.parametrize("src,kind", ILL_TYPED, ids=[k.value + "-" + str(i) for i, (_, k) in enumerate(ILL_TYPED)])
    def test_designated_error_kind(self, src, kind):
        with pytest.raises(TypeCheckError) as e:
            elaborate(EMPTY_ENV, SIGNATURE, parse_term(src))
        assert e.value.kind is kind

    def test_errors_carry_locations(self):
        try:
            elaborate(EMPTY_ENV, SIGNATURE, parse_term("(array (2 2)\n 1 2 3)"))
        except TypeCheckError as e:
            assert e.loc is not None and e.loc.line == 1
        else:
            pytest.fail("expected a type error")


class TestMetatheoryProperties:
    def test_uniqueness_of_typing(self):
        for prog in generate_programs(80, seed=21):
            _, ty1 = elaborate(EMPTY_ENV, SIGNATURE, freshen(prog))
            _, ty2 = elaborate(EMPTY_ENV, SIGNATURE, freshen(prog, salt="b"))
            assert types_equal(ty1, ty2)

    def test_well_kinded_ascription(self):
        from remora.syntax import Box, ILam, Lam, TLam, Unbox, is_atom

        def walk(node, env):
            if node.annot is not None:
                want = Kind.ATOM if is_atom(node) else Kind.ARRAY
                assert kind_of(env, node.annot) is want
            if isinstance(node, Lam):
                walk(node.body, env)
            elif isinstance(node, TLam):
                walk(node.body, env.with_kinds(node.binders))
            elif isinstance(node, ILam):
                walk(node.body, env.with_sorts(node.binders))
            elif isinstance(node, Unbox):
                walk(node.box, env)
                sigma = node.box.annot.elem
                inner = env.with_sorts(
                    [(x, srt) for x, (_, srt) in zip(node.idx_vars, sigma.binders)]
                )
                walk(node.body, inner)
            elif isinstance(node, Box):
                walk(node.payload, env)
            else:
                for name in ("fn", "args", "atoms", "cells"):
                    children = getattr(node, name, None)
                    if children is None:
                        continue
                    if not isinstance(children, tuple):
                        children = (children,)
                    for child in children:
                        walk(child, env)

        for prog in generate_programs(40, seed=22):
            t, ty = elaborate(EMPTY_ENV, SIGNATURE, prog)
            assert kind_of(EMPTY_ENV, ty) is Kind.ARRAY
            walk(t, EMPTY_ENV)

            walk(t, EMPTY_ENV)

    def test_substitution_stability(self):
        env = EMPTY_ENV.with_sorts([("n", Sort.DIM)])
        open_terms = [
            "(array () (lam ((x (Arr Num (Shp n)))) x))",
            "(array () (lam ((x (Arr Num (Shp n 2)))) x))",
            "(frame () (array () (lam ((x (Arr Num (Shp n)))) x)))",
        ]
        for src in open_terms:
            t = parse_term(src)
            _, open_ty = elaborate(env, SIGNATURE, t)
            for k in (0, 1, 3):
                closed = subst_idx_in_term(t, {"n": NatLit(k)})
                _, closed_ty = elaborate(EMPTY_ENV, SIGNATURE, closed)
                assert types_equal(closed_ty, subst_idx_in_type(open_ty, {"n": NatLit(k)}))
