"""Static semantics: sorting and kinding judgments, type equivalence, and
the syntax-directed elaborator that annotates every node with its type.

Elaboration is algorithmic: the declarative equivalence rule is absorbed
into explicit types_equal comparisons at each premise that demands a type of
a particular shape, and array shapes are reconciled through their canonical
forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

from .indices import (
    canonicalize_shape,
    drop_suffix,
    element_count,
    frame_join,
    indices_equal,
    prefix_subtract,
    shape_to_index,
)
from .names import (
    free_idx_in_type,
    subst_idx,
    subst_idx_in_type,
    subst_ty_in_type,
)
from .syntax import (
    App,
    ArrayLit,
    ArrType,
    AtomTerm,
    BASE_TYPE_NAMES,
    BaseType,
    BaseVal,
    Box,
    EmptyArray,
    EmptyFrame,
    ExprTerm,
    ForallType,
    Frame,
    FunType,
    IApp,
    IdxAppend,
    IdxVar,
    ILam,
    IndexExpr,
    Kind,
    Lam,
    NatLit,
    PiType,
    Plus,
    PrimOp,
    ShapeLit,
    SigmaType,
    Sort,
    SourceLocation,
    TApp,
    Term,
    TLam,
    TypeExpr,
    TyVar,
    Unbox,
    Var,
    is_atom,
    shape_of_dims,
)


class ErrorKind(Enum):
    UNBOUND_VAR = "UnboundVar"
    SORT_MISMATCH = "SortMismatch"
    KIND_MISMATCH = "KindMismatch"
    FRAME_INCOMPATIBLE = "FrameIncompatible"
    CELL_MISMATCH = "CellMismatch"
    LENGTH_MISMATCH = "LengthMismatch"
    ESCAPING_INDEX_VAR = "EscapingIndexVar"
    NOT_A_FUNCTION = "NotAFunction"
    NOT_A_BOX = "NotABox"
    ANNOTATION_MISMATCH = "AnnotationMismatch"

    def __str__(self) -> str:
        return self.value


class TypeCheckError(Exception):
    def __init__(self, kind: ErrorKind, detail: str, loc: Optional[SourceLocation] = None):
        self.kind = kind
        self.detail = detail
        self.loc = loc
        where = f"{loc}: " if loc else ""
        super().__init__(f"{where}{kind}: {detail}")


@dataclass(frozen=True)
class Env:
    """Three-part environment: index-variable sorts, type-variable kinds,
    term-variable types."""

    sorts: Mapping[str, Sort] = field(default_factory=dict)
    kinds: Mapping[str, Kind] = field(default_factory=dict)
    types: Mapping[str, TypeExpr] = field(default_factory=dict)

    def with_sorts(self, pairs) -> "Env":
        return Env({**self.sorts, **dict(pairs)}, self.kinds, self.types)

    def with_kinds(self, pairs) -> "Env":
        return Env(self.sorts, {**self.kinds, **dict(pairs)}, self.types)

    def with_types(self, pairs) -> "Env":
        return Env(self.sorts, self.kinds, {**self.types, **dict(pairs)})


EMPTY_ENV = Env()

Signature = Mapping[str, TypeExpr]


def idx_append(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    """Append two shapes, flattening trivial cases for readable types."""
    if isinstance(a, ShapeLit) and not a.dims:
        return b
    if isinstance(b, ShapeLit) and not b.dims:
        return a
    if isinstance(a, ShapeLit) and isinstance(b, ShapeLit):
        return ShapeLit(a.dims + b.dims)
    parts: list[IndexExpr] = []
    for x in (a, b):
        parts.extend(x.operands if isinstance(x, IdxAppend) else (x,))
    return IdxAppend(tuple(parts))


# ---------------------------------------------------------------------------
# Sorting


def sort_of(env: Env, i: IndexExpr, loc: Optional[SourceLocation] = None) -> Sort:
    loc = getattr(i, "loc", None) or loc
    if isinstance(i, NatLit):
        return Sort.DIM
    if isinstance(i, IdxVar):
        s = env.sorts.get(i.name)
        if s is None:
            raise TypeCheckError(ErrorKind.UNBOUND_VAR, f"unbound index variable {i.name}", loc)
        return s
    if isinstance(i, Plus):
        for op in i.operands:
            if sort_of(env, op, loc) is not Sort.DIM:
                raise TypeCheckError(
                    ErrorKind.SORT_MISMATCH, "+ requires Dim operands", loc
                )
        return Sort.DIM
    if isinstance(i, ShapeLit):
        for op in i.dims:
            if sort_of(env, op, loc) is not Sort.DIM:
                raise TypeCheckError(
                    ErrorKind.SORT_MISMATCH, "Shp elements must have sort Dim", loc
                )
        return Sort.SHAPE
    if isinstance(i, IdxAppend):
        for op in i.operands:
            if sort_of(env, op, loc) is not Sort.SHAPE:
                raise TypeCheckError(
                    ErrorKind.SORT_MISMATCH, "++ requires Shape operands", loc
                )
        return Sort.SHAPE
    raise TypeError(i)


def check_sort(env: Env, i: IndexExpr, want: Sort, loc=None) -> None:
    got = sort_of(env, i, loc)
    if got is not want:
        raise TypeCheckError(
            ErrorKind.SORT_MISMATCH, f"expected sort {want}, got {got}", getattr(i, "loc", None) or loc
        )


# ---------------------------------------------------------------------------
# Kinding


def kind_of(env: Env, t: TypeExpr, loc: Optional[SourceLocation] = None) -> Kind:
    loc = getattr(t, "loc", None) or loc
    if isinstance(t, BaseType):
        if t.name not in BASE_TYPE_NAMES:
            raise TypeCheckError(ErrorKind.KIND_MISMATCH, f"unknown base type {t.name}", loc)
        return Kind.ATOM
    if isinstance(t, TyVar):
        k = env.kinds.get(t.name)
        if k is None:
            raise TypeCheckError(ErrorKind.UNBOUND_VAR, f"unbound type variable {t.name}", loc)
        return k
    if isinstance(t, FunType):
        for x in t.inputs:
            if kind_of(env, x, loc) is not Kind.ARRAY:
                raise TypeCheckError(
                    ErrorKind.KIND_MISMATCH, "function input types must be Arrays", loc
                )
        if kind_of(env, t.output, loc) is not Kind.ARRAY:
            raise TypeCheckError(
                ErrorKind.KIND_MISMATCH, "function output type must be an Array", loc
            )
        return Kind.ATOM
    if isinstance(t, ArrType):
        if kind_of(env, t.elem, loc) is not Kind.ATOM:
            raise TypeCheckError(
                ErrorKind.KIND_MISMATCH, "array element type must be an Atom", loc
            )
        check_sort(env, t.shape, Sort.SHAPE, loc)
        return Kind.ARRAY
    if isinstance(t, ForallType):
        inner = env.with_kinds(t.binders)
        if kind_of(inner, t.body, loc) is not Kind.ARRAY:
            raise TypeCheckError(
                ErrorKind.KIND_MISMATCH, "universal body must be an Array", loc
            )
        return Kind.ATOM
    if isinstance(t, (PiType, SigmaType)):
        inner = env.with_sorts(t.binders)
        if kind_of(inner, t.body, loc) is not Kind.ARRAY:
            raise TypeCheckError(
                ErrorKind.KIND_MISMATCH,
                f"{'Pi' if isinstance(t, PiType) else 'Sigma'} body must be an Array",
                loc,
            )
        return Kind.ATOM
    raise TypeError(t)


def check_kind(env: Env, t: TypeExpr, want: Kind, loc=None) -> None:
    got = kind_of(env, t, loc)
    if got is not want:
        raise TypeCheckError(
            ErrorKind.KIND_MISMATCH,
            f"expected kind {want}, got {got}",
            getattr(t, "loc", None) or loc,
        )


def check_env(env: Env) -> None:
    """An environment is well-formed when every term binding's type kinds at
    Array under the sort and kind parts."""
    for x, t in env.types.items():
        k = kind_of(env, t)
        if k is not Kind.ARRAY:
            raise TypeCheckError(
                ErrorKind.KIND_MISMATCH,
                f"binding {x} has kind {k}, expected Array",
            )


# ---------------------------------------------------------------------------
# Type equivalence


def types_equal(a: TypeExpr, b: TypeExpr) -> bool:
    """Alpha-equivalence with array shapes compared as canonical indices."""
    return _teqv(a, b, 0)


def _teqv(a: TypeExpr, b: TypeExpr, depth: int) -> bool:
    if isinstance(a, BaseType) and isinstance(b, BaseType):
        return a.name == b.name
    if isinstance(a, TyVar) and isinstance(b, TyVar):
        return a.name == b.name
    if isinstance(a, FunType) and isinstance(b, FunType):
        return (
            len(a.inputs) == len(b.inputs)
            and all(_teqv(x, y, depth) for x, y in zip(a.inputs, b.inputs))
            and _teqv(a.output, b.output, depth)
        )
    if isinstance(a, ArrType) and isinstance(b, ArrType):
        return _teqv(a.elem, b.elem, depth) and indices_equal(a.shape, b.shape, shape=True)
    if isinstance(a, ForallType) and isinstance(b, ForallType):
        if len(a.binders) != len(b.binders):
            return False
        if any(ka != kb for (_, ka), (_, kb) in zip(a.binders, b.binders)):
            return False
        fresh = [TyVar(f"#q{depth}.{i}") for i in range(len(a.binders))]
        sa = subst_ty_in_type(a.body, {x: v for (x, _), v in zip(a.binders, fresh)})
        sb = subst_ty_in_type(b.body, {x: v for (x, _), v in zip(b.binders, fresh)})
        return _teqv(sa, sb, depth + 1)
    if type(a) is type(b) and isinstance(a, (PiType, SigmaType)):
        if len(a.binders) != len(b.binders):
            return False
        if any(sa != sb for (_, sa), (_, sb) in zip(a.binders, b.binders)):
            return False
        fresh = [IdxVar(f"#q{depth}.{i}") for i in range(len(a.binders))]
        sa = subst_idx_in_type(a.body, {x: v for (x, _), v in zip(a.binders, fresh)})
        sb = subst_idx_in_type(b.body, {x: v for (x, _), v in zip(b.binders, fresh)})
        return _teqv(sa, sb, depth + 1)
    return False


# ---------------------------------------------------------------------------
# Typing with elaboration


def _as_array_type(t: TypeExpr) -> Optional[ArrType]:
    return t if isinstance(t, ArrType) else None


class _Elaborator:
    def __init__(self, sig: Signature):
        self.sig = sig

    # -- atoms --------------------------------------------------------------

    def atom(self, a: AtomTerm, env: Env) -> tuple[AtomTerm, TypeExpr]:
        if isinstance(a, BaseVal):
            t = BaseType(a.base)
            return replace(a, annot=t), t
        if isinstance(a, PrimOp):
            if a.annot is not None:
                # Mid-instantiation operators only arise from evaluator
                # output; trust the annotation so stepped terms re-elaborate.
                check_kind(env, a.annot, Kind.ATOM, a.loc)
                return a, a.annot
            t = self.sig.get(a.name)
            if t is None:
                raise TypeCheckError(
                    ErrorKind.UNBOUND_VAR, f"unknown operator {a.name}", a.loc
                )
            return replace(a, annot=t), t
        if isinstance(a, Lam):
            for _, pt in a.params:
                check_kind(env, pt, Kind.ARRAY, a.loc)
            body, bt = self.expr(a.body, env.with_types(a.params))
            t = FunType(tuple(pt for _, pt in a.params), bt)
            return replace(a, body=body, annot=t), t
        if isinstance(a, TLam):
            body, bt = self.expr(a.body, env.with_kinds(a.binders))
            t = ForallType(a.binders, bt)
            return replace(a, body=body, annot=t), t
        if isinstance(a, ILam):
            body, bt = self.expr(a.body, env.with_sorts(a.binders))
            t = PiType(a.binders, bt)
            return replace(a, body=body, annot=t), t
        if isinstance(a, Box):
            if not isinstance(a.box_type, SigmaType):
                raise TypeCheckError(
                    ErrorKind.ANNOTATION_MISMATCH, "box annotation must be a Sigma type", a.loc
                )
            if len(a.indices) != len(a.box_type.binders):
                raise TypeCheckError(
                    ErrorKind.ANNOTATION_MISMATCH,
                    f"box supplies {len(a.indices)} indices for {len(a.box_type.binders)} binders",
                    a.loc,
                )
            for i, (_, srt) in zip(a.indices, a.box_type.binders):
                check_sort(env, i, srt, a.loc)
            check_kind(env, a.box_type, Kind.ATOM, a.loc)
            payload, pt = self.expr(a.payload, env)
            expected = subst_idx_in_type(
                a.box_type.body,
                {x: i for (x, _), i in zip(a.box_type.binders, a.indices)},
            )
            if not types_equal(pt, expected):
                raise TypeCheckError(
                    ErrorKind.ANNOTATION_MISMATCH,
                    "box payload type does not match the annotated Sigma body",
                    a.loc,
                )
            return replace(a, payload=payload, annot=a.box_type), a.box_type
        raise TypeError(a)

    # -- expressions ---------------------------------------------------------

    def expr(self, e: ExprTerm, env: Env) -> tuple[ExprTerm, TypeExpr]:
        if isinstance(e, Var):
            t = env.types.get(e.name)
            if t is None:
                raise TypeCheckError(
                    ErrorKind.UNBOUND_VAR, f"unbound variable {e.name}", e.loc
                )
            return replace(e, annot=t), t

        if isinstance(e, ArrayLit):
            if not e.atoms:
                if e.annot is None:
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        "empty array literal needs a type annotation",
                        e.loc,
                    )
                arr = _as_array_type(e.annot)
                if arr is None:
                    raise TypeCheckError(
                        ErrorKind.ANNOTATION_MISMATCH,
                        "array annotation must be an array type",
                        e.loc,
                    )
                check_kind(env, arr, Kind.ARRAY, e.loc)
                if not indices_equal(arr.shape, shape_of_dims(e.dims), shape=True):
                    raise TypeCheckError(
                        ErrorKind.ANNOTATION_MISMATCH,
                        "annotated shape disagrees with the literal dimensions",
                        e.loc,
                    )
                if element_count(e.dims) != 0:
                    raise TypeCheckError(
                        ErrorKind.LENGTH_MISMATCH,
                        f"0 atoms for dimensions {list(e.dims)}",
                        e.loc,
                    )
                t = ArrType(arr.elem, shape_of_dims(e.dims))
                return replace(e, annot=t), t
            pairs = [self.atom(a, env) for a in e.atoms]
            t0 = pairs[0][1]
            for _, ti in pairs[1:]:
                if not types_equal(t0, ti):
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        "array atoms do not share one type",
                        e.loc,
                    )
            check_kind(env, t0, Kind.ATOM, e.loc)
            if len(e.atoms) != element_count(e.dims):
                raise TypeCheckError(
                    ErrorKind.LENGTH_MISMATCH,
                    f"{len(e.atoms)} atoms for dimensions {list(e.dims)}",
                    e.loc,
                )
            t = ArrType(t0, shape_of_dims(e.dims))
            return replace(e, atoms=tuple(p[0] for p in pairs), annot=t), t

        if isinstance(e, Frame):
            if not e.cells:
                if e.annot is None:
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        "empty frame needs a type annotation",
                        e.loc,
                    )
                arr = _as_array_type(e.annot)
                if arr is None:
                    raise TypeCheckError(
                        ErrorKind.ANNOTATION_MISMATCH,
                        "frame annotation must be an array type",
                        e.loc,
                    )
                check_kind(env, arr, Kind.ARRAY, e.loc)
                if element_count(e.dims) != 0:
                    raise TypeCheckError(
                        ErrorKind.LENGTH_MISMATCH,
                        f"0 cells for dimensions {list(e.dims)}",
                        e.loc,
                    )
                cell = prefix_subtract(
                    canonicalize_shape(arr.shape),
                    canonicalize_shape(shape_of_dims(e.dims)),
                )
                if cell is None:
                    raise TypeCheckError(
                        ErrorKind.ANNOTATION_MISMATCH,
                        "annotated shape does not start with the frame dimensions",
                        e.loc,
                    )
                return replace(e, annot=arr), arr
            pairs = [self.expr(c, env) for c in e.cells]
            t0 = pairs[0][1]
            for _, ti in pairs[1:]:
                if not types_equal(t0, ti):
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        "frame cells do not share one type",
                        e.loc,
                    )
            arr = _as_array_type(t0)
            if arr is None:
                raise TypeCheckError(
                    ErrorKind.CELL_MISMATCH, "frame cell type is not an array type", e.loc
                )
            if len(e.cells) != element_count(e.dims):
                raise TypeCheckError(
                    ErrorKind.LENGTH_MISMATCH,
                    f"{len(e.cells)} cells for dimensions {list(e.dims)}",
                    e.loc,
                )
            t = ArrType(arr.elem, idx_append(shape_of_dims(e.dims), arr.shape))
            return replace(e, cells=tuple(p[0] for p in pairs), annot=t), t

        if isinstance(e, EmptyArray):
            check_kind(env, e.elem_type, Kind.ATOM, e.loc)
            if element_count(e.dims) != 0:
                raise TypeCheckError(
                    ErrorKind.LENGTH_MISMATCH,
                    "empty-array dimensions must contain a zero",
                    e.loc,
                )
            t = ArrType(e.elem_type, shape_of_dims(e.dims))
            return ArrayLit(e.dims, (), annot=t, loc=e.loc), t

        if isinstance(e, EmptyFrame):
            check_kind(env, e.cell_type, Kind.ARRAY, e.loc)
            arr = _as_array_type(e.cell_type)
            if arr is None:
                raise TypeCheckError(
                    ErrorKind.CELL_MISMATCH, "frame cell type is not an array type", e.loc
                )
            if element_count(e.dims) != 0:
                raise TypeCheckError(
                    ErrorKind.LENGTH_MISMATCH,
                    "empty-frame dimensions must contain a zero",
                    e.loc,
                )
            t = ArrType(arr.elem, idx_append(shape_of_dims(e.dims), arr.shape))
            return Frame(e.dims, (), annot=t, loc=e.loc), t

        if isinstance(e, App):
            fn, ft = self.expr(e.fn, env)
            arr = _as_array_type(ft)
            if arr is None or not isinstance(arr.elem, FunType):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "function position is not an array of functions",
                    e.loc,
                )
            fun = arr.elem
            if len(e.args) != len(fun.inputs):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    f"function expects {len(fun.inputs)} arguments, got {len(e.args)}",
                    e.loc,
                )
            out = _as_array_type(fun.output)
            if out is None:
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "function output type is not an array type",
                    e.loc,
                )
            frames = [canonicalize_shape(arr.shape)]
            new_args = []
            for k, (argterm, in_t) in enumerate(zip(e.args, fun.inputs)):
                cell = _as_array_type(in_t)
                if cell is None:
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        f"argument {k + 1}: function input type is not an array type",
                        e.loc,
                    )
                arg, at = self.expr(argterm, env)
                a_arr = _as_array_type(at)
                if a_arr is None:
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        f"argument {k + 1} is not an array",
                        arg.loc or e.loc,
                    )
                if not types_equal(a_arr.elem, cell.elem):
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        f"argument {k + 1} atom type does not match the function input",
                        arg.loc or e.loc,
                    )
                frame = drop_suffix(
                    canonicalize_shape(a_arr.shape), canonicalize_shape(cell.shape)
                )
                if frame is None:
                    raise TypeCheckError(
                        ErrorKind.CELL_MISMATCH,
                        f"argument {k + 1} shape does not end with the expected cell shape",
                        arg.loc or e.loc,
                    )
                frames.append(frame)
                new_args.append(arg)
            join = frame_join(frames)
            if join.incompatible:
                raise TypeCheckError(
                    ErrorKind.FRAME_INCOMPATIBLE,
                    "function and argument frames are not prefix-ordered",
                    e.loc,
                )
            t = ArrType(out.elem, idx_append(shape_to_index(join.shape), out.shape))
            return replace(e, fn=fn, args=tuple(new_args), annot=t), t

        if isinstance(e, TApp):
            fn, ft = self.expr(e.fn, env)
            arr = _as_array_type(ft)
            if arr is None or not isinstance(arr.elem, ForallType):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "t-app needs an array of type abstractions",
                    e.loc,
                )
            univ = arr.elem
            if len(e.type_args) != len(univ.binders):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    f"t-app supplies {len(e.type_args)} types for {len(univ.binders)} binders",
                    e.loc,
                )
            for targ, (_, k) in zip(e.type_args, univ.binders):
                got = kind_of(env, targ, e.loc)
                if got is not k:
                    raise TypeCheckError(
                        ErrorKind.KIND_MISMATCH,
                        f"type argument has kind {got}, binder wants {k}",
                        e.loc,
                    )
            body = _as_array_type(univ.body)
            if body is None:
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "universal body is not an array type",
                    e.loc,
                )
            m = {x: targ for (x, _), targ in zip(univ.binders, e.type_args)}
            t = ArrType(subst_ty_in_type(body.elem, m), idx_append(arr.shape, body.shape))
            return replace(e, fn=fn, annot=t), t

        if isinstance(e, IApp):
            fn, ft = self.expr(e.fn, env)
            arr = _as_array_type(ft)
            if arr is None or not isinstance(arr.elem, PiType):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "i-app needs an array of index abstractions",
                    e.loc,
                )
            prod = arr.elem
            if len(e.idx_args) != len(prod.binders):
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    f"i-app supplies {len(e.idx_args)} indices for {len(prod.binders)} binders",
                    e.loc,
                )
            for iarg, (_, srt) in zip(e.idx_args, prod.binders):
                check_sort(env, iarg, srt, e.loc)
            body = _as_array_type(prod.body)
            if body is None:
                raise TypeCheckError(
                    ErrorKind.NOT_A_FUNCTION,
                    "dependent-product body is not an array type",
                    e.loc,
                )
            m = {x: iarg for (x, _), iarg in zip(prod.binders, e.idx_args)}
            t = ArrType(
                subst_idx_in_type(body.elem, m),
                idx_append(arr.shape, subst_idx(body.shape, m)),
            )
            return replace(e, fn=fn, annot=t), t

        if isinstance(e, Unbox):
            box, bt = self.expr(e.box, env)
            arr = _as_array_type(bt)
            if arr is None or not isinstance(arr.elem, SigmaType):
                raise TypeCheckError(
                    ErrorKind.NOT_A_BOX, "unbox needs an array of boxes", e.loc
                )
            sigma = arr.elem
            if len(e.idx_vars) != len(sigma.binders):
                raise TypeCheckError(
                    ErrorKind.NOT_A_BOX,
                    f"unbox binds {len(e.idx_vars)} indices for {len(sigma.binders)} binders",
                    e.loc,
                )
            renaming = {
                x_old: IdxVar(x_new)
                for (x_old, _), x_new in zip(sigma.binders, e.idx_vars)
            }
            val_type = subst_idx_in_type(sigma.body, renaming)
            inner = env.with_sorts(
                [(x, srt) for x, (_, srt) in zip(e.idx_vars, sigma.binders)]
            ).with_types([(e.val_var, val_type)])
            body, t_body = self.expr(e.body, inner)
            escaping = free_idx_in_type(t_body) & set(e.idx_vars)
            if escaping:
                raise TypeCheckError(
                    ErrorKind.ESCAPING_INDEX_VAR,
                    f"unbox body type mentions hidden index {sorted(escaping)[0]}",
                    e.loc,
                )
            body_arr = _as_array_type(t_body)
            if body_arr is None:
                raise TypeCheckError(
                    ErrorKind.NOT_A_BOX, "unbox body type is not an array type", e.loc
                )
            t = ArrType(body_arr.elem, idx_append(arr.shape, body_arr.shape))
            return replace(e, box=box, body=body, annot=t), t

        raise TypeError(e)


def elaborate(env: Env, sig: Signature, t: Term) -> tuple[Term, TypeExpr]:
    """Type-check ``t`` under a well-formed environment, returning the term
    with every annotation slot filled and its (unique up to equivalence)
    type. Raises TypeCheckError on any rule violation."""
    check_env(env)
    el = _Elaborator(sig)
    if is_atom(t):
        return el.atom(t, env)
    return el.expr(t, env)
