"""Type-driven small-step evaluator.

Redex selection is leftmost-outermost with arguments taken left to right:
inside an array literal only a box atom can hold pending computation, frame
cells evaluate in order, application evaluates the function position and
then each argument. A fully evaluated application fires exactly one of
lift / map / beta / delta; type and index application fire tbeta / ibeta;
frames of literals collapse; unbox substitutes per box.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .indices import canonicalize_shape, element_count
from .names import (
    subst_idx_in_term,
    subst_idx_in_type,
    subst_term,
    subst_ty_in_term,
    subst_ty_in_type,
)
from .prims import Misapplied, apply_delta
from .syntax import (
    App,
    ArrayLit,
    ArrType,
    AtomTerm,
    BaseVal,
    Box,
    EmptyArray,
    EmptyFrame,
    ExprTerm,
    ForallType,
    Frame,
    FunType,
    IApp,
    ILam,
    Lam,
    PiType,
    PrimOp,
    TApp,
    TLam,
    Unbox,
    Var,
    shape_of_dims,
)

RULES = ("lift", "map", "beta", "delta", "tbeta", "ibeta", "collapse", "unbox")


class EvalBug(Exception):
    """Internal invariant violated; unreachable on elaborator output."""


@dataclass(frozen=True)
class Stepped:
    term: ExprTerm
    rule: str


@dataclass(frozen=True)
class AlreadyValue:
    pass


@dataclass(frozen=True)
class Stuck:
    reason: str  # "misapplied" | "internal"
    op: Optional[str] = None
    detail: str = ""


StepResult = Union[Stepped, AlreadyValue, Stuck]

_VALUE = AlreadyValue()


def is_value_atom(a: AtomTerm) -> bool:
    if isinstance(a, (BaseVal, PrimOp, Lam, TLam, ILam)):
        return True
    if isinstance(a, Box):
        return is_value(a.payload)
    return False


def is_value(e: ExprTerm) -> bool:
    return isinstance(e, ArrayLit) and all(is_value_atom(a) for a in e.atoms)


# ---------------------------------------------------------------------------
# List metafunctions


class IndivisibleLength(Exception):
    pass


class RaggedInput(Exception):
    pass


def split_list(n: int, xs: list) -> list[list]:
    """Consecutive length-n pieces of xs."""
    if n == 0:
        if xs:
            raise IndivisibleLength("cannot split a nonempty list into 0-length pieces")
        return []
    if len(xs) % n:
        raise IndivisibleLength(f"{len(xs)} not divisible by {n}")
    return [list(xs[i : i + n]) for i in range(0, len(xs), n)]


def rep_list(n: int, xs: list) -> list:
    """Each element repeated n times, inner structure untouched."""
    out = []
    for x in xs:
        out.extend([x] * n)
    return out


def transpose_list(xss: list[list]) -> list[list]:
    """Row i of the result collects the i-th element of every input list."""
    if not xss:
        return []
    width = len(xss[0])
    if any(len(row) != width for row in xss):
        raise RaggedInput("transpose requires equal-length lists")
    return [[row[i] for row in xss] for i in range(width)]


def concat_list(xss: list[list]) -> list:
    out = []
    for xs in xss:
        out.extend(xs)
    return out


# ---------------------------------------------------------------------------
# Stepping


def _concrete(shape_idx) -> tuple[int, ...]:
    return canonicalize_shape(shape_idx).concrete_dims()


def step(e: ExprTerm) -> StepResult:
    """One reduction step of a closed, elaborated expression."""
    if isinstance(e, Var):
        return Stuck("internal", detail=f"free variable {e.name}")

    if isinstance(e, ArrayLit):
        for i, a in enumerate(e.atoms):
            if is_value_atom(a):
                continue
            if not isinstance(a, Box):
                return Stuck("internal", detail="non-value atom that is not a box")
            r = step(a.payload)
            if isinstance(r, Stepped):
                new_atom = replace(a, payload=r.term)
                atoms = e.atoms[:i] + (new_atom,) + e.atoms[i + 1 :]
                return Stepped(replace(e, atoms=atoms), r.rule)
            return r
        return _VALUE

    if isinstance(e, Frame):
        for i, c in enumerate(e.cells):
            if is_value(c):
                continue
            r = step(c)
            if isinstance(r, Stepped):
                cells = e.cells[:i] + (r.term,) + e.cells[i + 1 :]
                return Stepped(replace(e, cells=cells), r.rule)
            return r
        return _collapse(e)

    if isinstance(e, (EmptyArray, EmptyFrame)):
        return Stuck("internal", detail="empty forms must be elaborated away")

    if isinstance(e, App):
        if not is_value(e.fn):
            r = step(e.fn)
            if isinstance(r, Stepped):
                return Stepped(replace(e, fn=r.term), r.rule)
            return r
        for i, a in enumerate(e.args):
            if is_value(a):
                continue
            r = step(a)
            if isinstance(r, Stepped):
                args = e.args[:i] + (r.term,) + e.args[i + 1 :]
                return Stepped(replace(e, args=args), r.rule)
            return r
        return _apply(e)

    if isinstance(e, TApp):
        if not is_value(e.fn):
            r = step(e.fn)
            if isinstance(r, Stepped):
                return Stepped(replace(e, fn=r.term), r.rule)
            return r
        return _tbeta(e)

    if isinstance(e, IApp):
        if not is_value(e.fn):
            r = step(e.fn)
            if isinstance(r, Stepped):
                return Stepped(replace(e, fn=r.term), r.rule)
            return r
        return _ibeta(e)

    if isinstance(e, Unbox):
        if not is_value(e.box):
            r = step(e.box)
            if isinstance(r, Stepped):
                return Stepped(replace(e, box=r.term), r.rule)
            return r
        return _unbox(e)

    raise TypeError(e)


def _collapse(e: Frame) -> StepResult:
    # Cell dims come from the cells when there are any; an empty frame reads
    # them off its type annotation.
    if e.cells:
        first = e.cells[0]
        if not isinstance(first, ArrayLit):
            return Stuck("internal", detail="collapse over a non-literal cell")
        cell_dims = first.dims
        atoms = tuple(a for c in e.cells for a in c.atoms)  # type: ignore[union-attr]
    else:
        if e.annot is None or not isinstance(e.annot, ArrType):
            return Stuck("internal", detail="empty frame without an array annotation")
        full = _concrete(e.annot.shape)
        if full[: len(e.dims)] != e.dims:
            return Stuck("internal", detail="frame annotation disagrees with dims")
        cell_dims = full[len(e.dims) :]
        atoms = ()
    result = ArrayLit(e.dims + cell_dims, atoms, annot=e.annot)
    return Stepped(result, "collapse")


def _app_frames(e: App):
    """(function elem type, function frame, per-argument (frame, cell dims))."""
    fn = e.fn
    assert isinstance(fn, ArrayLit)
    if fn.annot is None or not isinstance(fn.annot, ArrType):
        raise EvalBug("unannotated function array")
    fun = fn.annot.elem
    if not isinstance(fun, FunType):
        raise EvalBug("function array whose element type is not a function")
    per_arg = []
    for arg, in_t in zip(e.args, fun.inputs):
        assert isinstance(arg, ArrayLit)
        if not isinstance(in_t, ArrType):
            raise EvalBug("function input type is not an array type")
        cell_dims = _concrete(in_t.shape)
        k = len(arg.dims) - len(cell_dims)
        if k < 0 or arg.dims[k:] != cell_dims:
            raise EvalBug("argument shape does not end with its cell shape")
        per_arg.append((arg.dims[:k], cell_dims))
    return fun, fn.dims, per_arg


def _apply(e: App) -> StepResult:
    try:
        fun, f_frame, per_arg = _app_frames(e)
    except EvalBug as bug:
        return Stuck("internal", detail=str(bug))
    frames = [f_frame] + [fr for fr, _ in per_arg]
    principal = max(frames, key=len)
    for fr in frames:
        if principal[: len(fr)] != fr:
            return Stuck("internal", detail="frames are not prefix-ordered")

    if any(fr != principal for fr in frames):
        return _lift(e, fun, f_frame, per_arg, principal)
    if principal:
        return _map(e, fun, per_arg, principal)

    head = e.fn.atoms[0]  # type: ignore[union-attr]
    if isinstance(head, Lam):
        if len(head.params) != len(e.args):
            return Stuck("internal", detail="arity mismatch in beta")
        binding = {x: arg for (x, _), arg in zip(head.params, e.args)}
        return Stepped(subst_term(head.body, binding), "beta")
    if isinstance(head, PrimOp):
        if not isinstance(head.annot, FunType):
            return Stuck("internal", detail="operator not instantiated to a function")
        try:
            result = apply_delta(head.name, head.annot, e.args)
        except Misapplied as exc:
            return Stuck("misapplied", op=exc.op, detail=exc.detail)
        return Stepped(result, "delta")
    return Stuck("internal", detail="scalar application head is not lam or operator")


def _lift(e: App, fun: FunType, f_frame, per_arg, principal) -> StepResult:
    n_p = element_count(principal)
    fn = e.fn
    assert isinstance(fn, ArrayLit)
    n_fe = (n_p // element_count(f_frame)) if element_count(f_frame) else 0
    fn_atoms = tuple(
        concat_list(rep_list(n_fe, split_list(1, list(fn.atoms))))
    )
    new_fn = ArrayLit(
        principal, fn_atoms, annot=ArrType(fun, shape_of_dims(principal))
    )
    new_args = []
    for (arg, in_t, (frame, cell_dims)) in zip(e.args, fun.inputs, per_arg):
        assert isinstance(arg, ArrayLit)
        n_a = element_count(frame)
        n_ae = (n_p // n_a) if n_a else 0
        n_ac = element_count(cell_dims)
        pieces = split_list(n_ac, list(arg.atoms))
        atoms = tuple(concat_list(rep_list(n_ae, pieces)))
        dims = principal + cell_dims
        new_args.append(
            ArrayLit(dims, atoms, annot=ArrType(in_t.elem, shape_of_dims(dims)))
        )
    return Stepped(replace(e, fn=new_fn, args=tuple(new_args)), "lift")


def _split_cells(atoms: list, cell_size: int, n_cells: int) -> list[list]:
    # A zero-size cell still contributes one (empty) piece per frame cell.
    if cell_size == 0:
        return [[] for _ in range(n_cells)]
    return split_list(cell_size, atoms)


def _map(e: App, fun: FunType, per_arg, principal) -> StepResult:
    n_cells = element_count(principal)
    fn = e.fn
    assert isinstance(fn, ArrayLit)
    arg_cells = []
    for (arg, (_, cell_dims)) in zip(e.args, per_arg):
        arg_cells.append(
            _split_cells(list(arg.atoms), element_count(cell_dims), n_cells)  # type: ignore[union-attr]
        )
    grouped = transpose_list(arg_cells) if arg_cells else [[] for _ in range(n_cells)]
    cells = []
    for j in range(n_cells):
        fn_cell = ArrayLit((), (fn.atoms[j],), annot=ArrType(fun, shape_of_dims(())))
        cell_args = tuple(
            ArrayLit(tuple(cd), tuple(atoms), annot=in_t)
            for (atoms, in_t, (_, cd)) in zip(grouped[j], fun.inputs, per_arg)
        )
        cells.append(App(fn_cell, cell_args, annot=fun.output))
    return Stepped(Frame(principal, tuple(cells), annot=e.annot), "map")


def _tbeta(e: TApp) -> StepResult:
    fn = e.fn
    assert isinstance(fn, ArrayLit)
    cells = []
    for atom in fn.atoms:
        if isinstance(atom, TLam):
            if len(atom.binders) != len(e.type_args):
                return Stuck("internal", detail="tbeta arity mismatch")
            m = {x: t for (x, _), t in zip(atom.binders, e.type_args)}
            cells.append(subst_ty_in_term(atom.body, m))
        elif isinstance(atom, PrimOp) and isinstance(atom.annot, ForallType):
            univ = atom.annot
            if len(univ.binders) != len(e.type_args):
                return Stuck("internal", detail="tbeta arity mismatch")
            m = {x: t for (x, _), t in zip(univ.binders, e.type_args)}
            body = subst_ty_in_type(univ.body, m)
            if not isinstance(body, ArrType):
                return Stuck("internal", detail="universal body is not an array type")
            cells.append(
                ArrayLit((), (replace(atom, annot=body.elem),), annot=body)
            )
        else:
            return Stuck("internal", detail="tbeta over a non-abstraction atom")
    return Stepped(Frame(fn.dims, tuple(cells), annot=e.annot), "tbeta")


def _ibeta(e: IApp) -> StepResult:
    fn = e.fn
    assert isinstance(fn, ArrayLit)
    cells = []
    for atom in fn.atoms:
        if isinstance(atom, ILam):
            if len(atom.binders) != len(e.idx_args):
                return Stuck("internal", detail="ibeta arity mismatch")
            m = {x: i for (x, _), i in zip(atom.binders, e.idx_args)}
            cells.append(subst_idx_in_term(atom.body, m))
        elif isinstance(atom, PrimOp) and isinstance(atom.annot, PiType):
            prod = atom.annot
            if len(prod.binders) != len(e.idx_args):
                return Stuck("internal", detail="ibeta arity mismatch")
            m = {x: i for (x, _), i in zip(prod.binders, e.idx_args)}
            body = subst_idx_in_type(prod.body, m)
            if not isinstance(body, ArrType):
                return Stuck("internal", detail="product body is not an array type")
            cells.append(
                ArrayLit((), (replace(atom, annot=body.elem),), annot=body)
            )
        else:
            return Stuck("internal", detail="ibeta over a non-abstraction atom")
    return Stepped(Frame(fn.dims, tuple(cells), annot=e.annot), "ibeta")


def _unbox(e: Unbox) -> StepResult:
    arr = e.box
    assert isinstance(arr, ArrayLit)
    cells = []
    for atom in arr.atoms:
        if not isinstance(atom, Box):
            return Stuck("internal", detail="unbox over a non-box atom")
        if len(atom.indices) != len(e.idx_vars):
            return Stuck("internal", detail="unbox arity mismatch")
        m = {x: i for x, i in zip(e.idx_vars, atom.indices)}
        body = subst_idx_in_term(e.body, m)
        cells.append(subst_term(body, {e.val_var: atom.payload}))
    return Stepped(Frame(arr.dims, tuple(cells), annot=e.annot), "unbox")


# ---------------------------------------------------------------------------
# Driving loop

DEFAULT_FUEL = 100_000


@dataclass
class EvalResult:
    outcome: str  # "value" | "stuck" | "fuel"
    term: ExprTerm
    steps: int
    stuck: Optional[Stuck] = None
    trace: Optional[list[tuple[str, ExprTerm]]] = None


def evaluate(e: ExprTerm, fuel: int = DEFAULT_FUEL, trace: bool = False) -> EvalResult:
    """Iterate step up to fuel times, reporting value / stuck / out-of-fuel."""
    log: Optional[list[tuple[str, ExprTerm]]] = [] if trace else None
    current = e
    for n in range(fuel):
        r = step(current)
        if isinstance(r, AlreadyValue):
            return EvalResult("value", current, n, trace=log)
        if isinstance(r, Stuck):
            return EvalResult("stuck", current, n, stuck=r, trace=log)
        current = r.term
        if log is not None:
            log.append((r.rule, current))
    return EvalResult("fuel", current, fuel, trace=log)
