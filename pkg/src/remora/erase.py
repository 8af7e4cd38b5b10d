"""Type erasure, the erased-language evaluator, and the lockstep harness.

The erased language keeps the term and index levels only. Array types erase
to their shapes, every other type to the scalar shape, and type variables
become index variables. Residual shape tags live exactly where the dynamic
semantics needs them: frames carry their result shape, applications carry
per-argument cell shapes and a result shape, index applications and unbox
carry result/body shapes. All emitted tags are spelled canonically.

The erased stepper is written against those tags alone; it shares only the
list metafunctions with the typed evaluator, so the lockstep check compares
two genuinely independent machines.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Union

from .eval import (
    AlreadyValue,
    EvalResult,
    Stepped,
    Stuck,
    concat_list,
    rep_list,
    split_list,
    step as typed_step,
    transpose_list,
)
from .indices import canonicalize_shape, element_count, normalize_index
from .names import base_name, free_idx_in_idx, subst_idx
from .prims import Misapplied, _shape_entry
from .printer import print_index, print_num
from .syntax import (
    App,
    ArrayLit,
    ArrType,
    BaseVal,
    Box,
    ExprTerm,
    Frame,
    FunType,
    IApp,
    IdxAppend,
    IdxVar,
    ILam,
    IndexExpr,
    Lam,
    NatLit,
    PrimOp,
    ShapeLit,
    TApp,
    Term,
    TLam,
    TypeExpr,
    TyVar,
    Unbox,
    Var,
    shape_of_dims,
)

# ---------------------------------------------------------------------------
# Erased abstract syntax


@dataclass(frozen=True)
class EBase:
    base: str
    value: object


@dataclass(frozen=True)
class EOp:
    name: str


@dataclass(frozen=True)
class ELam:
    params: tuple[str, ...]
    body: "EExpr"


@dataclass(frozen=True)
class EILam:
    params: tuple[str, ...]
    body: "EExpr"


@dataclass(frozen=True)
class EBox:
    indices: tuple[IndexExpr, ...]
    payload: "EExpr"


EAtom = Union[EBase, EOp, ELam, EILam, EBox]


@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class EArray:
    dims: tuple[int, ...]
    atoms: tuple[EAtom, ...]


@dataclass(frozen=True)
class EFrame:
    shape: IndexExpr  # full result shape
    cells: tuple["EExpr", ...]


@dataclass(frozen=True)
class EApp:
    fn: "EExpr"
    args: tuple["EExpr", ...]
    arg_shapes: tuple[IndexExpr, ...]  # expected cell shape per argument
    out_shape: IndexExpr


@dataclass(frozen=True)
class EIApp:
    fn: "EExpr"
    idx_args: tuple[IndexExpr, ...]
    out_shape: IndexExpr


@dataclass(frozen=True)
class EUnbox:
    idx_vars: tuple[str, ...]
    val_var: str
    box: "EExpr"
    body: "EExpr"
    body_shape: IndexExpr


EExpr = Union[EVar, EArray, EFrame, EApp, EIApp, EUnbox]
ETerm = Union[EAtom, EExpr]


# ---------------------------------------------------------------------------
# Erasure


def _norm(i: IndexExpr) -> IndexExpr:
    return normalize_index(i)


def erase_type(t: TypeExpr) -> IndexExpr:
    """Dynamic residue of a type: array types keep their shape, type
    variables become index variables, everything else is scalar."""
    if isinstance(t, ArrType):
        return _norm(t.shape)
    if isinstance(t, TyVar):
        return IdxVar(t.name)
    return ShapeLit(())


def erase_term(t: Term) -> ETerm:
    if isinstance(t, BaseVal):
        return EBase(t.base, t.value)
    if isinstance(t, PrimOp):
        return EOp(t.name)
    if isinstance(t, Lam):
        return ELam(tuple(x for x, _ in t.params), erase_term(t.body))
    if isinstance(t, (TLam, ILam)):
        return EILam(tuple(x for x, _ in t.binders), erase_term(t.body))
    if isinstance(t, Box):
        return EBox(tuple(_norm(i) for i in t.indices), erase_term(t.payload))
    if isinstance(t, Var):
        return EVar(t.name)
    if isinstance(t, ArrayLit):
        return EArray(t.dims, tuple(erase_term(a) for a in t.atoms))
    if isinstance(t, Frame):
        if t.annot is None:
            raise ValueError("erasure requires an elaborated term (frame)")
        return EFrame(erase_type(t.annot), tuple(erase_term(c) for c in t.cells))
    if isinstance(t, App):
        fn_annot = t.fn.annot
        if t.annot is None or fn_annot is None or not isinstance(fn_annot, ArrType):
            raise ValueError("erasure requires an elaborated term (application)")
        fun = fn_annot.elem
        if not isinstance(fun, FunType):
            raise ValueError("application head is not function-typed")
        return EApp(
            erase_term(t.fn),
            tuple(erase_term(a) for a in t.args),
            tuple(erase_type(i) for i in fun.inputs),
            erase_type(t.annot),
        )
    if isinstance(t, TApp):
        if t.annot is None:
            raise ValueError("erasure requires an elaborated term (t-app)")
        return EIApp(
            erase_term(t.fn),
            tuple(_norm(erase_type(x)) for x in t.type_args),
            erase_type(t.annot),
        )
    if isinstance(t, IApp):
        if t.annot is None:
            raise ValueError("erasure requires an elaborated term (i-app)")
        return EIApp(
            erase_term(t.fn),
            tuple(_norm(i) for i in t.idx_args),
            erase_type(t.annot),
        )
    if isinstance(t, Unbox):
        if t.body.annot is None:
            raise ValueError("erasure requires an elaborated term (unbox)")
        return EUnbox(
            t.idx_vars,
            t.val_var,
            erase_term(t.box),
            erase_term(t.body),
            erase_type(t.body.annot),
        )
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Erased values, free variables, substitution


def is_evalue_atom(a: EAtom) -> bool:
    if isinstance(a, (EBase, EOp, ELam, EILam)):
        return True
    if isinstance(a, EBox):
        return is_evalue(a.payload)
    return False


def is_evalue(e: EExpr) -> bool:
    return isinstance(e, EArray) and all(is_evalue_atom(a) for a in e.atoms)


def _efree_term(t: ETerm) -> set[str]:
    if isinstance(t, EVar):
        return {t.name}
    if isinstance(t, (EBase, EOp)):
        return set()
    if isinstance(t, ELam):
        return _efree_term(t.body) - set(t.params)
    if isinstance(t, EILam):
        return _efree_term(t.body)
    if isinstance(t, EBox):
        return _efree_term(t.payload)
    if isinstance(t, EArray):
        return set().union(*(_efree_term(a) for a in t.atoms), set())
    if isinstance(t, EFrame):
        return set().union(*(_efree_term(c) for c in t.cells), set())
    if isinstance(t, EApp):
        return set().union(_efree_term(t.fn), *(_efree_term(a) for a in t.args))
    if isinstance(t, EIApp):
        return _efree_term(t.fn)
    if isinstance(t, EUnbox):
        return _efree_term(t.box) | (_efree_term(t.body) - {t.val_var})
    raise TypeError(t)


def _efree_idx(t: ETerm) -> set[str]:
    if isinstance(t, (EBase, EOp, EVar)):
        return set()
    if isinstance(t, ELam):
        return _efree_idx(t.body)
    if isinstance(t, EILam):
        return _efree_idx(t.body) - set(t.params)
    if isinstance(t, EBox):
        return set().union(
            *(free_idx_in_idx(i) for i in t.indices), _efree_idx(t.payload)
        )
    if isinstance(t, EArray):
        return set().union(*(_efree_idx(a) for a in t.atoms), set())
    if isinstance(t, EFrame):
        return set().union(
            free_idx_in_idx(t.shape), *(_efree_idx(c) for c in t.cells)
        )
    if isinstance(t, EApp):
        return set().union(
            _efree_idx(t.fn),
            *(_efree_idx(a) for a in t.args),
            *(free_idx_in_idx(i) for i in t.arg_shapes),
            free_idx_in_idx(t.out_shape),
        )
    if isinstance(t, EIApp):
        return set().union(
            _efree_idx(t.fn),
            *(free_idx_in_idx(i) for i in t.idx_args),
            free_idx_in_idx(t.out_shape),
        )
    if isinstance(t, EUnbox):
        return (
            _efree_idx(t.box)
            | free_idx_in_idx(t.body_shape)
            | (_efree_idx(t.body) - set(t.idx_vars))
        )
    raise TypeError(t)


_EGENSYM = itertools.count(1)


def _egensym(base: str) -> str:
    return f"{base_name(base)}#s{next(_EGENSYM)}"


def esubst_idx(t: ETerm, m: Mapping[str, IndexExpr]) -> ETerm:
    if not m:
        return t
    if isinstance(t, (EBase, EOp, EVar)):
        return t
    if isinstance(t, ELam):
        return replace(t, body=esubst_idx(t.body, m))
    if isinstance(t, EILam):
        m2 = {k: v for k, v in m.items() if k not in t.params}
        if not m2:
            return t
        payload_free = set().union(*(free_idx_in_idx(v) for v in m2.values()), set())
        params = []
        extra: dict[str, IndexExpr] = {}
        for x in t.params:
            if x in payload_free:
                x2 = _egensym(x)
                extra[x] = IdxVar(x2)
                params.append(x2)
            else:
                params.append(x)
        m3 = dict(m2, **extra) if extra else m2
        return EILam(tuple(params), esubst_idx(t.body, m3))
    if isinstance(t, EBox):
        return EBox(
            tuple(subst_idx(i, m) for i in t.indices), esubst_idx(t.payload, m)
        )
    if isinstance(t, EArray):
        return replace(t, atoms=tuple(esubst_idx(a, m) for a in t.atoms))
    if isinstance(t, EFrame):
        return EFrame(subst_idx(t.shape, m), tuple(esubst_idx(c, m) for c in t.cells))
    if isinstance(t, EApp):
        return EApp(
            esubst_idx(t.fn, m),
            tuple(esubst_idx(a, m) for a in t.args),
            tuple(subst_idx(i, m) for i in t.arg_shapes),
            subst_idx(t.out_shape, m),
        )
    if isinstance(t, EIApp):
        return EIApp(
            esubst_idx(t.fn, m),
            tuple(subst_idx(i, m) for i in t.idx_args),
            subst_idx(t.out_shape, m),
        )
    if isinstance(t, EUnbox):
        box = esubst_idx(t.box, m)
        body_shape = subst_idx(t.body_shape, m)
        m2 = {k: v for k, v in m.items() if k not in t.idx_vars}
        if not m2:
            return replace(t, box=box, body_shape=body_shape)
        payload_free = set().union(*(free_idx_in_idx(v) for v in m2.values()), set())
        idx_vars = []
        extra: dict[str, IndexExpr] = {}
        for x in t.idx_vars:
            if x in payload_free:
                x2 = _egensym(x)
                extra[x] = IdxVar(x2)
                idx_vars.append(x2)
            else:
                idx_vars.append(x)
        m3 = dict(m2, **extra) if extra else m2
        return EUnbox(
            tuple(idx_vars), t.val_var, box, esubst_idx(t.body, m3), body_shape
        )
    raise TypeError(t)


def esubst_term(t: ETerm, m: Mapping[str, EExpr]) -> ETerm:
    if not m:
        return t
    if isinstance(t, EVar):
        return m.get(t.name, t)
    if isinstance(t, (EBase, EOp)):
        return t
    if isinstance(t, ELam):
        m2 = {k: v for k, v in m.items() if k not in t.params}
        if not m2:
            return t
        payload_free = set().union(*(_efree_term(v) for v in m2.values()), set())
        params = []
        renames: dict[str, EExpr] = {}
        for x in t.params:
            if x in payload_free:
                x2 = _egensym(x)
                renames[x] = EVar(x2)
                params.append(x2)
            else:
                params.append(x)
        m3 = dict(m2, **renames) if renames else m2
        return ELam(tuple(params), esubst_term(t.body, m3))
    if isinstance(t, EILam):
        payload_free = set().union(*(_efree_idx(v) for v in m.values()), set())
        params = []
        extra: dict[str, IndexExpr] = {}
        for x in t.params:
            if x in payload_free:
                x2 = _egensym(x)
                extra[x] = IdxVar(x2)
                params.append(x2)
            else:
                params.append(x)
        body = t.body if not extra else esubst_idx(t.body, extra)
        return EILam(tuple(params), esubst_term(body, m))
    if isinstance(t, EBox):
        return replace(t, payload=esubst_term(t.payload, m))
    if isinstance(t, EArray):
        return replace(t, atoms=tuple(esubst_term(a, m) for a in t.atoms))
    if isinstance(t, EFrame):
        return replace(t, cells=tuple(esubst_term(c, m) for c in t.cells))
    if isinstance(t, EApp):
        return replace(
            t,
            fn=esubst_term(t.fn, m),
            args=tuple(esubst_term(a, m) for a in t.args),
        )
    if isinstance(t, EIApp):
        return replace(t, fn=esubst_term(t.fn, m))
    if isinstance(t, EUnbox):
        box = esubst_term(t.box, m)
        m2 = {k: v for k, v in m.items() if k != t.val_var}
        if not m2:
            return replace(t, box=box)
        payload_free_tm = set().union(*(_efree_term(v) for v in m2.values()), set())
        payload_free_ix = set().union(*(_efree_idx(v) for v in m2.values()), set())
        idx_vars = []
        extra: dict[str, IndexExpr] = {}
        for x in t.idx_vars:
            if x in payload_free_ix:
                x2 = _egensym(x)
                extra[x] = IdxVar(x2)
                idx_vars.append(x2)
            else:
                idx_vars.append(x)
        body = t.body if not extra else esubst_idx(t.body, extra)
        val_var = t.val_var
        if val_var in payload_free_tm:
            v2 = _egensym(val_var)
            body = esubst_term(body, {val_var: EVar(v2)})
            val_var = v2
        return EUnbox(tuple(idx_vars), val_var, box, esubst_term(body, m2), t.body_shape)
    raise TypeError(t)


def normalize_tags(t: ETerm) -> ETerm:
    """Respell every residual index canonically."""
    if isinstance(t, (EBase, EOp, EVar)):
        return t
    if isinstance(t, ELam):
        return replace(t, body=normalize_tags(t.body))
    if isinstance(t, EILam):
        return replace(t, body=normalize_tags(t.body))
    if isinstance(t, EBox):
        return EBox(tuple(_norm(i) for i in t.indices), normalize_tags(t.payload))
    if isinstance(t, EArray):
        return replace(t, atoms=tuple(normalize_tags(a) for a in t.atoms))
    if isinstance(t, EFrame):
        return EFrame(_norm(t.shape), tuple(normalize_tags(c) for c in t.cells))
    if isinstance(t, EApp):
        return EApp(
            normalize_tags(t.fn),
            tuple(normalize_tags(a) for a in t.args),
            tuple(_norm(i) for i in t.arg_shapes),
            _norm(t.out_shape),
        )
    if isinstance(t, EIApp):
        return EIApp(
            normalize_tags(t.fn),
            tuple(_norm(i) for i in t.idx_args),
            _norm(t.out_shape),
        )
    if isinstance(t, EUnbox):
        return EUnbox(
            t.idx_vars,
            t.val_var,
            normalize_tags(t.box),
            normalize_tags(t.body),
            _norm(t.body_shape),
        )
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Canonical freshening and alpha-comparison of erased terms


class _EFreshener:
    def __init__(self) -> None:
        self._n = 0

    def fresh(self, name: str) -> str:
        # positional names only: (lam (x) x) and (lam (y) y) must align
        self._n += 1
        return f"#a{self._n}"

    def idx(self, i: IndexExpr, ix: dict) -> IndexExpr:
        return subst_idx(i, {k: IdxVar(v) for k, v in ix.items()})

    def term(self, t: ETerm, ix: dict, tm: dict) -> ETerm:
        if isinstance(t, (EBase, EOp)):
            return t
        if isinstance(t, EVar):
            return EVar(tm.get(t.name, t.name))
        if isinstance(t, ELam):
            tm2 = dict(tm)
            params = []
            for x in t.params:
                x2 = self.fresh(x)
                tm2[x] = x2
                params.append(x2)
            return ELam(tuple(params), self.term(t.body, ix, tm2))
        if isinstance(t, EILam):
            ix2 = dict(ix)
            params = []
            for x in t.params:
                x2 = self.fresh(x)
                ix2[x] = x2
                params.append(x2)
            return EILam(tuple(params), self.term(t.body, ix2, tm))
        if isinstance(t, EBox):
            return EBox(
                tuple(self.idx(i, ix) for i in t.indices),
                self.term(t.payload, ix, tm),
            )
        if isinstance(t, EArray):
            return replace(t, atoms=tuple(self.term(a, ix, tm) for a in t.atoms))
        if isinstance(t, EFrame):
            return EFrame(
                self.idx(t.shape, ix), tuple(self.term(c, ix, tm) for c in t.cells)
            )
        if isinstance(t, EApp):
            return EApp(
                self.term(t.fn, ix, tm),
                tuple(self.term(a, ix, tm) for a in t.args),
                tuple(self.idx(i, ix) for i in t.arg_shapes),
                self.idx(t.out_shape, ix),
            )
        if isinstance(t, EIApp):
            return EIApp(
                self.term(t.fn, ix, tm),
                tuple(self.idx(i, ix) for i in t.idx_args),
                self.idx(t.out_shape, ix),
            )
        if isinstance(t, EUnbox):
            box = self.term(t.box, ix, tm)
            ix2 = dict(ix)
            idx_vars = []
            for x in t.idx_vars:
                x2 = self.fresh(x)
                ix2[x] = x2
                idx_vars.append(x2)
            tm2 = dict(tm)
            v2 = self.fresh(t.val_var)
            tm2[t.val_var] = v2
            return EUnbox(
                tuple(idx_vars),
                v2,
                box,
                self.term(t.body, ix2, tm2),
                self.idx(t.body_shape, ix),
            )
        raise TypeError(t)


def efreshen(t: ETerm) -> ETerm:
    return _EFreshener().term(t, {}, {})


def erased_alpha_equal(a: ETerm, b: ETerm) -> bool:
    """Alpha-equivalence with residual indices compared by canonical form.

    Freshening first aligns binder names positionally, so re-canonicalizing
    the tags afterwards produces identical spellings exactly when the tags
    are index-equal."""
    return normalize_tags(efreshen(a)) == normalize_tags(efreshen(b))


# ---------------------------------------------------------------------------
# Erased small-step evaluation


def _concrete_tag(i: IndexExpr) -> tuple[int, ...]:
    return canonicalize_shape(i).concrete_dims()


def erased_step(e: EExpr) -> Union[Stepped, AlreadyValue, Stuck]:
    if isinstance(e, EVar):
        return Stuck("internal", detail=f"free variable {e.name}")

    if isinstance(e, EArray):
        for i, a in enumerate(e.atoms):
            if is_evalue_atom(a):
                continue
            if not isinstance(a, EBox):
                return Stuck("internal", detail="non-value atom that is not a box")
            r = erased_step(a.payload)
            if isinstance(r, Stepped):
                atoms = e.atoms[:i] + (replace(a, payload=r.term),) + e.atoms[i + 1 :]
                return Stepped(replace(e, atoms=atoms), r.rule)
            return r
        return AlreadyValue()

    if isinstance(e, EFrame):
        for i, c in enumerate(e.cells):
            if is_evalue(c):
                continue
            r = erased_step(c)
            if isinstance(r, Stepped):
                cells = e.cells[:i] + (r.term,) + e.cells[i + 1 :]
                return Stepped(replace(e, cells=cells), r.rule)
            return r
        dims = _concrete_tag(e.shape)
        atoms = tuple(a for c in e.cells for a in c.atoms)  # type: ignore[union-attr]
        return Stepped(EArray(dims, atoms), "collapse")

    if isinstance(e, EApp):
        if not is_evalue(e.fn):
            r = erased_step(e.fn)
            if isinstance(r, Stepped):
                return Stepped(replace(e, fn=r.term), r.rule)
            return r
        for i, a in enumerate(e.args):
            if is_evalue(a):
                continue
            r = erased_step(a)
            if isinstance(r, Stepped):
                args = e.args[:i] + (r.term,) + e.args[i + 1 :]
                return Stepped(replace(e, args=args), r.rule)
            return r
        return _eapply(e)

    if isinstance(e, EIApp):
        if not is_evalue(e.fn):
            r = erased_step(e.fn)
            if isinstance(r, Stepped):
                return Stepped(replace(e, fn=r.term), r.rule)
            return r
        return _eibeta(e)

    if isinstance(e, EUnbox):
        if not is_evalue(e.box):
            r = erased_step(e.box)
            if isinstance(r, Stepped):
                return Stepped(replace(e, box=r.term), r.rule)
            return r
        return _eunbox(e)

    raise TypeError(e)


def _esplit_cells(atoms: list, cell_size: int, n_cells: int) -> list[list]:
    if cell_size == 0:
        return [[] for _ in range(n_cells)]
    return split_list(cell_size, atoms)


def _eapply(e: EApp) -> Union[Stepped, Stuck]:
    fn = e.fn
    assert isinstance(fn, EArray)
    cell_dims = []
    frames = [fn.dims]
    for arg, tag in zip(e.args, e.arg_shapes):
        assert isinstance(arg, EArray)
        cd = _concrete_tag(tag)
        k = len(arg.dims) - len(cd)
        if k < 0 or arg.dims[k:] != cd:
            return Stuck("internal", detail="argument shape does not end with its cell tag")
        cell_dims.append(cd)
        frames.append(arg.dims[:k])
    principal = max(frames, key=len)
    for fr in frames:
        if principal[: len(fr)] != fr:
            return Stuck("internal", detail="frames are not prefix-ordered")

    if any(fr != principal for fr in frames):
        n_p = element_count(principal)
        n_fe = (n_p // element_count(fn.dims)) if element_count(fn.dims) else 0
        new_fn = EArray(
            principal,
            tuple(concat_list(rep_list(n_fe, split_list(1, list(fn.atoms))))),
        )
        new_args = []
        for arg, cd, fr in zip(e.args, cell_dims, frames[1:]):
            n_a = element_count(fr)
            n_ae = (n_p // n_a) if n_a else 0
            pieces = split_list(element_count(cd), list(arg.atoms))  # type: ignore[union-attr]
            new_args.append(
                EArray(
                    principal + tuple(cd),
                    tuple(concat_list(rep_list(n_ae, pieces))),
                )
            )
        return Stepped(replace(e, fn=new_fn, args=tuple(new_args)), "lift")

    if principal:
        n_cells = element_count(principal)
        cells_per_arg = [
            _esplit_cells(list(arg.atoms), element_count(cd), n_cells)  # type: ignore[union-attr]
            for arg, cd in zip(e.args, cell_dims)
        ]
        grouped = (
            transpose_list(cells_per_arg)
            if cells_per_arg
            else [[] for _ in range(n_cells)]
        )
        out_full = _concrete_tag(e.out_shape)
        cell_out = shape_of_dims(out_full[len(principal) :])
        cells = []
        for j in range(n_cells):
            fn_cell = EArray((), (fn.atoms[j],))
            cell_args = tuple(
                EArray(tuple(cd), tuple(atoms))
                for atoms, cd in zip(grouped[j], cell_dims)
            )
            cells.append(EApp(fn_cell, cell_args, e.arg_shapes, cell_out))
        return Stepped(EFrame(e.out_shape, tuple(cells)), "map")

    head = fn.atoms[0]
    if isinstance(head, ELam):
        if len(head.params) != len(e.args):
            return Stuck("internal", detail="arity mismatch in beta")
        binding = {x: arg for x, arg in zip(head.params, e.args)}
        return Stepped(esubst_term(head.body, binding), "beta")
    if isinstance(head, EOp):
        try:
            result = _edelta(head.name, e.arg_shapes, e.out_shape, e.args)
        except Misapplied as exc:
            return Stuck("misapplied", op=exc.op, detail=exc.detail)
        return Stepped(result, "delta")
    return Stuck("internal", detail="scalar application head is not lam or operator")


def _eibeta(e: EIApp) -> Union[Stepped, Stuck]:
    fn = e.fn
    assert isinstance(fn, EArray)
    cells = []
    for atom in fn.atoms:
        if isinstance(atom, EILam):
            if len(atom.params) != len(e.idx_args):
                return Stuck("internal", detail="ibeta arity mismatch")
            m = {x: i for x, i in zip(atom.params, e.idx_args)}
            cells.append(normalize_tags(esubst_idx(atom.body, m)))
        elif isinstance(atom, EOp):
            cells.append(EArray((), (atom,)))
        else:
            return Stuck("internal", detail="ibeta over a non-abstraction atom")
    return Stepped(EFrame(e.out_shape, tuple(cells)), "ibeta")


def _eunbox(e: EUnbox) -> Union[Stepped, Stuck]:
    arr = e.box
    assert isinstance(arr, EArray)
    cells = []
    for atom in arr.atoms:
        if not isinstance(atom, EBox):
            return Stuck("internal", detail="unbox over a non-box atom")
        if len(atom.indices) != len(e.idx_vars):
            return Stuck("internal", detail="unbox arity mismatch")
        m = {x: i for x, i in zip(e.idx_vars, atom.indices)}
        body = normalize_tags(esubst_idx(e.body, m))
        cells.append(esubst_term(body, {e.val_var: atom.payload}))
    tag = _norm(IdxAppend((shape_of_dims(arr.dims), e.body_shape)))
    return Stepped(EFrame(tag, tuple(cells)), "unbox")


# ---------------------------------------------------------------------------
# Erased delta rules (independent of the typed registry)


def _e_num(x: float) -> EBase:
    return EBase("Num", float(x))


def _e_scalar_num(v: EArray) -> float:
    return v.atoms[0].value  # type: ignore[union-attr]


def _edelta(name, arg_shapes, out_shape, args) -> EExpr:
    if name in ("+", "-", "*", "/", "<", "="):
        x, y = _e_scalar_num(args[0]), _e_scalar_num(args[1])
        if name == "/":
            if y == 0.0:
                raise Misapplied("/", "division by zero")
            return EArray((), (_e_num(x / y),))
        if name == "+":
            return EArray((), (_e_num(x + y),))
        if name == "-":
            return EArray((), (_e_num(x - y),))
        if name == "*":
            return EArray((), (_e_num(x * y),))
        if name == "<":
            return EArray((), (EBase("Bool", x < y),))
        return EArray((), (EBase("Bool", x == y),))
    if name == "head":
        subject = args[0]
        cell = subject.dims[1:]
        return EArray(cell, subject.atoms[: element_count(cell)])
    if name == "append":
        x, y = args
        return EArray((x.dims[0] + y.dims[0],) + x.dims[1:], x.atoms + y.atoms)
    if name == "reduce":
        f_val, subject = args
        cell_dims = _concrete_tag(out_shape)
        size = element_count(cell_dims)
        count = subject.dims[0]
        cell_tag = shape_of_dims(cell_dims)
        cells = [
            EArray(cell_dims, subject.atoms[i * size : (i + 1) * size])
            for i in range(count)
        ]
        acc = cells[-1]
        for cell in reversed(cells[:-1]):
            acc = EApp(f_val, (cell, acc), (cell_tag, cell_tag), cell_tag)
        return acc
    if name == "iota/v":
        n = _shape_entry(_e_scalar_num(args[0]))
        payload = EArray((n,), tuple(_e_num(i) for i in range(n)))
        return EArray((), (EBox((NatLit(n),), payload),))
    if name == "iota/s":
        dims = _concrete_tag(out_shape)
        return EArray(dims, tuple(_e_num(i) for i in range(element_count(dims))))
    if name == "reshape":
        spec_vec, data = args
        dims = tuple(_shape_entry(a.value) for a in spec_vec.atoms)  # type: ignore[union-attr]
        count = element_count(dims)
        if count > 0 and not data.atoms:
            raise Misapplied("reshape", "cannot cycle atoms of an empty array")
        atoms = tuple(data.atoms[i % len(data.atoms)] for i in range(count))
        return EArray((), (EBox((shape_of_dims(dims),), EArray(dims, atoms)),))
    if name == "ravel":
        data = args[0]
        n = len(data.atoms)
        return EArray((), (EBox((NatLit(n),), EArray((n,), data.atoms)),))
    if name == "filter":
        flags, subject = args
        cell = subject.dims[1:]
        size = element_count(cell)
        kept: list = []
        m = 0
        for i, flag in enumerate(flags.atoms):
            if flag.value:  # type: ignore[union-attr]
                kept.extend(subject.atoms[i * size : (i + 1) * size])
                m += 1
        return EArray(
            (), (EBox((NatLit(m),), EArray((m,) + cell, tuple(kept))),)
        )
    raise Misapplied(name, "unknown operator")


def erased_evaluate(e: EExpr, fuel: int = 100_000, trace: bool = False) -> EvalResult:
    log = [] if trace else None
    current = e
    for n in range(fuel):
        r = erased_step(current)
        if isinstance(r, AlreadyValue):
            return EvalResult("value", current, n, trace=log)
        if isinstance(r, Stuck):
            return EvalResult("stuck", current, n, stuck=r, trace=log)
        current = r.term
        if log is not None:
            log.append((r.rule, current))
    return EvalResult("fuel", current, fuel, trace=log)


# ---------------------------------------------------------------------------
# Lockstep harness


@dataclass
class BisimReport:
    outcome: str  # "both-value" | "both-stuck" | "diverged" | "mismatch"
    steps: int
    mismatch_step: Optional[int] = None
    typed_term: Optional[ExprTerm] = None
    erased_term: Optional[EExpr] = None
    trace: Optional[list[tuple[str, str]]] = None  # (typed rule, erased rule)


def bisim_run(t: ExprTerm, fuel: int = 10_000, trace: bool = False) -> BisimReport:
    """Run the typed and erased machines side by side, asserting after each
    typed step that erasing the new typed state reproduces the erased
    machine's next state up to alpha-renaming of binders."""
    typed = t
    erased = erase_term(t)
    log: Optional[list[tuple[str, str]]] = [] if trace else None
    for n in range(fuel + 1):
        rt = typed_step(typed)
        re = erased_step(erased)
        if isinstance(rt, AlreadyValue):
            ok = isinstance(re, AlreadyValue) and erased_alpha_equal(
                erase_term(typed), erased
            )
            if ok:
                return BisimReport("both-value", n, trace=log)
            return BisimReport(
                "mismatch", n, mismatch_step=n, typed_term=typed, erased_term=erased, trace=log
            )
        if isinstance(rt, Stuck):
            if isinstance(re, Stuck) and re.reason == rt.reason == "misapplied":
                return BisimReport("both-stuck", n, trace=log)
            return BisimReport(
                "mismatch", n, mismatch_step=n, typed_term=typed, erased_term=erased, trace=log
            )
        if not isinstance(re, Stepped):
            return BisimReport(
                "mismatch", n, mismatch_step=n, typed_term=typed, erased_term=erased, trace=log
            )
        typed = rt.term
        erased = re.term
        if log is not None:
            log.append((rt.rule, re.rule))
        if not erased_alpha_equal(erase_term(typed), erased):
            return BisimReport(
                "mismatch", n + 1, mismatch_step=n + 1, typed_term=typed, erased_term=erased, trace=log
            )
    return BisimReport("diverged", fuel, trace=log)


# ---------------------------------------------------------------------------
# Printing


def print_erased(t: ETerm) -> str:
    if isinstance(t, EBase):
        if t.base == "Num":
            return print_num(t.value)  # type: ignore[arg-type]
        if t.base == "Bool":
            return "#t" if t.value else "#f"
        return "#\\" + str(t.value)
    if isinstance(t, EOp):
        return t.name
    if isinstance(t, EVar):
        return t.name
    if isinstance(t, ELam):
        return f"(lam ({' '.join(t.params)}) {print_erased(t.body)})"
    if isinstance(t, EILam):
        return f"(ilam ({' '.join(t.params)}) {print_erased(t.body)})"
    if isinstance(t, EBox):
        idxs = " ".join(print_index(i) for i in t.indices)
        sep = " " if idxs else ""
        return f"(box {idxs}{sep}{print_erased(t.payload)})"
    if isinstance(t, EArray):
        dims = " ".join(str(d) for d in t.dims)
        atoms = " ".join(print_erased(a) for a in t.atoms)
        sep = " " if atoms else ""
        return f"(array ({dims}){sep}{atoms})"
    if isinstance(t, EFrame):
        cells = " ".join(print_erased(c) for c in t.cells)
        sep = " " if cells else ""
        return f"(frame {print_index(t.shape)}{sep}{cells})"
    if isinstance(t, EApp):
        args = " ".join(
            f"({print_erased(a)} : {print_index(s)})"
            for a, s in zip(t.args, t.arg_shapes)
        )
        sep = " " if args else ""
        return f"({print_erased(t.fn)}{sep}{args} : {print_index(t.out_shape)})"
    if isinstance(t, EIApp):
        idxs = " ".join(print_index(i) for i in t.idx_args)
        sep = " " if idxs else ""
        return f"(i-app {print_erased(t.fn)}{sep}{idxs} : {print_index(t.out_shape)})"
    if isinstance(t, EUnbox):
        names = " ".join(t.idx_vars + (t.val_var,))
        return (
            f"(unbox ({names} {print_erased(t.box)}) {print_erased(t.body)}"
            f" : {print_index(t.body_shape)})"
        )
    raise TypeError(t)
