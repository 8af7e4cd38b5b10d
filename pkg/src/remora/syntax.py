"""Abstract syntax shared by every stage: type indices, types, and the
two-layer term language (atoms and array expressions).

All nodes are immutable dataclasses. Term nodes carry an optional type
annotation slot (``annot``) which elaboration fills in on every node, and a
source location that never participates in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


class Sort(Enum):
    DIM = "Dim"
    SHAPE = "Shape"

    def __str__(self) -> str:
        return self.value


class Kind(Enum):
    ATOM = "Atom"
    ARRAY = "Array"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SourceLocation:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def _loc_field():
    return field(default=None, compare=False, kw_only=True)


# ---------------------------------------------------------------------------
# Type indices


@dataclass(frozen=True)
class NatLit:
    value: int
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class IdxVar:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class Plus:
    operands: tuple[IndexExpr, ...]
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class ShapeLit:
    """A literal sequence of dimensions, written (Shp d ...)."""

    dims: tuple[IndexExpr, ...]
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class IdxAppend:
    """Shape concatenation, written (++ s ...)."""

    operands: tuple[IndexExpr, ...]
    loc: Optional[SourceLocation] = _loc_field()


IndexExpr = Union[NatLit, IdxVar, Plus, ShapeLit, IdxAppend]

SCALAR_SHAPE = ShapeLit(())


def shape_of_dims(dims: tuple[int, ...] | list[int]) -> ShapeLit:
    return ShapeLit(tuple(NatLit(n) for n in dims))


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class BaseType:
    name: str  # one of Num, Bool, Char
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class TyVar:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class FunType:
    inputs: tuple[TypeExpr, ...]
    output: TypeExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class ArrType:
    elem: TypeExpr
    shape: IndexExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class ForallType:
    binders: tuple[tuple[str, Kind], ...]
    body: TypeExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class PiType:
    binders: tuple[tuple[str, Sort], ...]
    body: TypeExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class SigmaType:
    binders: tuple[tuple[str, Sort], ...]
    body: TypeExpr
    loc: Optional[SourceLocation] = _loc_field()


TypeExpr = Union[BaseType, TyVar, FunType, ArrType, ForallType, PiType, SigmaType]

NUM = BaseType("Num")
BOOL = BaseType("Bool")
CHAR = BaseType("Char")
BASE_TYPE_NAMES = ("Num", "Bool", "Char")


def scalar_of(elem: TypeExpr) -> ArrType:
    return ArrType(elem, SCALAR_SHAPE)


# ---------------------------------------------------------------------------
# Terms: atoms and expressions

_annot_field = lambda: field(default=None, compare=True, kw_only=True)  # noqa: E731


@dataclass(frozen=True)
class BaseVal:
    """A base-type literal. ``base`` disambiguates Num/Bool/Char so that
    e.g. True and 1.0 do not compare equal."""

    base: str
    value: object
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class PrimOp:
    name: str
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class Lam:
    params: tuple[tuple[str, TypeExpr], ...]
    body: ExprTerm
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class TLam:
    binders: tuple[tuple[str, Kind], ...]
    body: ExprTerm
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class ILam:
    binders: tuple[tuple[str, Sort], ...]
    body: ExprTerm
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class Box:
    """An atom hiding part of an array's shape; the Sigma annotation is part
    of the syntax, not an elaboration artifact."""

    indices: tuple[IndexExpr, ...]
    payload: ExprTerm
    box_type: TypeExpr
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


AtomTerm = Union[BaseVal, PrimOp, Lam, TLam, ILam, Box]


@dataclass(frozen=True)
class Var:
    name: str
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class ArrayLit:
    dims: tuple[int, ...]
    atoms: tuple[AtomTerm, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class Frame:
    dims: tuple[int, ...]
    cells: tuple[ExprTerm, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class EmptyArray:
    elem_type: TypeExpr
    dims: tuple[int, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class EmptyFrame:
    cell_type: TypeExpr
    dims: tuple[int, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class App:
    fn: ExprTerm
    args: tuple[ExprTerm, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class TApp:
    fn: ExprTerm
    type_args: tuple[TypeExpr, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class IApp:
    fn: ExprTerm
    idx_args: tuple[IndexExpr, ...]
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


@dataclass(frozen=True)
class Unbox:
    idx_vars: tuple[str, ...]
    val_var: str
    box: ExprTerm
    body: ExprTerm
    annot: Optional[TypeExpr] = _annot_field()
    loc: Optional[SourceLocation] = _loc_field()


ExprTerm = Union[
    Var, ArrayLit, Frame, EmptyArray, EmptyFrame, App, TApp, IApp, Unbox
]

Term = Union[AtomTerm, ExprTerm]


def num(x: float) -> BaseVal:
    return BaseVal("Num", float(x))


def boolean(b: bool) -> BaseVal:
    return BaseVal("Bool", bool(b))


def char(c: str) -> BaseVal:
    return BaseVal("Char", c)


def scalar_array(atom: AtomTerm, annot: Optional[TypeExpr] = None) -> ArrayLit:
    return ArrayLit((), (atom,), annot=annot)


def is_atom(t: Term) -> bool:
    return isinstance(t, (BaseVal, PrimOp, Lam, TLam, ILam, Box))


def is_expr(t: Term) -> bool:
    return not is_atom(t)
