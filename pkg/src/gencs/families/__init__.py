"""Concrete coherent-state families."""

from ..errors import InputError
from .base import Family
from .boson import BosonFamily
from .fermion import FermionFamily
from .spin import SpinFamily

FAMILIES = {"spin": SpinFamily, "boson": BosonFamily, "fermion": FermionFamily}


def make_family(kind: str, n: int) -> Family:
    try:
        cls = FAMILIES[kind]
    except KeyError:
        raise InputError(f"unknown family {kind!r}; expected one of {sorted(FAMILIES)}") from None
    return cls(n)


__all__ = ["Family", "SpinFamily", "BosonFamily", "FermionFamily", "FAMILIES", "make_family"]
