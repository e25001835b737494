"""
Núcleo de retículo Z^N

Vectores enteros que indexan las componentes graduadas, la forma simpléctica
estándar, la aplicación barra, primitividad y el orden lexicográfico canónico.

Convenciones:
- Un LatticeVector es una tupla de enteros Python (precisión arbitraria).
- Un Scalar es un fractions.Fraction (siempre en términos mínimos).
- N = 2m es un parámetro de ejecución: cada función lo toma de sus argumentos.
"""

import itertools
import math
import re
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from services.errors import (
    DimensionMismatchError,
    InvalidDocumentError,
    InvalidVectorError,
)

LatticeVector = Tuple[int, ...]
Scalar = Fraction

_SCALAR_RE = re.compile(r"^-?\d+(/\d+)?$")


# ============================================================================
# VALIDACIÓN
# ============================================================================

def check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise InvalidVectorError(f"La dimensión N debe ser par y >= 2 (recibido {n})")


def check_same_dimension(r: Sequence[int], s: Sequence[int]) -> None:
    if len(r) != len(s):
        raise DimensionMismatchError(f"Dimensiones distintas: {len(r)} vs {len(s)}")


def vector(coords: Iterable[int]) -> LatticeVector:
    """Construye un LatticeVector validando que las coordenadas son enteras"""
    r = tuple(coords)
    for c in r:
        if isinstance(c, bool) or not isinstance(c, int):
            raise InvalidVectorError(f"Coordenada no entera: {c!r}")
    return r


# ============================================================================
# ARITMÉTICA DE VECTORES
# ============================================================================

def zero(n: int) -> LatticeVector:
    return (0,) * n


def unit(n: int, i: int) -> LatticeVector:
    """Vector e_i (índice desde 0)"""
    return tuple(1 if j == i else 0 for j in range(n))


def add(r: LatticeVector, s: LatticeVector) -> LatticeVector:
    return tuple(a + b for a, b in zip(r, s))


def sub(r: LatticeVector, s: LatticeVector) -> LatticeVector:
    return tuple(a - b for a, b in zip(r, s))


def neg(r: LatticeVector) -> LatticeVector:
    return tuple(-a for a in r)


def scale(k: int, r: LatticeVector) -> LatticeVector:
    return tuple(k * a for a in r)


def dot(u: Sequence, r: Sequence) -> Union[int, Fraction]:
    """Producto escalar estándar (u, r); admite coeficientes racionales en u"""
    return sum((a * b for a, b in zip(u, r)), 0)


def is_zero(r: LatticeVector) -> bool:
    return not any(r)


def sup_norm(r: LatticeVector) -> int:
    return max((abs(a) for a in r), default=0)


def gcd_of(r: LatticeVector) -> int:
    return reduce(math.gcd, r, 0)


# ============================================================================
# FORMA SIMPLÉCTICA
# ============================================================================

def bar(r: LatticeVector) -> LatticeVector:
    """Aplicación barra r ↦ Jr = (r_{m+1},…,r_{2m}, −r_1,…,−r_m)"""
    n = len(r)
    if n % 2:
        raise InvalidVectorError(f"La aplicación barra requiere longitud par (recibido {n})")
    m = n // 2
    return tuple(r[m:]) + tuple(-a for a in r[:m])


def pairing(r: LatticeVector, s: LatticeVector) -> int:
    """ω(r, s) = (bar(r), s) = Σ r_{m+i} s_i − Σ r_i s_{m+i}"""
    check_same_dimension(r, s)
    n = len(r)
    if n % 2:
        raise InvalidVectorError(f"La forma simpléctica requiere longitud par (recibido {n})")
    m = n // 2
    total = 0
    for i in range(m):
        total += r[m + i] * s[i] - r[i] * s[m + i]
    return total


def is_primitive(r: LatticeVector) -> bool:
    if is_zero(r):
        raise InvalidVectorError("El vector cero no tiene sentido como vector primitivo")
    return gcd_of(r) == 1


def lex_compare(r: LatticeVector, s: LatticeVector) -> int:
    """Orden lexicográfico: −1 si r < s, 0 si r = s, 1 si r > s"""
    check_same_dimension(r, s)
    for a, b in zip(r, s):
        if a != b:
            return -1 if a < b else 1
    return 0


def is_collinear(r: LatticeVector, s: LatticeVector) -> bool:
    """True si s ∈ Q·r (todos los menores 2×2 se anulan)"""
    n = len(r)
    for i in range(n):
        for j in range(i + 1, n):
            if r[i] * s[j] - r[j] * s[i]:
                return False
    return True


def box_vectors(n: int, radius: int) -> List[LatticeVector]:
    """Todos los r con 0 < |r|∞ <= radius, en orden lexicográfico"""
    rango = range(-radius, radius + 1)
    return [r for r in itertools.product(rango, repeat=n) if any(r)]


# ============================================================================
# CODEC JSON
# ============================================================================

def format_scalar(q: Fraction) -> str:
    """Escalar como "p/q" (o "p" si q = 1)"""
    return str(Fraction(q))


def parse_scalar(text: Union[str, int]) -> Fraction:
    if isinstance(text, bool):
        raise InvalidDocumentError(f"Escalar inválido: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str) or not _SCALAR_RE.match(text.strip()):
        raise InvalidDocumentError(f"Escalar inválido: {text!r} (formato esperado 'p' o 'p/q')")
    try:
        return Fraction(text.strip())
    except ZeroDivisionError:
        raise InvalidDocumentError(f"Denominador cero en {text!r}")


def parse_vector(data, n: Optional[int] = None) -> LatticeVector:
    if not isinstance(data, list):
        raise InvalidDocumentError(f"Se esperaba un array de enteros, recibido {type(data).__name__}")
    try:
        r = vector(data)
    except InvalidVectorError as e:
        raise InvalidDocumentError(e.detail)
    if n is not None and len(r) != n:
        raise DimensionMismatchError(f"Vector de longitud {len(r)}, se esperaba N = {n}")
    return r
