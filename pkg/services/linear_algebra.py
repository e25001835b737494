"""
Álgebra lineal exacta sobre Q

Eliminación gaussiana dispersa con fracciones: cada fila nueva se reduce contra
los pivotes existentes y, si aporta rango, se despeja su pivote en función de
las columnas libres. Las expresiones de pivote solo contienen columnas libres,
de modo que el núcleo se lee directamente.
"""

import logging
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set

logger = logging.getLogger(__name__)

Row = Mapping[int, Fraction]
DenseVector = List[Fraction]


class ExactKernel:
    """
    Núcleo incremental de un sistema homogéneo con ncols incógnitas

    Args:
        ncols: número de columnas (incógnitas)
        column_key: clave de orden de columnas; el pivote de cada fila es
            su columna máxima según esta clave
    """

    def __init__(self, ncols: int, column_key: Optional[Callable[[int], object]] = None):
        self.ncols = ncols
        self._key = column_key or (lambda c: c)
        # pivote -> {columna libre: coeficiente}
        self._pivots: Dict[int, Dict[int, Fraction]] = {}
        # columna libre -> pivotes cuya expresión la contiene
        self._uses: Dict[int, Set[int]] = {}

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def reduce(self, row: Row) -> Dict[int, Fraction]:
        """Expresa la fila solo en columnas libres"""
        reducida: Dict[int, Fraction] = {}
        for col, a in row.items():
            if not a:
                continue
            expr = self._pivots.get(col)
            if expr is None:
                reducida[col] = reducida.get(col, 0) + a
            else:
                for f, b in expr.items():
                    reducida[f] = reducida.get(f, 0) + a * b
        return {c: a for c, a in reducida.items() if a}

    def add_row(self, row: Row) -> bool:
        """Añade la ecuación Σ row[c]·x_c = 0; True si el rango crece"""
        reducida = self.reduce(row)
        if not reducida:
            return False
        p = max(reducida, key=self._key)
        a_p = reducida.pop(p)
        expr = {f: Fraction(-a, 1) / a_p for f, a in reducida.items()}

        # sustituir x_p en los pivotes que lo usaban
        for q in self._uses.pop(p, ()):
            destino = self._pivots[q]
            coef = destino.pop(p)
            for f, b in expr.items():
                nuevo = destino.get(f, 0) + coef * b
                if nuevo:
                    destino[f] = nuevo
                    self._uses.setdefault(f, set()).add(q)
                else:
                    destino.pop(f, None)
                    self._uses.get(f, set()).discard(q)

        self._pivots[p] = expr
        for f in expr:
            self._uses.setdefault(f, set()).add(p)
        return True

    def satisfies(self, vec: Sequence[Fraction], row: Row) -> bool:
        return sum((a * vec[c] for c, a in row.items()), Fraction(0)) == 0

    def free_columns(self) -> List[int]:
        return [c for c in range(self.ncols) if c not in self._pivots]

    def kernel_basis(self) -> List[DenseVector]:
        """Un vector por columna libre (orden creciente de índice)"""
        base: List[DenseVector] = []
        for f in self.free_columns():
            v = [Fraction(0)] * self.ncols
            v[f] = Fraction(1)
            for q in self._uses.get(f, ()):
                v[q] = self._pivots[q][f]
            base.append(v)
        return base


# ============================================================================
# FORMA CANÓNICA DE SUBESPACIOS
# ============================================================================

def reduced_row_echelon(vectors: Sequence[Sequence]) -> List[DenseVector]:
    """
    Base canónica del subespacio generado

    Cada vector tiene su primera entrada no nula igual a 1 y esa columna es
    nula en los demás; las filas se ordenan por columna pivote.
    """
    filas = [[Fraction(x) for x in v] for v in vectors]
    if not filas:
        return []
    ncols = len(filas[0])
    resultado: List[DenseVector] = []
    pivotes: List[int] = []
    for fila in filas:
        for p, r in zip(pivotes, resultado):
            if fila[p]:
                k = fila[p]
                fila = [a - k * b for a, b in zip(fila, r)]
        lider = next((c for c in range(ncols) if fila[c]), None)
        if lider is None:
            continue
        k = fila[lider]
        fila = [a / k for a in fila]
        for i, r in enumerate(resultado):
            if r[lider]:
                c = r[lider]
                resultado[i] = [a - c * b for a, b in zip(r, fila)]
        resultado.append(fila)
        pivotes.append(lider)
    orden = sorted(range(len(resultado)), key=lambda i: pivotes[i])
    return [resultado[i] for i in orden]


def same_span(a: Sequence[Sequence], b: Sequence[Sequence]) -> bool:
    return reduced_row_echelon(a) == reduced_row_echelon(b)


def proportionality_factor(f: Sequence, g: Sequence) -> Optional[Fraction]:
    """c con f = c·g si ambos son no nulos y proporcionales; None en otro caso"""
    if len(f) != len(g):
        return None
    i = next((k for k, x in enumerate(g) if x), None)
    if i is None or not f[i]:
        return None
    c = Fraction(f[i]) / Fraction(g[i])
    if all(Fraction(a) == c * b for a, b in zip(f, g)):
        return c
    return None


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> Optional[DenseVector]:
    """
    Única solución x de A·x = b, o None si el sistema es incompatible o
    indeterminado
    """
    if len(rows) != len(rhs):
        raise ValueError(f"{len(rows)} filas para {len(rhs)} términos independientes")
    if not rows:
        return None
    ncols = len(rows[0])
    aumentada = reduced_row_echelon([list(fila) + [b] for fila, b in zip(rows, rhs)])
    pivotes = [next(c for c, a in enumerate(fila) if a) for fila in aumentada]
    if ncols in pivotes or len(pivotes) != ncols:
        return None
    return [fila[ncols] for fila in aumentada]
