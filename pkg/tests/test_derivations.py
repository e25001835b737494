#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests para el cálculo exacto de derivaciones graduadas
"""

import unittest
from fractions import Fraction

import numpy as np

from services.algebra import HamiltonianElement
from services.derivations import (
    GradedDerivation,
    TruncationBox,
    _leibniz_system,
    _seed_hint,
    _solve,
    certify_degrees,
    certify_inner,
    constraint_rows,
    degree_zero_character_solve,
    inner_coefficient,
    inner_derivation,
    is_linear_character,
    leibniz_residuals,
    predicted_derivations,
    remove_inner_part,
    solve_graded_derivations,
)
from services.errors import BoxTooSmallError, DimensionMismatchError, NonHomogeneousError
from services.lattice_core import add, box_vectors, neg, pairing
from services.linear_algebra import ExactKernel, proportionality_factor, reduced_row_echelon, same_span, solve_exact


class TestAlgebraLinealExacta(unittest.TestCase):
    def test_nucleo_pequeno(self):
        """x0 + x1 = 0, x1 − x2 = 0 deja un núcleo de dimensión 1"""
        k = ExactKernel(3)
        self.assertTrue(k.add_row({0: Fraction(1), 1: Fraction(1)}))
        self.assertTrue(k.add_row({1: Fraction(1), 2: Fraction(-1)}))
        self.assertFalse(k.add_row({0: Fraction(1), 2: Fraction(1)}))
        self.assertEqual(k.rank, 2)
        base = k.kernel_basis()
        self.assertEqual(len(base), 1)
        self.assertEqual(reduced_row_echelon(base), [[1, -1, -1]])

    def test_forma_escalonada(self):
        filas = reduced_row_echelon([[0, 2, 4], [1, 1, 1], [1, 2, 3]])
        self.assertEqual(filas, [[1, 0, -1], [0, 1, 2]])
        self.assertTrue(same_span([[1, 1, 0]], [[2, 2, 0]]))
        self.assertFalse(same_span([[1, 1, 0]], [[1, 0, 0]]))

    def test_solucion_exacta(self):
        """Sistema 2×2 con solución única; incompatible e indeterminado dan None"""
        self.assertEqual(solve_exact([[1, 1], [1, -1]], [3, 1]), [2, 1])
        self.assertEqual(solve_exact([[2, 0], [0, 3]], [1, 1]), [Fraction(1, 2), Fraction(1, 3)])
        self.assertIsNone(solve_exact([[1, 1], [2, 2]], [1, 3]))
        self.assertIsNone(solve_exact([[1, 1], [2, 2]], [1, 2]))

    def test_proporcionalidad(self):
        self.assertEqual(proportionality_factor([2, 4, 0], [1, 2, 0]), 2)
        self.assertIsNone(proportionality_factor([2, 4, 1], [1, 2, 0]))
        self.assertIsNone(proportionality_factor([0, 0], [0, 0]))


class TestCaja(unittest.TestCase):
    def test_radio_minimo(self):
        with self.assertRaises(BoxTooSmallError):
            TruncationBox(2, 1)

    def test_grado_fuera_de_la_caja(self):
        with self.assertRaises(BoxTooSmallError):
            solve_graded_derivations((4, 0), TruncationBox(2, 3))

    def test_dimension(self):
        with self.assertRaises(DimensionMismatchError):
            solve_graded_derivations((1, 0, 0, 0), TruncationBox(2, 3))

    def test_filas_no_nulas(self):
        for fila in constraint_rows((1, 0), TruncationBox(2, 2)):
            self.assertTrue(fila)
            self.assertTrue(all(v != 0 for v in fila.values()))


class TestDerivacionesInternas(unittest.TestCase):
    def setUp(self):
        self.box = TruncationBox(2, 2)

    def test_ad_de_generador(self):
        """ad(h_(1,0)) sobre h_(0,1) tiene coeficiente ω((1,0),(0,1)) = −1"""
        d = inner_derivation(HamiltonianElement.basis((1, 0)), (1, 0), self.box)
        self.assertEqual(d.value((0, 1)), -1)
        self.assertEqual(d.value((-1, 0)), 0)

    def test_cero(self):
        d = inner_derivation(HamiltonianElement.zero(2), (1, 0), self.box)
        self.assertTrue(all(v == 0 for v in d.values))

    def test_cartan(self):
        d = inner_derivation(HamiltonianElement.cartan_element((1, 0)), (0, 0), self.box)
        self.assertEqual(d.value((2, 1)), 2)

    def test_no_homogeneo(self):
        x = HamiltonianElement.basis((1, 0)) + HamiltonianElement.basis((0, 1))
        with self.assertRaises(NonHomogeneousError):
            inner_derivation(x, (1, 0), self.box)
        with self.assertRaises(NonHomogeneousError):
            inner_derivation(HamiltonianElement.basis((1, 0)), (0, 0), self.box)

    def test_leibniz_de_internas(self):
        for grado in [(0, 0)] + box_vectors(2, 1):
            for p in predicted_derivations(grado, self.box):
                self.assertEqual(leibniz_residuals(p), [])

    def test_leibniz_detecta_no_derivaciones(self):
        """c_r = 1 no es aditivo"""
        falsa = GradedDerivation((0, 0), self.box, tuple(Fraction(1) for _ in self.box.vectors()))
        self.assertTrue(leibniz_residuals(falsa))


class TestResolucion(unittest.TestCase):
    def test_grado_1_0_radio_3(self):
        """Dimensión 1, generado por ad(h_(1,0))"""
        box = TruncationBox(2, 3)
        base = solve_graded_derivations((1, 0), box)
        self.assertEqual(len(base), 1)
        prediccion = inner_derivation(HamiltonianElement.basis((1, 0)), (1, 0), box)
        self.assertIsNotNone(proportionality_factor(prediccion.values, base[0].values))
        primera = next(v for v in base[0].values if v)
        self.assertEqual(primera, 1)

    def test_grado_cero_radio_3(self):
        """Dimensión 2, generado por c_r = r_1 y c_r = r_2"""
        box = TruncationBox(2, 3)
        base = solve_graded_derivations((0, 0), box)
        self.assertEqual(len(base), 2)
        lineales = [[Fraction(r[i]) for r in box.vectors()] for i in range(2)]
        self.assertTrue(same_span([b.values for b in base], lineales))

    def test_sin_salida_temprana_coincide(self):
        box = TruncationBox(2, 3)
        rapido = solve_graded_derivations((1, 1), box)
        completo = solve_graded_derivations((1, 1), box, early_exit=False)
        self.assertEqual([b.values for b in rapido], [b.values for b in completo])

    def test_soluciones_cumplen_leibniz(self):
        box = TruncationBox(2, 3)
        for grado in ((0, 0), (1, -1), (2, 1)):
            for b in solve_graded_derivations(grado, box):
                self.assertEqual(leibniz_residuals(b), [])
                if any(grado):
                    self.assertEqual(b.value(neg(grado)), 0)

    def test_sistema_reducido_coincide(self):
        """Sin predicciones se resuelve el sistema en las semillas y se obtiene la misma base"""
        box = TruncationBox(2, 3)
        for grado in ((1, 0), (2, -1), (0, 0)):
            sistema = _leibniz_system(grado, box)
            vacio = np.zeros((0, len(box.vectors())), dtype=np.int64)
            reducido = _solve(sistema, box, vacio, _seed_hint(grado, box), early_exit=True)
            completo = solve_graded_derivations(grado, box, early_exit=False)
            self.assertEqual(reducido, [list(b.values) for b in completo])

    def test_filas_coinciden_con_la_definicion(self):
        """Cada fila es ω(r,s)·v[r+s] − ω(r+d,s)·v[r] − ω(r,s+d)·v[s]"""
        box = TruncationBox(2, 2)
        d = (1, -1)
        idx = box.index()
        esperadas = set()
        caja = box.vectors()
        for i, r in enumerate(caja):
            for s in caja[i + 1:]:
                t = add(r, s)
                if not box.contains(t):
                    continue
                fila = {}
                for c, a in ((idx[t], pairing(r, s)), (idx[r], -pairing(add(r, d), s)), (idx[s], -pairing(r, add(s, d)))):
                    if a:
                        fila[c] = fila.get(c, 0) + a
                fila = {c: a for c, a in fila.items() if a}
                if fila:
                    esperadas.add(frozenset(fila.items()))
        obtenidas = {frozenset((c, int(a)) for c, a in fila.items()) for fila in constraint_rows(d, box)}
        self.assertEqual(obtenidas, esperadas)

    def test_monotonia_en_el_radio(self):
        """Ampliar la caja nunca aumenta la dimensión"""
        d3 = len(solve_graded_derivations((1, 0), TruncationBox(2, 3)))
        d4 = len(solve_graded_derivations((1, 0), TruncationBox(2, 4)))
        self.assertLessEqual(d4, d3)


class TestCertificacion(unittest.TestCase):
    def test_ejemplos_n2(self):
        informe = certify_inner((1, 1), TruncationBox(2, 3))
        self.assertTrue(informe.match)
        self.assertEqual(informe.dimension, 1)
        informe = certify_inner((2, -1), TruncationBox(2, 4))
        self.assertTrue(informe.match)
        self.assertEqual(informe.dimension, 1)

    def test_n4_grado_cero(self):
        informe = certify_inner((0, 0, 0, 0), TruncationBox(4, 2))
        self.assertTrue(informe.match)
        self.assertEqual(informe.dimension, 4)
        self.assertEqual(informe.expected, 4)

    def test_todos_los_grados_n2(self):
        """|grado|∞ <= 1, radio 3: todas las derivaciones son internas"""
        box = TruncationBox(2, 3)
        grados = [(0, 0)] + box_vectors(2, 1)
        informes = certify_degrees(box, grados, workers=4)
        self.assertEqual([i.degree for i in informes], grados)
        for informe in informes:
            self.assertTrue(informe.match, informe.to_dict())

    def test_n4_grados_no_nulos_radio_3(self):
        """En N = 4 y radio 3 las derivaciones de grado no nulo son internas"""
        box = TruncationBox(4, 3)
        for grado in ((1, 0, 0, 0), (2, -1, 1, 0), (0, 0, -2, 2)):
            informe = certify_inner(grado, box)
            self.assertTrue(informe.match, informe.to_dict())
            self.assertEqual(informe.dimension, 1)
            self.assertEqual(informe.residuals, 0)

    def test_n4_internas_en_el_espacio_resuelto(self):
        """ad(h_d) y ad(D(u, 0)) están en el span de la base calculada"""
        box = TruncationBox(4, 3)
        for grado in ((1, 1, 0, -1), (0, 2, 0, 0)):
            base = [b.values for b in solve_graded_derivations(grado, box)]
            interna = inner_derivation(HamiltonianElement.basis(grado, Fraction(3, 2)), grado, box)
            self.assertTrue(same_span(base + [interna.values], base))
        base = [b.values for b in solve_graded_derivations((0, 0, 0, 0), box)]
        cartan = inner_derivation(HamiltonianElement.cartan_element((1, -2, 0, 3)), (0, 0, 0, 0), box)
        self.assertEqual(len(base), 4)
        self.assertTrue(same_span(base + [cartan.values], base))

    def test_certificacion_en_un_solo_proceso(self):
        box = TruncationBox(2, 3)
        grados = [(1, 0), (0, 0)]
        self.assertEqual(
            [i.to_dict() for i in certify_degrees(box, grados, workers=1)],
            [i.to_dict() for i in certify_degrees(box, grados, workers=2)],
        )

    def test_grado_invalido_antes_de_repartir(self):
        with self.assertRaises(BoxTooSmallError):
            certify_degrees(TruncationBox(2, 2), [(1, 0), (3, 0)], workers=2)

    def test_informe_json(self):
        doc = certify_inner((1, 0), TruncationBox(2, 3)).to_dict()
        self.assertEqual(doc["dimension"], 1)
        self.assertEqual(doc["expected"], 1)
        self.assertTrue(doc["match"])
        self.assertEqual(doc["residuals"], 0)
        self.assertEqual(len(doc["basis"]), 1)


class TestParteInterna(unittest.TestCase):
    def test_coeficiente_interno(self):
        """La base normalizada es c·ad(h_d) y quitar la parte interna la anula"""
        box = TruncationBox(2, 3)
        for grado in ((1, 0), (2, 2), (-2, 1)):
            (base,) = solve_graded_derivations(grado, box)
            c = inner_coefficient(base)
            interna = inner_derivation(HamiltonianElement.basis(grado, c), grado, box)
            self.assertEqual(base.values, interna.values)
            self.assertFalse(any(remove_inner_part(base).values))

    def test_n4_no_primitivo(self):
        box = TruncationBox(4, 2)
        grado = (2, 0, 0, -2)
        d = inner_derivation(HamiltonianElement.basis(grado, 5), grado, box)
        self.assertEqual(inner_coefficient(d), 5)
        self.assertFalse(any(remove_inner_part(d).values))

    def test_no_interna_deja_resto(self):
        box = TruncationBox(2, 2)
        d = inner_derivation(HamiltonianElement.basis((1, 0)), (1, 0), box)
        valores = list(d.values)
        valores[box.index()[(2, 2)]] += 1
        self.assertTrue(any(remove_inner_part(GradedDerivation((1, 0), box, tuple(valores))).values))

    def test_grado_cero(self):
        box = TruncationBox(2, 2)
        d = inner_derivation(HamiltonianElement.cartan_element((1, 0)), (0, 0), box)
        with self.assertRaises(NonHomogeneousError):
            inner_coefficient(d)


class TestCaracteres(unittest.TestCase):
    def test_n2_radio_3(self):
        box = TruncationBox(2, 3)
        base = degree_zero_character_solve(box)
        self.assertEqual(len(base), 2)
        for c in base:
            self.assertTrue(is_linear_character(c, box))
            for r in box.vectors():
                self.assertEqual(c.value(neg(r)), -c.value(r))

    def test_n4_radio_2(self):
        box = TruncationBox(4, 2)
        base = degree_zero_character_solve(box)
        self.assertEqual(len(base), 4)
        self.assertTrue(all(is_linear_character(c, box) for c in base))

    def test_caracter_no_lineal(self):
        box = TruncationBox(2, 2)
        valores = [Fraction(r[0] * r[0]) for r in box.vectors()]
        self.assertFalse(is_linear_character(valores, box))


if __name__ == '__main__':
    unittest.main()
