#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests para los automorfismos (Q, λ) de H_N
"""

import random
import time
import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from services.algebra import HamiltonianElement
from services.automorphism import (
    SignConvention,
    TorusAutomorphism,
    apply,
    cartan_extension,
    check_cartan_extension,
    check_odd_degrees,
    check_pair,
    compose,
    conjugate_scaling,
    decompose,
    inverse,
    natural_scaling,
    verify_homomorphism,
)
from services.errors import DimensionMismatchError, InvalidDocumentError, InvalidElementError
from services.lattice_core import box_vectors, unit
from services.sampling import random_automorphism, random_element, random_vector
from services.symplectic import GspMatrix

h = HamiltonianElement.basis


class TestAplicacion(unittest.TestCase):
    def setUp(self):
        self.flip = TorusAutomorphism(GspMatrix([[1, 0], [0, -1]]), (1, 1))

    def test_escalado_puro(self):
        """λ^r = 2·3 sobre h_(1,1)"""
        sigma = natural_scaling(2, (2, 3))
        self.assertEqual(apply(sigma, h((1, 1))), h((1, 1), 6))
        self.assertEqual(apply(sigma, h((-1, 2))), h((-1, 2), Fraction(9, 2)))

    def test_identidad(self):
        x = HamiltonianElement(2, [((1, 0), 3), ((2, -1), Fraction(1, 2))], (1, 5))
        self.assertEqual(apply(TorusAutomorphism.identity(2), x), x)

    def test_caso_anti_simplectico(self):
        """h_(1,1) ↦ (−1)^{2−1}·h_(1,−1)"""
        self.assertEqual(apply(self.flip, h((1, 1))), -h((1, -1)))
        self.assertEqual(apply(self.flip, h((1, 0))), h((1, 0)))

    def test_parte_de_cartan(self):
        """D(u, 0) ↦ D(Q^{−⊤}u, 0)"""
        d = HamiltonianElement.cartan_element((1, 2))
        self.assertEqual(apply(self.flip, d), HamiltonianElement.cartan_element((1, -2)))
        shear = TorusAutomorphism(GspMatrix([[1, 1], [0, 1]]), (1, 1))
        # Q^{−⊤} = [[1, 0], [−1, 1]]
        self.assertEqual(apply(shear, d), HamiltonianElement.cartan_element((1, 1)))

    def test_dimension_distinta(self):
        with self.assertRaises(DimensionMismatchError):
            apply(self.flip, h((1, 0, 0, 0)))

    def test_escalado_nulo(self):
        with self.assertRaises(InvalidElementError):
            TorusAutomorphism(GspMatrix.identity(2), (1, 0))


class TestConvencionDeSigno(unittest.TestCase):
    def setUp(self):
        self.flip = TorusAutomorphism(GspMatrix([[1, 0], [0, -1]]), (1, 1))

    def test_regresion_signo_literal(self):
        """El signo (−1)^{|r|} no es homomorfismo en ((1,0), (0,1))"""
        x, y = h((1, 0)), h((0, 1))
        self.assertTrue(check_pair(self.flip, x, y))
        self.assertFalse(check_pair(self.flip, x, y, SignConvention.LITERAL))

    def test_verificacion_en_caja(self):
        self.assertTrue(verify_homomorphism(self.flip, 3).passed)
        informe = verify_homomorphism(self.flip, 1, SignConvention.LITERAL)
        self.assertFalse(informe.passed)
        self.assertGreater(informe.failures, 0)
        self.assertIsNotNone(informe.counterexample)

    def test_contraejemplo_literal(self):
        """El primer par fallido en orden lexicográfico es ((−1,−1), (−1,0))"""
        informe = verify_homomorphism(self.flip, 1, SignConvention.LITERAL)
        self.assertEqual(informe.counterexample, ((-1, -1), (-1, 0)))
        self.assertEqual(informe.checked, 8 * 7 // 2 + 2 * 8)

    def test_coincide_con_la_comprobacion_por_pares(self):
        """La verificación vectorizada cuenta los mismos fallos que check_pair par a par"""
        rng = random.Random(21)
        casos = [(self.flip, SignConvention.LITERAL), (self.flip, SignConvention.COCYCLE)]
        casos += [(random_automorphism(rng, 2, anti), c) for anti in (False, True) for c in SignConvention]
        for sigma, convencion in casos:
            caja = box_vectors(2, 2)
            fallidos = [
                (r, s)
                for i, r in enumerate(caja)
                for s in caja[i + 1:]
                if not check_pair(sigma, h(r), h(s), convencion)
            ]
            fallidos += [
                ((0, 0), r)
                for k in range(2)
                for r in caja
                if not check_pair(sigma, HamiltonianElement.cartan_element(unit(2, k)), h(r), convencion)
            ]
            informe = verify_homomorphism(sigma, 2, convencion)
            self.assertEqual(informe.failures, len(fallidos))
            self.assertEqual(informe.counterexample, fallidos[0] if fallidos else None)

    def test_radio_invalido(self):
        with self.assertRaises(InvalidElementError):
            verify_homomorphism(self.flip, 0)


class TestHomomorfismo(unittest.TestCase):
    @given(st.integers(0, 10 ** 6), st.booleans())
    @settings(max_examples=15, deadline=None)
    def test_aleatorios_n2_radio3(self, semilla, anti):
        sigma = random_automorphism(random.Random(semilla), 2, anti)
        informe = verify_homomorphism(sigma, 3)
        self.assertTrue(informe.passed, informe.to_dict())

    @given(st.integers(0, 10 ** 6), st.booleans())
    @settings(max_examples=10, deadline=None)
    def test_aleatorios_n4_radio3(self, semilla, anti):
        sigma = random_automorphism(random.Random(semilla), 4, anti)
        informe = verify_homomorphism(sigma, 3)
        self.assertTrue(informe.passed, informe.to_dict())
        self.assertEqual(informe.checked, 2400 * 2399 // 2 + 4 * 2400)

    def test_cien_casos_n4_radio3(self):
        """100 automorfismos de N = 4 en la caja de radio 3 en menos de 30 s"""
        rng = random.Random(4)
        inicio = time.perf_counter()
        for i in range(100):
            self.assertTrue(verify_homomorphism(random_automorphism(rng, 4, anti=i % 2 == 1), 3).passed)
        self.assertLess(time.perf_counter() - inicio, 30)

    def test_inversa_de_q_en_cache(self):
        sigma = random_automorphism(random.Random(8), 4)
        self.assertIs(sigma.q_inverse, sigma.q_inverse)
        self.assertEqual(sigma.q_inverse.act(sigma.q.act((1, 2, 3, 4))), (1, 2, 3, 4))

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
    @settings(max_examples=30, deadline=None)
    def test_elementos_aleatorios(self, semilla, n):
        rng = random.Random(semilla)
        sigma = random_automorphism(rng, n)
        x = random_element(rng, n, 4, 4, with_cartan=True)
        y = random_element(rng, n, 4, 4, with_cartan=True)
        self.assertTrue(check_pair(sigma, x, y))

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
    @settings(max_examples=30, deadline=None)
    def test_conserva_la_descomposicion(self, semilla, n):
        """σ(H') = H' y σ(h) = h"""
        rng = random.Random(semilla)
        sigma = random_automorphism(rng, n)
        self.assertTrue(apply(sigma, random_element(rng, n)).is_derived())
        imagen = apply(sigma, HamiltonianElement.cartan_element([1] * n))
        self.assertEqual(imagen.terms, ())

    def test_soporte_sigue_a_la_matriz(self):
        """supp σ(h_r) = {Qr} para |r|∞ <= 4"""
        sigma = random_automorphism(random.Random(3), 2, anti=True)
        for r in box_vectors(2, 4):
            self.assertEqual(apply(sigma, h(r)).support, (sigma.q.act(r),))


class TestGradosOpuestosYCartan(unittest.TestCase):
    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]), st.booleans())
    @settings(max_examples=20, deadline=None)
    def test_grados_opuestos(self, semilla, n, anti):
        """σ(h_r) ∈ Q·h_s implica σ(h_{−r}) ∈ Q·h_{−s}"""
        sigma = random_automorphism(random.Random(semilla), n, anti)
        self.assertTrue(check_odd_degrees(sigma, 2))

    def test_extension_ejemplos(self):
        """v = Q^{−⊤}u: para el volteo D(1, 2) ↦ D(1, −2)"""
        flip = TorusAutomorphism(GspMatrix([[1, 0], [0, -1]]), (3, 1))
        self.assertEqual(cartan_extension(flip, (1, 2)), (1, -2))
        shear = TorusAutomorphism(GspMatrix([[1, 1], [0, 1]]), (1, 1))
        self.assertEqual(cartan_extension(shear, (1, 0)), (1, -1))
        with self.assertRaises(DimensionMismatchError):
            cartan_extension(flip, (1, 2, 3, 4))

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]), st.booleans())
    @settings(max_examples=20, deadline=None)
    def test_extension_unica(self, semilla, n, anti):
        """σ(H') = H', σ(h) = h y la imagen de D(u, 0) es la que fija σ en H'"""
        rng = random.Random(semilla)
        sigma = random_automorphism(rng, n, anti)
        self.assertTrue(check_cartan_extension(sigma))
        u = [rng.randint(-3, 3) for _ in range(n)]
        self.assertEqual(cartan_extension(sigma, u), apply(sigma, HamiltonianElement.cartan_element(u)).cartan)


class TestLeyDeGrupo(unittest.TestCase):
    def test_composicion_de_escalados(self):
        resultado = compose(natural_scaling(2, (2, 3)), natural_scaling(2, (5, 7)))
        self.assertEqual(resultado, natural_scaling(2, (10, 21)))

    def test_composicion_con_identidad(self):
        for anti in (False, True):
            sigma = random_automorphism(random.Random(11), 4, anti)
            self.assertEqual(compose(sigma, TorusAutomorphism.identity(4)), sigma)

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
    @settings(max_examples=25, deadline=None)
    def test_composicion_extensional(self, semilla, n):
        rng = random.Random(semilla)
        s1, s2 = random_automorphism(rng, n), random_automorphism(rng, n)
        sigma = compose(s1, s2)
        for _ in range(5):
            x = random_element(rng, n, 4, 4, with_cartan=True)
            self.assertEqual(apply(sigma, x), apply(s1, apply(s2, x)))

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
    @settings(max_examples=25, deadline=None)
    def test_inversa(self, semilla, n):
        rng = random.Random(semilla)
        sigma = random_automorphism(rng, n)
        sigma_inv = inverse(sigma)
        for _ in range(5):
            x = random_element(rng, n, 4, 4, with_cartan=True)
            self.assertEqual(apply(compose(sigma, sigma_inv), x), x)
            self.assertEqual(apply(sigma_inv, apply(sigma, x)), x)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=15, deadline=None)
    def test_asociatividad(self, semilla):
        rng = random.Random(semilla)
        a, b, c = (random_automorphism(rng, 4) for _ in range(3))
        izquierda, derecha = compose(compose(a, b), c), compose(a, compose(b, c))
        for _ in range(5):
            x = random_element(rng, 4, 3, 3)
            self.assertEqual(apply(izquierda, x), apply(derecha, x))

    def test_descomposicion(self):
        """σ = σ_Q ∘ σ_λ"""
        rng = random.Random(5)
        sigma = random_automorphism(rng, 4, anti=True)
        sigma_q, sigma_l = decompose(sigma)
        self.assertEqual(compose(sigma_q, sigma_l), sigma)
        self.assertEqual(sigma_q.scaling, (1, 1, 1, 1))
        self.assertEqual(sigma_l.q, GspMatrix.identity(4))


class TestConjugacion(unittest.TestCase):
    def test_ejemplos(self):
        shear = TorusAutomorphism(GspMatrix([[1, 1], [0, 1]]), (1, 1))
        self.assertEqual(conjugate_scaling(shear, (2, 3)), (2, 6))
        self.assertEqual(conjugate_scaling(TorusAutomorphism.identity(2), (2, 3)), (2, 3))
        self.assertEqual(conjugate_scaling(shear, (1, 1)), (1, 1))

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
    @settings(max_examples=30, deadline=None)
    def test_ley_de_conjugacion(self, semilla, n):
        """θ⁻¹ σ_λ θ = σ_μ con μ_i = λ^{Qe_i}"""
        rng = random.Random(semilla)
        theta = random_automorphism(rng, n)
        lam = random_automorphism(rng, n).scaling
        mu = conjugate_scaling(theta, lam)
        theta_inv = inverse(theta)
        for _ in range(5):
            x = h(random_vector(rng, n, 4))
            izquierda = apply(theta_inv, apply(natural_scaling(n, lam), apply(theta, x)))
            self.assertEqual(izquierda, apply(natural_scaling(n, mu), x))


class TestJSON(unittest.TestCase):
    def test_ida_y_vuelta(self):
        sigma = TorusAutomorphism(GspMatrix([[1, 0], [0, -1]]), (Fraction(1, 2), -3))
        doc = sigma.to_dict()
        self.assertEqual(doc, {"q": [[1, 0], [0, -1]], "multiplier": -1, "lambda": ["1/2", "-3"]})
        self.assertEqual(TorusAutomorphism.from_dict(doc), sigma)

    def test_documentos_invalidos(self):
        with self.assertRaises(InvalidDocumentError):
            TorusAutomorphism.from_dict({"q": [[1, 0], [0, 1]], "lambda": ["0", "1"]})
        with self.assertRaises(InvalidDocumentError):
            TorusAutomorphism.from_dict({"q": [[1, 0], [0, 1]]})
        with self.assertRaises(InvalidDocumentError):
            TorusAutomorphism.from_dict({"q": [[1, 0], [0, -1]], "multiplier": 1, "lambda": ["1", "1"]})


if __name__ == '__main__':
    unittest.main()
