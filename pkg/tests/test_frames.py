import math
import unittest

import numpy as np

from simtool.errors import ErrorArgumentoInvalido
from simtool.frames import (
    DOS_PI,
    amplitud,
    angulo_fasor,
    diferencia_angular,
    envolver_angulos,
    inverse_park,
    park,
    synth_three_phase,
    wrap_angle,
)


class EnvolverAnguloTests(unittest.TestCase):
    def test_valores_en_el_intervalo(self):
        self.assertEqual(wrap_angle(0.0), 0.0)
        self.assertAlmostEqual(wrap_angle(7.0), 7.0 - DOS_PI, places=12)
        self.assertAlmostEqual(wrap_angle(-0.1), DOS_PI - 0.1, places=12)

    def test_dos_pi_exacto_regresa_cero(self):
        self.assertEqual(wrap_angle(DOS_PI), 0.0)

    def test_negativo_diminuto_no_regresa_dos_pi(self):
        self.assertLess(wrap_angle(-1e-20), DOS_PI)

    def test_no_finito_es_error(self):
        with self.assertRaises(ErrorArgumentoInvalido):
            wrap_angle(math.nan)
        with self.assertRaises(ErrorArgumentoInvalido):
            envolver_angulos([0.0, math.inf])

    def test_version_vectorizada_coincide(self):
        angulos = np.array([-7.0, -0.1, 0.0, 3.0, 6.5, 100.0])
        esperados = [wrap_angle(a) for a in angulos]
        np.testing.assert_allclose(envolver_angulos(angulos), esperados, atol=1e-12)

    def test_diferencia_angular_cruza_cero(self):
        self.assertAlmostEqual(diferencia_angular(0.05, DOS_PI - 0.05), 0.1, places=12)
        self.assertAlmostEqual(diferencia_angular(DOS_PI - 0.05, 0.05), -0.1, places=12)


class ParkTests(unittest.TestCase):
    def test_senal_alineada_da_eje_d(self):
        theta = 0.3
        d, q = park(theta, synth_three_phase(1.0, theta))
        self.assertAlmostEqual(d, 1.0, places=12)
        self.assertAlmostEqual(q, 0.0, places=12)

    def test_marco_adelantado(self):
        theta, phi, V = 1.1, 0.2, 325.0
        d, q = park(theta + phi, synth_three_phase(V, theta))
        self.assertAlmostEqual(d, V * math.cos(phi), places=9)
        self.assertAlmostEqual(q, -V * math.sin(phi), places=9)

    def test_ida_y_vuelta(self):
        theta = 2.4
        original = np.array(synth_three_phase(230.0, 0.7))
        reconstruida = np.array(inverse_park(theta, park(theta, original)))
        np.testing.assert_allclose(reconstruida, original, atol=1e-9)

    def test_arreglos_de_muestras(self):
        angulos = np.linspace(0.0, DOS_PI, 50)
        muestras = np.stack(synth_three_phase(2.0, angulos), axis=-1)
        d, q = park(angulos, muestras)
        np.testing.assert_allclose(d, 2.0, atol=1e-12)
        np.testing.assert_allclose(q, 0.0, atol=1e-12)

    def test_componentes_incorrectas(self):
        with self.assertRaises(ErrorArgumentoInvalido):
            park(0.0, [1.0, 2.0])

    def test_amplitud_negativa(self):
        with self.assertRaises(ErrorArgumentoInvalido):
            synth_three_phase(-1.0, 0.0)


class FasorTests(unittest.TestCase):
    def test_angulo_y_amplitud(self):
        for theta in (0.0, 1.0, 3.5, 6.0):
            x = synth_three_phase(325.27, theta)
            self.assertAlmostEqual(angulo_fasor(x), theta, places=9)
            self.assertAlmostEqual(amplitud(x), 325.27, places=9)


class InvariantesAleatoriosTests(unittest.TestCase):
    def setUp(self):
        self.generador = np.random.default_rng(2024)

    def test_ida_y_vuelta_en_mil_casos(self):
        n = 1000
        marcos = self.generador.uniform(-50.0, 50.0, n)
        amplitudes = self.generador.uniform(0.0, 500.0, n)
        fases = self.generador.uniform(0.0, DOS_PI, n)
        originales = np.stack(synth_three_phase(amplitudes, fases), axis=-1)
        reconstruidas = np.stack(inverse_park(marcos, park(marcos, originales)), axis=-1)
        np.testing.assert_allclose(reconstruidas, originales, atol=1e-9)

    def test_potencia_igual_en_abc_y_dq(self):
        n = 1000
        marcos = self.generador.uniform(0.0, DOS_PI, n)
        v = np.stack(synth_three_phase(self.generador.uniform(0.0, 400.0, n), self.generador.uniform(0.0, DOS_PI, n)), axis=-1)
        i = np.stack(synth_three_phase(self.generador.uniform(0.0, 20.0, n), self.generador.uniform(0.0, DOS_PI, n)), axis=-1)
        v_d, v_q = park(marcos, v)
        i_d, i_q = park(marcos, i)
        np.testing.assert_allclose(np.sum(v * i, axis=-1), 1.5 * (v_d * i_d + v_q * i_q), atol=1e-8)

    def test_envolver_es_idempotente(self):
        for theta in self.generador.uniform(-1e6, 1e6, 1000):
            una = wrap_angle(theta)
            self.assertGreaterEqual(una, 0.0)
            self.assertLess(una, DOS_PI)
            self.assertEqual(wrap_angle(una), una)


if __name__ == "__main__":
    unittest.main()
