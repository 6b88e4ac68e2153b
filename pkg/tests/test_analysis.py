import math
import unittest

import numpy as np

from simtool.analysis import (
    PllState,
    SteadyStateWindow,
    consumo_reactivo_linea,
    detect_steady_state,
    droop_law_residual,
    frequency_and_rocof,
    instantaneous_power,
    nadir,
    pico_espectral,
    pll_step,
    reactivas_kron,
    running_cost,
    sharing_metrics,
    tiempo_asentamiento,
    valor_estacionario,
)
from simtool.control import OMEGA_NOMINAL, DroopGains
from simtool.errors import ErrorArgumentoInvalido, ErrorRazonIndefinida
from simtool.frames import diferencia_angular, envolver_angulos, synth_three_phase, wrap_angle


class PotenciaTests(unittest.TestCase):
    def test_potencia_con_corriente_atrasada(self):
        V, I, phi, theta = 325.0, 10.0, 0.3, 0.7
        v = synth_three_phase(V, theta)
        i_o = synth_three_phase(I, theta - phi)
        for marco in (0.0, 2.0):
            P, Q = instantaneous_power(v, i_o, marco)
            self.assertAlmostEqual(P, 1.5 * V * I * math.cos(phi), places=6)
            self.assertAlmostEqual(Q, 1.5 * V * I * math.sin(phi), places=6)

    def test_corriente_en_fase(self):
        P, Q = instantaneous_power(synth_three_phase(100.0, 1.0), synth_three_phase(2.0, 1.0))
        self.assertAlmostEqual(P, 300.0, places=9)
        self.assertAlmostEqual(Q, 0.0, places=9)

    def test_consumo_reactivo_de_una_inductancia(self):
        I, X, theta = 5.4, 100.0 * math.pi * 700e-6, 0.9
        corriente = synth_three_phase(I, theta)
        voltaje = synth_three_phase(X * I, theta + 0.5 * math.pi)
        _, Q = instantaneous_power(voltaje, corriente)
        self.assertAlmostEqual(Q, consumo_reactivo_linea(I, X), places=9)
        self.assertAlmostEqual(consumo_reactivo_linea(I, X), 9.619, places=2)

    def test_reactivas_de_kron(self):
        iguales = reactivas_kron(325.27, 325.27, 0.1, 0.1, 0.44)
        self.assertEqual(iguales.suma, 0.0)
        distintas = reactivas_kron(325.27, 324.27, 0.0, 0.0, 0.44)
        self.assertAlmostEqual(distintas.suma, 1.0 / 0.44, places=6)
        self.assertAlmostEqual(distintas.exactas[0], distintas.pequena_senal[0], places=9)


class EstadoEstacionarioTests(unittest.TestCase):
    dt = 1e-3

    def test_exponencial_se_asienta(self):
        t = np.arange(0.0, 2.0, self.dt)
        traza = 1.0 - np.exp(-t / 0.05)
        instante = detect_steady_state(traza, SteadyStateWindow(), dt=self.dt)
        self.assertGreater(instante, 0.25)
        self.assertLess(instante, 0.28)
        self.assertAlmostEqual(valor_estacionario(traza, SteadyStateWindow(), dt=self.dt), 1.0, places=6)

    def test_oscilacion_no_se_asienta(self):
        t = np.arange(0.0, 2.0, self.dt)
        self.assertIsNone(detect_steady_state(np.sin(2.0 * math.pi * 5.0 * t), SteadyStateWindow(), dt=self.dt))

    def test_traza_constante(self):
        self.assertEqual(detect_steady_state(np.full(500, 3.0), SteadyStateWindow(), dt=self.dt, t0=0.5), 0.5)

    def test_traza_no_finita(self):
        traza = np.ones(500)
        traza[-1] = math.nan
        self.assertIsNone(detect_steady_state(traza, SteadyStateWindow(), dt=self.dt))

    def test_traza_corta(self):
        with self.assertRaises(ErrorArgumentoInvalido):
            detect_steady_state(np.ones(10), SteadyStateWindow(), dt=self.dt)

    def test_valor_estacionario_vacio(self):
        self.assertTrue(math.isnan(valor_estacionario([], SteadyStateWindow(), dt=self.dt)))


class FrecuenciaTests(unittest.TestCase):
    def test_rampa_de_frecuencia(self):
        dt, k = 1e-3, 10.0
        t = np.arange(0.0, 0.5, dt)
        theta = envolver_angulos(OMEGA_NOMINAL * t + 0.5 * k * t**2)
        omega, rocof = frequency_and_rocof(theta, dt)
        np.testing.assert_allclose(omega, OMEGA_NOMINAL + k * t, atol=1e-6)
        np.testing.assert_allclose(rocof, k, atol=1e-4)

    def test_trazas_cortas(self):
        omega, rocof = frequency_and_rocof([1.0], 1e-3)
        np.testing.assert_array_equal(omega, [0.0])
        np.testing.assert_array_equal(rocof, [0.0])

    def test_nadir(self):
        resultado = nadir([314.0, 313.0, 312.5, 313.9], 314.0)
        self.assertEqual(resultado.omega_min, 312.5)
        self.assertAlmostEqual(resultado.profundidad, 1.5)
        self.assertEqual(resultado.indice, 2)
        self.assertEqual(nadir([]).indice, -1)

    def test_tiempo_de_asentamiento(self):
        omega = OMEGA_NOMINAL + np.array([1.0, 0.5, 0.05, 0.0])
        self.assertAlmostEqual(tiempo_asentamiento(omega, OMEGA_NOMINAL, 0.1, dt=0.01), 0.02)
        self.assertIsNone(tiempo_asentamiento(omega[::-1], OMEGA_NOMINAL, 0.1, dt=0.01))

    def test_pico_espectral(self):
        dt = 1e-3
        t = np.arange(0.0, 10.0, dt)
        pico = pico_espectral(100.0 + 5.0 * np.sin(2.0 * math.pi * 0.5 * t), dt)
        self.assertAlmostEqual(pico.frecuencia, 0.5, delta=0.01)
        self.assertGreater(pico.potencia, 0.0)
        self.assertTrue(math.isnan(pico_espectral([1.0], dt).frecuencia))


class PllTests(unittest.TestCase):
    def test_engancha_a_senal_nominal(self):
        Ts = 1e-4
        s = PllState()
        pasos = 5000
        for k in range(pasos):
            theta = wrap_angle(OMEGA_NOMINAL * k * Ts + 0.3)
            s = pll_step(s, synth_three_phase(325.27, theta), Ts)
        esperado = wrap_angle(OMEGA_NOMINAL * pasos * Ts + 0.3)
        self.assertLess(abs(diferencia_angular(s.theta_hat, esperado)), 1e-3)
        self.assertTrue(s.enganchado)
        self.assertAlmostEqual(s.omega_hat, OMEGA_NOMINAL, delta=0.1)

    def test_sin_voltaje_avanza_libre(self):
        Ts = 1e-4
        s = pll_step(PllState(theta_hat=1.0), synth_three_phase(0.0, 0.0), Ts)
        self.assertAlmostEqual(s.theta_hat, 1.0 + Ts * OMEGA_NOMINAL, places=12)
        self.assertEqual(s.integrator, 0.0)
        self.assertFalse(s.enganchado)

    def _seguir(self, theta_de, pasos, Ts=1e-4):
        s = PllState()
        errores = []
        for k in range(pasos):
            s = pll_step(s, synth_three_phase(325.27, wrap_angle(theta_de(k * Ts))), Ts)
            errores.append(abs(diferencia_angular(s.theta_hat, wrap_angle(theta_de((k + 1) * Ts)))))
        return s, np.array(errores)

    def test_desfase_de_fase(self):
        s, errores = self._seguir(lambda t: OMEGA_NOMINAL * t + 0.1, 3000)
        # el modo lento del lazo (≈ 27.6 1/s) fija la ventana de enganche
        self.assertGreater(errores[499], 1e-3)
        self.assertLess(np.max(errores[2500:]), 1e-3)
        self.assertTrue(s.enganchado)
        self.assertFalse(s.perdida)

    def test_desfase_de_frecuencia(self):
        delta = 2.0 * math.pi * 0.5
        s, errores = self._seguir(lambda t: (OMEGA_NOMINAL + delta) * t, 4000)
        self.assertGreater(np.max(errores[:500]), 1e-2)
        self.assertLess(np.max(errores[3000:]), 1e-3)
        self.assertAlmostEqual(s.omega_hat, OMEGA_NOMINAL + delta, delta=1e-2)
        self.assertTrue(s.enganchado)


class LeyDeCaidaYCostoTests(unittest.TestCase):
    def test_residuo_de_la_ley(self):
        g = DroopGains(gamma=5e4, P_star=2880.0)
        self.assertAlmostEqual(droop_law_residual(g, 0.1 - 0.0184, 0.1, 3800.0), 0.0, places=6)
        self.assertAlmostEqual(droop_law_residual(g, 0.1, 0.1, 3800.0), 920.0, places=6)

    def test_costo_constante(self):
        g = DroopGains()
        n = 1001
        costo = running_cost((np.zeros(n), np.full(n, g.P_star)), g, np.full(n, 0.01), dt=1e-3)
        self.assertAlmostEqual(costo.total, g.alpha * 1e-4, places=9)
        np.testing.assert_allclose(costo.termino_potencia, 0.0)

    def test_costo_termino_de_potencia(self):
        g = DroopGains()
        costo = running_cost((np.zeros(3), np.full(3, g.P_star + 400.0)), g, np.zeros(3), dt=1e-3)
        np.testing.assert_allclose(costo.integrando, 400.0**2 / (4.0 * g.alpha))

    def test_costo_desalineado(self):
        with self.assertRaises(ErrorArgumentoInvalido):
            running_cost((np.zeros(3), np.zeros(4)), DroopGains(), np.zeros(3), dt=1e-3)


class RepartoTests(unittest.TestCase):
    def test_razon_exacta(self):
        metricas = sharing_metrics([2000.0] * 5, [1000.0] * 5, 2.0)
        self.assertEqual(metricas.ratio_at_ss, 2.0)
        self.assertEqual(metricas.relative_error, 0.0)

    def test_divisor_nulo(self):
        with self.assertRaises(ErrorRazonIndefinida):
            sharing_metrics([1000.0], [0.2], 1.0)


if __name__ == "__main__":
    unittest.main()
