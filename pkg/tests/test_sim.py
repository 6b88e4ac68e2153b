import math
import unittest
from dataclasses import replace

import numpy as np

from simtool.cli import diferencia_maxima, verificar_barrido, verificar_caida, verificar_reparto, verificar_sincronia
from simtool.config import BARRIDOS, construir_escenario, resolver_configuracion
from simtool.errors import ErrorConfiguracion
from simtool.sim import ClockModel, aplicar_parametro, clock_drift_demo, run_scenario, sweep

P_CARGA_NOMINAL = 3.0 * 230.0**2 / 58.77


def escenario(nombre: str, **cambios):
    return construir_escenario(resolver_configuracion({"escenario": nombre, **cambios}))


def reprobadas(verificaciones):
    return [v for v in verificaciones if not v.aprobada]


class EspecificacionTests(unittest.TestCase):
    def test_aplicar_parametro(self):
        spec = escenario("sharing")
        todos = aplicar_parametro(spec, "gamma", 5e5)
        self.assertEqual([c.droop.gamma for c in todos.convertidores], [5e5, 5e5])
        uno = aplicar_parametro(spec, "convertidores[1].droop.gamma", 700.0)
        self.assertEqual([c.droop.gamma for c in uno.convertidores], [5e4, 700.0])
        self.assertEqual(spec.convertidores[1].droop.gamma, 5e4)

    def test_ruta_inexistente(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            aplicar_parametro(escenario("blackstart"), "convertidores[0].droop.beta", 1.0)
        self.assertEqual(contexto.exception.ruta, "convertidores[0].droop.beta")

    def test_paso_de_planta_debe_dividir_el_periodo(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            escenario("blackstart", paso_planta=3e-5)
        self.assertEqual(contexto.exception.ruta, "paso_planta")

    def test_barrido_vacio(self):
        self.assertEqual(sweep(escenario("blackstart"), "alpha", []), [])


class MotorTests(unittest.TestCase):
    def test_corrida_de_duracion_cero(self):
        resultado = run_scenario(escenario("blackstart", duracion=0.0))
        self.assertEqual(len(resultado.traza), 0)
        self.assertFalse(resultado.resumen.abortado)

    def test_determinismo(self):
        spec = escenario("blackstart", duracion=0.05)
        primera, segunda = run_scenario(spec), run_scenario(spec)
        self.assertEqual(diferencia_maxima(primera.traza, segunda.traza), 0.0)
        np.testing.assert_array_equal(primera.estado_final, segunda.estado_final)

    def test_canales_de_igual_longitud(self):
        traza = run_scenario(escenario("blackstart", duracion=0.05)).traza
        self.assertEqual(len(traza), 501)
        for nombre in traza.canales:
            self.assertEqual(traza.canal(nombre).size, len(traza))
        self.assertAlmostEqual(traza.dt, 1e-4)

    def test_retencion_entre_muestras_de_control(self):
        spec = escenario("blackstart", duracion=0.02, registro={"canales": ["u_a_I", "d_I"], "decimacion": 1})
        traza = run_scenario(spec).traza
        self.assertEqual(traza.canales, ["d_I", "u_a_I"])
        for nombre in traza.canales:
            bloques = traza.canal(nombre)[:200].reshape(20, 10)
            np.testing.assert_array_equal(bloques, np.repeat(bloques[:, :1], 10, axis=1))

    def test_canal_desconocido(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            run_scenario(escenario("blackstart", registro={"canales": ["P_III"]}))
        self.assertEqual(contexto.exception.ruta, "registro.canales")

    def test_convergencia_al_reducir_el_paso(self):
        spec = escenario("blackstart", duracion=0.3)
        grueso = run_scenario(spec).estado_final
        fino = run_scenario(replace(spec, plant_dt=5e-6, decimation=20)).estado_final
        self.assertLess(np.linalg.norm(fino - grueso) / np.linalg.norm(fino), 1e-6)

    def test_barrido_etiqueta_los_reportes(self):
        reportes = sweep(escenario("blackstart", duracion=0.1), "alpha", [1000.0, 2000.0])
        self.assertEqual([r.valor for r in reportes], [1000.0, 2000.0])
        self.assertEqual({r.parametro for r in reportes}, {"alpha"})


class EscenarioITests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.spec = escenario("loadstep")
        cls.resultado = run_scenario(cls.spec)
        cls.indirecto = run_scenario(escenario("blackstart", modo="indirect"))
        cls.escalon_indirecto = run_scenario(escenario("loadstep", modo="indirect"))

    def test_criterios_de_la_ley_de_caida(self):
        self.assertEqual(reprobadas(verificar_caida(self.spec, self.resultado)), [])

    def test_potencia_y_angulo_tras_el_escalon(self):
        resumen = self.resultado.resumen.convertidor("I")
        self.assertEqual(self.resultado.resumen.t_perturbacion, 0.5)
        self.assertAlmostEqual(resumen.delta_theta_s, (2880.0 - resumen.P_s) / 5e4, delta=1e-4)
        self.assertLess(resumen.delta_theta_s, 0.0)
        self.assertGreater(resumen.profundidad_nadir, 0.0)
        self.assertIsNotNone(resumen.t_estacionario)

    def test_evento_marcado(self):
        marcas = [m for m in self.resultado.traza.eventos if m.tipo == "evento" and "escalón" in m.descripcion]
        self.assertEqual(len(marcas), 1)
        self.assertAlmostEqual(marcas[0].t, 0.5)

    def test_implementacion_indirecta(self):
        resumen = self.indirecto.resumen
        self.assertFalse(resumen.abortado)
        convertidor = resumen.convertidor("I")
        self.assertLess(abs(convertidor.P_s / P_CARGA_NOMINAL - 1.0), 0.05)
        self.assertLess(abs(convertidor.omega_s - 100.0 * math.pi), 1e-3)

    def test_directa_e_indirecta_coinciden_tras_el_escalon(self):
        directa = self.resultado.resumen.convertidor("I")
        indirecta = self.escalon_indirecto.resumen.convertidor("I")
        self.assertFalse(self.escalon_indirecto.resumen.abortado)
        self.assertLess(abs(indirecta.P_s / directa.P_s - 1.0), 0.02)
        self.assertLess(abs(indirecta.delta_theta_s - directa.delta_theta_s), 2e-3)

    def test_relacion_de_rocof_a_lo_largo_de_la_trayectoria(self):
        g = self.resultado.ganancias_finales[0]
        traza = self.resultado.traza
        omega, P = traza.canal("omega_I"), traza.canal("P_filtrada_I")
        activo = np.isfinite(omega) & np.isfinite(P)
        omega, P = omega[activo], P[activo]
        rocof = np.diff(omega) / traza.dt
        esperado = -(g.gamma * (omega[:-1] - g.omega_star) + np.diff(P) / traza.dt) / (2.0 * g.alpha)
        self.assertLess(np.max(np.abs(rocof - esperado)), 1e-2 * np.max(np.abs(rocof)))

    def test_costo_se_extingue(self):
        resumen = self.resultado.resumen.convertidor("I")
        self.assertTrue(math.isfinite(resumen.costo))
        self.assertGreater(resumen.costo, 0.0)
        self.assertLess(resumen.cola_costo, 1e-6)


class EscenarioIITests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.sync = escenario("sync")
        cls.resultado_sync = run_scenario(cls.sync)
        cls.sin_perdidas = escenario("sync_sin_perdidas")
        cls.resultado_sin_perdidas = run_scenario(cls.sin_perdidas)
        cls.desajuste = escenario("sync_desajuste")
        cls.resultado_desajuste = run_scenario(cls.desajuste)
        cls.sharing = escenario("sharing")
        cls.resultado_sharing = run_scenario(cls.sharing)
        cls.sharing_r2 = escenario("sharing_r2")
        cls.resultado_sharing_r2 = run_scenario(cls.sharing_r2)

    def test_sincronizacion(self):
        self.assertEqual(reprobadas(verificar_sincronia(self.sync, self.resultado_sync)), [])
        self.assertFalse(self.resultado_sync.resumen.abortado)

    def test_sincronizacion_sin_perdidas(self):
        self.assertEqual(reprobadas(verificar_sincronia(self.sin_perdidas, self.resultado_sin_perdidas)), [])
        resumen = self.resultado_sin_perdidas.resumen
        self.assertEqual(resumen.oraculo["perdidas"], 0.0)
        self.assertAlmostEqual(sum(c.P_s for c in resumen.convertidores), resumen.oraculo["potencia_carga"], delta=30.0)

    def test_angulo_relativo_se_descompone_en_la_ley_de_caida(self):
        resumen = self.resultado_sin_perdidas.resumen
        g1, g2 = self.resultado_sin_perdidas.ganancias_finales
        P1, P2 = (c.P_s for c in resumen.convertidores)
        esperada = resumen.diferencia_nominal + (g1.P_star - P1) / g1.gamma - (g2.P_star - P2) / g2.gamma
        self.assertAlmostEqual(resumen.diferencia_angular, esperada, delta=2e-4)
        self.assertGreater(resumen.diferencia_angular, 0.0)

    def test_semilla_de_interconexion(self):
        # P*₂ = 0: el segundo convertidor arranca en el ángulo del nodo
        self.assertEqual(self.resultado_sync.resumen.convertidor("II").desfase_interconexion, 0.0)
        self.assertTrue(math.isnan(self.resultado_sync.resumen.convertidor("I").desfase_interconexion))

        c2 = self.sharing.convertidores[1]
        X = 100.0 * math.pi * (self.sharing.topology.lines[1].params.L_l + c2.filtro.L)
        V0 = self.resultado_sharing.traza.ventana("v_amp_nodo_0", 0.79)[0]
        esperado = math.asin(1440.0 * X / (1.5 * V0 * c2.voltaje_conmutacion))
        self.assertAlmostEqual(
            self.resultado_sharing.resumen.convertidor("II").desfase_interconexion, esperado, delta=2e-4
        )

    def test_reactivas_igualan_el_consumo_de_las_lineas(self):
        for resultado in (self.resultado_sync, self.resultado_sin_perdidas):
            reactivas = resultado.resumen.reactivas
            self.assertIsNotNone(reactivas)
            self.assertGreater(reactivas["consumo_lineas"], 0.0)
            self.assertLess(
                abs(reactivas["suma"] - reactivas["consumo_lineas"]), max(1.0, 1e-2 * abs(reactivas["medidas"][0]))
            )

    def test_desajuste_de_amplitud(self):
        self.assertEqual(reprobadas(verificar_sincronia(self.desajuste, self.resultado_desajuste)), [])
        reactivas = self.resultado_desajuste.resumen.reactivas
        self.assertAlmostEqual(reactivas["desajuste_amplitud"], 1.0, delta=0.05)
        Q1, Q2 = reactivas["medidas"]
        self.assertGreater(Q1, 0.0)
        self.assertLess(Q2, 0.0)
        self.assertGreater(reactivas["kron_pequena_senal"][0], 0.0)
        self.assertLess(reactivas["kron_pequena_senal"][1], 0.0)

    def test_oraculo_en_el_resumen(self):
        oraculo = self.resultado_sync.resumen.oraculo
        self.assertIsNotNone(oraculo)
        self.assertTrue(oraculo["angulos_seguros"])
        self.assertLess(oraculo["residuo"], 1e-9)

    def test_reparto_igual(self):
        self.assertEqual(reprobadas(verificar_reparto(self.sharing, self.resultado_sharing)), [])
        reparto = self.resultado_sharing.resumen.reparto
        self.assertEqual(reparto["razon_esperada"], 1.0)

    def test_reparto_dos_a_uno(self):
        self.assertEqual(reprobadas(verificar_reparto(self.sharing_r2, self.resultado_sharing_r2)), [])
        reparto = self.resultado_sharing_r2.resumen.reparto
        self.assertEqual(reparto["razon_esperada"], 2.0)
        self.assertLess(abs(reparto["razon"] / 2.0 - 1.0), 0.10)


class BarridoTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        base = escenario("loadstep")
        cls.alpha = sweep(base, "alpha", BARRIDOS["alpha"])
        cls.gamma = sweep(base, "gamma", BARRIDOS["gamma"])

    def test_nadir_monotono_en_alpha(self):
        self.assertEqual(reprobadas(verificar_barrido("alpha", self.alpha)), [])
        profundidades = [r.convertidor("I").profundidad_nadir for r in self.alpha]
        self.assertTrue(all(p > 0.0 for p in profundidades))

    def test_producto_gamma_angulo_constante(self):
        self.assertEqual(reprobadas(verificar_barrido("gamma", self.gamma)), [])
        for reporte in self.gamma:
            convertidor = reporte.convertidor("I")
            self.assertAlmostEqual(reporte.valor * abs(convertidor.delta_theta_s), abs(2880.0 - convertidor.P_s), delta=10.0)


class DerivaDeRelojTests(unittest.TestCase):
    def test_pico_a_la_frecuencia_de_deriva(self):
        demo = clock_drift_demo(escenario("drift", duracion=6.0), 1e-2)
        self.assertAlmostEqual(demo.frecuencia_esperada, 0.5, places=12)
        self.assertLess(abs(demo.pico.frecuencia / demo.frecuencia_esperada - 1.0), 0.10)
        self.assertLess(demo.pico_maestro.potencia / demo.pico.potencia, 1e-3)

    def test_reloj_maestro_anula_la_deriva(self):
        spec = escenario("drift", duracion=1.0)
        maestro = run_scenario(replace(spec, clock=ClockModel((1e-2, 0.0), master_clock_enabled=True)))
        sin_deriva = run_scenario(replace(spec, clock=ClockModel()))
        self.assertLessEqual(diferencia_maxima(maestro.traza, sin_deriva.traza), 1e-9)

    def test_requiere_dos_convertidores(self):
        with self.assertRaises(ErrorConfiguracion):
            clock_drift_demo(escenario("blackstart"), 1e-2)


if __name__ == "__main__":
    unittest.main()
