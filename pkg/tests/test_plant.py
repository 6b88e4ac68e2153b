import unittest
from collections import Counter

import numpy as np

from simtool.errors import ErrorConfiguracion
from simtool.plant import (
    CONTADOR_SATURACION,
    AcFilterParams,
    AcState,
    BoostParams,
    BoostState,
    EntradasPlanta,
    Line,
    LineParams,
    LineState,
    Load,
    NetworkTopology,
    PlantaCompuesta,
    boost_derivatives,
    dcac_derivatives,
    duty_to_vc,
    network_port_currents,
)


def topologia_dos_convertidores() -> NetworkTopology:
    return NetworkTopology(
        ("I", "II"),
        (Line("I", "0"), Line("II", "0")),
        (Load("0", 58.77),),
    )


class ElevadorTests(unittest.TestCase):
    def test_punto_de_equilibrio(self):
        p = BoostParams()
        V_dc = 750.0
        I_b = p.G_dc * V_dc**2 / p.V_b
        V_c = p.V_b - p.R_b * I_b
        d = boost_derivatives(p, BoostState(I_b, V_dc), V_c)
        self.assertAlmostEqual(float(d.I_b), 0.0, places=9)
        self.assertAlmostEqual(float(d.V_dc), 0.0, places=9)

    def test_corriente_del_puente_descarga_el_enlace(self):
        p = BoostParams()
        s = BoostState(1.0, 700.0)
        libre = boost_derivatives(p, s, 500.0)
        cargado = boost_derivatives(p, s, 500.0, 3.0)
        self.assertAlmostEqual(float(libre.V_dc - cargado.V_dc), 3.0 / p.C_dc, places=6)

    def test_voltaje_minimo_en_el_denominador(self):
        p = BoostParams()
        d = boost_derivatives(p, BoostState(2.0, 0.0), p.V_b)
        self.assertTrue(np.isfinite(d.V_dc))
        self.assertAlmostEqual(float(d.V_dc), p.V_b * 2.0 / p.C_dc, places=6)

    def test_ciclo_saturado_se_cuenta(self):
        contador = Counter()
        self.assertEqual(duty_to_vc(1.3, 750.0, contador), 0.0)
        self.assertEqual(duty_to_vc(-0.2, 750.0, contador), 750.0)
        self.assertAlmostEqual(duty_to_vc(0.2, 750.0, contador), 600.0)
        self.assertEqual(contador["ciclo_boost"], 2)

    def test_parametros_invalidos(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            BoostParams(C_dc=0.0)
        self.assertIn("C_dc > 0", str(contexto.exception))


class PuenteDcAcTests(unittest.TestCase):
    def test_balance_de_energia(self):
        p = AcFilterParams(G=0.01)
        generador = np.random.default_rng(4)
        i = generador.normal(size=3) * 5.0
        v = generador.normal(size=3) * 200.0
        u = np.array([0.3, -0.6, 0.25])
        V_dc = 740.0
        d = dcac_derivatives(p, AcState(i, v), u, V_dc, np.zeros(3))
        potencia_almacenada = p.L * i @ d.i + p.C * v @ d.v
        esperada = 0.5 * V_dc * u @ i - p.R * i @ i - p.G * v @ v
        self.assertAlmostEqual(potencia_almacenada, esperada, places=6)

    def test_modulacion_saturada(self):
        contador = Counter()
        p = AcFilterParams()
        d = dcac_derivatives(p, AcState(np.zeros(3), np.zeros(3)), [1.5, 0.0, -2.0], 700.0, np.zeros(3), contador)
        np.testing.assert_allclose(d.i, np.array([350.0, 0.0, -350.0]) / p.L)
        self.assertEqual(contador["modulacion_ac"], 2)


class TopologiaTests(unittest.TestCase):
    def test_nodos_e_incidencia(self):
        top = topologia_dos_convertidores()
        self.assertEqual(top.nodos, ["I", "II", "0"])
        np.testing.assert_array_equal(top.incidence, [[1, 0], [0, 1], [-1, -1]])

    def test_carga_local(self):
        top = NetworkTopology(("I",), (), (Load("I", 58.77),))
        self.assertEqual(top.nodos_carga, [])
        self.assertAlmostEqual(float(top.conductancias_locales()[0]), 1.0 / 58.77)
        self.assertAlmostEqual(float(top.con_carga("I", 41.76).conductancias_locales()[0]), 1.0 / 41.76)

    def test_linea_entre_convertidores_es_error(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            NetworkTopology(("I", "II"), (Line("I", "II"),), ())
        self.assertEqual(contexto.exception.ruta, "red.lineas[0]")

    def test_nodo_sin_linea_es_error(self):
        with self.assertRaises(ErrorConfiguracion):
            NetworkTopology(("I",), (), (Load("0", 10.0),))

    def test_red_no_conexa(self):
        with self.assertRaises(ErrorConfiguracion):
            NetworkTopology(("I", "II"), (Line("I", "0"),), (Load("0", 10.0),))

    def test_corrientes_de_puerto(self):
        top = NetworkTopology(("I",), (Line("I", "0", LineParams(R_l=0.5, L_l=1e-3)),), (Load("0", 10.0),))
        i_l = np.array([[2.0, -1.0, -1.0]])
        v = np.array([[100.0, -50.0, -50.0]])
        puertos = network_port_currents(top, v, LineState(i_l))
        np.testing.assert_allclose(puertos.i_o, i_l)
        np.testing.assert_allclose(puertos.v_nodos, 10.0 * i_l)
        np.testing.assert_allclose(puertos.d_i_l, (v - 0.5 * i_l - 10.0 * i_l) / 1e-3)

    def test_linea_abierta_no_evoluciona(self):
        top = topologia_dos_convertidores()
        v = np.ones((2, 3)) * 50.0
        puertos = network_port_currents(top, v, LineState(np.zeros((2, 3))), cerrados=np.array([1.0, 0.0]))
        self.assertTrue(np.any(puertos.d_i_l[0] != 0.0))
        np.testing.assert_array_equal(puertos.d_i_l[1], 0.0)


class PlantaCompuestaTests(unittest.TestCase):
    def test_modelo_afin_reproduce_las_derivadas(self):
        top = topologia_dos_convertidores()
        planta = PlantaCompuesta(top, [BoostParams()] * 2, [AcFilterParams()] * 2)
        generador = np.random.default_rng(7)
        x = generador.normal(size=planta.dimension) * 10.0
        x[planta.vdc] = [745.0, 752.0]
        entradas = EntradasPlanta(
            u_bar=np.array([[0.5, -0.2, -0.3], [0.1, 0.4, -0.5]]),
            d=np.array([0.2, 0.25]),
            G_local=np.zeros(2),
            cerrados=np.ones(2),
            resistencias=top.resistencias_nodos(),
        )
        directa = planta.derivadas(x, entradas, contador=Counter())
        afin = planta.derivada(x, planta.ensamblar(entradas))
        np.testing.assert_allclose(afin, directa, rtol=1e-9, atol=1e-6)

    def test_cuenta_cada_saturacion_una_vez(self):
        top = topologia_dos_convertidores()
        planta = PlantaCompuesta(top, [BoostParams()] * 2, [AcFilterParams()] * 2)
        x = planta.estado_inicial(750.0)
        entradas = EntradasPlanta(
            u_bar=np.array([[1.4, -0.2, -1.2], [0.1, 0.4, -0.5]]),
            d=np.array([0.2, 1.1]),
            G_local=np.zeros(2),
            cerrados=np.ones(2),
            resistencias=top.resistencias_nodos(),
        )
        contador = Counter()
        planta.derivadas(x, entradas, contador=contador)
        self.assertEqual(contador["modulacion_ac"], 2)
        self.assertEqual(contador["ciclo_boost"], 1)

    def test_ensamblar_no_toca_el_contador_global(self):
        top = topologia_dos_convertidores()
        planta = PlantaCompuesta(top, [BoostParams()] * 2, [AcFilterParams()] * 2)
        entradas = EntradasPlanta(
            u_bar=np.full((2, 3), 1.5),
            d=np.zeros(2),
            G_local=np.zeros(2),
            cerrados=np.ones(2),
            resistencias=top.resistencias_nodos(),
        )
        antes = dict(CONTADOR_SATURACION)
        planta.ensamblar(entradas)
        self.assertEqual(dict(CONTADOR_SATURACION), antes)

    def test_carga_local_entra_como_conductancia(self):
        p = AcFilterParams()
        s = AcState(np.zeros(3), np.full(3, 100.0))
        con_carga = dcac_derivatives(p, s, np.zeros(3), 700.0, np.zeros(3), G=0.1)
        np.testing.assert_allclose(con_carga.v, -0.1 * 100.0 / p.C)

    def test_estado_inicial(self):
        planta = PlantaCompuesta(topologia_dos_convertidores(), [BoostParams()] * 2, [AcFilterParams()] * 2)
        x = planta.estado_inicial(600.0)
        self.assertEqual(x.shape, (8 * 2 + 3 * 2,))
        np.testing.assert_array_equal(x[planta.vdc], 600.0)
        self.assertEqual(np.count_nonzero(x), 2)


if __name__ == "__main__":
    unittest.main()
