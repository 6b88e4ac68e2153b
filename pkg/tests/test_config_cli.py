import json
import math
import tempfile
import unittest
from pathlib import Path

from simtool.cli import (
    SALIDA_ERROR,
    SALIDA_EXITO,
    Verificacion,
    _json_seguro,
    construir_parser,
    diferencia_maxima,
    main,
    preparar_configuracion,
    verificar_barrido,
    verificar_reactivas,
)
from simtool.config import (
    ESCENARIOS,
    combinar,
    construir_escenario,
    hash_configuracion,
    leer_configuracion,
    load_config,
    resolver_configuracion,
)
from simtool.errors import ErrorConfiguracion
from simtool.export import export
from simtool.sim import CloseBreaker, ResumenConvertidor, SetGains, SummaryReport
from simtool.traces import TraceRecorder


class ConfiguracionTests(unittest.TestCase):
    def test_configuracion_vacia_es_arranque_en_negro(self):
        resuelta = resolver_configuracion({})
        self.assertEqual(resuelta["escenario"], "blackstart")
        spec = load_config()
        self.assertEqual(spec.nombre, "blackstart")
        self.assertEqual(spec.topology.converters, ("I",))
        self.assertEqual(spec.duration, 1.0)

    def test_alpha_negativa_senala_la_ruta(self):
        config = resolver_configuracion({"convertidores": [{"droop": {"alpha": -1}}]})
        with self.assertRaises(ErrorConfiguracion) as contexto:
            construir_escenario(config)
        self.assertEqual(contexto.exception.ruta, "convertidores[0].droop.alpha")

    def test_llave_desconocida(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            resolver_configuracion({"foo": 1})
        self.assertIn("'foo'", str(contexto.exception))
        with self.assertRaises(ErrorConfiguracion) as contexto:
            resolver_configuracion({"droop": {"beta": 1.0}})
        self.assertEqual(contexto.exception.ruta, "droop")

    def test_tipo_incorrecto(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            resolver_configuracion({"duracion": "largo"})
        self.assertEqual(contexto.exception.ruta, "duracion")

    def test_escenario_desconocido(self):
        with self.assertRaises(ErrorConfiguracion) as contexto:
            resolver_configuracion({"escenario": "islanding"})
        self.assertEqual(contexto.exception.ruta, "escenario")

    def test_deriva_invalida(self):
        config = resolver_configuracion({"escenario": "drift", "reloj": {"epsilon": [-2.0, 0.0]}})
        with self.assertRaises(ErrorConfiguracion) as contexto:
            construir_escenario(config)
        self.assertEqual(contexto.exception.ruta, "reloj.epsilon[0]")

    def test_hash_determinista(self):
        a = {"escenario": "loadstep", "duracion": 2.0}
        b = {"duracion": 2.0, "escenario": "loadstep"}
        self.assertEqual(hash_configuracion(a), hash_configuracion(b))
        self.assertNotEqual(hash_configuracion(a), hash_configuracion({**a, "duracion": 2.5}))
        self.assertEqual(len(hash_configuracion(a)), 64)

    def test_combinacion_de_convertidores(self):
        base = ESCENARIOS["sync"]
        combinada = combinar(base, {"convertidores": [{"droop": {"gamma": 500.0}}]})
        self.assertEqual(combinada["convertidores"][0], {"id": "I", "droop": {"gamma": 500.0}})
        self.assertEqual(combinada["convertidores"][1]["droop"], {"P_star": 0.0})
        self.assertEqual(base["convertidores"][0], {"id": "I"})

    def test_ganancias_antes_de_interconectar(self):
        spec = construir_escenario(resolver_configuracion({"escenario": "sharing"}))
        acciones = [evento.action for evento in spec.events if evento.time == 0.8]
        self.assertIsInstance(acciones[0], SetGains)
        self.assertIsInstance(acciones[2], CloseBreaker)
        self.assertEqual(acciones[0].droop.gamma, 500.0)
        self.assertEqual(acciones[0].droop.alpha, 2000.0)
        self.assertEqual(acciones[0].droop.P_star, 1440.0)

    def test_escenarios_integrados_se_construyen(self):
        for nombre in ESCENARIOS:
            with self.subTest(escenario=nombre):
                spec = construir_escenario(resolver_configuracion({"escenario": nombre}))
                self.assertEqual(spec.nombre, nombre)

    def test_variantes_de_sincronia(self):
        sin_perdidas = construir_escenario(resolver_configuracion({"escenario": "sync_sin_perdidas"}))
        self.assertEqual([linea.params.R_l for linea in sin_perdidas.topology.lines], [0.0, 0.0])
        self.assertEqual(ESCENARIOS["sync"]["red"]["lineas"][1]["R_l"], 0.02)
        desajuste = construir_escenario(resolver_configuracion({"escenario": "sync_desajuste"}))
        primero, segundo = desajuste.convertidores
        self.assertAlmostEqual(primero.voltaje_conmutacion - segundo.voltaje_conmutacion, 1.0, places=9)

    def test_lectura_de_archivos(self):
        with tempfile.TemporaryDirectory() as directorio:
            vacio = Path(directorio) / "vacio.json"
            vacio.write_text("", encoding="utf-8")
            self.assertEqual(leer_configuracion(vacio), {})
            roto = Path(directorio) / "roto.json"
            roto.write_text("{\"escenario\": ", encoding="utf-8")
            with self.assertRaises(ErrorConfiguracion) as contexto:
                leer_configuracion(roto)
            self.assertIn("JSON inválido", str(contexto.exception))
            with self.assertRaises(ErrorConfiguracion):
                leer_configuracion(Path(directorio) / "no_existe.json")


class LineaDeComandosTests(unittest.TestCase):
    def test_opciones_de_run(self):
        args = construir_parser().parse_args(["run", "loadstep", "--check", "--line-resistance", "0"])
        self.assertEqual(args.escenario_run, "loadstep")
        self.assertTrue(args.check)
        self.assertEqual(args.line_resistance, 0.0)
        self.assertEqual(args.formato, "csv")

    def test_escenario_invalido(self):
        with self.assertRaises(SystemExit):
            construir_parser().parse_args(["run", "islanding"])

    def test_preparar_configuracion(self):
        args = construir_parser().parse_args(
            ["run", "sync", "--line-resistance", "0", "--seedless", "--duration", "1.5", "--mode", "indirect"]
        )
        resuelta = preparar_configuracion("sync", args)
        self.assertEqual([linea["R_l"] for linea in resuelta["red"]["lineas"]], [0.0, 0.0])
        self.assertFalse(resuelta["sembrar_con_pll"])
        self.assertEqual(resuelta["duracion"], 1.5)
        self.assertEqual(resuelta["modo"], "indirect")
        self.assertEqual(ESCENARIOS["sync"]["red"]["lineas"][0]["R_l"], 0.02)

    def test_custom_requiere_config(self):
        args = construir_parser().parse_args(["run", "custom"])
        with self.assertRaises(ErrorConfiguracion):
            preparar_configuracion("custom", args)
        self.assertEqual(main(["run", "custom"]), SALIDA_ERROR)

    def test_exportar_entre_formatos(self):
        traza = TraceRecorder(["P_I"], 1e-4)
        for k in range(3):
            traza.registrar(k * 1e-4, {"P_I": 10.0 * k})
        with tempfile.TemporaryDirectory() as directorio:
            origen = export(traza, "csv", Path(directorio) / "trazas.csv")
            destino = Path(directorio) / "trazas.json"
            self.assertEqual(main(["export", str(origen), str(destino)]), SALIDA_EXITO)
            datos = json.loads(destino.read_text(encoding="utf-8"))
            self.assertEqual(datos["canales"]["P_I"], [0.0, 10.0, 20.0])


class VerificacionesTests(unittest.TestCase):
    def test_verificacion_no_finita_falla(self):
        self.assertTrue(Verificacion("x", 0.5, 1.0).aprobada)
        self.assertFalse(Verificacion("x", 1.0, 1.0).aprobada)
        self.assertFalse(Verificacion("x", math.nan, 1.0).aprobada)
        self.assertEqual(Verificacion("x", 0.5, 1.0).a_dict()["aprobada"], True)

    def _reportes(self, parametro, valores, **por_reporte):
        reportes = []
        for k, valor in enumerate(valores):
            campos = {nombre: serie[k] for nombre, serie in por_reporte.items()}
            reportes.append(
                SummaryReport("loadstep", 2.0, convertidores=[ResumenConvertidor("I", **campos)], parametro=parametro, valor=valor)
            )
        return reportes

    def test_barrido_alpha_monotono(self):
        monotono = self._reportes("alpha", [500.0, 1000.0, 2000.0], profundidad_nadir=[0.5, 0.3, 0.2])
        self.assertTrue(verificar_barrido("alpha", monotono)[0].aprobada)
        quebrado = self._reportes("alpha", [500.0, 1000.0, 2000.0], profundidad_nadir=[0.5, 0.6, 0.2])
        self.assertFalse(verificar_barrido("alpha", quebrado)[0].aprobada)

    def test_barrido_gamma_producto_constante(self):
        reportes = self._reportes("gamma", [5e4, 5e5, 5e6], delta_theta_s=[-0.0184, -0.00184, -0.000184])
        self.assertTrue(verificar_barrido("gamma", reportes)[0].aprobada)
        reportes[2].convertidores[0].delta_theta_s = -0.0005
        self.assertFalse(verificar_barrido("gamma", reportes)[0].aprobada)

    def _reactivas(self, medidas, consumo, desajuste, kron):
        return SummaryReport(
            "sync",
            2.5,
            reactivas={
                "medidas": medidas,
                "suma": sum(medidas),
                "consumo_lineas": consumo,
                "desajuste_amplitud": desajuste,
                "kron_exactas": kron,
                "kron_pequena_senal": kron,
            },
        )

    def test_reactivas_contra_el_consumo_de_lineas(self):
        cuadra = verificar_reactivas(self._reactivas([6.0, 4.2], 10.0, 0.0, [0.0, 0.0]))
        self.assertEqual(len(cuadra), 1)
        self.assertTrue(cuadra[0].aprobada)
        # la suma de Kron se anula aunque las medidas no cuadren
        descuadre = verificar_reactivas(self._reactivas([85.0, 96.0], 10.0, 0.0, [0.0, 0.0]))
        self.assertFalse(descuadre[0].aprobada)
        self.assertFalse(verificar_reactivas(SummaryReport("sync", 2.5))[0].aprobada)

    def test_signos_con_desajuste_de_amplitud(self):
        acordes = verificar_reactivas(self._reactivas([260.0, -250.0], 10.0, 1.0, [254.0, -254.0]))
        self.assertEqual([v.aprobada for v in acordes], [True, True])
        invertidos = verificar_reactivas(self._reactivas([-250.0, 260.0], 10.0, 1.0, [254.0, -254.0]))
        self.assertFalse(invertidos[1].aprobada)

    def test_diferencia_maxima(self):
        a = TraceRecorder(["P_I"], 1e-4)
        b = TraceRecorder(["P_I"], 1e-4)
        for traza in (a, b):
            traza.registrar(0.0, {})
            traza.registrar(1e-4, {"P_I": 3.0})
        self.assertEqual(diferencia_maxima(a, b), 0.0)
        b.registrar(2e-4, {"P_I": 1.0})
        self.assertEqual(diferencia_maxima(a, b), math.inf)
        a.registrar(2e-4, {})
        self.assertEqual(diferencia_maxima(a, b), math.inf)

    def test_json_seguro(self):
        self.assertEqual(_json_seguro({"a": (1.0, math.nan), "b": math.inf}), {"a": [1.0, None], "b": None})


if __name__ == "__main__":
    unittest.main()
