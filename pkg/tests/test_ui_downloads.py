import json
import unittest

from simtool.traces import TraceRecorder
from utils import downloads, ui


def traza_corta() -> TraceRecorder:
    traza = TraceRecorder(["P_I"], 1e-4)
    traza.registrar(0.0, {"P_I": 1.5})
    traza.registrar(1e-4, {})
    return traza


class DownloadHelpersTest(unittest.TestCase):
    def test_helpers_expuestos_en_modulos(self):
        self.assertTrue(callable(downloads.boton_descarga_plotly))
        self.assertTrue(callable(downloads.boton_descarga_traza))
        self.assertTrue(callable(ui.boton_descarga_plotly))
        self.assertTrue(callable(ui.boton_descarga_traza))

    def test_invocacion_fuera_de_runtime_no_falla(self):
        # Al ejecutarse fuera del runtime de Streamlit, los helpers deben salir sin lanzar errores.
        downloads.boton_descarga_plotly(object(), "grafica.png")
        downloads.boton_descarga_traza(traza_corta(), "trazas")

    def test_contenido_de_la_traza(self):
        self.assertEqual(downloads.contenido_traza(traza_corta(), "csv"), "t,P_I\r\n0,1.5\r\n0.0001,\r\n")
        datos = json.loads(downloads.contenido_traza(traza_corta(), "json"))
        self.assertEqual(datos["canales"]["P_I"], [1.5, None])
        with self.assertRaises(ValueError):
            downloads.contenido_traza(traza_corta(), "xlsx")

    def test_formatear(self):
        self.assertEqual(ui.formatear(2880.04, "{:.1f}", "W"), "2880.0 W")
        self.assertEqual(ui.formatear(float("nan")), ui.NO_DISPONIBLE)
        self.assertEqual(ui.formatear(None), ui.NO_DISPONIBLE)


if __name__ == "__main__":
    unittest.main()
