import math
import sys
from pathlib import Path
from typing import Sequence

import pandas as pd
import streamlit as st

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from simtool.config import BARRIDOS, construir_escenario, resolver_configuracion
from simtool.sim import SummaryReport, aplicar_parametro, run_scenario
from utils.graficas import figura_superpuesta
from utils.ui import (
    aplicar_estilos_generales,
    boton_descarga_plotly,
    mostrar_encabezado,
    runtime_activo,
)

if runtime_activo():
    st.set_page_config(layout="wide", page_title="Sintonización")
    aplicar_estilos_generales()

PARAMETROS = {"α (inercia virtual)": "alpha", "γ (rigidez angular)": "gamma"}


def tabla_barrido(reportes: Sequence[SummaryReport], parametro: str) -> pd.DataFrame:
    """Métricas del convertidor I por valor del parámetro barrido."""

    filas = []
    for reporte in reportes:
        c = reporte.convertidores[0]
        fila = {
            parametro: reporte.valor,
            "Nadir (Hz)": c.omega_nadir / (2.0 * math.pi),
            "Profundidad (rad/s)": c.profundidad_nadir,
            "RoCoF máx. (rad/s²)": c.rocof_max,
            "Δθˢ (rad)": c.delta_theta_s,
        }
        if parametro == "gamma":
            fila["γ·|Δθˢ| (W)"] = reporte.valor * abs(c.delta_theta_s)
        filas.append(fila)
    return pd.DataFrame(filas).set_index(parametro)


@st.cache_data(show_spinner="Simulando el escalón de carga…")
def simular_valor(parametro: str, valor: float):
    spec = construir_escenario(resolver_configuracion({"escenario": "loadstep"}))
    resultado = run_scenario(aplicar_parametro(spec, parametro, valor))
    resultado.resumen.parametro = parametro
    resultado.resumen.valor = valor
    return resultado


if runtime_activo():
    mostrar_encabezado(
        "Sintonización de la caída angular",
        "Barrido de α y γ sobre el escalón de carga del convertidor aislado: α gobierna la dinámica"
        " de frecuencia y γ el desplazamiento angular estacionario.",
        "🎛️",
    )

    st.sidebar.header("Panel de Control")
    etiqueta = st.sidebar.radio("Parámetro:", list(PARAMETROS))
    parametro = PARAMETROS[etiqueta]
    valores = st.sidebar.multiselect("Valores:", BARRIDOS[parametro], default=BARRIDOS[parametro])

    if not valores:
        st.info("Selecciona al menos un valor para el barrido.")
    else:
        resultados = {f"{parametro} = {valor:g}": simular_valor(parametro, valor) for valor in sorted(valores)}
        reportes = [r.resumen for r in resultados.values()]

        st.subheader("Métricas por valor")
        st.dataframe(tabla_barrido(reportes, parametro).style.format("{:.5g}"), use_container_width=True)

        pestañas = st.tabs(["Frecuencia", "Desviación angular"])
        with pestañas[0]:
            figura = figura_superpuesta(
                {k: r.traza for k, r in resultados.items()},
                "omega_I",
                eje_y="f (Hz)",
                escala=1.0 / (2.0 * math.pi),
                desde=0.4,
                titulo="Frecuencia alrededor del escalón de carga",
            )
            st.plotly_chart(figura, use_container_width=True)
            boton_descarga_plotly(figura, f"barrido_{parametro}_frecuencia.png")
        with pestañas[1]:
            figura = figura_superpuesta(
                {k: r.traza for k, r in resultados.items()},
                "delta_theta_I",
                eje_y="Δθ (rad)",
                desde=0.4,
                titulo="Desviación angular tras el escalón",
                nombre_paleta="mako",
            )
            st.plotly_chart(figura, use_container_width=True)
            boton_descarga_plotly(figura, f"barrido_{parametro}_angulo.png")

        st.caption(
            "Con γ fijo, Δθˢ = (P* − Pˢ)/γ no depende de α; el producto γ·|Δθˢ| debe permanecer constante"
            " a lo largo del barrido de γ."
        )
