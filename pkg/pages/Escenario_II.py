import sys
from pathlib import Path

import pandas as pd
import streamlit as st

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from simtool.config import construir_escenario, resolver_configuracion
from simtool.sim import SummaryReport, run_scenario
from utils.graficas import figura_escenario
from utils.ui import (
    aplicar_estilos_generales,
    boton_descarga_plotly,
    boton_descarga_traza,
    metricas_convertidor,
    metricas_escenario,
    mostrar_encabezado,
    mostrar_tarjetas_metricas,
    runtime_activo,
)

if runtime_activo():
    st.set_page_config(layout="wide", page_title="Escenario II")
    aplicar_estilos_generales()

ESCENARIOS_II = {
    "Sincronización": "sync",
    "Sincronización sin pérdidas": "sync_sin_perdidas",
    "Desajuste de amplitud de 1 V": "sync_desajuste",
    "Reparto 1:1": "sharing",
    "Reparto 2:1": "sharing_r2",
}


def tabla_oraculo(resumen: SummaryReport) -> pd.DataFrame:
    """Estado estacionario simulado frente al oráculo fasorial, por convertidor."""

    filas = []
    oraculo = resumen.oraculo or {}
    P_oraculo = oraculo.get("P_s", [float("nan")] * len(resumen.convertidores))
    Q_oraculo = oraculo.get("Q_s", [float("nan")] * len(resumen.convertidores))
    for c, P_o, Q_o in zip(resumen.convertidores, P_oraculo, Q_oraculo):
        filas.append(
            {
                "Convertidor": c.id,
                "Pˢ simulada (W)": c.P_s,
                "Pˢ oráculo (W)": P_o,
                "Qˢ simulada (var)": c.Q_s,
                "Qˢ oráculo (var)": Q_o,
                "Δθˢ (rad)": c.delta_theta_s,
            }
        )
    return pd.DataFrame(filas).set_index("Convertidor")


@st.cache_data(show_spinner="Simulando la interconexión de dos convertidores…")
def simular(escenario: str, resistencia_linea: float, sembrar: bool):
    config = resolver_configuracion({"escenario": escenario, "sembrar_con_pll": sembrar})
    for linea in config["red"]["lineas"]:
        linea["R_l"] = resistencia_linea
    return run_scenario(construir_escenario(config))


if runtime_activo():
    mostrar_encabezado(
        "Escenario II: dos convertidores en paralelo",
        "El convertidor II se interconecta con la red formada por el convertidor I; compara la"
        " sincronización de frecuencia y el reparto de potencia con el estado estacionario algebraico.",
        "🔗",
    )

    st.sidebar.header("Panel de Control")
    etiqueta = st.sidebar.radio("Experimento:", list(ESCENARIOS_II))
    resistencia_linea = st.sidebar.select_slider("R_l de las líneas (Ω):", options=[0.0, 0.01, 0.02, 0.05], value=0.02)
    sembrar = st.sidebar.checkbox("Sembrar θ* con el PLL", value=True)

    resultado = simular(ESCENARIOS_II[etiqueta], resistencia_linea, sembrar)
    resumen = resultado.resumen

    if resumen.abortado:
        st.error(f"La simulación se detuvo en t = {resumen.t_aborto:.4f} s por un estado no finito.")
    if resumen.violaciones_angulo_seguro:
        st.warning(
            f"Se registraron {resumen.violaciones_angulo_seguro} muestras con diferencias angulares de línea"
            " fuera de (−π/2, π/2)."
        )

    mostrar_tarjetas_metricas(metricas_escenario(resumen))
    for c, g in zip(resumen.convertidores, resultado.ganancias_finales):
        mostrar_tarjetas_metricas(metricas_convertidor(c, P_star=g.P_star))

    pestañas = st.tabs(["Trazas", "Comparación con el oráculo"])
    with pestañas[0]:
        figura = figura_escenario(resultado.traza, ["I", "II"], titulo=etiqueta)
        st.plotly_chart(figura, use_container_width=True)
        boton_descarga_plotly(figura, f"escenario_II_{ESCENARIOS_II[etiqueta]}.png")
        boton_descarga_traza(resultado.traza, f"escenario_II_{ESCENARIOS_II[etiqueta]}")
    with pestañas[1]:
        if resumen.oraculo is None:
            st.info("El oráculo no está disponible para esta configuración.")
        else:
            st.dataframe(tabla_oraculo(resumen).style.format("{:.4f}"), use_container_width=True)
            st.caption(
                f"Potencia de la carga según el oráculo: {resumen.oraculo['potencia_carga']:.1f} W;"
                f" pérdidas: {resumen.oraculo['perdidas']:.2f} W."
            )
