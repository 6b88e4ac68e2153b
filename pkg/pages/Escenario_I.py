import sys
from pathlib import Path

import streamlit as st

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from simtool.config import construir_escenario, resolver_configuracion
from simtool.sim import MODOS, run_scenario
from utils.graficas import figura_escenario
from utils.ui import (
    aplicar_estilos_generales,
    boton_descarga_plotly,
    boton_descarga_traza,
    metricas_convertidor,
    mostrar_encabezado,
    mostrar_tarjetas_metricas,
    runtime_activo,
)

if runtime_activo():
    st.set_page_config(layout="wide", page_title="Escenario I")
    aplicar_estilos_generales()

ESCENARIOS_I = {"Arranque en negro": "blackstart", "Escalón de carga": "loadstep"}


def configuracion_escenario_i(escenario: str, modo: str, duracion: float, resistencia_final: float) -> dict:
    """Configuración del convertidor aislado con su carga local."""

    config = {"escenario": escenario, "modo": modo, "duracion": duracion}
    if escenario == "loadstep":
        config["eventos"] = [
            {"t": 0.0, "tipo": "cerrar_interruptor", "convertidor": "I"},
            {"t": 0.0, "tipo": "habilitar_modulacion", "convertidor": "I"},
            {"t": 0.5, "tipo": "escalon_carga", "nodo": "I", "resistencia": resistencia_final},
        ]
    return config


@st.cache_data(show_spinner="Simulando el convertidor aislado…")
def simular(escenario: str, modo: str, duracion: float, resistencia_final: float):
    config = configuracion_escenario_i(escenario, modo, duracion, resistencia_final)
    return run_scenario(construir_escenario(resolver_configuracion(config)))


if runtime_activo():
    mostrar_encabezado(
        "Escenario I: convertidor aislado",
        "Arranque en negro desde voltaje cero y respuesta a un escalón en la carga resistiva local,"
        " con la caída angular en su forma directa o en cascada con lazos de voltaje y corriente.",
        "🔋",
    )

    st.sidebar.header("Panel de Control")
    etiqueta = st.sidebar.radio("Experimento:", list(ESCENARIOS_I))
    modo = st.sidebar.selectbox("Implementación:", MODOS, format_func={"direct": "Directa", "indirect": "Indirecta"}.get)
    escenario = ESCENARIOS_I[etiqueta]
    duracion = st.sidebar.slider("Duración (s):", 0.5, 3.0, 1.0 if escenario == "blackstart" else 2.0, 0.1)
    resistencia_final = 41.76
    if escenario == "loadstep":
        resistencia_final = st.sidebar.number_input("Resistencia tras el escalón (Ω):", 10.0, 200.0, 41.76)

    resultado = simular(escenario, modo, duracion, resistencia_final)
    resumen = resultado.resumen
    g = resultado.ganancias_finales[0]

    if resumen.abortado:
        st.error(f"La simulación se detuvo en t = {resumen.t_aborto:.4f} s por un estado no finito.")
    mostrar_tarjetas_metricas(metricas_convertidor(resumen.convertidores[0], P_star=g.P_star))
    if resumen.saturaciones:
        st.caption(
            "Saturaciones registradas: "
            + ", ".join(f"{nombre}: {cuenta}" for nombre, cuenta in resumen.saturaciones.items())
        )

    st.subheader("Trazas")
    figura = figura_escenario(resultado.traza, ["I"], titulo=f"{etiqueta} ({modo})")
    st.plotly_chart(figura, use_container_width=True)
    columnas = st.columns(2)
    with columnas[0]:
        boton_descarga_plotly(figura, f"escenario_I_{escenario}_{modo}.png")
    with columnas[1]:
        boton_descarga_traza(resultado.traza, f"escenario_I_{escenario}_{modo}")

    st.subheader("Cómo interpretar estos resultados")
    st.markdown(
        "- **Frecuencia**: tras el escalón regresa a 50 Hz; el error estacionario de frecuencia es nulo.\n"
        "- **Δθ**: la carga adicional se absorbe como un desplazamiento angular (P* − Pˢ)/γ.\n"
        "- **V_dc**: el lazo del convertidor elevador restablece el voltaje del enlace."
    )
