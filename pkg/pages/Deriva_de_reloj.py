import sys
from pathlib import Path

import streamlit as st

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from simtool.config import construir_escenario, resolver_configuracion
from simtool.sim import clock_drift_demo
from utils.graficas import figura_espectro, figura_superpuesta
from utils.ui import (
    aplicar_estilos_generales,
    boton_descarga_plotly,
    boton_descarga_traza,
    formatear,
    mostrar_encabezado,
    mostrar_tarjetas_metricas,
    runtime_activo,
)

if runtime_activo():
    st.set_page_config(layout="wide", page_title="Deriva de reloj")
    aplicar_estilos_generales()


@st.cache_data(show_spinner="Simulando con y sin reloj maestro (dos corridas de 10 s)…")
def simular(delta_epsilon: float, duracion: float):
    spec = construir_escenario(resolver_configuracion({"escenario": "drift", "duracion": duracion}))
    return clock_drift_demo(spec, delta_epsilon)


if runtime_activo():
    mostrar_encabezado(
        "Deriva de reloj entre controladores",
        "Cada controlador muestrea con su propio oscilador. Una diferencia relativa Δε entre relojes"
        " hace girar los ángulos nominales uno respecto del otro y la potencia oscila a ω*Δε/2π;"
        " un reloj maestro compartido elimina la oscilación.",
        "⏱️",
    )

    st.sidebar.header("Panel de Control")
    delta_epsilon = st.sidebar.select_slider("Δε:", options=[5e-3, 1e-2, 2e-2], value=1e-2, format_func="{:.3f}".format)
    duracion = st.sidebar.slider("Duración (s):", 5.0, 15.0, 10.0, 1.0)

    demo = simular(delta_epsilon, duracion)
    error = abs(demo.pico.frecuencia / demo.frecuencia_esperada - 1.0)
    mostrar_tarjetas_metricas(
        [
            {
                "icono": "📈",
                "titulo": "Pico espectral sin reloj maestro",
                "valor": formatear(demo.pico.frecuencia, "{:.4f}", "Hz"),
                "descripcion": f"Esperado: {demo.frecuencia_esperada:.4f} Hz",
                "delta": {"texto": f"Error {100 * error:.1f}%", "tipo": "positive" if error < 0.1 else "negative"},
            },
            {
                "icono": "🧭",
                "titulo": "Con reloj maestro",
                "valor": formatear(demo.pico_maestro.potencia / demo.pico.potencia, "{:.2e}"),
                "descripcion": "Potencia del pico relativa a la corrida con deriva.",
            },
        ]
    )

    desde = demo.deriva.resumen.t_perturbacion + 1.0
    pestañas = st.tabs(["Potencia", "Espectro"])
    with pestañas[0]:
        figura = figura_superpuesta(
            {"Con deriva": demo.deriva.traza, "Reloj maestro": demo.reloj_maestro.traza},
            "P_I",
            eje_y="P₁ (W)",
            titulo="Potencia del convertidor I",
            nombre_paleta="deep",
        )
        st.plotly_chart(figura, use_container_width=True)
        boton_descarga_plotly(figura, "deriva_potencia.png")
        boton_descarga_traza(demo.deriva.traza, "deriva_trazas")
    with pestañas[1]:
        dt = demo.deriva.traza.dt
        figura = figura_espectro(
            {
                "Con deriva": demo.deriva.traza.ventana("P_I", desde),
                "Reloj maestro": demo.reloj_maestro.traza.ventana("P_I", desde),
            },
            dt,
            referencia=demo.frecuencia_esperada,
        )
        st.plotly_chart(figura, use_container_width=True)
        boton_descarga_plotly(figura, "deriva_espectro.png")
        st.caption(f"Espectro calculado desde t = {desde:.1f} s para excluir la interconexión.")
