import sys
from pathlib import Path

import streamlit as st

PROJECT_ROOT = Path(__file__).resolve().parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from utils.ui import (
    aplicar_estilos_generales,
    mostrar_encabezado,
    mostrar_tarjetas_descriptivas,
    runtime_activo,
)

if runtime_activo():
    st.set_page_config(
        page_title="Control de caída angular",
        page_icon="⚡",
        layout="wide",
    )

    aplicar_estilos_generales()
    mostrar_encabezado(
        "Simulador de convertidores formadores de red",
        "Explora el arranque en negro, la sincronización y el reparto de potencia de convertidores"
        " DC/AC con control de caída angular, sobre un modelo promediado de la planta.",
        "⚡",
    )

    st.subheader("Bienvenido")
    st.write(
        "Cada convertidor está formado por una etapa elevadora que regula el enlace de DC y un puente"
        " trifásico con filtro LC. La ley de **caída angular** fija el ángulo del voltaje generado y"
        " devuelve la frecuencia a su valor nominal sin control secundario."
    )
    st.write(
        "Las mismas simulaciones están disponibles desde la terminal con `python -m simtool run <escenario>`,"
        " que además escribe las trazas, el resumen y el manifiesto de la corrida."
    )

    st.subheader("Explora las herramientas disponibles")
    herramientas = [
        {
            "icono": "🔋",
            "titulo": "Escenario I",
            "descripcion": "Arranque en negro y escalón de carga de un convertidor aislado, en implementación directa o indirecta.",
            "enlace": "Escenario_I",
            "texto_boton": "Simular",
        },
        {
            "icono": "🔗",
            "titulo": "Escenario II",
            "descripcion": "Interconexión de un segundo convertidor: sincronización, reparto de potencia y comparación con el oráculo.",
            "enlace": "Escenario_II",
            "texto_boton": "Simular",
        },
        {
            "icono": "🎛️",
            "titulo": "Sintonización",
            "descripcion": "Barridos de α y γ: nadir, RoCoF y desviación angular estacionaria.",
            "enlace": "Sintonización",
            "texto_boton": "Barrer",
        },
        {
            "icono": "⏱️",
            "titulo": "Deriva de reloj",
            "descripcion": "Oscilación de potencia por relojes locales desajustados y su eliminación con reloj maestro.",
            "enlace": "Deriva_de_reloj",
            "texto_boton": "Ver deriva",
        },
    ]
    mostrar_tarjetas_descriptivas(herramientas, columnas=2)
