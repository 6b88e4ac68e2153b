"""Estilos y componentes reutilizables del tablero del simulador.

Centraliza el bloque CSS común, el encabezado de cada página y las tarjetas
de métricas/descriptivas, además de los formateadores que convierten un
:class:`simtool.sim.SummaryReport` en tarjetas.
"""

from __future__ import annotations

import html
import math
import re
from typing import Dict, Iterable, List, Mapping, Optional, Sequence
from urllib.parse import quote

import streamlit as st

from simtool.sim import ResumenConvertidor, SummaryReport

from .downloads import boton_descarga_plotly, boton_descarga_traza
from .runtime import configurar_registro_sesion, runtime_activo

_runtime_activo = runtime_activo

NO_DISPONIBLE = "N/D"


def aplicar_estilos_generales() -> None:
    """Inyecta los estilos globales y configura el registro de la sesión."""

    if not _runtime_activo():
        return

    configurar_registro_sesion()
    st.markdown(
        """
        <style>
            :root {
                --caida-primary: #7a3e00;
                --caida-primary-light: #c46a12;
                --caida-bg-soft: #fbf6f1;
            }

            .block-container {
                padding-top: 2.2rem !important;
                padding-bottom: 3rem !important;
                max-width: 1200px;
            }

            .caida-hero {
                background: linear-gradient(135deg, rgba(122, 62, 0, 0.10), rgba(196, 106, 18, 0.26));
                border: 1px solid rgba(122, 62, 0, 0.12);
                border-radius: 20px;
                padding: 1.8rem 2rem;
                margin-bottom: 1rem;
                display: flex;
                gap: 1.2rem;
                align-items: center;
            }

            .caida-hero-icon {
                font-size: 2.8rem;
            }

            .caida-hero-body h1 {
                font-size: clamp(1.8rem, 3vw, 2.4rem);
                margin-bottom: 0.4rem;
                color: #3d1f00;
            }

            .caida-hero-body p {
                margin: 0;
                font-size: 1.08rem;
                line-height: 1.55;
                color: #2b2119;
            }

            .caida-metric-card .metric-delta {
                font-size: 0.85rem;
                margin: 0;
            }

            .caida-metric-card .metric-delta.neutral {
                color: #6b4a2b;
            }

            .caida-metric-card .metric-delta.positive {
                color: #207a3c;
            }

            .caida-metric-card .metric-delta.negative {
                color: #ba1a1a;
            }

            .caida-metric-card .metric-description {
                color: #5b4b3d;
                font-size: 0.88rem;
                margin: 0;
                line-height: 1.45;
            }

            .caida-info-card {
                background: var(--caida-bg-soft);
                border-radius: 16px;
                padding: 1.2rem 1.4rem;
                border: 1px solid rgba(122, 62, 0, 0.12);
                height: 100%;
                display: flex;
                flex-direction: column;
                gap: 0.6rem;
            }

            .caida-info-card h3 {
                margin-top: 0.6rem;
                margin-bottom: 0.4rem;
                font-size: 1.05rem;
                color: #3d1f00;
            }

            .caida-info-card p {
                margin: 0;
                color: #45372b;
                font-size: 1.02rem;
                line-height: 1.5;
            }

            .caida-info-card .caida-card-button {
                align-self: flex-start;
                padding: 0.45rem 0.95rem;
                border-radius: 999px;
                background: var(--caida-primary);
                color: #ffffff !important;
                font-weight: 600;
                text-decoration: none !important;
            }

            .caida-info-card .caida-card-button:hover {
                background: var(--caida-primary-light);
            }
        </style>
        """,
        unsafe_allow_html=True,
    )


def _render_texto_rico(texto: str) -> str:
    """Convierte un subconjunto sencillo de Markdown a HTML seguro."""

    texto_escape = html.escape(texto)
    texto_escape = re.sub(r"\*\*(.+?)\*\*", r"<strong>\1</strong>", texto_escape)
    texto_escape = re.sub(r"\*(.+?)\*", r"<em>\1</em>", texto_escape)
    return texto_escape.replace("\n", "<br>")


def formatear(valor: Optional[float], patron: str = "{:.2f}", unidad: str = "") -> str:
    """Texto de una métrica; ``N/D`` para valores ausentes o no finitos."""

    if valor is None or not math.isfinite(valor):
        return NO_DISPONIBLE
    texto = patron.format(valor)
    return f"{texto} {unidad}".strip()


def metricas_convertidor(resumen: ResumenConvertidor, *, P_star: float) -> List[Dict[str, object]]:
    """Tarjetas de estado estacionario de un convertidor."""

    residuo = resumen.residuo_caida
    delta_residuo = None
    if math.isfinite(residuo) and P_star:
        relativo = abs(residuo) / abs(P_star)
        delta_residuo = {
            "texto": f"{100 * relativo:.3f}% de P*",
            "tipo": "positive" if relativo < 1e-2 else "negative",
        }
    return [
        {
            "icono": "⚡",
            "titulo": f"Potencia activa {resumen.id}",
            "valor": formatear(resumen.P_s, "{:.1f}", "W"),
            "descripcion": f"Reactiva: {formatear(resumen.Q_s, '{:.1f}', 'var')}",
        },
        {
            "icono": "🎯",
            "titulo": "Ley de caída",
            "valor": formatear(resumen.delta_theta_s, "{:+.5f}", "rad"),
            "descripcion": "Desviación angular estacionaria **Δθˢ**; el residuo mide γΔθˢ + Pˢ − P*.",
            "delta": delta_residuo,
        },
        {
            "icono": "〰️",
            "titulo": "Frecuencia",
            "valor": formatear(resumen.omega_s / (2.0 * math.pi), "{:.4f}", "Hz"),
            "descripcion": f"Nadir: {formatear(resumen.omega_nadir / (2.0 * math.pi), '{:.3f}', 'Hz')} · "
            f"RoCoF máx.: {formatear(resumen.rocof_max, '{:.1f}', 'rad/s²')}",
        },
    ]


def metricas_escenario(resumen: SummaryReport) -> List[Dict[str, object]]:
    """Tarjetas de los resultados de red: diferencia angular, oráculo y reparto."""

    metricas: List[Dict[str, object]] = []
    if resumen.diferencia_angular is not None:
        oraculo = resumen.oraculo or {}
        esperado = oraculo.get("diferencia_angular")
        delta = None
        if esperado is not None:
            delta = {"texto": f"Oráculo: {esperado:.5f} rad", "tipo": "neutral"}
        metricas.append(
            {
                "icono": "📐",
                "titulo": "Diferencia angular θ₁ − θ₂",
                "valor": formatear(resumen.diferencia_angular, "{:.5f}", "rad"),
                "descripcion": "Promedio sobre la ventana estacionaria final.",
                "delta": delta,
            }
        )
    if resumen.reparto is not None:
        metricas.append(
            {
                "icono": "⚖️",
                "titulo": "Razón de reparto P₁/P₂",
                "valor": formatear(resumen.reparto["razon"], "{:.4f}"),
                "descripcion": f"Esperada: {resumen.reparto['razon_esperada']:.4f}",
                "delta": {
                    "texto": f"Error relativo {100 * resumen.reparto['error_relativo']:.2f}%",
                    "tipo": "positive" if resumen.reparto["error_relativo"] < 0.05 else "negative",
                },
            }
        )
    if resumen.reactivas is not None:
        metricas.append(
            {
                "icono": "🔁",
                "titulo": "Suma de reactivas medidas",
                "valor": formatear(resumen.reactivas["suma"], "{:.2f}", "var"),
                "descripcion": f"Consumo reactivo de las líneas: {resumen.reactivas['consumo_lineas']:.2f} var",
            }
        )
    return metricas


def mostrar_encabezado(titulo: str, descripcion: str, emoji: str = "") -> None:
    """Renderiza un encabezado tipo *hero* con icono y descripción."""

    if not _runtime_activo():
        return

    titulo_html = _render_texto_rico(titulo)
    descripcion_html = _render_texto_rico(descripcion) if descripcion else ""
    st.markdown(
        f"""
        <div class="caida-hero">
            <div class="caida-hero-icon">{html.escape(emoji)}</div>
            <div class="caida-hero-body">
                <h1>{titulo_html}</h1>
                {f"<p>{descripcion_html}</p>" if descripcion_html else ""}
            </div>
        </div>
        """,
        unsafe_allow_html=True,
    )


def mostrar_tarjetas_metricas(metricas: Iterable[Mapping[str, object]]) -> None:
    """Cuadrícula de tarjetas con ``titulo``, ``valor`` y ``descripcion``.

    ``delta`` es opcional: ``{"texto": ..., "tipo": "positive"|"negative"|"neutral"}``.
    """

    if not _runtime_activo():
        return

    metricas_secuencia: Sequence[Mapping[str, object]] = list(metricas)
    if not metricas_secuencia:
        return
    columnas = min(3, len(metricas_secuencia))

    for indice_inicio in range(0, len(metricas_secuencia), columnas):
        fila = metricas_secuencia[indice_inicio : indice_inicio + columnas]
        for col, metric in zip(st.columns(len(fila)), fila):
            delta = metric.get("delta") if isinstance(metric.get("delta"), Mapping) else None
            delta_texto = str(delta.get("texto", "")) if delta else ""
            delta_tipo = (str(delta.get("tipo", "")).lower() if delta else "").strip() or "neutral"
            descripcion = metric.get("descripcion")

            with col:
                st.markdown("<div class='caida-metric-card'>", unsafe_allow_html=True)
                etiqueta = f"{metric.get('icono') or ''} {metric.get('titulo', '')}".strip()
                st.metric(
                    label=etiqueta or " ",
                    value=str(metric.get("valor", "")),
                    delta=delta_texto if delta_tipo in {"positive", "negative"} else None,
                )
                if delta_texto and delta_tipo == "neutral":
                    st.markdown(
                        f"<p class='metric-delta neutral'>ℹ️ {html.escape(delta_texto)}</p>",
                        unsafe_allow_html=True,
                    )
                if descripcion:
                    st.markdown(
                        f"<p class='metric-description'>{_render_texto_rico(str(descripcion))}</p>",
                        unsafe_allow_html=True,
                    )
                st.markdown("</div>", unsafe_allow_html=True)


def mostrar_tarjetas_descriptivas(tarjetas: Iterable[Mapping[str, object]], *, columnas: int = 3) -> None:
    """Renderiza tarjetas de texto para listados de herramientas."""

    if not _runtime_activo():
        return

    tarjetas_lista: Sequence[Mapping[str, object]] = list(tarjetas)
    if not tarjetas_lista:
        return
    columnas = max(1, min(columnas, 3))

    for indice_inicio in range(0, len(tarjetas_lista), columnas):
        fila = tarjetas_lista[indice_inicio : indice_inicio + columnas]
        for col, tarjeta in zip(st.columns(len(fila)), fila):
            enlace = str(tarjeta.get("enlace") or "").strip()
            boton_html = ""
            if enlace:
                texto_boton = html.escape(str(tarjeta.get("texto_boton", "Explorar")))
                boton_html = f'<a class="caida-card-button" href="/{quote(enlace.lstrip("/"))}">➡️ {texto_boton}</a>'
            with col:
                st.markdown(
                    f"""
                    <div class="caida-info-card">
                        <div>{html.escape(str(tarjeta.get("icono", "")))}</div>
                        <h3>{_render_texto_rico(str(tarjeta.get("titulo", "")))}</h3>
                        <p>{_render_texto_rico(str(tarjeta.get("descripcion", "")))}</p>
                        {boton_html}
                    </div>
                    """,
                    unsafe_allow_html=True,
                )


__all__ = [
    "NO_DISPONIBLE",
    "aplicar_estilos_generales",
    "boton_descarga_plotly",
    "boton_descarga_traza",
    "formatear",
    "metricas_convertidor",
    "metricas_escenario",
    "mostrar_encabezado",
    "mostrar_tarjetas_metricas",
    "mostrar_tarjetas_descriptivas",
    "runtime_activo",
]
