"""Constructores de figuras Plotly a partir de trazas de simulación."""

from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence

import numpy as np
import plotly.graph_objects as go
import seaborn as sns
from plotly.subplots import make_subplots
from scipy.signal import periodogram

from simtool.traces import TraceRecorder

COLORES_CONVERTIDOR = ("dodgerblue", "darkorange", "seagreen", "purple")
_TIPOS_MARCADOS = {"evento", "aborto"}


def paleta(n: int, nombre: str = "rocket") -> list:
    """``n`` colores de una paleta de seaborn en formato ``rgb(...)`` para Plotly."""

    return [f"rgb({int(r * 255)},{int(g * 255)},{int(b * 255)})" for r, g, b in sns.color_palette(nombre, n_colors=n)]


def _marcar_eventos(figura: go.Figure, traza: TraceRecorder, filas: int) -> None:
    vistos = set()
    for marca in traza.eventos:
        if marca.tipo not in _TIPOS_MARCADOS or marca.t in vistos:
            continue
        vistos.add(marca.t)
        for fila in range(1, filas + 1):
            figura.add_vline(x=marca.t, line=dict(color="gray", dash="dot", width=1), row=fila, col=1)


def figura_escenario(traza: TraceRecorder, convertidores: Sequence[str], *, titulo: str = "") -> go.Figure:
    """Potencia, frecuencia, voltaje de enlace y desviación angular por convertidor."""

    paneles = (
        ("P_{}", "Potencia activa (W)", 1.0),
        ("omega_{}", "Frecuencia (Hz)", 1.0 / (2.0 * math.pi)),
        ("V_dc_{}", "V_dc (V)", 1.0),
        ("delta_theta_{}", "Δθ (rad)", 1.0),
    )
    figura = make_subplots(
        rows=len(paneles), cols=1, shared_xaxes=True, subplot_titles=[nombre for _, nombre, _ in paneles]
    )
    t = traza.tiempo
    for k, convertidor in enumerate(convertidores):
        color = COLORES_CONVERTIDOR[k % len(COLORES_CONVERTIDOR)]
        for fila, (patron, _, escala) in enumerate(paneles, start=1):
            canal = patron.format(convertidor)
            if canal not in traza:
                continue
            figura.add_trace(
                go.Scatter(
                    x=t,
                    y=traza.canal(canal) * escala,
                    name=f"Convertidor {convertidor}",
                    legendgroup=convertidor,
                    showlegend=fila == 1,
                    line=dict(color=color),
                ),
                row=fila,
                col=1,
            )
    _marcar_eventos(figura, traza, len(paneles))
    figura.update_xaxes(title_text="t (s)", row=len(paneles), col=1)
    figura.update_layout(height=950, title_text=titulo, legend_traceorder="grouped")
    return figura


def figura_superpuesta(
    trazas: Mapping[str, TraceRecorder],
    canal: str,
    *,
    eje_y: str,
    escala: float = 1.0,
    desde: float = 0.0,
    titulo: str = "",
    nombre_paleta: str = "rocket",
) -> go.Figure:
    """Un canal de varias corridas (p. ej. un barrido) sobre el mismo eje."""

    figura = go.Figure()
    for color, (etiqueta, traza) in zip(paleta(max(len(trazas), 1), nombre_paleta), trazas.items()):
        t = traza.tiempo
        mascara = t >= desde
        figura.add_trace(go.Scatter(x=t[mascara], y=traza.canal(canal)[mascara] * escala, name=etiqueta, line=dict(color=color)))
    figura.update_layout(title=titulo, xaxis_title="t (s)", yaxis_title=eje_y, height=450)
    return figura


def figura_espectro(
    senales: Mapping[str, np.ndarray],
    dt: float,
    *,
    frecuencia_maxima: float = 5.0,
    referencia: Optional[float] = None,
) -> go.Figure:
    """Espectro de potencia de cada señal (componente de directa excluida)."""

    figura = go.Figure()
    for color, (etiqueta, senal) in zip(COLORES_CONVERTIDOR, senales.items()):
        datos = np.asarray(senal, dtype=float)
        if datos.size < 2:
            continue
        frecuencias, densidad = periodogram(datos, fs=1.0 / dt, nfft=16 * datos.size, detrend="constant", scaling="spectrum")
        mascara = (frecuencias > 0.0) & (frecuencias <= frecuencia_maxima)
        figura.add_trace(go.Scatter(x=frecuencias[mascara], y=densidad[mascara], name=etiqueta, line=dict(color=color)))
    if referencia is not None:
        figura.add_vline(x=referencia, line=dict(color="black", dash="dash"), annotation_text=f"{referencia:.3f} Hz")
    figura.update_layout(
        title="Espectro de potencia de P₁",
        xaxis_title="f (Hz)",
        yaxis_title="W²",
        yaxis_type="log",
        height=450,
    )
    return figura


__all__ = ["COLORES_CONVERTIDOR", "paleta", "figura_escenario", "figura_superpuesta", "figura_espectro"]
