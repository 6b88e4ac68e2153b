"""Botones de descarga para gráficas y trazas de simulación."""

from __future__ import annotations

import io
import json
from typing import Optional

import streamlit as st

from simtool.export import FORMATOS, traza_a_csv, traza_a_dict
from simtool.traces import TraceRecorder

from .runtime import runtime_activo

_MIME_TRAZA = {"csv": "text/csv", "json": "application/json"}


def _mostrar_advertencia(mensaje: str) -> None:
    if runtime_activo():
        st.warning(mensaje)


def _kaleido_disponible() -> bool:
    """Detecta si Kaleido está instalado para exportar imágenes de Plotly."""

    try:  # pragma: no cover - la disponibilidad depende del entorno de ejecución
        import kaleido  # type: ignore  # noqa: F401

        return True
    except Exception:
        return False


def _figura_como_imagen(figura: "plotly.graph_objects.Figure", *, formato: str) -> Optional[io.BytesIO]:
    buffer = io.BytesIO()
    try:  # pragma: no cover - depende de Kaleido instalado
        figura.write_image(buffer, format=formato)
    except Exception:
        return None
    buffer.seek(0)
    return buffer


def boton_descarga_plotly(
    figura: "plotly.graph_objects.Figure",
    nombre_archivo: str,
    *,
    etiqueta: str = "📥 Descargar gráfica",
    formato: str = "png",
) -> None:
    """Descarga la figura como imagen; sin Kaleido, como HTML interactivo."""

    if not runtime_activo():
        return

    from plotly.graph_objects import Figure  # importación perezosa

    if not isinstance(figura, Figure):
        _mostrar_advertencia("La descarga solo está disponible para objetos plotly.graph_objects.Figure.")
        return

    buffer = _figura_como_imagen(figura, formato=formato) if _kaleido_disponible() else None
    if buffer is not None:
        st.download_button(label=etiqueta, data=buffer, file_name=nombre_archivo, mime=f"image/{formato}")
        return

    st.download_button(
        label="📥 Descargar versión interactiva",
        data=figura.to_html(include_plotlyjs="cdn"),
        file_name=nombre_archivo.rsplit(".", 1)[0] + ".html",
        mime="text/html",
    )
    st.caption("Se generó una versión interactiva en HTML porque Kaleido no está disponible en el entorno.")


def contenido_traza(traza: TraceRecorder, formato: str) -> str:
    """Texto del archivo descargable de la traza en ``formato``."""

    if formato not in FORMATOS:
        raise ValueError(f"formato de traza desconocido: {formato}")
    if formato == "csv":
        return traza_a_csv(traza)
    return json.dumps(traza_a_dict(traza), ensure_ascii=False, allow_nan=False)


def boton_descarga_traza(
    traza: TraceRecorder,
    nombre_base: str,
    *,
    formato: str = "csv",
    etiqueta: Optional[str] = None,
) -> None:
    """Descarga la traza registrada como CSV o JSON."""

    if not runtime_activo():
        return

    st.download_button(
        label=etiqueta or f"📥 Descargar trazas ({formato.upper()})",
        data=contenido_traza(traza, formato),
        file_name=f"{nombre_base}.{formato}",
        mime=_MIME_TRAZA[formato],
    )


__all__ = ["boton_descarga_plotly", "boton_descarga_traza", "contenido_traza"]
