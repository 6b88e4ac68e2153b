"""Utilidades ligeras relacionadas con el runtime de Streamlit."""

from __future__ import annotations

import logging

import streamlit as st

from simtool.registro import configurar_registro


def runtime_activo() -> bool:
    """Indica si la app se está ejecutando dentro del runtime de Streamlit."""

    try:
        return st.runtime.exists()
    except Exception:  # pragma: no cover - protección ante cambios de API
        return False


def configurar_registro_sesion(nivel: int = logging.INFO) -> None:
    """Configura el registro una sola vez por sesión del tablero."""

    if not runtime_activo():
        return
    if not st.session_state.get("_registro_configurado"):
        configurar_registro(nivel)
        st.session_state["_registro_configurado"] = True


__all__ = ["runtime_activo", "configurar_registro_sesion"]
