"""Configuración del registro (logging) compartida por la CLI y el tablero."""

from __future__ import annotations

import logging

FORMATO = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configurar_registro(nivel: int = logging.INFO) -> None:
    """Instala un único manejador en la raíz; llamadas repetidas solo ajustan el nivel."""

    raiz = logging.getLogger()
    if not any(getattr(manejador, "_simtool", False) for manejador in raiz.handlers):
        manejador = logging.StreamHandler()
        manejador.setFormatter(logging.Formatter(FORMATO))
        manejador._simtool = True  # type: ignore[attr-defined]
        raiz.addHandler(manejador)
    raiz.setLevel(nivel)


__all__ = ["FORMATO", "configurar_registro"]
