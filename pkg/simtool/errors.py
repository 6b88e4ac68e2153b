"""Jerarquía de excepciones del simulador y validadores de parámetros."""

from __future__ import annotations

from typing import Optional

import numpy as np


class ErrorSimtool(Exception):
    """Raíz de todos los errores propios de ``simtool``."""


class ErrorArgumentoInvalido(ErrorSimtool, ValueError):
    """Argumento numérico inválido (no finito o fuera de dominio)."""


class ErrorConfiguracion(ErrorSimtool, ValueError):
    """Configuración inválida; ``ruta`` identifica la llave ofensiva."""

    def __init__(self, mensaje: str, *, ruta: Optional[str] = None) -> None:
        self.ruta = ruta
        self.mensaje = mensaje
        super().__init__(f"{ruta}: {mensaje}" if ruta else mensaje)

    def con_prefijo(self, prefijo: str) -> "ErrorConfiguracion":
        """Regresa una copia del error con la ruta calificada por ``prefijo``."""

        ruta = f"{prefijo}.{self.ruta}" if self.ruta else prefijo
        return ErrorConfiguracion(self.mensaje, ruta=ruta)


class ErrorTransferenciaInfactible(ErrorSimtool, ValueError):
    """La línea no puede transportar la potencia solicitada."""


class ErrorNoConvergencia(ErrorSimtool, RuntimeError):
    """El solucionador de estado estacionario no alcanzó la tolerancia."""

    def __init__(self, mensaje: str, *, residuo: float, iteraciones: int) -> None:
        self.residuo = residuo
        self.iteraciones = iteraciones
        super().__init__(f"{mensaje} (residuo={residuo:.3e} W, iteraciones={iteraciones})")


class ErrorRazonIndefinida(ErrorSimtool, ValueError):
    """La razón de reparto no está definida (potencia del divisor casi nula)."""


class ErrorSimulacion(ErrorSimtool, RuntimeError):
    """Fallo en tiempo de ejecución de una corrida."""


class ErrorExportacion(ErrorSimtool, OSError):
    """Fallo de lectura o escritura de un artefacto; el mensaje incluye la ruta."""


def exigir_positivo(nombre: str, valor) -> None:
    """Valida ``valor > 0`` (escalar o arreglo) con un mensaje que nombra la restricción."""

    arreglo = np.asarray(valor, dtype=float)
    if not np.all(np.isfinite(arreglo)) or np.any(arreglo <= 0.0):
        raise ErrorConfiguracion(f"se requiere {nombre} > 0 (recibido {valor!r})", ruta=nombre)


def exigir_no_negativo(nombre: str, valor) -> None:
    """Valida ``valor >= 0`` (escalar o arreglo)."""

    arreglo = np.asarray(valor, dtype=float)
    if not np.all(np.isfinite(arreglo)) or np.any(arreglo < 0.0):
        raise ErrorConfiguracion(f"se requiere {nombre} >= 0 (recibido {valor!r})", ruta=nombre)


def exigir_finito(nombre: str, valor) -> None:
    if not np.all(np.isfinite(np.asarray(valor, dtype=float))):
        raise ErrorConfiguracion(f"se requiere {nombre} finito (recibido {valor!r})", ruta=nombre)


__all__ = [
    "ErrorSimtool",
    "ErrorArgumentoInvalido",
    "ErrorConfiguracion",
    "ErrorTransferenciaInfactible",
    "ErrorNoConvergencia",
    "ErrorRazonIndefinida",
    "ErrorSimulacion",
    "ErrorExportacion",
    "exigir_positivo",
    "exigir_no_negativo",
    "exigir_finito",
]
