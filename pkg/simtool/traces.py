"""Registro de trazas muestreadas uniformemente con marcas de eventos."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import ErrorArgumentoInvalido

COLUMNA_TIEMPO = "t"


@dataclass(frozen=True)
class MarcaEvento:
    t: float
    tipo: str
    descripcion: str

    def a_dict(self) -> Dict[str, object]:
        return {"t": self.t, "tipo": self.tipo, "descripcion": self.descripcion}


class TraceRecorder:
    """Canales escalares con una base de tiempo común.

    ``dt`` es el periodo de muestreo del registro (paso de planta por
    decimación). Todos los canales tienen siempre la misma longitud que la
    base de tiempo.
    """

    def __init__(self, canales: Sequence[str], dt: float) -> None:
        if len(set(canales)) != len(canales):
            raise ErrorArgumentoInvalido("nombres de canal repetidos")
        if COLUMNA_TIEMPO in canales:
            raise ErrorArgumentoInvalido(f"'{COLUMNA_TIEMPO}' está reservado para la base de tiempo")
        self.canales: List[str] = list(canales)
        self.dt = float(dt)
        self._tiempo: List[float] = []
        self._datos: Dict[str, List[float]] = {nombre: [] for nombre in self.canales}
        self.eventos: List[MarcaEvento] = []

    def __len__(self) -> int:
        return len(self._tiempo)

    def __contains__(self, nombre: object) -> bool:
        return nombre in self._datos

    def registrar(self, t: float, valores: Mapping[str, float]) -> None:
        """Agrega una muestra; los canales ausentes en ``valores`` quedan en NaN."""

        self._tiempo.append(float(t))
        for nombre, serie in self._datos.items():
            serie.append(float(valores.get(nombre, math.nan)))

    def marcar(self, t: float, tipo: str, descripcion: str) -> None:
        self.eventos.append(MarcaEvento(float(t), tipo, descripcion))

    @property
    def tiempo(self) -> np.ndarray:
        return np.asarray(self._tiempo, dtype=float)

    def canal(self, nombre: str) -> np.ndarray:
        try:
            return np.asarray(self._datos[nombre], dtype=float)
        except KeyError:
            raise ErrorArgumentoInvalido(f"canal desconocido: '{nombre}'") from None

    def ventana(self, nombre: str, desde: float, hasta: Optional[float] = None) -> np.ndarray:
        """Muestras del canal con ``desde <= t`` (y ``t <= hasta`` si se indica)."""

        t = self.tiempo
        mascara = t >= desde - 1e-12
        if hasta is not None:
            mascara &= t <= hasta + 1e-12
        return self.canal(nombre)[mascara]

    def eventos_de(self, tipo: str) -> List[MarcaEvento]:
        return [marca for marca in self.eventos if marca.tipo == tipo]

    def a_dataframe(self) -> pd.DataFrame:
        """Tabla con la columna de tiempo primero y un canal por columna."""

        columnas = {COLUMNA_TIEMPO: self.tiempo}
        columnas.update({nombre: self.canal(nombre) for nombre in self.canales})
        return pd.DataFrame(columnas, columns=[COLUMNA_TIEMPO, *self.canales])

    @classmethod
    def desde_dataframe(
        cls,
        df: pd.DataFrame,
        *,
        dt: Optional[float] = None,
        eventos: Iterable[MarcaEvento] = (),
    ) -> "TraceRecorder":
        if COLUMNA_TIEMPO not in df.columns:
            raise ErrorArgumentoInvalido(f"falta la columna de tiempo '{COLUMNA_TIEMPO}'")
        canales = [columna for columna in df.columns if columna != COLUMNA_TIEMPO]
        tiempo = df[COLUMNA_TIEMPO].to_numpy(dtype=float)
        if dt is None:
            dt = float(tiempo[1] - tiempo[0]) if len(tiempo) > 1 else 0.0
        traza = cls(canales, dt)
        traza._tiempo = tiempo.tolist()
        traza._datos = {nombre: df[nombre].to_numpy(dtype=float).tolist() for nombre in canales}
        traza.eventos = list(eventos)
        return traza


__all__ = ["COLUMNA_TIEMPO", "MarcaEvento", "TraceRecorder"]
