"""Exportación de trazas a CSV (con metadatos aparte) y a JSON versionado."""

from __future__ import annotations

import csv
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import pandas as pd
from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from .config import DIRECTORIO_ESQUEMAS
from .errors import ErrorArgumentoInvalido, ErrorExportacion
from .traces import COLUMNA_TIEMPO, MarcaEvento, TraceRecorder

logger = logging.getLogger(__name__)

VERSION_ESQUEMA = 1
FORMATOS = ("csv", "json")
FORMATO_FLOTANTE = "%.17g"
FIN_DE_LINEA = "\r\n"

Ruta = Union[str, Path]


def marca_de_tiempo() -> str:
    """Instante actual en ISO-8601 (UTC, segundos)."""

    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def ruta_metadatos(path: Ruta) -> Path:
    """``trazas.csv`` → ``trazas.meta.json``."""

    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def _nulos(valores: Iterable[float]) -> List[Optional[float]]:
    return [float(v) if math.isfinite(v) else None for v in valores]


def _metadatos(trace: TraceRecorder, extra: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    metadatos: Dict[str, Any] = {"dt": trace.dt, "generado": marca_de_tiempo()}
    metadatos.update(extra or {})
    return metadatos


def _escribir_texto(path: Path, texto: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(texto, encoding="utf-8")
    except OSError as error:
        raise ErrorExportacion(f"{path}: no se pudo escribir ({error.strerror})") from None


def traza_a_csv(trace: TraceRecorder) -> str:
    """Texto CSV: encabezado con los canales, tiempo primero, 17 cifras significativas."""

    return trace.a_dataframe().to_csv(
        index=False,
        float_format=FORMATO_FLOTANTE,
        lineterminator=FIN_DE_LINEA,
        quoting=csv.QUOTE_MINIMAL,
    )


def traza_a_dict(trace: TraceRecorder, metadatos: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Objeto JSON versionado; los NaN se representan como ``null``."""

    return {
        "schema_version": VERSION_ESQUEMA,
        "tiempo": trace.tiempo.tolist(),
        "canales": {nombre: _nulos(trace.canal(nombre)) for nombre in trace.canales},
        "eventos": [marca.a_dict() for marca in trace.eventos],
        "metadatos": _metadatos(trace, metadatos),
    }


def validar_traza_json(datos: Dict[str, Any]) -> None:
    esquema = json.loads((DIRECTORIO_ESQUEMAS / "trace.schema.json").read_text(encoding="utf-8"))
    error = best_match(Draft7Validator(esquema).iter_errors(datos))
    if error is not None:
        ruta = ".".join(str(parte) for parte in error.absolute_path) or "traza"
        raise ErrorArgumentoInvalido(f"{ruta}: {error.message}")


def export(
    trace: TraceRecorder,
    format: str,
    path: Ruta,
    *,
    metadatos: Optional[Dict[str, Any]] = None,
) -> Path:
    """Escribe la traza en ``path`` y regresa la ruta escrita.

    El CSV se acompaña de ``<nombre>.meta.json`` con la marca de tiempo, el
    periodo de muestreo y las marcas de eventos; el CSV en sí no lleva
    marcas de tiempo, así que dos corridas idénticas producen los mismos bytes.
    """

    if format not in FORMATOS:
        raise ErrorArgumentoInvalido(f"formato desconocido '{format}' (use {' o '.join(FORMATOS)})")
    path = Path(path)
    if format == "csv":
        _escribir_texto(path, traza_a_csv(trace))
        lateral = {
            "schema_version": VERSION_ESQUEMA,
            "archivo": path.name,
            "canales": [COLUMNA_TIEMPO, *trace.canales],
            "eventos": [marca.a_dict() for marca in trace.eventos],
            **_metadatos(trace, metadatos),
        }
        _escribir_texto(ruta_metadatos(path), json.dumps(lateral, indent=2, ensure_ascii=False))
    else:
        datos = traza_a_dict(trace, metadatos)
        validar_traza_json(datos)
        _escribir_texto(path, json.dumps(datos, ensure_ascii=False, allow_nan=False))
    logger.info("traza escrita en %s (%d muestras)", path, len(trace))
    return path


def _leer_texto(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as error:
        raise ErrorExportacion(f"{path}: no se pudo leer ({error.strerror})") from None


def leer_csv(path: Ruta) -> TraceRecorder:
    """Reconstruye la traza de un CSV; usa el archivo de metadatos si existe."""

    path = Path(path)
    _leer_texto(path)
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise ErrorExportacion(f"{path}: CSV inválido ({error})") from None

    dt, eventos = None, []
    lateral = ruta_metadatos(path)
    if lateral.exists():
        meta = json.loads(_leer_texto(lateral))
        dt = meta.get("dt")
        eventos = [MarcaEvento(e["t"], e["tipo"], e["descripcion"]) for e in meta.get("eventos", [])]
    return TraceRecorder.desde_dataframe(df.astype(float), dt=dt, eventos=eventos)


def leer_json(path: Ruta) -> TraceRecorder:
    """Lee y valida una traza JSON exportada."""

    path = Path(path)
    try:
        datos = json.loads(_leer_texto(path))
    except json.JSONDecodeError as error:
        raise ErrorExportacion(f"{path}: JSON inválido en la línea {error.lineno} ({error.msg})") from None
    validar_traza_json(datos)

    columnas = {COLUMNA_TIEMPO: datos["tiempo"]}
    for nombre, valores in datos["canales"].items():
        columnas[nombre] = [math.nan if v is None else v for v in valores]
    df = pd.DataFrame(columnas, columns=list(columnas), dtype=float)
    eventos = [MarcaEvento(e["t"], e["tipo"], e["descripcion"]) for e in datos["eventos"]]
    return TraceRecorder.desde_dataframe(df, dt=datos["metadatos"]["dt"], eventos=eventos)


__all__ = [
    "VERSION_ESQUEMA",
    "FORMATOS",
    "marca_de_tiempo",
    "ruta_metadatos",
    "traza_a_csv",
    "traza_a_dict",
    "validar_traza_json",
    "export",
    "leer_csv",
    "leer_json",
]
