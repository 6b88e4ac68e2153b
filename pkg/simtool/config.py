"""Configuración JSON de escenarios y escenarios integrados.

Una configuración se combina en profundidad sobre el escenario integrado
que nombra su llave ``escenario`` (``blackstart`` si se omite). Las listas
se reemplazan completas salvo ``convertidores``, que se combina elemento
por elemento. El bloque ``droop`` de nivel superior aplica a todos los
convertidores; el bloque ``droop`` de cada convertidor tiene prioridad.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Union

from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from .analysis import SteadyStateWindow
from .control import BoostControlGains, DroopGains, IndirectGains
from .errors import ErrorConfiguracion
from .plant import AcFilterParams, BoostParams, Line, LineParams, Load, NetworkTopology
from .sim import (
    A_NOMINAL,
    ClockModel,
    CloseBreaker,
    ConvertidorSpec,
    EnableModulation,
    Event,
    LoadStep,
    ScenarioSpec,
    SetGains,
)

logger = logging.getLogger(__name__)

DIRECTORIO_ESQUEMAS = Path(__file__).resolve().with_name("esquemas")
OMEGA_ESTRELLA = 100.0 * math.pi
T_INTERCONEXION = 0.8
DESAJUSTE_AMPLITUD = 1.0

_DROOP_TABLAS = {"alpha": 2000.0, "gamma": 5e4, "P_star": 2880.0, "omega_star": OMEGA_ESTRELLA}
_ARRANQUE_I = [
    {"t": 0.0, "tipo": "cerrar_interruptor", "convertidor": "I"},
    {"t": 0.0, "tipo": "habilitar_modulacion", "convertidor": "I"},
]
_INTERCONEXION_II = [
    {"t": T_INTERCONEXION, "tipo": "cerrar_interruptor", "convertidor": "II"},
    {"t": T_INTERCONEXION, "tipo": "habilitar_modulacion", "convertidor": "II"},
]
_RED_ESCENARIO_II = {
    "lineas": [
        {"origen": "I", "destino": "0", "R_l": 0.02, "L_l": 700e-6},
        {"origen": "II", "destino": "0", "R_l": 0.02, "L_l": 700e-6},
    ],
    "cargas": [{"nodo": "0", "resistencia": 58.77}],
}
_RED_SIN_PERDIDAS = {
    "lineas": [{**linea, "R_l": 0.0} for linea in _RED_ESCENARIO_II["lineas"]],
    "cargas": _RED_ESCENARIO_II["cargas"],
}


def _ganancias(t: float, **por_convertidor: Dict[str, float]) -> List[Dict[str, Any]]:
    return [
        {"t": t, "tipo": "ganancias", "convertidor": convertidor, "droop": droop}
        for convertidor, droop in por_convertidor.items()
    ]


ESCENARIOS: Dict[str, Dict[str, Any]] = {
    "blackstart": {
        "nombre": "blackstart",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}],
        "red": {"lineas": [], "cargas": [{"nodo": "I", "resistencia": 58.77}]},
        "eventos": _ARRANQUE_I,
        "duracion": 1.0,
    },
    "loadstep": {
        "nombre": "loadstep",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}],
        "red": {"lineas": [], "cargas": [{"nodo": "I", "resistencia": 58.77}]},
        "eventos": _ARRANQUE_I + [{"t": 0.5, "tipo": "escalon_carga", "nodo": "I", "resistencia": 41.76}],
        "duracion": 2.0,
    },
    "sync": {
        "nombre": "sync",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}, {"id": "II", "droop": {"P_star": 0.0}}],
        "red": _RED_ESCENARIO_II,
        "eventos": _ARRANQUE_I + _INTERCONEXION_II,
        "duracion": 2.5,
    },
    "sync_sin_perdidas": {
        "nombre": "sync_sin_perdidas",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}, {"id": "II", "droop": {"P_star": 0.0}}],
        "red": _RED_SIN_PERDIDAS,
        "eventos": _ARRANQUE_I + _INTERCONEXION_II,
        "duracion": 2.5,
    },
    # el voltaje de conmutación de I queda 1 V arriba del de II
    "sync_desajuste": {
        "nombre": "sync_desajuste",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [
            {"id": "I", "A": A_NOMINAL + 2.0 * DESAJUSTE_AMPLITUD / BoostControlGains().V_dc_star},
            {"id": "II", "droop": {"P_star": 0.0}},
        ],
        "red": _RED_SIN_PERDIDAS,
        "eventos": _ARRANQUE_I + _INTERCONEXION_II,
        "duracion": 2.5,
    },
    "sharing": {
        "nombre": "sharing",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}, {"id": "II"}],
        "red": _RED_ESCENARIO_II,
        "eventos": _ARRANQUE_I
        + _ganancias(
            T_INTERCONEXION,
            I={"gamma": 500.0, "P_star": 1440.0},
            II={"gamma": 500.0, "P_star": 1440.0},
        )
        + _INTERCONEXION_II,
        "duracion": 2.5,
    },
    "sharing_r2": {
        "nombre": "sharing_r2",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}, {"id": "II"}],
        "red": _RED_ESCENARIO_II,
        "eventos": _ARRANQUE_I
        + _ganancias(
            T_INTERCONEXION,
            I={"gamma": 1000.0, "P_star": 1920.0},
            II={"gamma": 500.0, "P_star": 960.0},
        )
        + _INTERCONEXION_II,
        "duracion": 2.5,
    },
    # enlace débil: con la deriva el ángulo relativo recorre toda la circunferencia
    "drift": {
        "nombre": "drift",
        "modo": "direct",
        "droop": _DROOP_TABLAS,
        "convertidores": [{"id": "I"}, {"id": "II", "droop": {"P_star": 0.0}}],
        "red": {
            "lineas": [
                {"origen": "I", "destino": "0", "R_l": 0.02, "L_l": 0.1},
                {"origen": "II", "destino": "0", "R_l": 0.02, "L_l": 0.1},
            ],
            "cargas": [{"nodo": "0", "resistencia": 58.77}],
        },
        "eventos": _ARRANQUE_I + _INTERCONEXION_II,
        "reloj": {"epsilon": [1e-2, 0.0], "reloj_maestro": False},
        "duracion": 10.0,
    },
}

BARRIDOS = {
    "alpha": [500.0, 1000.0, 2000.0],
    "gamma": [5e4, 5e5, 5e6],
}


# ---------------------------------------------------------------------------
# Combinación y validación
# ---------------------------------------------------------------------------


def combinar(base: Mapping[str, Any], cambios: Mapping[str, Any]) -> Dict[str, Any]:
    """Combinación profunda de ``cambios`` sobre ``base`` (sin mutar ninguno)."""

    resultado = copy.deepcopy(dict(base))
    for llave, valor in cambios.items():
        actual = resultado.get(llave)
        if isinstance(valor, Mapping) and isinstance(actual, Mapping):
            resultado[llave] = combinar(actual, valor)
        elif llave == "convertidores" and isinstance(actual, list) and isinstance(valor, list):
            combinados = [
                combinar(actual[k], elemento) if k < len(actual) else copy.deepcopy(elemento)
                for k, elemento in enumerate(valor)
            ]
            resultado[llave] = combinados + copy.deepcopy(actual[len(valor) :])
        else:
            resultado[llave] = copy.deepcopy(valor)
    return resultado


def _ruta_json(partes: Iterable[Union[str, int]]) -> str:
    ruta = ""
    for parte in partes:
        ruta += f"[{parte}]" if isinstance(parte, int) else (f".{parte}" if ruta else str(parte))
    return ruta


def validar_esquema(config: Mapping[str, Any]) -> None:
    esquema = json.loads((DIRECTORIO_ESQUEMAS / "config.schema.json").read_text(encoding="utf-8"))
    error = best_match(Draft7Validator(esquema).iter_errors(config))
    if error is not None:
        raise ErrorConfiguracion(error.message, ruta=_ruta_json(error.absolute_path) or "configuracion")


def resolver_configuracion(config: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Valida la configuración del usuario y la combina sobre su escenario integrado."""

    config = dict(config or {})
    validar_esquema(config)
    nombre = config.get("escenario", "blackstart")
    if nombre not in ESCENARIOS:
        raise ErrorConfiguracion(
            f"escenario desconocido '{nombre}' (disponibles: {', '.join(ESCENARIOS)})", ruta="escenario"
        )
    resuelta = combinar(ESCENARIOS[nombre], config)
    resuelta["escenario"] = nombre
    return resuelta


def hash_configuracion(config: Mapping[str, Any]) -> str:
    """SHA-256 del JSON canónico (llaves ordenadas, separadores compactos)."""

    canonico = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    return hashlib.sha256(canonico.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Construcción del escenario
# ---------------------------------------------------------------------------


def _construir(fabrica: Callable[..., Any], datos: Mapping[str, Any], ruta: str):
    try:
        return fabrica(**datos)
    except ErrorConfiguracion as error:
        raise error.con_prefijo(ruta) from None


def _droop_de(config: Mapping[str, Any], convertidor: Mapping[str, Any]) -> Dict[str, float]:
    return {**config.get("droop", {}), **convertidor.get("droop", {})}


def construir_escenario(config: Mapping[str, Any]) -> ScenarioSpec:
    """Convierte una configuración resuelta en un :class:`ScenarioSpec` validado."""

    modo_comun = config.get("modo", "direct")
    convertidores = []
    droop_por_id: Dict[str, Dict[str, float]] = {}
    for k, datos in enumerate(config.get("convertidores", [])):
        prefijo = f"convertidores[{k}]"
        if "id" not in datos:
            raise ErrorConfiguracion("falta el identificador", ruta=f"{prefijo}.id")
        droop = _droop_de(config, datos)
        droop_por_id[datos["id"]] = droop
        campos = {
            "id": datos["id"],
            "modo": datos.get("modo", modo_comun),
            "boost": _construir(BoostParams, datos.get("boost", {}), f"{prefijo}.boost"),
            "filtro": _construir(AcFilterParams, datos.get("filtro", {}), f"{prefijo}.filtro"),
            "control_boost": _construir(BoostControlGains, datos.get("control_boost", {}), f"{prefijo}.control_boost"),
            "droop": _construir(DroopGains, droop, f"{prefijo}.droop"),
            "indirecto": _construir(IndirectGains, datos.get("indirecto", {}), f"{prefijo}.indirecto"),
        }
        if "A" in datos or "A" in config:
            campos["A"] = datos.get("A", config.get("A"))
        convertidores.append(_construir(ConvertidorSpec, campos, prefijo))

    red = config.get("red", {})
    lineas = [
        Line(
            datos["origen"],
            datos["destino"],
            _construir(
                LineParams,
                {llave: datos[llave] for llave in ("R_l", "L_l") if llave in datos},
                f"red.lineas[{j}]",
            ),
        )
        for j, datos in enumerate(red.get("lineas", []))
    ]
    cargas = [
        _construir(Load, {"nodo": datos["nodo"], "resistencia": datos["resistencia"]}, f"red.cargas[{j}]")
        for j, datos in enumerate(red.get("cargas", []))
    ]
    topologia = NetworkTopology(tuple(c.id for c in convertidores), tuple(lineas), tuple(cargas))

    eventos = []
    for j, datos in enumerate(config.get("eventos", [])):
        ruta = f"eventos[{j}]"
        tipo = datos["tipo"]
        faltante = {"escalon_carga": ("nodo", "resistencia"), "ganancias": ("convertidor", "droop")}.get(
            tipo, ("convertidor",)
        )
        for llave in faltante:
            if llave not in datos:
                raise ErrorConfiguracion(f"el evento '{tipo}' requiere '{llave}'", ruta=ruta)
        if tipo == "cerrar_interruptor":
            accion = CloseBreaker(datos["convertidor"])
        elif tipo == "habilitar_modulacion":
            accion = EnableModulation(datos["convertidor"])
        elif tipo == "escalon_carga":
            accion = _construir(LoadStep, {"nodo": datos["nodo"], "resistencia": datos["resistencia"]}, ruta)
        else:
            base = droop_por_id.get(datos["convertidor"], dict(config.get("droop", {})))
            accion = SetGains(
                datos["convertidor"], _construir(DroopGains, {**base, **datos["droop"]}, f"{ruta}.droop")
            )
        eventos.append(_construir(Event, {"time": datos["t"], "action": accion}, ruta))

    reloj = config.get("reloj", {})
    registro = config.get("registro", {})
    pll = config.get("pll", {})
    estacionario = config.get("estacionario", {})
    campos = {
        "nombre": config.get("nombre", config.get("escenario", "custom")),
        "topology": topologia,
        "convertidores": tuple(convertidores),
        "clock": ClockModel(reloj.get("epsilon", ()), reloj.get("reloj_maestro", False)),
        "events": tuple(eventos),
        "duration": config.get("duracion", 1.0),
        "plant_dt": config.get("paso_planta", 1e-5),
        "controller_Ts": config.get("periodo_control", 1e-4),
        "record": tuple(registro.get("canales", ())),
        "decimation": registro.get("decimacion", 10),
        "ventana_potencia": config.get("ventana_potencia", 0.02),
        "sembrar_con_pll": config.get("sembrar_con_pll", True),
        "ganancias_pll": (pll.get("kp", 100.0), pll.get("ki", 2000.0)),
        "ventana_estacionaria": _construir(
            SteadyStateWindow,
            {"window": estacionario.get("ventana", 0.2), "tolerance": estacionario.get("tolerancia", 5e-3)},
            "estacionario",
        ),
    }
    return ScenarioSpec(**campos)


def load_config(path: Union[str, Path, None] = None, *, cambios: Optional[Mapping[str, Any]] = None) -> ScenarioSpec:
    """Lee, valida y construye el escenario descrito por el archivo ``path``.

    Sin archivo se obtiene el escenario integrado de arranque en negro.
    ``cambios`` se combina encima del contenido del archivo.
    """

    config = leer_configuracion(path)
    if cambios:
        config = combinar(config, cambios)
    return construir_escenario(resolver_configuracion(config))


def leer_configuracion(path: Union[str, Path, None]) -> Dict[str, Any]:
    if path is None:
        return {}
    ruta = Path(path)
    try:
        texto = ruta.read_text(encoding="utf-8")
    except OSError as error:
        raise ErrorConfiguracion(f"no se pudo leer el archivo: {error.strerror}", ruta=str(ruta)) from None
    try:
        datos = json.loads(texto) if texto.strip() else {}
    except json.JSONDecodeError as error:
        raise ErrorConfiguracion(
            f"JSON inválido en la línea {error.lineno}, columna {error.colno}: {error.msg}", ruta=str(ruta)
        ) from None
    if not isinstance(datos, dict):
        raise ErrorConfiguracion("la configuración debe ser un objeto JSON", ruta=str(ruta))
    return datos


__all__ = [
    "DIRECTORIO_ESQUEMAS",
    "ESCENARIOS",
    "BARRIDOS",
    "T_INTERCONEXION",
    "combinar",
    "validar_esquema",
    "resolver_configuracion",
    "hash_configuracion",
    "construir_escenario",
    "load_config",
    "leer_configuracion",
]
