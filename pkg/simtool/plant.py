"""Modelos promediados en tiempo continuo de la planta.

Incluye la etapa elevadora (boost), el puente DC/AC con su filtro de salida,
las líneas RL y las cargas resistivas. Cada modelo se expone como función
de derivadas puras que aceptan escalares o arreglos con dimensiones de lote
al frente; el motor de simulación las reutiliza para ensamblar, en cada
muestra del controlador, el modelo afín que integra con RK4.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ErrorConfiguracion, exigir_no_negativo, exigir_positivo

logger = logging.getLogger(__name__)

V_MIN = 1.0
"""Piso del voltaje DC en el denominador de ``I_dc`` (volts)."""

CONTADOR_SATURACION: Counter = Counter()
"""Contador global usado cuando el llamador no aporta uno propio."""


# ---------------------------------------------------------------------------
# Parámetros y estados
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoostParams:
    """Parámetros del convertidor elevador alimentado por una fuente rígida ``V_b``."""

    L_b: float = 2.36e-3
    R_b: float = 1e-3
    C_dc: float = 3e-3
    G_dc: float = 2.13e-4
    V_b: float = 600.0

    def __post_init__(self) -> None:
        for nombre in ("L_b", "R_b", "C_dc", "V_b"):
            exigir_positivo(nombre, getattr(self, nombre))
        exigir_no_negativo("G_dc", self.G_dc)


class BoostState(NamedTuple):
    I_b: np.ndarray
    V_dc: np.ndarray


@dataclass(frozen=True)
class AcFilterParams:
    """Filtro LC de salida; ``G`` es la conductancia propia a tierra."""

    L: float = 2.36e-3
    R: float = 1e-3
    C: float = 1e-5
    G: float = 0.0

    def __post_init__(self) -> None:
        exigir_positivo("L", self.L)
        exigir_positivo("C", self.C)
        exigir_no_negativo("R", self.R)
        exigir_no_negativo("G", self.G)


class AcState(NamedTuple):
    i: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class LineParams:
    R_l: float = 20e-3
    L_l: float = 700e-6

    def __post_init__(self) -> None:
        exigir_positivo("L_l", self.L_l)
        exigir_no_negativo("R_l", self.R_l)


class LineState(NamedTuple):
    i_l: np.ndarray


@dataclass(frozen=True)
class Line:
    """Línea RL del convertidor ``origen`` al nodo ``destino``."""

    origen: str
    destino: str
    params: LineParams = field(default_factory=LineParams)


@dataclass(frozen=True)
class Load:
    """Carga resistiva por fase conectada en ``nodo``."""

    nodo: str
    resistencia: float

    def __post_init__(self) -> None:
        exigir_positivo("resistencia", self.resistencia)

    @property
    def conductancia(self) -> float:
        return 1.0 / self.resistencia


@dataclass(frozen=True)
class NetworkTopology:
    """Convertidores, líneas RL y cargas con su estructura de incidencia.

    Una carga ubicada en el nodo de un convertidor es su carga local y se
    suma a la conductancia del filtro. Toda línea parte de un convertidor y
    termina en un nodo de carga algebraico (sin capacitor).
    """

    converters: Tuple[str, ...]
    lines: Tuple[Line, ...] = ()
    loads: Tuple[Load, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "converters", tuple(self.converters))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "loads", tuple(self.loads))
        self.validar()

    def validar(self) -> None:
        if not self.converters:
            raise ErrorConfiguracion("se requiere al menos un convertidor", ruta="convertidores")
        if len(set(self.converters)) != len(self.converters):
            raise ErrorConfiguracion("identificadores de convertidor repetidos", ruta="convertidores")

        convertidores = set(self.converters)
        nodos_carga = [carga.nodo for carga in self.loads if carga.nodo not in convertidores]
        if len(set(nodos_carga)) != len(nodos_carga):
            raise ErrorConfiguracion("cada nodo admite una sola carga", ruta="red.cargas")
        locales = [carga.nodo for carga in self.loads if carga.nodo in convertidores]
        if len(set(locales)) != len(locales):
            raise ErrorConfiguracion("cada convertidor admite una sola carga local", ruta="red.cargas")

        for indice, linea in enumerate(self.lines):
            ruta = f"red.lineas[{indice}]"
            if linea.origen not in convertidores:
                raise ErrorConfiguracion(f"el origen '{linea.origen}' no es un convertidor", ruta=ruta)
            if linea.destino in convertidores:
                raise ErrorConfiguracion(
                    "las líneas deben terminar en un nodo de carga, no en otro convertidor", ruta=ruta
                )
            if linea.destino not in nodos_carga:
                raise ErrorConfiguracion(f"el nodo '{linea.destino}' no tiene carga", ruta=ruta)

        destinos = {linea.destino for linea in self.lines}
        for nodo in nodos_carga:
            if nodo not in destinos:
                raise ErrorConfiguracion(f"nodo de carga '{nodo}' desconectado", ruta="red.cargas")

        # conectividad por unión de componentes
        padre: Dict[str, str] = {nodo: nodo for nodo in self.nodos}

        def raiz(nodo: str) -> str:
            while padre[nodo] != nodo:
                padre[nodo] = padre[padre[nodo]]
                nodo = padre[nodo]
            return nodo

        for linea in self.lines:
            padre[raiz(linea.origen)] = raiz(linea.destino)
        if len({raiz(nodo) for nodo in self.nodos}) > 1:
            raise ErrorConfiguracion("la red no es conexa", ruta="red")

    @property
    def nodos_carga(self) -> List[str]:
        convertidores = set(self.converters)
        return [carga.nodo for carga in self.loads if carga.nodo not in convertidores]

    @property
    def nodos(self) -> List[str]:
        return list(self.converters) + self.nodos_carga

    @cached_property
    def incidence(self) -> np.ndarray:
        """Matriz nodo–arista: +1 en el origen y −1 en el destino de cada línea."""

        indices = {nodo: k for k, nodo in enumerate(self.nodos)}
        matriz = np.zeros((len(indices), len(self.lines)))
        for j, linea in enumerate(self.lines):
            matriz[indices[linea.origen], j] = 1.0
            matriz[indices[linea.destino], j] = -1.0
        return matriz

    @cached_property
    def matriz_origen(self) -> np.ndarray:
        """Convertidor × línea: 1 donde la línea sale del convertidor."""

        return np.clip(self.incidence[: len(self.converters)], 0.0, None)

    @cached_property
    def matriz_destino(self) -> np.ndarray:
        """Nodo de carga × línea: 1 donde la línea llega al nodo."""

        return np.clip(-self.incidence[len(self.converters) :], 0.0, None)

    def resistencias_nodos(self) -> np.ndarray:
        """Resistencias de carga de los nodos algebraicos, en el orden de :attr:`nodos_carga`."""

        por_nodo = {carga.nodo: carga.resistencia for carga in self.loads}
        return np.array([por_nodo[nodo] for nodo in self.nodos_carga], dtype=float)

    def conductancias_locales(self) -> np.ndarray:
        """Conductancia de la carga local de cada convertidor (0 si no tiene)."""

        por_nodo = {carga.nodo: carga.conductancia for carga in self.loads}
        return np.array([por_nodo.get(nodo, 0.0) for nodo in self.converters], dtype=float)

    def lineas_de(self, convertidor: str) -> List[int]:
        return [j for j, linea in enumerate(self.lines) if linea.origen == convertidor]

    def con_carga(self, nodo: str, resistencia: float) -> "NetworkTopology":
        """Copia de la topología con la carga de ``nodo`` reemplazada."""

        cargas = tuple(
            Load(carga.nodo, resistencia) if carga.nodo == nodo else carga for carga in self.loads
        )
        return replace(self, loads=cargas)


# ---------------------------------------------------------------------------
# Derivadas
# ---------------------------------------------------------------------------


def corriente_fuente_dc(p: BoostParams, s: BoostState) -> np.ndarray:
    """``I_dc = V_b I_b / max(V_dc, V_min)``."""

    return p.V_b * np.asarray(s.I_b) / np.maximum(s.V_dc, V_MIN)


def boost_derivatives(
    p: BoostParams,
    s: BoostState,
    V_c,
    I_carga=0.0,
    *,
    I_dc=None,
) -> BoostState:
    """Derivadas del elevador.

    ``I_carga`` es la corriente que el puente DC/AC extrae del enlace DC
    (``½ ū·i``); con el valor por defecto se obtiene el elevador aislado.
    ``I_dc`` permite sustituir el término no lineal (lo usa el ensamblado
    del modelo afín).
    """

    if I_dc is None:
        I_dc = corriente_fuente_dc(p, s)
    dI_b = (-p.R_b * np.asarray(s.I_b) + p.V_b - V_c) / p.L_b
    dV_dc = (-p.G_dc * np.asarray(s.V_dc) + I_dc - I_carga) / p.C_dc
    return BoostState(dI_b, dV_dc)


def duty_to_vc(d, V_dc, contador: Optional[Counter] = None):
    """``V_c = (1 − d)·V_dc`` con ``d`` saturado a ``[0, 1]``."""

    ciclo = np.asarray(d, dtype=float)
    saturado = np.clip(ciclo, 0.0, 1.0)
    fuera = int(np.count_nonzero(saturado != ciclo))
    if fuera:
        (CONTADOR_SATURACION if contador is None else contador)["ciclo_boost"] += fuera
    resultado = (1.0 - saturado) * V_dc
    return float(resultado) if np.ndim(resultado) == 0 else resultado


def _saturar_modulacion(u_bar, contador: Optional[Counter]) -> np.ndarray:
    modulacion = np.asarray(u_bar, dtype=float)
    saturada = np.clip(modulacion, -1.0, 1.0)
    fuera = int(np.count_nonzero(saturada != modulacion))
    if fuera:
        (CONTADOR_SATURACION if contador is None else contador)["modulacion_ac"] += fuera
    return saturada


def dcac_derivatives(
    p: AcFilterParams,
    s: AcState,
    u_bar,
    V_dc,
    i_o,
    contador: Optional[Counter] = None,
    *,
    G=None,
    saturar: bool = True,
) -> AcState:
    """``L di/dt = −R i + ½ ū V_dc − v``; ``C dv/dt = −G v + i − i_o``.

    ``G`` sustituye la conductancia del filtro (carga local incluida) y
    ``saturar=False`` indica que ``u_bar`` ya viene recortado.
    """

    modulacion = _saturar_modulacion(u_bar, contador) if saturar else np.asarray(u_bar, dtype=float)
    G = p.G if G is None else G
    i = np.asarray(s.i, dtype=float)
    v = np.asarray(s.v, dtype=float)
    V_dc = np.asarray(V_dc, dtype=float)[..., None]
    di = (-p.R * i + 0.5 * modulacion * V_dc - v) / p.L
    dv = (-G * v + i - np.asarray(i_o, dtype=float)) / p.C
    return AcState(di, dv)


class PuertosRed(NamedTuple):
    i_o: np.ndarray
    d_i_l: np.ndarray
    v_nodos: np.ndarray


def network_port_currents(
    topology: NetworkTopology,
    capacitor_voltages,
    line_states: LineState,
    *,
    cerrados=None,
    resistencias=None,
) -> PuertosRed:
    """Cierra el circuito de líneas y cargas algebraicas.

    ``capacitor_voltages`` tiene forma ``(..., n_convertidores, 3)`` y
    ``line_states.i_l`` forma ``(..., n_lineas, 3)``. Las líneas abiertas
    conservan derivada nula. Regresa la corriente de puerto de cada
    convertidor, la derivada de cada línea y los voltajes de los nodos de
    carga en el orden de :attr:`NetworkTopology.nodos_carga`.
    """

    v = np.asarray(capacitor_voltages, dtype=float)
    i_l = np.asarray(line_states.i_l, dtype=float)
    n_lineas = len(topology.lines)
    if cerrados is None:
        cerrados = np.ones(n_lineas)
    if resistencias is None:
        resistencias = topology.resistencias_nodos()

    origen = topology.matriz_origen
    destino = topology.matriz_destino
    v_nodos = np.asarray(resistencias, dtype=float)[:, None] * np.matmul(destino, i_l)
    i_o = np.matmul(origen, i_l)
    if n_lineas == 0:
        return PuertosRed(i_o, np.zeros_like(i_l), v_nodos)

    R_l = np.array([linea.params.R_l for linea in topology.lines])[:, None]
    L_l = np.array([linea.params.L_l for linea in topology.lines])[:, None]
    v_origen = np.matmul(origen.T, v)
    v_destino = np.matmul(destino.T, v_nodos)
    d_i_l = (v_origen - R_l * i_l - v_destino) / L_l * np.asarray(cerrados, dtype=float)[:, None]
    return PuertosRed(i_o, d_i_l, v_nodos)


# ---------------------------------------------------------------------------
# Planta compuesta y modelo afín por muestra
# ---------------------------------------------------------------------------


class EntradasPlanta(NamedTuple):
    """Entradas retenidas (ZOH) durante un periodo del controlador."""

    u_bar: np.ndarray
    d: np.ndarray
    G_local: np.ndarray
    cerrados: np.ndarray
    resistencias: np.ndarray


@dataclass
class ModeloAfin:
    """``dx/dt = A x + b + e·I_dc(x)/C_dc`` con entradas congeladas."""

    A: np.ndarray
    b: np.ndarray


class PlantaCompuesta:
    """Planta completa de ``n`` convertidores y ``m`` líneas en un solo vector.

    Disposición del estado: ``[I_b (n), V_dc (n), i (3n), v (3n), i_l (3m)]``.
    """

    def __init__(
        self,
        topologia: NetworkTopology,
        boosts: Sequence[BoostParams],
        filtros: Sequence[AcFilterParams],
    ) -> None:
        self.topologia = topologia
        self.n = n = len(topologia.converters)
        self.m = m = len(topologia.lines)
        if len(boosts) != n or len(filtros) != n:
            raise ErrorConfiguracion("se requieren parámetros para cada convertidor", ruta="convertidores")

        self.boost = BoostParams(
            **{campo: np.array([getattr(b, campo) for b in boosts]) for campo in ("L_b", "R_b", "C_dc", "G_dc", "V_b")}
        )
        self.filtro = AcFilterParams(
            **{campo: np.array([getattr(f, campo) for f in filtros])[:, None] for campo in ("L", "R", "C", "G")}
        )

        self.ib = slice(0, n)
        self.vdc = slice(n, 2 * n)
        self.i = slice(2 * n, 5 * n)
        self.v = slice(5 * n, 8 * n)
        self.il = slice(8 * n, 8 * n + 3 * m)
        self.dimension = 8 * n + 3 * m
        self._lote = np.vstack([np.zeros(self.dimension), np.eye(self.dimension)])
        self._fuente_dc = self.boost.V_b / self.boost.C_dc

    def estado_inicial(self, V_dc0) -> np.ndarray:
        """Arranque en negro: enlace DC precargado, lado AC en cero."""

        x = np.zeros(self.dimension)
        x[self.vdc] = V_dc0
        return x

    def desempacar(self, x: np.ndarray) -> Tuple[BoostState, AcState, LineState]:
        lote = x.shape[:-1]
        boost = BoostState(x[..., self.ib], x[..., self.vdc])
        ac = AcState(
            x[..., self.i].reshape(lote + (self.n, 3)),
            x[..., self.v].reshape(lote + (self.n, 3)),
        )
        return boost, ac, LineState(x[..., self.il].reshape(lote + (self.m, 3)))

    def derivadas(
        self,
        x: np.ndarray,
        entradas: EntradasPlanta,
        *,
        incluir_fuente_dc: bool = True,
        contador: Optional[Counter] = None,
    ) -> np.ndarray:
        """Composición de las derivadas de cada elemento sobre el vector de estado."""

        boost, ac, lineas = self.desempacar(x)
        puertos = network_port_currents(
            self.topologia,
            ac.v,
            lineas,
            cerrados=entradas.cerrados,
            resistencias=entradas.resistencias,
        )
        u_bar = _saturar_modulacion(entradas.u_bar, contador)
        V_c = duty_to_vc(entradas.d, boost.V_dc, contador)
        I_inv = 0.5 * np.sum(u_bar * ac.i, axis=-1)
        d_boost = boost_derivatives(
            self.boost, boost, V_c, I_inv, I_dc=None if incluir_fuente_dc else 0.0
        )
        d_ac = dcac_derivatives(
            self.filtro,
            ac,
            u_bar,
            boost.V_dc,
            puertos.i_o,
            G=self.filtro.G + np.asarray(entradas.G_local)[:, None],
            saturar=False,
        )
        lote = x.shape[:-1]
        return np.concatenate(
            [
                d_boost.I_b,
                d_boost.V_dc,
                d_ac.i.reshape(lote + (3 * self.n,)),
                d_ac.v.reshape(lote + (3 * self.n,)),
                puertos.d_i_l.reshape(lote + (3 * self.m,)),
            ],
            axis=-1,
        )

    def ensamblar(self, entradas: EntradasPlanta) -> ModeloAfin:
        """Extrae ``A`` y ``b`` evaluando las derivadas sobre la base canónica.

        Con las entradas congeladas todo el modelo es afín en el estado salvo
        la corriente de la fuente DC, que se excluye aquí y se suma aparte en
        :meth:`derivada`.
        """

        # las saturaciones las cuenta el motor al retener las entradas
        F = self.derivadas(self._lote, entradas, incluir_fuente_dc=False, contador=Counter())
        b = F[0].copy()
        return ModeloAfin(A=(F[1:] - b).T.copy(), b=b)

    def derivada(self, x: np.ndarray, modelo: ModeloAfin) -> np.ndarray:
        r = modelo.A @ x
        r += modelo.b
        r[self.vdc] += self._fuente_dc * x[self.ib] / np.maximum(x[self.vdc], V_MIN)
        return r

    def corrientes_puerto(self, x: np.ndarray, entradas: EntradasPlanta) -> PuertosRed:
        _, ac, lineas = self.desempacar(x)
        return network_port_currents(
            self.topologia, ac.v, lineas, cerrados=entradas.cerrados, resistencias=entradas.resistencias
        )


__all__ = [
    "V_MIN",
    "CONTADOR_SATURACION",
    "BoostParams",
    "BoostState",
    "AcFilterParams",
    "AcState",
    "LineParams",
    "LineState",
    "Line",
    "Load",
    "NetworkTopology",
    "corriente_fuente_dc",
    "boost_derivatives",
    "duty_to_vc",
    "dcac_derivatives",
    "PuertosRed",
    "network_port_currents",
    "EntradasPlanta",
    "ModeloAfin",
    "PlantaCompuesta",
]
