"""Motor híbrido de paso fijo.

La planta continua se integra con Runge–Kutta clásico de cuarto orden a
``plant_dt``; los controladores se muestrean cada ``controller_Ts`` y sus
salidas se retienen (ZOH) hasta la siguiente muestra. En cada muestra, y
tras cada evento, se reensambla el modelo afín de la planta con las
entradas congeladas.

Los eventos se aplican en el primer paso de planta con ``t >= time``. La
deriva de reloj del convertidor ``k`` escala su periodo de control a
``(1 + ε_k)·Ts``; con reloj maestro la deriva efectiva es cero.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import (
    GANANCIAS_PLL,
    PicoEspectral,
    PllState,
    SteadyStateWindow,
    consumo_reactivo_linea,
    detect_steady_state,
    droop_law_residual,
    frequency_and_rocof,
    instantaneous_power,
    nadir,
    pico_espectral,
    pll_step,
    reactivas_kron,
    running_cost,
    sharing_metrics,
    valor_estacionario,
)
from .control import (
    BoostControlGains,
    DroopGains,
    DroopState,
    FiltroPromedioMovil,
    IndirectGains,
    MedicionAc,
    MedicionBoost,
    PiState,
    boost_control_step,
    direct_modulation,
    droop_step,
    estado_pi_vectorial,
    indirect_control_step,
)
from .errors import (
    ErrorConfiguracion,
    ErrorRazonIndefinida,
    ErrorSimtool,
    ErrorTransferenciaInfactible,
    exigir_no_negativo,
    exigir_positivo,
)
from .frames import FACTOR_TRIFASICO, amplitud, angulo_fasor, diferencia_angular, wrap_angle
from .plant import (
    AcFilterParams,
    BoostParams,
    EntradasPlanta,
    NetworkTopology,
    PlantaCompuesta,
)
from .powerflow import ReducedTwoSource, interconnection_angle, sharing_ratio, solve_two_source_steady_state
from .traces import TraceRecorder

logger = logging.getLogger(__name__)

MODOS = ("direct", "indirect")
A_NOMINAL = 0.8674
UMBRAL_ANGULO_NODO = 1e-2


# ---------------------------------------------------------------------------
# Reloj y eventos
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClockModel:
    """Deriva por convertidor; el reloj maestro la anula para todos."""

    epsilon: Tuple[float, ...] = ()
    master_clock_enabled: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))
        for k, e in enumerate(self.epsilon):
            if not math.isfinite(e) or e <= -1.0:
                raise ErrorConfiguracion(f"se requiere ε > −1 finito (recibido {e!r})", ruta=f"reloj.epsilon[{k}]")

    def efectivo(self, k: int) -> float:
        if self.master_clock_enabled or k >= len(self.epsilon):
            return 0.0
        return self.epsilon[k]


@dataclass(frozen=True)
class CloseBreaker:
    convertidor: str

    def __str__(self) -> str:
        return f"cierre del interruptor de {self.convertidor}"


@dataclass(frozen=True)
class LoadStep:
    nodo: str
    resistencia: float

    def __post_init__(self) -> None:
        exigir_positivo("resistencia", self.resistencia)

    def __str__(self) -> str:
        return f"escalón de carga en {self.nodo}: {self.resistencia:g} Ω"


@dataclass(frozen=True)
class EnableModulation:
    convertidor: str

    def __str__(self) -> str:
        return f"habilita modulación de {self.convertidor}"


@dataclass(frozen=True)
class SetGains:
    convertidor: str
    droop: DroopGains

    def __str__(self) -> str:
        return f"nuevas ganancias de caída para {self.convertidor} (γ={self.droop.gamma:g}, P*={self.droop.P_star:g})"


Accion = Union[CloseBreaker, LoadStep, EnableModulation, SetGains]


@dataclass(frozen=True)
class Event:
    time: float
    action: Accion

    def __post_init__(self) -> None:
        exigir_no_negativo("time", self.time)


# ---------------------------------------------------------------------------
# Especificación del escenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvertidorSpec:
    """Parámetros, ganancias y modo de control de una unidad convertidora."""

    id: str
    boost: BoostParams = field(default_factory=BoostParams)
    filtro: AcFilterParams = field(default_factory=AcFilterParams)
    control_boost: BoostControlGains = field(default_factory=BoostControlGains)
    droop: DroopGains = field(default_factory=DroopGains)
    modo: str = "direct"
    A: float = A_NOMINAL
    indirecto: IndirectGains = field(default_factory=IndirectGains)

    def __post_init__(self) -> None:
        if self.modo not in MODOS:
            raise ErrorConfiguracion(f"modo desconocido '{self.modo}' (use {' o '.join(MODOS)})", ruta="modo")
        if not 0.0 < self.A < 1.0:
            raise ErrorConfiguracion(f"se requiere 0 < A < 1 (recibido {self.A!r})", ruta="A")

    @property
    def voltaje_conmutacion(self) -> float:
        """Amplitud nominal de la fuente que ve la red: ``½A·V_dc*`` o ``V*``."""

        if self.modo == "direct":
            return 0.5 * self.A * self.control_boost.V_dc_star
        return self.indirecto.V_star


@dataclass(frozen=True)
class ScenarioSpec:
    nombre: str
    topology: NetworkTopology
    convertidores: Tuple[ConvertidorSpec, ...]
    clock: ClockModel = field(default_factory=ClockModel)
    events: Tuple[Event, ...] = ()
    duration: float = 1.0
    plant_dt: float = 1e-5
    controller_Ts: float = 1e-4
    record: Tuple[str, ...] = ()
    decimation: int = 10
    ventana_potencia: float = 0.02
    sembrar_con_pll: bool = True
    ganancias_pll: Tuple[float, float] = GANANCIAS_PLL
    ventana_estacionaria: SteadyStateWindow = field(default_factory=SteadyStateWindow)

    def __post_init__(self) -> None:
        object.__setattr__(self, "convertidores", tuple(self.convertidores))
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda evento: evento.time)))
        object.__setattr__(self, "record", tuple(self.record))
        object.__setattr__(self, "ganancias_pll", tuple(float(g) for g in self.ganancias_pll))

        ids = tuple(c.id for c in self.convertidores)
        if ids != self.topology.converters:
            raise ErrorConfiguracion(
                f"los convertidores {ids} no coinciden con la topología {self.topology.converters}",
                ruta="convertidores",
            )
        exigir_no_negativo("duracion", self.duration)
        exigir_positivo("paso_planta", self.plant_dt)
        exigir_positivo("periodo_control", self.controller_Ts)
        exigir_no_negativo("ventana_potencia", self.ventana_potencia)
        razon = self.controller_Ts / self.plant_dt
        if razon < 1.0 - 1e-9 or abs(razon - round(razon)) > 1e-6:
            raise ErrorConfiguracion(
                f"paso_planta debe dividir a periodo_control (razón {razon:.6g})", ruta="paso_planta"
            )
        if self.decimation < 1:
            raise ErrorConfiguracion("se requiere decimacion >= 1", ruta="registro.decimacion")
        if len(self.clock.epsilon) not in (0, len(ids)):
            raise ErrorConfiguracion("se requiere una ε por convertidor", ruta="reloj.epsilon")

        nodos = set(self.topology.nodos)
        for indice, evento in enumerate(self.events):
            accion = evento.action
            objetivo = accion.nodo if isinstance(accion, LoadStep) else accion.convertidor
            validos = nodos if isinstance(accion, LoadStep) else set(ids)
            if objetivo not in validos:
                raise ErrorConfiguracion(f"destino desconocido '{objetivo}'", ruta=f"eventos[{indice}]")
            if isinstance(accion, LoadStep) and objetivo in ids and objetivo not in {
                carga.nodo for carga in self.topology.loads
            }:
                raise ErrorConfiguracion(f"'{objetivo}' no tiene carga local", ruta=f"eventos[{indice}]")

    @property
    def pasos_por_muestra(self) -> int:
        return int(round(self.controller_Ts / self.plant_dt))

    def indice(self, convertidor: str) -> int:
        return self.topology.converters.index(convertidor)


_SEGMENTO = re.compile(r"^(\w+)(?:\[(\d+)\])?$")
_ATAJOS_CAIDA = {f.name for f in dataclasses.fields(DroopGains)}


def _reemplazar(objeto, segmentos: Sequence[str], valor, ruta: str):
    if not segmentos:
        return valor
    coincidencia = _SEGMENTO.match(segmentos[0])
    if coincidencia is None or not dataclasses.is_dataclass(objeto):
        raise ErrorConfiguracion("la ruta no existe en el escenario", ruta=ruta)
    nombre, indice = coincidencia.group(1), coincidencia.group(2)
    if nombre not in {f.name for f in dataclasses.fields(objeto)}:
        raise ErrorConfiguracion("la ruta no existe en el escenario", ruta=ruta)
    actual = getattr(objeto, nombre)
    if indice is None:
        nuevo = _reemplazar(actual, segmentos[1:], valor, ruta)
    else:
        elementos = list(actual)
        if int(indice) >= len(elementos):
            raise ErrorConfiguracion(f"índice {indice} fuera de rango", ruta=ruta)
        elementos[int(indice)] = _reemplazar(elementos[int(indice)], segmentos[1:], valor, ruta)
        nuevo = tuple(elementos)
    return replace(objeto, **{nombre: nuevo})


def aplicar_parametro(spec: ScenarioSpec, ruta: str, valor) -> ScenarioSpec:
    """Copia de ``spec`` con el parámetro ``ruta`` sustituido.

    ``alpha``, ``gamma``, ``P_star`` (y el resto de campos de la ley de caída)
    y ``A`` se aplican a todos los convertidores; cualquier otra ruta se
    resuelve sobre los campos, p. ej. ``convertidores[1].droop.gamma`` o
    ``topology.lines[0].params.R_l``.
    """

    if ruta in _ATAJOS_CAIDA:
        convertidores = tuple(replace(c, droop=replace(c.droop, **{ruta: valor})) for c in spec.convertidores)
        return replace(spec, convertidores=convertidores)
    if ruta == "A":
        return replace(spec, convertidores=tuple(replace(c, A=valor) for c in spec.convertidores))
    try:
        return _reemplazar(spec, ruta.split("."), valor, ruta)
    except ErrorConfiguracion as error:
        if error.ruta == ruta:
            raise
        raise error.con_prefijo(ruta) from None


# ---------------------------------------------------------------------------
# Resultados
# ---------------------------------------------------------------------------


@dataclass
class ResumenConvertidor:
    id: str
    P_s: float = math.nan
    Q_s: float = math.nan
    omega_s: float = math.nan
    delta_theta_s: float = math.nan
    V_dc_s: float = math.nan
    v_amplitud_s: float = math.nan
    residuo_caida: float = math.nan
    t_estacionario: Optional[float] = None
    omega_nadir: float = math.nan
    profundidad_nadir: float = math.nan
    rocof_max: float = math.nan
    costo: float = math.nan
    cola_costo: float = math.nan
    Q_linea_s: float = math.nan
    desfase_interconexion: float = math.nan
    alarmas_caida: int = 0


@dataclass
class SummaryReport:
    """Métricas de estado estacionario y diagnósticos de una corrida."""

    escenario: str
    duracion: float
    abortado: bool = False
    t_aborto: Optional[float] = None
    t_perturbacion: float = 0.0
    convertidores: List[ResumenConvertidor] = field(default_factory=list)
    diferencia_angular: Optional[float] = None
    diferencia_nominal: Optional[float] = None
    oraculo: Optional[Dict[str, object]] = None
    reparto: Optional[Dict[str, float]] = None
    reactivas: Optional[Dict[str, object]] = None
    violaciones_angulo_seguro: int = 0
    saturaciones: Dict[str, int] = field(default_factory=dict)
    parametro: Optional[str] = None
    valor: Optional[float] = None

    def convertidor(self, id: str) -> ResumenConvertidor:
        for resumen in self.convertidores:
            if resumen.id == id:
                return resumen
        raise KeyError(id)

    def a_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)


@dataclass
class ResultadoSimulacion:
    traza: TraceRecorder
    resumen: SummaryReport
    estado_final: np.ndarray
    ganancias_finales: Tuple[DroopGains, ...]


@dataclass
class ResultadoDeriva:
    """Corrida con deriva, su compañera con reloj maestro y el pico espectral de ``P_1``."""

    deriva: ResultadoSimulacion
    reloj_maestro: ResultadoSimulacion
    pico: PicoEspectral
    pico_maestro: PicoEspectral
    frecuencia_esperada: float


# ---------------------------------------------------------------------------
# Motor
# ---------------------------------------------------------------------------


def paso_rk4(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Un paso de Runge–Kutta clásico para un sistema autónomo en el intervalo."""

    k1 = f(x)
    k2 = f(x + (0.5 * h) * k1)
    k3 = f(x + (0.5 * h) * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Mediciones(NamedTuple):
    I_b: np.ndarray
    V_dc: np.ndarray
    v: np.ndarray
    i: np.ndarray
    i_o: np.ndarray
    i_linea: np.ndarray
    v_nodos: np.ndarray


class _Convertidor:
    """Estado mutable de los controladores de una unidad durante la corrida."""

    def __init__(self, spec: ConvertidorSpec, Ts: float, Ts_local: float, ventana: float, con_pll: bool) -> None:
        self.spec = spec
        self.droop = spec.droop
        self.estado_droop = DroopState.inicial(spec.droop)
        self.pi_boost: Tuple[PiState, PiState] = (PiState(), PiState())
        self.pi_ac = estado_pi_vectorial()
        self.ventana = ventana
        self.Ts = Ts
        self.Ts_local = Ts_local
        self.filtro = FiltroPromedioMovil.desde_ventana(ventana, Ts)
        self.pll: Optional[PllState] = PllState() if con_pll else None
        self.modulando = False
        self.theta = math.nan
        self.omega = math.nan
        self.P_filtrada = math.nan
        self.u_bar = np.zeros(3)
        self.d = 0.0
        self.violando = False
        self.desfase_interconexion = math.nan


class _Motor:
    def __init__(self, spec: ScenarioSpec) -> None:
        self.spec = spec
        top = spec.topology
        self.planta = PlantaCompuesta(top, [c.boost for c in spec.convertidores], [c.filtro for c in spec.convertidores])
        self.x = self.planta.estado_inicial(np.array([c.boost.V_b for c in spec.convertidores]))
        self.cerrados = np.zeros(len(top.lines))
        self.resistencias = top.resistencias_nodos().copy()
        self.G_local = top.conductancias_locales().copy()
        self.nodos_carga = top.nodos_carga
        self.lineas = [top.lineas_de(cid) for cid in top.converters]
        self.nodo_de = [
            self.nodos_carga.index(top.lines[lineas[0]].destino) if lineas else None for lineas in self.lineas
        ]
        self.conv = [
            _Convertidor(
                c,
                spec.controller_Ts,
                spec.controller_Ts * (1.0 + spec.clock.efectivo(k)),
                spec.ventana_potencia,
                con_pll=self.nodo_de[k] is not None,
            )
            for k, c in enumerate(spec.convertidores)
        ]
        self.contador: Counter = Counter()
        self.violaciones = 0

        canales = self.canales_disponibles()
        if spec.record:
            desconocidos = [nombre for nombre in spec.record if nombre not in canales]
            if desconocidos:
                raise ErrorConfiguracion(f"canales desconocidos: {', '.join(desconocidos)}", ruta="registro.canales")
            canales = [nombre for nombre in canales if nombre in spec.record]
        self.traza = TraceRecorder(canales, spec.plant_dt * spec.decimation)
        self.pendientes = list(spec.events)

    def canales_disponibles(self) -> List[str]:
        canales: List[str] = []
        for c in self.conv:
            cid = c.spec.id
            canales += [
                f"theta_{cid}",
                f"theta_star_{cid}",
                f"delta_theta_{cid}",
                f"omega_{cid}",
                f"P_{cid}",
                f"P_filtrada_{cid}",
                f"Q_{cid}",
                f"V_dc_{cid}",
                f"I_b_{cid}",
                f"d_{cid}",
                f"u_a_{cid}",
                f"v_amp_{cid}",
            ]
            if c.pll is not None:
                canales += [f"theta_pll_{cid}", f"i_linea_{cid}"]
        for nodo in self.nodos_carga:
            canales += [f"v_amp_nodo_{nodo}", f"theta_nodo_{nodo}", f"P_carga_{nodo}"]
        return canales

    # -- planta ------------------------------------------------------------

    def entradas(self) -> EntradasPlanta:
        return EntradasPlanta(
            u_bar=np.array([c.u_bar for c in self.conv]),
            d=np.array([c.d for c in self.conv]),
            G_local=self.G_local.copy(),
            cerrados=self.cerrados.copy(),
            resistencias=self.resistencias.copy(),
        )

    def medir(self) -> _Mediciones:
        boost, ac, _ = self.planta.desempacar(self.x)
        puertos = self.planta.corrientes_puerto(self.x, self.entradas())
        i_o = puertos.i_o + self.G_local[:, None] * ac.v
        return _Mediciones(boost.I_b, boost.V_dc, ac.v, ac.i, i_o, puertos.i_o, puertos.v_nodos)

    # -- eventos -----------------------------------------------------------

    def aplicar_eventos(self, t: float) -> bool:
        aplicado = False
        while self.pendientes and self.pendientes[0].time <= t + 1e-9 * self.spec.plant_dt:
            evento = self.pendientes.pop(0)
            self.aplicar(evento.action, t)
            self.traza.marcar(t, "evento", str(evento.action))
            logger.info("t=%.4f s: %s", t, evento.action)
            aplicado = True
        return aplicado

    def aplicar(self, accion: Accion, t: float) -> None:
        if isinstance(accion, CloseBreaker):
            k = self.spec.indice(accion.convertidor)
            self.cerrados[self.lineas[k]] = 1.0
        elif isinstance(accion, LoadStep):
            if accion.nodo in self.spec.topology.converters:
                self.G_local[self.spec.indice(accion.nodo)] = 1.0 / accion.resistencia
            else:
                self.resistencias[self.nodos_carga.index(accion.nodo)] = accion.resistencia
        elif isinstance(accion, EnableModulation):
            self.habilitar(self.spec.indice(accion.convertidor), t)
        elif isinstance(accion, SetGains):
            self.conv[self.spec.indice(accion.convertidor)].droop = accion.droop

    def habilitar(self, k: int, t: float) -> None:
        c = self.conv[k]
        c.modulando = True
        c.filtro = FiltroPromedioMovil.desde_ventana(c.ventana, c.Ts)
        c.estado_droop = DroopState.inicial(c.droop)
        if not (self.spec.sembrar_con_pll and c.pll is not None and c.pll.enganchado):
            return

        linea = self.spec.topology.lines[self.lineas[k][0]]
        X = c.droop.omega_star * linea.params.L_l
        if c.spec.modo == "direct":
            X += c.droop.omega_star * c.spec.filtro.L
        try:
            semilla = interconnection_angle(
                c.droop.P_star, X, c.pll.amplitud, c.spec.voltaje_conmutacion, c.pll.theta_hat, factor=FACTOR_TRIFASICO
            )
        except ErrorTransferenciaInfactible as error:
            logger.warning("%s: %s; se usa el ángulo del nodo sin desfase", c.spec.id, error)
            self.traza.marcar(t, "diagnostico", f"{c.spec.id}: transferencia infactible al interconectar")
            semilla = c.pll.theta_hat
        c.estado_droop = DroopState(theta_star=wrap_angle(semilla))
        c.desfase_interconexion = semilla - c.pll.theta_hat
        logger.info("%s sembrado con θ* = %.5f rad (θ̂0 = %.5f rad)", c.spec.id, c.estado_droop.theta_star, c.pll.theta_hat)

    # -- controladores -----------------------------------------------------

    def actualizar_controladores(self, t: float) -> None:
        med = self.medir()
        for k, c in enumerate(self.conv):
            V_b = c.spec.boost.V_b
            c.pi_boost, c.d = boost_control_step(
                c.spec.control_boost,
                c.pi_boost,
                MedicionBoost(float(med.V_dc[k]), float(med.I_b[k]), V_b),
                c.Ts_local,
                planta=c.spec.boost,
            )
            if c.pi_boost[0].anti_windup_frozen:
                self.contador["ciclo_boost"] += 1

            if c.pll is not None:
                c.pll = pll_step(c.pll, med.v_nodos[self.nodo_de[k]], c.Ts_local, self.spec.ganancias_pll)

            if not c.modulando:
                continue
            c.P_filtrada = c.filtro.agregar(float(np.dot(med.v[k], med.i_o[k])))
            previo = c.estado_droop
            c.estado_droop, c.theta, c.omega = droop_step(c.droop, previo, c.P_filtrada, c.Ts_local)
            if c.estado_droop.alarma and not previo.alarma:
                self.traza.marcar(t, "diagnostico", f"{c.spec.id}: |Δθ| alcanzó π")
            if c.spec.modo == "direct":
                c.u_bar = np.array(direct_modulation(c.theta, c.spec.A))
            else:
                c.pi_ac, u_bar = indirect_control_step(
                    c.spec.indirecto,
                    c.pi_ac,
                    c.theta,
                    MedicionAc(med.v[k], med.i[k], med.i_o[k], float(med.V_dc[k])),
                    c.spec.filtro,
                    c.Ts_local,
                    omega_star=c.droop.omega_star,
                )
                c.u_bar = np.array(u_bar)
                if c.pi_ac[0].anti_windup_frozen:
                    self.contador["modulacion_ac"] += 1
            self.revisar_angulos_de_linea(k, med, t)

    def revisar_angulos_de_linea(self, k: int, med: _Mediciones, t: float) -> None:
        c = self.conv[k]
        umbral = UMBRAL_ANGULO_NODO * c.spec.indirecto.V_star
        violando = False
        for j in self.lineas[k]:
            if not self.cerrados[j]:
                continue
            v_nodo = med.v_nodos[self.nodos_carga.index(self.spec.topology.lines[j].destino)]
            if amplitud(v_nodo) < umbral:
                continue
            if abs(diferencia_angular(c.theta, angulo_fasor(v_nodo))) >= 0.5 * math.pi:
                violando = True
        if violando and not c.violando:
            self.violaciones += 1
            self.traza.marcar(t, "angulo_inseguro", f"{c.spec.id}: diferencia angular fuera de (−π/2, π/2)")
            logger.warning("t=%.4f s: %s viola la condición de seguridad angular", t, c.spec.id)
        c.violando = violando

    # -- registro ----------------------------------------------------------

    def registrar(self, t: float) -> None:
        med = self.medir()
        valores: Dict[str, float] = {}
        for k, c in enumerate(self.conv):
            cid = c.spec.id
            P, Q = instantaneous_power(med.v[k], med.i_o[k])
            valores.update(
                {
                    f"P_{cid}": P,
                    f"Q_{cid}": Q,
                    f"V_dc_{cid}": med.V_dc[k],
                    f"I_b_{cid}": med.I_b[k],
                    f"d_{cid}": c.d,
                    f"u_a_{cid}": c.u_bar[0],
                    f"v_amp_{cid}": amplitud(med.v[k]),
                }
            )
            if c.modulando:
                valores.update(
                    {
                        f"theta_{cid}": c.theta,
                        f"theta_star_{cid}": c.estado_droop.theta_star,
                        f"delta_theta_{cid}": c.estado_droop.delta_theta,
                        f"omega_{cid}": c.omega,
                        f"P_filtrada_{cid}": c.P_filtrada,
                    }
                )
            if c.pll is not None:
                valores[f"theta_pll_{cid}"] = c.pll.theta_hat
                valores[f"i_linea_{cid}"] = amplitud(med.i_linea[k])
        for j, nodo in enumerate(self.nodos_carga):
            v_nodo = med.v_nodos[j]
            valores[f"v_amp_nodo_{nodo}"] = amplitud(v_nodo)
            valores[f"theta_nodo_{nodo}"] = angulo_fasor(v_nodo)
            valores[f"P_carga_{nodo}"] = float(np.dot(v_nodo, v_nodo)) / self.resistencias[j]
        self.traza.registrar(t, valores)

    # -- ciclo principal ---------------------------------------------------

    def ejecutar(self) -> ResultadoSimulacion:
        spec = self.spec
        logger.info("inicia escenario '%s' (%.3f s)", spec.nombre, spec.duration)
        abortado = False
        t_aborto: Optional[float] = None

        if spec.duration > 0.0:
            pasos = int(round(spec.duration / spec.plant_dt))
            razon = spec.pasos_por_muestra
            h = spec.plant_dt
            f = None
            for s in range(pasos + 1):
                t = s * h
                cambio = self.aplicar_eventos(t)
                if s % razon == 0:
                    self.actualizar_controladores(t)
                if f is None or cambio or s % razon == 0:
                    f = partial(self.planta.derivada, modelo=self.planta.ensamblar(self.entradas()))
                if s % spec.decimation == 0:
                    self.registrar(t)
                if s == pasos:
                    break
                self.x = paso_rk4(f, self.x, h)
                if not np.all(np.isfinite(self.x)):
                    abortado, t_aborto = True, (s + 1) * h
                    logger.error("estado no finito en t=%.6f s; se aborta la corrida", t_aborto)
                    self.traza.marcar(t_aborto, "aborto", "estado no finito")
                    break

        saturaciones = dict(self.contador)
        if saturaciones:
            logger.warning("saturaciones durante la corrida: %s", saturaciones)
        ganancias = tuple(replace(c.droop, theta_star_0=c.estado_droop.theta_star) for c in self.conv)
        resumen = resumir(spec, self.traza, ganancias, abortado=abortado, t_aborto=t_aborto)
        resumen.violaciones_angulo_seguro = self.violaciones
        resumen.saturaciones = saturaciones
        for k, c in enumerate(self.conv):
            resumen.convertidores[k].alarmas_caida = c.estado_droop.saturation_count
            resumen.convertidores[k].desfase_interconexion = c.desfase_interconexion
        logger.info("termina escenario '%s'%s", spec.nombre, " (abortado)" if abortado else "")
        return ResultadoSimulacion(self.traza, resumen, self.x.copy(), ganancias)


def run_scenario(spec: ScenarioSpec) -> ResultadoSimulacion:
    """Ejecuta una corrida completa y resume sus métricas."""

    return _Motor(spec).ejecutar()


# ---------------------------------------------------------------------------
# Resumen
# ---------------------------------------------------------------------------


def _t_perturbacion(spec: ScenarioSpec) -> float:
    tiempos = [
        evento.time
        for evento in spec.events
        if isinstance(evento.action, (LoadStep, EnableModulation, SetGains)) and evento.time <= spec.duration
    ]
    return max(tiempos, default=0.0)


def red_reducida(spec: ScenarioSpec, ganancias: Sequence[DroopGains]) -> Optional[ReducedTwoSource]:
    """Red de dos fuentes equivalente al escenario, si éste tiene esa forma.

    Requiere dos convertidores en modo directo, cada uno con una línea al
    mismo nodo de carga.
    """

    top = spec.topology
    if len(top.converters) != 2 or len(top.lines) != 2 or len(top.nodos_carga) != 1:
        return None
    if any(c.modo != "direct" for c in spec.convertidores):
        return None
    if top.conductancias_locales().any():
        return None
    c1, c2 = spec.convertidores
    if c1.filtro != c2.filtro:
        return None
    l1, l2 = (top.lines[top.lineas_de(cid)[0]] for cid in top.converters)
    omega = ganancias[0].omega_star
    R_carga = float(top.resistencias_nodos()[0])
    for evento in spec.events:
        if isinstance(evento.action, LoadStep) and evento.action.nodo == top.nodos_carga[0]:
            R_carga = evento.action.resistencia
    return ReducedTwoSource(
        V1=c1.voltaje_conmutacion,
        V2=c2.voltaje_conmutacion,
        V0=c1.indirecto.V_star,
        X10=omega * l1.params.L_l,
        X20=omega * l2.params.L_l,
        R_load=R_carga,
        P_star_1=ganancias[0].P_star,
        P_star_2=ganancias[1].P_star,
        R10=l1.params.R_l,
        R20=l2.params.R_l,
        R_f=c1.filtro.R,
        X_f=omega * c1.filtro.L,
        G_f=c1.filtro.G,
        B_c=omega * c1.filtro.C,
    )


def _tramo(traza: TraceRecorder, nombre: str, desde: float) -> np.ndarray:
    if nombre not in traza:
        return np.array([])
    datos = traza.ventana(nombre, desde)
    return datos[np.isfinite(datos)]


def _resumir_convertidor(
    spec: ScenarioSpec, traza: TraceRecorder, c: ConvertidorSpec, g: DroopGains, t_pert: float
) -> ResumenConvertidor:
    w = spec.ventana_estacionaria
    dt = traza.dt
    resumen = ResumenConvertidor(c.id)
    if len(traza) < w.muestras(dt):
        return resumen

    def final(nombre: str) -> float:
        return valor_estacionario(_tramo(traza, nombre, t_pert), w, dt=dt)

    resumen.P_s = final(f"P_{c.id}")
    resumen.Q_s = final(f"Q_{c.id}")
    resumen.omega_s = final(f"omega_{c.id}")
    resumen.delta_theta_s = final(f"delta_theta_{c.id}")
    resumen.V_dc_s = final(f"V_dc_{c.id}")
    resumen.v_amplitud_s = final(f"v_amp_{c.id}")
    if math.isfinite(resumen.delta_theta_s):
        resumen.residuo_caida = droop_law_residual(g, resumen.delta_theta_s, 0.0, resumen.P_s)

    potencia = _tramo(traza, f"P_{c.id}", t_pert)
    if potencia.size >= w.muestras(dt):
        resumen.t_estacionario = detect_steady_state(potencia, w, dt=dt, t0=t_pert)

    omega = _tramo(traza, f"omega_{c.id}", t_pert)
    if omega.size:
        minimo = nadir(omega, g.omega_star)
        resumen.omega_nadir, resumen.profundidad_nadir = minimo.omega_min, minimo.profundidad
    theta = _tramo(traza, f"theta_{c.id}", t_pert)
    if theta.size >= 2:
        resumen.rocof_max = float(np.max(np.abs(frequency_and_rocof(theta, dt)[1])))

    nombres = (f"delta_theta_{c.id}", f"P_filtrada_{c.id}", f"omega_{c.id}")
    if all(nombre in traza for nombre in nombres):
        delta, P_f, w_k = (traza.canal(nombre) for nombre in nombres)
        activo = np.isfinite(delta)
        if np.count_nonzero(activo) >= 2:
            costo = running_cost((delta[activo], P_f[activo]), g, w_k[activo] - g.omega_star, dt=dt)
            resumen.costo = costo.total
            cola = costo.integrando[int(0.9 * costo.integrando.size) :]
            pico = float(np.max(costo.integrando))
            resumen.cola_costo = float(np.max(cola)) / pico if pico > 0.0 else 0.0
    return resumen


def resumir(
    spec: ScenarioSpec,
    traza: TraceRecorder,
    ganancias: Sequence[DroopGains],
    *,
    abortado: bool = False,
    t_aborto: Optional[float] = None,
) -> SummaryReport:
    """Calcula el :class:`SummaryReport` de una traza ya registrada."""

    t_pert = _t_perturbacion(spec)
    resumen = SummaryReport(spec.nombre, spec.duration, abortado, t_aborto, t_pert)
    resumen.convertidores = [
        _resumir_convertidor(spec, traza, c, g, t_pert) for c, g in zip(spec.convertidores, ganancias)
    ]
    top = spec.topology
    w = spec.ventana_estacionaria
    if len(traza) >= w.muestras(traza.dt):
        for c, g, reporte in zip(spec.convertidores, ganancias, resumen.convertidores):
            lineas = top.lineas_de(c.id)
            if len(lineas) != 1:
                continue
            corriente = valor_estacionario(_tramo(traza, f"i_linea_{c.id}", t_pert), w, dt=traza.dt)
            X_l = g.omega_star * top.lines[lineas[0]].params.L_l
            reporte.Q_linea_s = consumo_reactivo_linea(corriente, X_l)
    if len(spec.convertidores) != 2 or len(traza) < w.muestras(traza.dt):
        return resumen

    id1, id2 = top.converters
    if f"theta_{id1}" in traza and f"theta_{id2}" in traza:
        resumen.diferencia_angular = valor_estacionario(
            _diferencia_envuelta(traza, f"theta_{id1}", f"theta_{id2}"), w, dt=traza.dt
        )
        resumen.diferencia_nominal = valor_estacionario(
            _diferencia_envuelta(traza, f"theta_star_{id1}", f"theta_star_{id2}"), w, dt=traza.dt
        )

    try:
        r_esperada = sharing_ratio(ganancias)
        P1 = _tramo(traza, f"P_{id1}", t_pert)[-w.muestras(traza.dt) :]
        P2 = _tramo(traza, f"P_{id2}", t_pert)[-w.muestras(traza.dt) :]
        metricas = sharing_metrics(P1, P2, r_esperada)
        resumen.reparto = {
            "razon": metricas.ratio_at_ss,
            "razon_esperada": r_esperada,
            "error_relativo": metricas.relative_error,
        }
    except (ErrorConfiguracion, ErrorRazonIndefinida) as error:
        logger.debug("sin métricas de reparto: %s", error)

    red = red_reducida(spec, ganancias)
    if red is None:
        return resumen
    resumen.reactivas = _reactivas(spec, red, resumen)
    try:
        solucion = solve_two_source_steady_state(red, ganancias)
    except ErrorSimtool as error:
        logger.warning("el oráculo estacionario no convergió: %s", error)
        return resumen
    resumen.oraculo = {
        "diferencia_angular": solucion.diferencia_angular,
        "P_s": list(solucion.P_s),
        "Q_s": list(solucion.Q_s),
        "potencia_carga": solucion.potencia_carga,
        "perdidas": solucion.perdidas,
        "residuo": solucion.residuo,
        "iteraciones": solucion.iteraciones,
        "angulos_seguros": solucion.angulos_seguros,
        "diferencia_angular_pequena_senal": solucion.pequena_senal.diferencia_angular,
    }
    return resumen


def _diferencia_envuelta(traza: TraceRecorder, primero: str, segundo: str) -> np.ndarray:
    return np.angle(np.exp(1j * (traza.canal(primero) - traza.canal(segundo))))


def _reactivas(spec: ScenarioSpec, red: ReducedTwoSource, resumen: SummaryReport) -> Optional[Dict[str, object]]:
    """Reactivas medidas junto al consumo de las líneas y la referencia de Kron.

    Con la carga resistiva, en estado estacionario ``Q_1 + Q_2`` iguala la
    reactiva que consumen las inductancias de las líneas.
    """

    c1, c2 = resumen.convertidores
    medidas = (c1.Q_s, c2.Q_s, c1.Q_linea_s, c2.Q_linea_s, c1.V_dc_s, c2.V_dc_s)
    if resumen.diferencia_angular is None or not all(math.isfinite(valor) for valor in medidas):
        return None
    V1 = 0.5 * spec.convertidores[0].A * c1.V_dc_s
    V2 = 0.5 * spec.convertidores[1].A * c2.V_dc_s
    kron = reactivas_kron(V1, V2, resumen.diferencia_angular, 0.0, red.X10 + red.X20 + 2.0 * red.X_f)
    return {
        "medidas": [c1.Q_s, c2.Q_s],
        "suma": c1.Q_s + c2.Q_s,
        "consumo_lineas": c1.Q_linea_s + c2.Q_linea_s,
        "desajuste_amplitud": V1 - V2,
        "kron_exactas": list(kron.exactas),
        "kron_pequena_senal": list(kron.pequena_senal),
    }


# ---------------------------------------------------------------------------
# Barridos y deriva de reloj
# ---------------------------------------------------------------------------


def _resumen_de(spec: ScenarioSpec) -> SummaryReport:
    return run_scenario(spec).resumen


def sweep(
    spec: ScenarioSpec,
    parameter: str,
    values: Sequence[float],
    *,
    trabajadores: Optional[int] = None,
) -> List[SummaryReport]:
    """Una corrida independiente por valor; con ``trabajadores > 1`` en procesos separados."""

    specs = [aplicar_parametro(spec, parameter, valor) for valor in values]
    if trabajadores and trabajadores > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=trabajadores) as ejecutor:
            reportes = list(ejecutor.map(_resumen_de, specs))
    else:
        reportes = [_resumen_de(s) for s in specs]
    for reporte, valor in zip(reportes, values):
        reporte.parametro = parameter
        reporte.valor = float(valor)
    return reportes


def clock_drift_demo(
    spec: ScenarioSpec, delta_epsilon: float, *, desde: Optional[float] = None
) -> ResultadoDeriva:
    """Corre con ``ε_1 − ε_2 = delta_epsilon`` sin reloj maestro y repite con él.

    El pico espectral se busca en ``P_1`` a partir de ``desde`` (por
    defecto, un segundo después de la última interconexión).
    """

    if len(spec.convertidores) != 2:
        raise ErrorConfiguracion("la demostración de deriva requiere dos convertidores", ruta="convertidores")
    deriva = run_scenario(replace(spec, clock=ClockModel((delta_epsilon, 0.0), master_clock_enabled=False)))
    maestro = run_scenario(replace(spec, clock=ClockModel((delta_epsilon, 0.0), master_clock_enabled=True)))

    if desde is None:
        desde = _t_perturbacion(spec) + 1.0
    id1 = spec.topology.converters[0]
    dt = deriva.traza.dt
    pico = pico_espectral(deriva.traza.ventana(f"P_{id1}", desde), dt)
    pico_maestro = pico_espectral(maestro.traza.ventana(f"P_{id1}", desde), dt)
    esperada = spec.convertidores[0].droop.omega_star * abs(delta_epsilon) / (2.0 * math.pi)
    logger.info("pico de P_1: %.4f Hz (esperado %.4f Hz)", pico.frecuencia, esperada)
    return ResultadoDeriva(deriva, maestro, pico, pico_maestro, esperada)


__all__ = [
    "MODOS",
    "A_NOMINAL",
    "ClockModel",
    "CloseBreaker",
    "LoadStep",
    "EnableModulation",
    "SetGains",
    "Event",
    "ConvertidorSpec",
    "ScenarioSpec",
    "aplicar_parametro",
    "ResumenConvertidor",
    "SummaryReport",
    "ResultadoSimulacion",
    "ResultadoDeriva",
    "paso_rk4",
    "run_scenario",
    "red_reducida",
    "resumir",
    "sweep",
    "clock_drift_demo",
]
