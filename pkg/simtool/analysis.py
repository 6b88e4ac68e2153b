"""Métricas de posproceso y en línea sobre trazas de simulación.

Incluye detección de estado estacionario, frecuencia y RoCoF a partir de
ángulos, potencia activa/reactiva, el PLL de marco síncrono usado para
medir el ángulo del nodo de carga, la verificación de la ley de caída y
el costo de operación acumulado.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import periodogram

from .control import OMEGA_NOMINAL, V_ESTRELLA, DroopGains
from .errors import ErrorArgumentoInvalido, ErrorRazonIndefinida, exigir_positivo
from .frames import FACTOR_TRIFASICO, amplitud, diferencia_angular, park, wrap_angle
from .powerflow import reactive_power_kron

logger = logging.getLogger(__name__)

GANANCIAS_PLL = (100.0, 2000.0)
UMBRAL_AMPLITUD_PLL = 1e-2
VENTANA_PERDIDA_PLL = 0.2
UMBRAL_ERROR_PLL = 1e-3
POTENCIA_MINIMA_REPARTO = 1.0


# ---------------------------------------------------------------------------
# Potencia
# ---------------------------------------------------------------------------


def instantaneous_power(v, i_o, theta: float = 0.0) -> Tuple[float, float]:
    """Potencia activa ``v·i_o`` y reactiva ``(3/2)(v_q i_d − v_d i_q)``.

    La reactiva se calcula en el marco dq del ángulo ``theta``; para
    señales balanceadas el resultado no depende del ángulo elegido. El
    factor 3/2 compensa la convención de Park invariante en amplitud.
    """

    v = np.asarray(v, dtype=float)
    i_o = np.asarray(i_o, dtype=float)
    P = np.sum(v * i_o, axis=-1)
    v_d, v_q = park(theta, v)
    i_d, i_q = park(theta, i_o)
    Q = FACTOR_TRIFASICO * (np.asarray(v_q) * i_d - np.asarray(v_d) * i_q)
    if np.ndim(P) == 0:
        return float(P), float(Q)
    return P, Q


class ReactivasKron(NamedTuple):
    exactas: Tuple[float, float]
    pequena_senal: Tuple[float, float]

    @property
    def suma(self) -> float:
        return self.pequena_senal[0] + self.pequena_senal[1]


def reactivas_kron(V1: float, V2: float, theta1: float, theta2: float, X12: float) -> ReactivasKron:
    """Reactivas de ambos convertidores en la red reducida con ``X12 = X10 + X20``."""

    D = diferencia_angular(theta1, theta2)
    q1 = reactive_power_kron(V1, V2, X12, D)
    q2 = reactive_power_kron(V2, V1, X12, -D)
    return ReactivasKron((q1.exacta, q2.exacta), (q1.pequena_senal, q2.pequena_senal))


def consumo_reactivo_linea(I: float, X_l: float) -> float:
    """Reactiva trifásica ``(3/2)·X_l·I²`` que absorbe una línea con corriente de amplitud ``I``."""

    return FACTOR_TRIFASICO * X_l * I * I


# ---------------------------------------------------------------------------
# Estado estacionario y frecuencia
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SteadyStateWindow:
    """Ventana final (s) y banda relativa; ``piso`` evita bandas nulas en canales que tienden a cero."""

    window: float = 0.2
    tolerance: float = 5e-3
    piso: float = 1e-9

    def __post_init__(self) -> None:
        exigir_positivo("window", self.window)
        exigir_positivo("tolerance", self.tolerance)

    def muestras(self, dt: float) -> int:
        return max(1, int(round(self.window / dt)))


def valor_estacionario(trace, w: SteadyStateWindow, *, dt: float) -> float:
    """Promedio del canal sobre la ventana final."""

    datos = np.asarray(trace, dtype=float)
    if datos.size == 0:
        return math.nan
    return float(np.mean(datos[-w.muestras(dt) :]))


def detect_steady_state(
    trace, w: SteadyStateWindow, *, dt: float, t0: float = 0.0
) -> Optional[float]:
    """Instante más temprano a partir del cual el canal permanece en la banda.

    La banda es ``±tolerance·|m|`` alrededor del promedio ``m`` de la ventana
    final. Regresa ``None`` si la propia ventana final sale de la banda.
    """

    datos = np.asarray(trace, dtype=float)
    n = w.muestras(dt)
    if datos.size < n:
        raise ErrorArgumentoInvalido(
            f"la traza ({datos.size} muestras) es más corta que la ventana ({n} muestras)"
        )
    if not np.all(np.isfinite(datos)):
        return None
    media = float(np.mean(datos[-n:]))
    banda = w.tolerance * max(abs(media), w.piso)
    fuera = np.flatnonzero(np.abs(datos - media) > banda)
    if fuera.size == 0:
        return t0
    ultimo = int(fuera[-1])
    if ultimo >= datos.size - n:
        return None
    return t0 + (ultimo + 1) * dt


def frequency_and_rocof(theta_trace, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Frecuencia y su derivada por diferencias centrales sobre el ángulo desenvuelto."""

    exigir_positivo("dt", dt)
    theta = np.unwrap(np.asarray(theta_trace, dtype=float))
    if theta.size < 2:
        return np.zeros_like(theta), np.zeros_like(theta)
    orden = 2 if theta.size >= 3 else 1
    omega = np.gradient(theta, dt, edge_order=orden)
    rocof = np.gradient(omega, dt, edge_order=orden)
    return omega, rocof


class Nadir(NamedTuple):
    omega_min: float
    profundidad: float
    indice: int


def nadir(omega, omega_star: float = OMEGA_NOMINAL) -> Nadir:
    """Frecuencia mínima alcanzada y su profundidad respecto a ``omega_star``."""

    datos = np.asarray(omega, dtype=float)
    if datos.size == 0:
        return Nadir(math.nan, math.nan, -1)
    indice = int(np.nanargmin(datos))
    return Nadir(float(datos[indice]), float(omega_star - datos[indice]), indice)


def tiempo_asentamiento(omega, omega_star: float, banda: float, *, dt: float, t0: float = 0.0) -> Optional[float]:
    """Primer instante tras el cual ``|ω − ω*| <= banda`` hasta el final."""

    datos = np.asarray(omega, dtype=float)
    fuera = np.flatnonzero(~(np.abs(datos - omega_star) <= banda))
    if fuera.size == 0:
        return t0
    if int(fuera[-1]) == datos.size - 1:
        return None
    return t0 + (int(fuera[-1]) + 1) * dt


class PicoEspectral(NamedTuple):
    frecuencia: float
    potencia: float
    potencia_total: float


def pico_espectral(senal, dt: float, *, relleno: int = 16) -> PicoEspectral:
    """Frecuencia dominante (sin la componente de directa) de una señal muestreada."""

    datos = np.asarray(senal, dtype=float)
    if datos.size < 2:
        return PicoEspectral(math.nan, 0.0, 0.0)
    frecuencias, densidad = periodogram(
        datos, fs=1.0 / dt, nfft=relleno * datos.size, detrend="constant", scaling="spectrum"
    )
    frecuencias, densidad = frecuencias[1:], densidad[1:]
    indice = int(np.argmax(densidad))
    return PicoEspectral(float(frecuencias[indice]), float(densidad[indice]), float(np.sum(densidad)))


# ---------------------------------------------------------------------------
# PLL de marco síncrono
# ---------------------------------------------------------------------------


class PllState(NamedTuple):
    """Estado del PLL y su diagnóstico de pérdida de enganche."""

    theta_hat: float = 0.0
    omega_hat: float = OMEGA_NOMINAL
    integrator: float = 0.0
    error: float = 0.0
    amplitud: float = 0.0
    error_referencia: float = math.inf
    tiempo_ventana: float = 0.0
    perdida: bool = False

    @property
    def enganchado(self) -> bool:
        return not self.perdida and self.amplitud > 0.0 and abs(self.error) < UMBRAL_ERROR_PLL


def pll_step(
    s: PllState,
    v,
    Ts: float,
    gains: Tuple[float, float] = GANANCIAS_PLL,
    *,
    V_nominal: float = V_ESTRELLA,
    omega_nominal: float = OMEGA_NOMINAL,
) -> PllState:
    """Un paso del PLL: error ``q/|v| = sin(θ − θ̂)``, PI sobre la frecuencia y avance del ángulo.

    Por debajo del 1 % de la amplitud nominal el lazo no se actualiza y el
    ángulo avanza libre con la última frecuencia estimada.
    """

    exigir_positivo("Ts", Ts)
    kp, ki = gains
    V = float(amplitud(v))
    if V < UMBRAL_AMPLITUD_PLL * V_nominal:
        return s._replace(theta_hat=wrap_angle(s.theta_hat + Ts * s.omega_hat), amplitud=V)

    _, q = park(s.theta_hat, v)
    error = float(q) / V
    integrador = s.integrator + Ts * ki * error
    omega_hat = omega_nominal + kp * error + integrador
    theta_hat = wrap_angle(s.theta_hat + Ts * omega_hat)

    tiempo_ventana = s.tiempo_ventana + Ts
    error_referencia = s.error_referencia
    perdida = s.perdida
    if tiempo_ventana >= VENTANA_PERDIDA_PLL:
        perdida = abs(error) >= error_referencia and abs(error) > UMBRAL_ERROR_PLL
        if perdida and not s.perdida:
            logger.warning("el PLL no reduce su error en %.1f s (|e| = %.3e)", VENTANA_PERDIDA_PLL, abs(error))
        error_referencia = abs(error)
        tiempo_ventana = 0.0
    if not 0.5 * omega_nominal <= omega_hat <= 1.5 * omega_nominal:
        perdida = True

    return PllState(theta_hat, omega_hat, integrador, error, V, error_referencia, tiempo_ventana, perdida)


# ---------------------------------------------------------------------------
# Ley de caída, costo y reparto
# ---------------------------------------------------------------------------


def droop_law_residual(g: DroopGains, theta_s: float, theta_star: float, P_s: float) -> float:
    """``γ(θ^s − θ*) + P^s − P*``; nulo en un estado estacionario válido de la ley de caída."""

    return g.gamma * diferencia_angular(theta_s, theta_star) + P_s - g.P_star


class CostoOperacion(NamedTuple):
    total: float
    integrando: np.ndarray
    termino_control: np.ndarray
    termino_potencia: np.ndarray


def running_cost(traces: Tuple[np.ndarray, np.ndarray], g: DroopGains, u_trace, *, dt: float) -> CostoOperacion:
    """Integral trapezoidal de ``α u² + (γ θ̃ + P − P*)²/(4α)``.

    ``traces`` es ``(θ̃, P)`` alineado con ``u_trace``.
    """

    theta_error, P = (np.asarray(serie, dtype=float) for serie in traces)
    u = np.asarray(u_trace, dtype=float)
    if not theta_error.shape == P.shape == u.shape:
        raise ErrorArgumentoInvalido("las trazas del costo deben estar alineadas")
    control = g.alpha * u**2
    potencia = (g.gamma * theta_error + P - g.P_star) ** 2 / (4.0 * g.alpha)
    integrando = control + potencia
    total = float(trapezoid(integrando, dx=dt)) if integrando.size > 1 else 0.0
    return CostoOperacion(total, integrando, control, potencia)


class MetricasReparto(NamedTuple):
    ratio_at_ss: float
    relative_error: float


def sharing_metrics(P1_trace, P2_trace, r_expected: float) -> MetricasReparto:
    """Razón de las medias estacionarias frente a la razón esperada."""

    P1 = float(np.mean(np.asarray(P1_trace, dtype=float)))
    P2 = float(np.mean(np.asarray(P2_trace, dtype=float)))
    if not abs(P2) >= POTENCIA_MINIMA_REPARTO:
        raise ErrorRazonIndefinida(f"la potencia estacionaria del divisor es {P2:.3g} W (< 1 W)")
    ratio = P1 / P2
    return MetricasReparto(ratio, abs(ratio - r_expected) / abs(r_expected))


__all__ = [
    "GANANCIAS_PLL",
    "instantaneous_power",
    "ReactivasKron",
    "reactivas_kron",
    "consumo_reactivo_linea",
    "SteadyStateWindow",
    "valor_estacionario",
    "detect_steady_state",
    "frequency_and_rocof",
    "Nadir",
    "nadir",
    "tiempo_asentamiento",
    "PicoEspectral",
    "pico_espectral",
    "PllState",
    "pll_step",
    "droop_law_residual",
    "CostoOperacion",
    "running_cost",
    "MetricasReparto",
    "sharing_metrics",
]
