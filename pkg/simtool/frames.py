"""Matemática de marcos de referencia: ángulos, síntesis trifásica y Park.

Convención de Park: invariante en amplitud con el eje *d* alineado al seno,
de modo que ``v_a = V sin θ`` se proyecta como ``d = V``. Por esa elección
las potencias trifásicas llevan el factor explícito ``3/2`` (ver
:data:`FACTOR_TRIFASICO`). La secuencia cero se descarta.

Todas las funciones aceptan escalares o arreglos; las magnitudes trifásicas
pueden ser :class:`ThreePhase` o cualquier arreglo con la última dimensión
de tamaño 3.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Union

import numpy as np

from .errors import ErrorArgumentoInvalido

DOS_PI = 2.0 * math.pi
DESFASE = 2.0 * math.pi / 3.0
DOS_TERCIOS = 2.0 / 3.0
SQRT3 = math.sqrt(3.0)
FACTOR_TRIFASICO = 1.5

Escalar = Union[float, np.ndarray]


class ThreePhase(NamedTuple):
    """Magnitud trifásica instantánea (volts o amperes)."""

    a: Escalar
    b: Escalar
    c: Escalar


class DqPair(NamedTuple):
    """Magnitud en el marco giratorio de dos ejes."""

    d: Escalar
    q: Escalar


def _componentes(x) -> np.ndarray:
    arreglo = np.asarray(x, dtype=float)
    if arreglo.shape[-1:] != (3,):
        raise ErrorArgumentoInvalido("se esperaba una magnitud trifásica con 3 componentes")
    return arreglo


def _escalar_si_procede(valor: np.ndarray) -> Escalar:
    return float(valor) if np.ndim(valor) == 0 else valor


def wrap_angle(theta: float) -> float:
    """Reduce ``theta`` al intervalo ``[0, 2π)``."""

    if not math.isfinite(theta):
        raise ErrorArgumentoInvalido(f"ángulo no finito: {theta!r}")
    resultado = math.fmod(theta, DOS_PI)
    if resultado < 0.0:
        resultado += DOS_PI
    # -1e-20 + 2π redondea a 2π
    if resultado >= DOS_PI:
        resultado -= DOS_PI
    return resultado


def envolver_angulos(theta) -> np.ndarray:
    """Versión vectorizada de :func:`wrap_angle` para trazas completas."""

    arreglo = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arreglo)):
        raise ErrorArgumentoInvalido("la traza de ángulos contiene valores no finitos")
    resultado = np.mod(arreglo, DOS_PI)
    return np.where(resultado >= DOS_PI, resultado - DOS_PI, resultado)


def diferencia_angular(theta_1: float, theta_2: float) -> float:
    """Diferencia ``theta_1 − theta_2`` llevada a ``(−π, π]``."""

    diferencia = wrap_angle(theta_1 - theta_2)
    return diferencia - DOS_PI if diferencia > math.pi else diferencia


def synth_three_phase(amplitude: Escalar, theta: Escalar) -> ThreePhase:
    """Sintetiza ``(A sin θ, A sin(θ−2π/3), A sin(θ+2π/3))``."""

    amplitud = np.asarray(amplitude, dtype=float)
    angulo = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(amplitud)) and np.all(np.isfinite(angulo))):
        raise ErrorArgumentoInvalido("amplitud y ángulo deben ser finitos")
    if np.any(amplitud < 0.0):
        raise ErrorArgumentoInvalido("la amplitud debe ser no negativa")
    return ThreePhase(
        _escalar_si_procede(amplitud * np.sin(angulo)),
        _escalar_si_procede(amplitud * np.sin(angulo - DESFASE)),
        _escalar_si_procede(amplitud * np.sin(angulo + DESFASE)),
    )


def park(theta: Escalar, x) -> DqPair:
    """Transformada de Park invariante en amplitud, eje *d* alineado al seno."""

    componentes = _componentes(x)
    a, b, c = componentes[..., 0], componentes[..., 1], componentes[..., 2]
    angulo = np.asarray(theta, dtype=float)
    d = DOS_TERCIOS * (
        np.sin(angulo) * a + np.sin(angulo - DESFASE) * b + np.sin(angulo + DESFASE) * c
    )
    q = DOS_TERCIOS * (
        np.cos(angulo) * a + np.cos(angulo - DESFASE) * b + np.cos(angulo + DESFASE) * c
    )
    return DqPair(_escalar_si_procede(d), _escalar_si_procede(q))


def inverse_park(theta: Escalar, x) -> ThreePhase:
    """Inversa de :func:`park`; reconstruye la componente balanceada."""

    d, q = (np.asarray(valor, dtype=float) for valor in x)
    angulo = np.asarray(theta, dtype=float)
    return ThreePhase(
        _escalar_si_procede(d * np.sin(angulo) + q * np.cos(angulo)),
        _escalar_si_procede(d * np.sin(angulo - DESFASE) + q * np.cos(angulo - DESFASE)),
        _escalar_si_procede(d * np.sin(angulo + DESFASE) + q * np.cos(angulo + DESFASE)),
    )


def angulo_fasor(x) -> Escalar:
    """Ángulo ``θ`` tal que ``x ≈ synth_three_phase(V, θ)``.

    Se usa para medir el ángulo de voltajes de nodo sin depender de un PLL.
    """

    componentes = _componentes(x)
    a, b, c = componentes[..., 0], componentes[..., 1], componentes[..., 2]
    seno = DOS_TERCIOS * (a - 0.5 * (b + c))
    coseno = (c - b) / SQRT3
    return _escalar_si_procede(np.mod(np.arctan2(seno, coseno), DOS_PI))


def amplitud(x) -> Escalar:
    """Amplitud de la componente balanceada de una magnitud trifásica."""

    componentes = _componentes(x)
    d, q = park(0.0, componentes)
    return _escalar_si_procede(np.hypot(d, q))


__all__ = [
    "DOS_PI",
    "FACTOR_TRIFASICO",
    "ThreePhase",
    "DqPair",
    "wrap_angle",
    "envolver_angulos",
    "diferencia_angular",
    "synth_three_phase",
    "park",
    "inverse_park",
    "angulo_fasor",
    "amplitud",
]
