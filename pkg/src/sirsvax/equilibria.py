"""Closed-form equilibria of the SIRS system under a constant vaccination
rate, with stability classification and numerical corroboration.

Under u = u_inf the system has the disease-free rest point
(eta/(eta+u_inf), 0) and, when its infected component is positive, the
endemic rest point

    s = gamma/beta,
    i = eta/(gamma+eta) * (1 - gamma/beta) - gamma/(gamma+eta) * u_inf/beta.

Global stability labels follow the standard threshold criteria (R_o versus 1
for u_inf = 0; u_inf < gamma for the controlled endemic point); the Jacobian
eigenvalues at each rest point are reported as local corroboration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import EpidemicParams, State, drift


def drift_norm(s: float, i: float, u_inf: float,
               params: EpidemicParams) -> float:
    """Euclidean norm of the constant-control drift at (s, i)."""
    ds, di = drift(State(s, i), u_inf, params)
    return math.hypot(ds, di)


def jacobian(s: float, i: float, u_inf: float,
             params: EpidemicParams) -> np.ndarray:
    """Jacobian of the constant-control drift at (s, i)."""
    b, g, e = params.beta, params.gamma, params.eta
    return np.array([[-b * i - u_inf - e, -b * s - e],
                     [b * i, b * s - g]])


@dataclass
class EquilibriumReport:
    u_inf: float
    endemic: tuple[float, float] | None
    disease_free: tuple[float, float]
    globally_stable: str  # "endemic" or "disease_free"
    criterion: str
    endemic_eigenvalues: list | None
    disease_free_eigenvalues: list

    def to_dict(self) -> dict:
        return {
            "u_inf": self.u_inf,
            "endemic": (None if self.endemic is None
                        else {"s": self.endemic[0], "i": self.endemic[1]}),
            "disease_free": {"s": self.disease_free[0],
                             "i": self.disease_free[1]},
            "globally_stable": self.globally_stable,
            "criterion": self.criterion,
            "endemic_eigenvalues": self.endemic_eigenvalues,
            "disease_free_eigenvalues": self.disease_free_eigenvalues,
        }

    def to_json(self, path) -> None:
        with open(path, "w", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def _eigs(s: float, i: float, u_inf: float, params: EpidemicParams) -> list:
    ev = np.linalg.eigvals(jacobian(s, i, u_inf, params))
    order = np.argsort(ev.real)
    return [[float(ev[m].real), float(ev[m].imag)] for m in order]


def equilibrium_report(params: EpidemicParams,
                       u_inf: float = 0.0) -> EquilibriumReport:
    """Both rest points under the constant control u_inf, the globally stable
    one per the threshold criteria, and local eigenvalues."""
    if not 0.0 <= u_inf <= params.u_max + 1e-12:
        raise ValueError(f"u_inf={u_inf} outside [0, u_max]")
    b, g, e = params.beta, params.gamma, params.eta

    s_free = e / (e + u_inf)
    disease_free = (s_free, 0.0)

    s_end = g / b
    i_end = e / (g + e) * (1.0 - g / b) - g / (g + e) * u_inf / b
    endemic = (s_end, i_end) if i_end > 0.0 else None

    if u_inf == 0.0:
        r_o = b / g
        if r_o > 1.0:
            stable, crit = "endemic", f"R_o = beta/gamma = {r_o:.6g} > 1"
        else:
            stable, crit = "disease_free", f"R_o = beta/gamma = {r_o:.6g} <= 1"
    else:
        if endemic is not None and u_inf < g:
            stable, crit = "endemic", (
                f"endemic infected fraction {i_end:.6g} > 0 and "
                f"u_inf = {u_inf:.6g} < gamma = {g:.6g}")
        else:
            stable, crit = "disease_free", (
                "no positive endemic infected fraction" if endemic is None
                else f"u_inf = {u_inf:.6g} >= gamma = {g:.6g}")
    if stable == "endemic" and endemic is None:
        stable, crit = "disease_free", crit + " (endemic point absent)"

    return EquilibriumReport(
        u_inf=float(u_inf),
        endemic=endemic,
        disease_free=disease_free,
        globally_stable=stable,
        criterion=crit,
        endemic_eigenvalues=(None if endemic is None
                             else _eigs(s_end, i_end, u_inf, params)),
        disease_free_eigenvalues=_eigs(s_free, 0.0, u_inf, params),
    )
