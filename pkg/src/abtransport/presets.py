"""Reference parameter sets and the named figure scenarios."""

from __future__ import annotations

import math
from dataclasses import replace

from .bath import BathSpec, LeadSpec
from .hamiltonian import RingSpec
from .liouvillian import SystemSpec

PI = math.pi


def fig2_system(gamma: float = 0.1, phi: float = 0.0, eps3: float = 3.0, temperature: float = 3.0) -> SystemSpec:
    """Ring and reservoirs of the stationary-current figures."""
    lead = LeadSpec(gamma0=0.005, omega0=2.0, omega_c_lead=10.0, temperature=temperature)
    return SystemSpec(
        ring=RingSpec(eps=(3.0, 4.0, eps3), j0=(1.0, 1.0, 1.0), phi=phi),
        leads=(replace(lead, mu=3.5), replace(lead, mu=1.5)),
        bath=BathSpec(gamma=gamma, omega_c=10.0, temperature=temperature),
    )


def fig6_system(gamma: float = 0.0, phi: float = 0.0, eps3: float = 3.0) -> SystemSpec:
    """Same as ``fig2_system`` at k_B T = 5 J, used for waiting times and bath rates."""
    return fig2_system(gamma=gamma, phi=phi, eps3=eps3, temperature=5.0)


def _phi_axis(count=401):
    return {"name": "phi", "start": -PI, "stop": PI, "count": count}


def _values_axis(name, values):
    return {"name": name, "values": list(values)}


def _system(gamma=0.1, temperature=3.0, eps3=3.0, phi=0.0):
    return {
        "eps": [3.0, 4.0, eps3],
        "hoppings": [1.0, 1.0, 1.0],
        "phi": phi,
        "bath": {"gamma": gamma, "omega_c": 10.0, "temperature": temperature},
        "leads": [
            {"gamma0": 0.005, "omega0": 2.0, "omega_c": 10.0, "mu": 3.5, "temperature": temperature},
            {"gamma0": 0.005, "omega0": 2.0, "omega_c": 10.0, "mu": 1.5, "temperature": temperature},
        ],
    }


def _waiting_map(gamma, eps3):
    return {
        "system": _system(gamma=gamma, temperature=5.0, eps3=eps3),
        "sweep": [_phi_axis(201)],
        "observables": ["waiting"],
        "settings": {"n_in": 1},
    }


PRESETS = {
    "fig2a": {
        "system": _system(),
        "sweep": [_phi_axis(), _values_axis("gamma", [0.0, 0.1, 1.0, 5.0])],
        "observables": ["current"],
    },
    "fig2b": {
        "system": _system(),
        "sweep": [_phi_axis(), _values_axis("temperature", [3.0, 6.0, 9.0])],
        "observables": ["current"],
    },
    "fig2c": {
        "system": _system(),
        "sweep": [_phi_axis(), _values_axis("eps3", [1.0, 3.0, 5.0, 7.0])],
        "observables": ["current"],
    },
    "fig2d": {
        "system": _system(),
        "sweep": [{"name": "eps3", "start": 0.0, "stop": 8.0, "count": 401}, _values_axis("phi", [0.0, PI / 2, PI])],
        "observables": ["current"],
    },
    "fig3": {
        "system": _system(),
        "sweep": [_phi_axis(), _values_axis("gamma", [0.0, 5.0])],
        "observables": ["spectrum", "occupations"],
    },
    "fig4": {
        "system": _system(gamma=1.0),
        "sweep": [_phi_axis(41)],
        "observables": ["noise"],
        "settings": {"omega": {"start": 0.0, "stop": 5.0, "count": 101}, "reservoir": 2},
    },
    "fig5": {
        "system": _system(gamma=0.0, temperature=5.0),
        "sweep": [_values_axis("phi", [0.0, PI / 2, -PI / 2])],
        "observables": ["transient", "waiting"],
        "settings": {"n_in": 1},
    },
    "fig6a": _waiting_map(0.0, 3.0),
    "fig6b": _waiting_map(1.0, 3.0),
    "fig6c": _waiting_map(5.0, 3.0),
    "fig6d": _waiting_map(0.0, 1.0),
    "fig6e": _waiting_map(0.0, 7.0),
    "fig7": {
        "system": _system(gamma=0.0, temperature=5.0),
        "sweep": [{"name": "gamma", "start": 0.0, "stop": 8.0, "count": 33}, _values_axis("phi", [0.0, PI / 2, PI])],
        "observables": ["kappa", "rates"],
    },
    "fig8": {
        "system": _system(),
        "sweep": [_phi_axis(), _values_axis("gamma", [0.0, 0.1])],
        "observables": ["fom"],
        "settings": {"area": 1e-12, "gamma0_si": 1e4},
    },
}
