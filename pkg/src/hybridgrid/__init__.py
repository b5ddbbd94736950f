"""Transition planning of AC grid expansion plans to a hybrid AC/HVDC architecture."""
from .grid_model import (Branch, Bus, Generator, HvdcLink, Network, connectivity, load_case,
                         make_network, save_case)
from .lp import BACKEND

__version__ = "0.1.0"

__all__ = ["Branch", "Bus", "Generator", "HvdcLink", "Network", "connectivity", "load_case",
           "make_network", "save_case", "BACKEND"]


def data_path(name: str) -> str:
    """Path of a bundled data file (demo case, profiles, catalog, rating config)."""
    from importlib import resources
    return str(resources.files("hybridgrid").joinpath("data", name))
