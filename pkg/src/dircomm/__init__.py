"""Directional community detection with regularized rank-one SVDs."""
from .graph import DirectedGraph, EdgeMask, load_edge_list, write_edge_list
from .measures import Community, Cover, conductance, cover_accuracy
from .dcomp import directional_components, is_d_connected
from .extract import EarlyStop, SparsityGrid, extract_community, grid_en, grid_l0
from .harvest import HarvestConfig, harvest
from .benchgen import BenchParams, generate

__version__ = "0.1.0"
