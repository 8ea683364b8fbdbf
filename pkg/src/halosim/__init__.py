"""Graph-aware planner and cost simulator for multi-server GNN training."""

__version__ = "0.1.0"
