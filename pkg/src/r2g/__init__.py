"""Demonstration generation toolkit: mesh alignment, grasp synthesis, and
kinematic rollouts that turn one recorded object trajectory into an
arbitrarily large robot demonstration dataset."""

__version__ = "0.1.0"
