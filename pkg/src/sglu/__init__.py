"""Stochastic gradient Langevin unlearning."""
