"""Desk-scale haptic driving assistance sandbox.

Simulated two-lane driving with torque-rendered wheel and pedals, skill
models trained on logged expert runs, and three shared-control guidance
modes evaluated with lane-keeping and prediction metrics.
"""

__version__ = "0.1.0"
