"""Toolchain for a linearly dependent, cost-counting refinement of PCF:
index-term evaluation over equational programs, a step-counting Krivine
machine, a checker for explicit weighted type derivations, and a harness
confirming the soundness bounds on concrete programs."""

__version__ = "0.1.0"
