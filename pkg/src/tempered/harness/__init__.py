"""Experiment harness: configs, cell runner, noise profiles, CLI."""
from .config import resolve
from .overlay import theory_overlay
from .profile import EmpiricalKind, build_noise_profile, label_regime
from .runner import run_experiment

__all__ = ["resolve", "run_experiment", "build_noise_profile", "label_regime",
           "EmpiricalKind", "theory_overlay"]
