"""Benchmark spectral problems."""

from .autocatalysis import Autocatalysis, TravellingWave, autocat_problem, autocat_profile
from .boussinesq import Boussinesq, boussinesq_problem
from .ekman import Ekman, EkmanParams, ekman_problem, evans_eval_ekman

__all__ = ["Autocatalysis", "Boussinesq", "Ekman", "EkmanParams", "TravellingWave",
           "autocat_problem", "autocat_profile", "boussinesq_problem", "ekman_problem",
           "evans_eval_ekman"]
