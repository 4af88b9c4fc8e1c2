from config.util import env_int

from .base import *

# Desktop runs can use every core by default
SUBTLE_N_JOBS = env_int("SUBTLE_N_JOBS", -1)
