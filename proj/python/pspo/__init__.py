from ._pspo import (
    Case,
    PspoError,
    build_case,
    condition_number,
    config_hash,
    gappy_reconstruct,
    heat1d_exact,
    log10_kappa,
    optimize,
    physics_reconstruct,
    random_placement,
    run_experiment,
    uniform_placement,
)

__all__ = [
    "Case",
    "PspoError",
    "build_case",
    "condition_number",
    "config_hash",
    "gappy_reconstruct",
    "heat1d_exact",
    "log10_kappa",
    "optimize",
    "physics_reconstruct",
    "random_placement",
    "run_experiment",
    "uniform_placement",
]
