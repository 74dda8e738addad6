from ._bladectl import (
    BladeError,
    RunConfig,
    export_gains,
    fit_decay,
    kernels,
    load_config,
    nondimensionalize,
    parse_config,
    place_poles,
    required_config_keys,
    run_scenario,
    sha256_file,
    simulate,
    verify,
)

__all__ = [
    "BladeError",
    "RunConfig",
    "export_gains",
    "fit_decay",
    "kernels",
    "load_config",
    "nondimensionalize",
    "parse_config",
    "place_poles",
    "required_config_keys",
    "run_scenario",
    "sha256_file",
    "simulate",
    "verify",
]
