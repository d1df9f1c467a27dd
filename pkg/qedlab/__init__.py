from importlib import import_module
from typing import Any

_EXACT = ".exact.observables"

_EXPORTS: dict[str, tuple[str, str]] = {
    "Grid1D": (".field.core", "Grid1D"),
    "ModeSet": (".field.core", "ModeSet"),
    "TransverseCurrent": (".field.core", "TransverseCurrent"),
    "ClassicalField": (".field.core", "ClassicalField"),
    "solve_static_maxwell": (".field.core", "solve_static_maxwell"),
    "to_mode_coefficients": (".field.core", "to_mode_coefficients"),
    "from_mode_coefficients": (".field.core", "from_mode_coefficients"),
    "HamiltonianSpec": (".exact.hamiltonian", "HamiltonianSpec"),
    "ExternalPair": (".exact.hamiltonian", "ExternalPair"),
    "Interaction": (".exact.hamiltonian", "Interaction"),
    "build_hamiltonian": (".exact.hamiltonian", "build_hamiltonian"),
    "SolverOptions": (".exact.solver", "SolverOptions"),
    "ground_state": (".exact.solver", "ground_state"),
    "solve_exact": (".exact.solver", "solve_exact"),
    "density": (_EXACT, "density"),
    "field_expectation": (_EXACT, "field_expectation"),
    "internal_pair": (_EXACT, "internal_pair"),
    "physical_current": (_EXACT, "physical_current"),
    "maxwell_residual": (_EXACT, "maxwell_residual"),
    "continuity_current": (_EXACT, "continuity_current"),
    "discretization_defect": (_EXACT, "discretization_defect"),
    "displacement_operator": (".gauge.displacement", "displacement_operator"),
    "transform_spec": (".gauge.displacement", "transform_spec"),
    "verify_equivalence": (".gauge.displacement", "verify_equivalence"),
    "SCFConfig": (".scf.loop", "SCFConfig"),
    "scf_loop": (".scf.loop", "scf_loop"),
    "recover_external": (".hk.verify", "recover_external"),
    "scan_injectivity": (".hk.verify", "scan_injectivity"),
    "scan_externals": (".hk.verify", "scan_externals"),
    "variational_cross_check": (".hk.verify", "variational_cross_check"),
    "Config": (".shared.config", "Config"),
    "ConfigKeys": (".shared.config_keys", "ConfigKeys"),
}

__all__ = list(_EXPORTS)


def __getattr__(name: str) -> Any:
    try:
        module_name, attr_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(name) from None
    value = getattr(import_module(module_name, __name__), attr_name)
    globals()[name] = value
    return value


def __dir__() -> list[str]:
    return sorted(set(globals()) | set(_EXPORTS))
