from .cases import (
    DEFAULT_LIBRARY,
    SEED_FILE,
    build_library,
    Case,
    CaseLibrary,
    certify,
    evaluate_case,
    generate_cases,
    load_library,
    save_library,
)
from .controller import (
    CAPTURE_RADIUS,
    BuiltinGains,
    ControllerError,
    ControllerHandle,
    ExternalController,
    ProtocolError,
    builtin_controller,
    check_syntax,
    external_controller,
    tracking_command,
    write_program,
)
from .simulate import DEFAULT_DT, WaypointSequencer, simulate, simulate_states
from .verify import check_loadable, motional_verify

__all__ = [
    "DEFAULT_LIBRARY", "SEED_FILE", "build_library", "Case", "CaseLibrary", "certify", "evaluate_case", "generate_cases",
    "load_library", "save_library", "CAPTURE_RADIUS", "BuiltinGains", "ControllerError",
    "ControllerHandle", "ExternalController", "ProtocolError", "builtin_controller",
    "check_syntax", "external_controller", "tracking_command", "write_program", "DEFAULT_DT",
    "WaypointSequencer", "simulate", "simulate_states", "check_loadable", "motional_verify",
]
