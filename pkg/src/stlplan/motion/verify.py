"""Two-layer motional verification of a controller against a case library."""

from __future__ import annotations

import logging

from ..reports import VerificationReport, describe_path
from ..signal import derive_channels
from ..stl import EmptyWindowError, explain
from .cases import CaseLibrary, evaluate_case
from .controller import ControllerError, ControllerHandle, ExternalController, ProtocolError
from .simulate import DEFAULT_DT, simulate

log = logging.getLogger(__name__)


def check_loadable(controller: ControllerHandle) -> VerificationReport:
    """Layer 1: the program compiles, starts and answers the handshake."""
    if controller.kind == "builtin":
        return VerificationReport("motional-syntax", True, diagnostic="builtin controller")
    try:
        ExternalController(controller.program).close()
    except ProtocolError as exc:
        return VerificationReport("motional-syntax", False, diagnostic=str(exc))
    return VerificationReport("motional-syntax", True, diagnostic="handshake ok")


def motional_verify(controller: ControllerHandle, library: CaseLibrary, dt: float = DEFAULT_DT) -> VerificationReport:
    """Check loadability, then simulate every case; all must reach rho >= 0.

    Stops at the first failing case, which the report names.
    """
    if len(library) == 0:
        raise ValueError("case library is empty")
    syntax = check_loadable(controller)
    if not syntax.passed:
        return syntax
    worst = None
    for case in library:
        try:
            traj = simulate(controller, case.waypoints, case.scenario, dt)
            rho = evaluate_case(case, traj)
        except ProtocolError as exc:
            return VerificationReport("motional-syntax", False, diagnostic=f"case {case.id}: {exc}")
        except ControllerError as exc:
            return VerificationReport("motional-functional", False, diagnostic=f"case {case.id}: {exc}")
        except EmptyWindowError as exc:
            return VerificationReport("motional-functional", False, diagnostic=f"case {case.id}: {exc}")
        worst = rho if worst is None else min(worst, rho)
        if rho < 0:
            path = explain(case.formula, derive_channels(traj, case.scenario), case.scenario)
            log.debug("case %s failed with rho=%.4g", case.id, rho)
            return VerificationReport(
                "motional-functional", False, rho, f"case {case.id}: {describe_path(path)}", tuple(path)
            )
    return VerificationReport("motional-functional", True, worst, f"all {len(library)} cases passed")
