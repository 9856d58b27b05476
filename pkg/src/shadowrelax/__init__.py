"""Relaxations of semialgebraic sets and projected spectrahedra, with certificates."""

from .obstruct import (
    ObstructionReport,
    ObstructionVerdict,
    convex_singular_check,
    line_obstruction,
    nonexposed_face_check,
    singular_point_obstruction,
)
from .pencil import (
    MatrixPencil,
    NotApplicable,
    PencilQMCertificate,
    PolarCertificate,
    closure_member,
    pencil_member,
    pencil_qm_member,
    polar_member,
    projection_member,
    strictly_feasible,
)
from .poly import Polynomial, PolynomialError, parse_expression
from .relax import (
    IdealSpec,
    QMCertificate,
    SemialgebraicSet,
    SigmaCertificate,
    Verdict,
    VerdictKind,
    lasserre_point_member,
    lasserre_support,
    pushforward_support,
    qm_member,
    sigma_member,
    theta_point_member,
    theta_support,
)
from .sdp import SDPProblem, SDPSolution, SolverInaccurate, Status, solve

__version__ = "0.1.0"

__all__ = [
    "IdealSpec",
    "MatrixPencil",
    "NotApplicable",
    "ObstructionReport",
    "ObstructionVerdict",
    "PencilQMCertificate",
    "PolarCertificate",
    "Polynomial",
    "PolynomialError",
    "QMCertificate",
    "SDPProblem",
    "SDPSolution",
    "SemialgebraicSet",
    "SigmaCertificate",
    "SolverInaccurate",
    "Status",
    "Verdict",
    "VerdictKind",
    "closure_member",
    "convex_singular_check",
    "lasserre_point_member",
    "lasserre_support",
    "line_obstruction",
    "nonexposed_face_check",
    "parse_expression",
    "pencil_member",
    "pencil_qm_member",
    "polar_member",
    "projection_member",
    "pushforward_support",
    "qm_member",
    "sigma_member",
    "singular_point_obstruction",
    "solve",
    "strictly_feasible",
    "theta_point_member",
    "theta_support",
]
