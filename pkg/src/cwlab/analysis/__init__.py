"""Transfer functions, observability functionals and the stability criterion."""

from .criterion import CriterionVerdict, convergents, rational_approximation, stability_criterion
from .observability import (
    InghamResult,
    ingham_ratio,
    ingham_threshold,
    mixed_modal_infimum,
    modal_infimum,
    modal_sum,
    random_state,
    trace_integral,
    weak_modes,
)
from .transfer import (
    TransferSample,
    VerticalLineSup,
    characteristic_roots,
    paper_h1_bound,
    scan,
    transfer_closed_form,
    transfer_numeric_bvp,
    vertical_line_sup,
    write_scan_csv,
)

__all__ = [
    "CriterionVerdict",
    "InghamResult",
    "TransferSample",
    "VerticalLineSup",
    "characteristic_roots",
    "convergents",
    "ingham_ratio",
    "ingham_threshold",
    "mixed_modal_infimum",
    "modal_infimum",
    "modal_sum",
    "paper_h1_bound",
    "random_state",
    "rational_approximation",
    "scan",
    "stability_criterion",
    "trace_integral",
    "transfer_closed_form",
    "transfer_numeric_bvp",
    "vertical_line_sup",
    "weak_modes",
    "write_scan_csv",
]
