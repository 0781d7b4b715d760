"""Export pretrained-CNN weights and activations into FILB / ACTV files."""

__version__ = "0.1.0"

from .export import (
    ExportError,
    ExportJob,
    ModelUnavailable,
    WriteError,
    export_activations,
    export_filter_bank,
    write_actv,
    write_filb,
)
