"""SOFA (SimpleFreeFieldHRIR) to portable hrtf-json/1 converter."""

from .convert import (
    COORDINATE_NOTE,
    SofaFormatError,
    SofaImportSpec,
    directions_from_sofa,
    read_sofa,
    sofa_to_portable,
    transfer_functions,
)

__version__ = "0.1.0"
