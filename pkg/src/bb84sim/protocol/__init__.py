"""BB84 records, sifting, error estimation and the two-party session."""
from .records import (
    DetectionRecords,
    SiftedKeyPair,
    SignalRecord,
    SignalRecords,
    estimate_qber,
    qber_by_label,
    select_test_mask,
    sift,
)
from .session import SessionParams, SessionTranscript, predicted_final_length, run_session

__all__ = [
    "DetectionRecords",
    "SessionParams",
    "SessionTranscript",
    "SiftedKeyPair",
    "SignalRecord",
    "SignalRecords",
    "estimate_qber",
    "predicted_final_length",
    "qber_by_label",
    "run_session",
    "select_test_mask",
    "sift",
]
