"""Bookkeeping of everything a session disclosed or spent."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass
class LeakageLedger:
    """Per-session counts, in bits.

    ``test_bits_revealed`` counts sifted positions whose values were announced
    for error estimation. ``ec_bits_leaked`` includes the verification hash.
    """

    ec_bits_leaked: int = 0
    pa_output_length: int = 0
    auth_bits_consumed: int = 0
    test_bits_revealed: int = 0

    @property
    def is_zero(self) -> bool:
        return not (self.ec_bits_leaked or self.pa_output_length
                    or self.auth_bits_consumed or self.test_bits_revealed)
