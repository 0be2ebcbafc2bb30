"""Classical post-processing: reconciliation, privacy amplification, authentication, OTP."""
from .amplify import DEFAULT_SECURITY_MARGIN, final_length, privacy_amplify, toeplitz_hash, toeplitz_seed_bits
from .auth import DEFAULT_SECURITY_BITS, HashKey, authenticate, field_bits, key_bits_needed, poly_hash, verify
from .gf2 import irreducible_polynomial, is_irreducible
from .keystore import KeyExhausted, KeyStore
from .ledger import LeakageLedger
from .otp import encrypt_with_store, key_reuse_leak, otp_decrypt, otp_encrypt
from .cascade import ReconciliationError, reconcile

__all__ = [
    "DEFAULT_SECURITY_BITS",
    "DEFAULT_SECURITY_MARGIN",
    "HashKey",
    "KeyExhausted",
    "KeyStore",
    "LeakageLedger",
    "ReconciliationError",
    "authenticate",
    "encrypt_with_store",
    "field_bits",
    "final_length",
    "irreducible_polynomial",
    "is_irreducible",
    "key_bits_needed",
    "key_reuse_leak",
    "otp_decrypt",
    "otp_encrypt",
    "poly_hash",
    "privacy_amplify",
    "reconcile",
    "toeplitz_hash",
    "toeplitz_seed_bits",
    "verify",
]
