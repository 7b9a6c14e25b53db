"""Exception types shared across the stack."""


class OpenVlcError(Exception):
    """Base class for every error raised by this package."""


# --- line coding / sync ---------------------------------------------------

class OddLength(OpenVlcError):
    """Symbol sequence cannot be split into pairs."""


class InvalidPair(OpenVlcError):
    """A symbol pair is not a legal line-code codeword.

    Carries the index of the offending pair.
    """

    def __init__(self, pair_index: int):
        super().__init__(f"invalid line-code pair at index {pair_index}")
        self.pair_index = pair_index


class WrongLength(OpenVlcError):
    """Sample block has the wrong length for the requested operation."""


class NoSync(OpenVlcError):
    """No frame header found in the sample stream."""


# --- framing --------------------------------------------------------------

class BadLength(OpenVlcError):
    """Declared frame length disagrees with the bytes actually present."""


class BadCrc(OpenVlcError):
    """Frame checksum mismatch."""


class Uncorrectable(OpenVlcError):
    """Block error correction failed; too many corrupted bytes."""


class InvalidPayload(OpenVlcError):
    """Payload rejected before queueing (empty where data is required)."""


class PayloadTooLarge(OpenVlcError):
    """Payload exceeds the configured maximum."""


# --- mac / channel --------------------------------------------------------

class QueueFull(OpenVlcError):
    """Transmit queue is at capacity."""


class HalfDuplexViolation(OpenVlcError):
    """Operation requires receive capability while the LED is transmitting."""


class NotInTxMode(OpenVlcError):
    """Emission attempted while the LED is not (yet) in transmit mode."""


class NotInRxMode(OpenVlcError):
    """Sampling attempted while the LED is not (yet) in receive mode."""


class NonPositiveDistance(OpenVlcError):
    """Geometric gain is undefined for zero or negative distance."""


class ScenarioError(OpenVlcError):
    """Scenario description failed validation."""
