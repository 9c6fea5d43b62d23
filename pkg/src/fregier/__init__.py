"""Envelopes of chords seen under a fixed angle from a point of an ellipse
(generalized Fregier points), and the Poncelet invariants of their circles."""

__version__ = "0.1.0"
